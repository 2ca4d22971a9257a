"""Type II error of the mutual-information independence test.

beta(N, gamma, ref) is the probability, under N i.i.d. draws from the
dependent reference distribution ref, that the empirical MI falls at or
below the threshold gamma, i.e. that the test wrongly looks independent.

Three routes are provided, in increasing applicability:
  beta_bruteforce  enumerates all 4^N raw sequences, N <= 8 (oracle)
  beta_exact       sums over type classes with multinomial weights, cost
                   grows ~N^3 with N
  beta_mc          importance-sampled Monte Carlo estimate of the continuous
                   relaxation of the type sum, cost independent of N

BetaTable precomputes -ln(beta) on an (N, gamma) grid for one eta so that
scoring can answer interpolated queries cheaply.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .dist2x2 import (
    JointDist2x2,
    MI_UPPER,
    find_t_plus,
    kl_divergence,
    mi_from_counts,
    reference_dist,
    uniform_marginal_dist,
)

__all__ = [
    "BetaTable",
    "EffectiveSampleSizeError",
    "TableBuildError",
    "beta_bruteforce",
    "beta_exact",
    "beta_mc",
    "beta_product_mass",
    "build_table",
    "query_neg_ln_beta",
    "table_to_json",
    "table_from_json",
    "save_table",
    "load_table",
    "DEFAULT_N_GRID",
    "default_gamma_grid",
]

DEFAULT_N_GRID = (20, 50, 100, 200, 500, 1000, 2000, 5000, 10000)
DEFAULT_EXACT_CAP = 200  # table cells use the type sum up to here, MC beyond
BETA_EXACT_MAX_N = 2000
BRUTE_MAX_N = 8
ETA_CONJECTURE_LIMIT = 0.11  # proposal centering is only validated below this
_BATCH_ELEMENTS = 1 << 19  # cache-friendly enumeration batches


class EffectiveSampleSizeError(RuntimeError):
    """Importance-sampling weights collapsed; the proposal is badly tuned."""


class TableBuildError(RuntimeError):
    """A table cell failed; message carries the (N, gamma) coordinates."""


def default_gamma_grid(eta: float, points: int = 12) -> list[float]:
    """{0} plus `points` geometrically spaced thresholds in [eta/1000, 0.9*eta]."""
    return [0.0] + [float(g) for g in np.geomspace(eta / 1000.0, 0.9 * eta, points)]


def _validate_ref(ref: JointDist2x2) -> None:
    if min(ref.cells) <= 0.0:
        raise ValueError("reference distribution must be strictly positive")


# ---------------------------------------------------------------------------
# exact computation by summing over type classes
# ---------------------------------------------------------------------------

def _type_enumeration_batches(n: int):
    """Yield (t00, t01, t10, t11) int64 arrays covering every length-4
    composition of n, in batches of bounded size.

    Compositions are grouped by t00; for fixed t00 the (t01, t10) pairs are
    laid out diagonal-major so each group is a prefix of the largest one.
    """
    tri_sizes = ((np.arange(n, -1, -1) + 1) * (np.arange(n, -1, -1) + 2)) // 2
    # diagonal-major triangle for the largest limit n
    diag = np.arange(n + 1)
    s_all = np.repeat(diag, diag + 1)
    offs = np.repeat((diag * (diag + 1)) // 2, diag + 1)
    u01_all = np.arange(s_all.size) - offs

    a = 0
    while a <= n:
        b = a
        total = 0
        while b <= n and total + tri_sizes[b] <= _BATCH_ELEMENTS:
            total += tri_sizes[b]
            b += 1
        if b == a:  # single oversized group, take it alone
            b = a + 1
            total = int(tri_sizes[a])
        sizes = tri_sizes[a:b]
        t00 = np.repeat(np.arange(a, b), sizes)
        starts = np.concatenate(([0], np.cumsum(sizes)[:-1]))
        local = np.arange(total) - np.repeat(starts, sizes)
        s = s_all[local]
        t01 = u01_all[local]
        t10 = s - t01
        t11 = n - t00 - s
        yield t00, t01, t10, t11
        a = b


def _mi_n_of_types(t00, t01, t10, t11, n: int) -> np.ndarray:
    """n * MI for each type, exactly 0.0 on product tables."""
    r0 = t00 + t01
    r1 = t10 + t11
    c0 = t00 + t10
    c1 = t01 + t11
    out = np.zeros(t00.shape, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        for t, r, c in ((t00, r0, c0), (t01, r0, c1), (t10, r1, c0), (t11, r1, c1)):
            num = (t * n).astype(np.float64)
            den = (r * c).astype(np.float64)
            out += np.where(t > 0, t * np.log(np.where(t > 0, num / den, 1.0)), 0.0)
    return out


def _beta_exact_multi(n: int, gammas, ref: JointDist2x2) -> np.ndarray:
    """beta(n, gamma, ref) for several gammas from one type enumeration."""
    lnp = np.log(np.asarray(ref.cells))
    lgf = gammaln(np.arange(n + 1, dtype=np.float64) + 1.0)
    gam = np.asarray(gammas, dtype=np.float64)
    acc = np.zeros(gam.shape, dtype=np.float64)
    for t00, t01, t10, t11 in _type_enumeration_batches(n):
        logw = (
            lgf[n]
            - lgf[t00] - lgf[t01] - lgf[t10] - lgf[t11]
            + t00 * lnp[0] + t01 * lnp[1] + t10 * lnp[2] + t11 * lnp[3]
        )
        w = np.exp(logw)
        mi = _mi_n_of_types(t00, t01, t10, t11, n) / n
        for j, g in enumerate(gam):
            acc[j] += w[mi <= g].sum()
    return np.minimum(acc, 1.0)


def beta_exact(
    n: int, gamma: float, ref: JointDist2x2, max_n: int = BETA_EXACT_MAX_N
) -> float:
    """Exact Type II error by summation over all types of length n.

    Cost grows cubically in n; n above max_n (default 2000) is rejected.
    """
    if n < 1:
        raise ValueError(f"n={n} must be >= 1")
    if n > max_n:
        raise ValueError(f"n={n} above the exact-computation cap {max_n}")
    if gamma < 0.0:
        raise ValueError(f"gamma={gamma!r} must be >= 0")
    _validate_ref(ref)
    return float(_beta_exact_multi(n, [gamma], ref)[0])


def beta_bruteforce(n: int, gamma: float, ref: JointDist2x2) -> float:
    """Oracle: sum sequence probabilities over all 4^n raw sequences."""
    if not (1 <= n <= BRUTE_MAX_N):
        raise ValueError(f"n={n} outside 1..{BRUTE_MAX_N}")
    if gamma < 0.0:
        raise ValueError(f"gamma={gamma!r} must be >= 0")
    _validate_ref(ref)
    cells = ref.cells
    total = 0.0
    for seq in itertools.product(range(4), repeat=n):
        c = [0, 0, 0, 0]
        pr = 1.0
        for sym in seq:
            c[sym] += 1
            pr *= cells[sym]
        if mi_from_counts(c[0], c[1], c[2], c[3]) <= gamma:
            total += pr
    return min(total, 1.0)


def beta_product_mass(n: int, ref: JointDist2x2) -> float:
    """Exact beta at gamma = 0: total probability of product-form types.

    A type is product iff t00 = r0*c0/n is integral with the rest of the
    table determined by the margins, so the sum runs over O(n^2) margin
    pairs instead of all O(n^3) types.
    """
    if n < 1:
        raise ValueError(f"n={n} must be >= 1")
    _validate_ref(ref)
    lnp = np.log(np.asarray(ref.cells))
    lgf = gammaln(np.arange(n + 1, dtype=np.float64) + 1.0)
    total = 0.0
    chunk = max(1, _BATCH_ELEMENTS // (n + 1))
    c0 = np.arange(n + 1)
    for lo in range(0, n + 1, chunk):
        r0 = np.arange(lo, min(lo + chunk, n + 1))[:, None]
        prod = r0 * c0[None, :]
        ok = prod % n == 0
        t00 = prod[ok] // n
        rr = np.broadcast_to(r0, prod.shape)[ok]
        cc = np.broadcast_to(c0[None, :], prod.shape)[ok]
        t01 = rr - t00
        t10 = cc - t00
        t11 = n - rr - cc + t00
        logw = (
            lgf[n]
            - lgf[t00] - lgf[t01] - lgf[t10] - lgf[t11]
            + t00 * lnp[0] + t01 * lnp[1] + t10 * lnp[2] + t11 * lnp[3]
        )
        total += float(np.exp(logw).sum())
    return min(total, 1.0)


# ---------------------------------------------------------------------------
# Monte Carlo with importance sampling
# ---------------------------------------------------------------------------

def _sigma_marginal(n: int) -> float:
    return max(0.02, 0.5 / math.sqrt(n))


def _log_path_integrand(t: np.ndarray, n: int, ln_ref: np.ndarray) -> np.ndarray:
    """log of exp(-n*KL(p0(t)||ref)) * prod(cells)^(-1/2) along the
    uniform-marginal path."""
    cells = np.stack([0.25 + t, 0.25 - t, 0.25 - t, 0.25 + t])
    kl = (cells * (np.log(cells) - ln_ref[:, None])).sum(axis=0)
    return -n * kl - 0.5 * np.log(cells).sum(axis=0)


def _sigma_t(n: int, t_gamma: float, ln_ref: np.ndarray, floor: float = 1e-4) -> float:
    """Width of the integrand peak next to the acceptance boundary.

    Scans 64 points on (0, t_gamma) and measures how far the integrand
    stays within e^{-1/2} of its maximum. The result is never taken below
    1/(4*sqrt(n)), the t-direction curvature scale of exp(-n*KL): a
    narrower Gaussian proposal has lighter tails than the integrand and
    its importance weights lose finite variance.
    """
    ts = t_gamma * np.arange(1, 65) / 65.0
    logf = _log_path_integrand(ts, n, ln_ref)
    top = int(np.argmax(logf))
    above = np.nonzero(logf >= logf[top] - 0.5)[0]
    width = float(ts[top] - ts[int(above[0])])
    return max(width, 0.25 / math.sqrt(n), floor)


def beta_mc(
    n: int,
    gamma: float,
    eta: float,
    samples: int = 100_000,
    seed: int = 0,
    ess_floor: float = 100.0,
) -> float:
    """Importance-sampled estimate of beta(n, gamma) against the eta reference.

    Estimates (n/2pi)^(3/2) * integral over the simplex of
    exp(-n*KL(q||ref)) * prod(q)^(-1/2) * 1[MI(q) <= gamma] dq, the
    continuous relaxation of the type sum. Proposal: both marginals from a
    Gaussian at 1/2 with width max(0.02, 1/(2*sqrt(n))), offset t from a
    Gaussian at t_gamma with width measured from the integrand peak. The
    (pA0, pB0, t) chart has unit Jacobian, so no volume correction appears.
    Deterministic given seed.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if not (0.0 < eta < MI_UPPER):
        raise ValueError(f"eta={eta!r} outside (0, ln 2)")
    if not (0.0 < gamma < eta):
        raise ValueError(
            f"gamma={gamma!r} must lie in (0, eta); the gamma=0 acceptance "
            "region has measure zero, use beta_product_mass instead"
        )
    if n < 1:
        raise ValueError(f"n={n} must be >= 1")

    ref = reference_dist(eta)
    ln_ref = np.log(np.asarray(ref.cells))
    t_gamma = find_t_plus(gamma)
    sm = _sigma_marginal(n)
    st = _sigma_t(n, t_gamma, ln_ref)

    rng = np.random.default_rng(seed)
    pa = rng.normal(0.5, sm, samples)
    pb = rng.normal(0.5, sm, samples)
    tt = rng.normal(t_gamma, st, samples)

    q = np.stack([pa * pb + tt, pa * (1 - pb) - tt, (1 - pa) * pb - tt,
                  (1 - pa) * (1 - pb) + tt])
    valid = (q > 0.0).all(axis=0)
    qv = q[:, valid]

    with np.errstate(divide="ignore", invalid="ignore"):
        lnq = np.log(qv)
        ra = qv[0] + qv[1]
        rb = qv[0] + qv[2]
        denom = np.stack([ra * rb, ra * (1 - rb), (1 - ra) * rb,
                          (1 - ra) * (1 - rb)])
        mi = (qv * (lnq - np.log(denom))).sum(axis=0)
        kl = (qv * (lnq - ln_ref[:, None])).sum(axis=0)
        log_integrand = 1.5 * math.log(n / (2 * math.pi)) - n * kl - 0.5 * lnq.sum(axis=0)

    def log_norm_pdf(x, mu, sigma):
        return -0.5 * ((x - mu) / sigma) ** 2 - math.log(sigma * math.sqrt(2 * math.pi))

    log_g = (
        log_norm_pdf(pa[valid], 0.5, sm)
        + log_norm_pdf(pb[valid], 0.5, sm)
        + log_norm_pdf(tt[valid], t_gamma, st)
    )
    w = np.where(mi <= gamma, np.exp(log_integrand - log_g), 0.0)

    wsum = float(w.sum())
    wsq = float((w * w).sum())
    ess = wsum * wsum / wsq if wsq > 0.0 else 0.0
    if ess < ess_floor:
        raise EffectiveSampleSizeError(
            f"effective sample size {ess:.1f} below floor {ess_floor:g} "
            f"at n={n}, gamma={gamma!r}, eta={eta!r}"
        )
    return min(wsum / samples, 1.0)


# ---------------------------------------------------------------------------
# precomputed table with interpolation
# ---------------------------------------------------------------------------

@dataclass
class BetaTable:
    """-ln(beta) over an (N, gamma) grid for one eta, plus the KL coordinate
    H(p_gamma || p_eta) per gamma used for interpolation."""

    eta: float
    N_grid: list[int]
    gamma_grid: list[float]
    neg_ln_beta: np.ndarray  # shape (len(N_grid), len(gamma_grid))
    kl_of_gamma: list[float]
    mc_samples: int
    seed: int
    _kl_axis: np.ndarray = field(init=False, repr=False)
    _cols: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.neg_ln_beta = np.asarray(self.neg_ln_beta, dtype=np.float64)
        if self.neg_ln_beta.shape != (len(self.N_grid), len(self.gamma_grid)):
            raise ValueError("neg_ln_beta shape does not match the grids")
        if (self.neg_ln_beta < 0).any():
            raise ValueError("neg_ln_beta entries must be >= 0")
        # interpolation axis: ascending KL, i.e. gamma descending, with a
        # virtual boundary column (kl=0 -> 0 boost) for continuity at eta
        kl = np.asarray(self.kl_of_gamma, dtype=np.float64)[::-1]
        if (np.diff(kl) <= 0).any():
            raise ValueError("kl_of_gamma must be strictly decreasing in gamma")
        cols = self.neg_ln_beta[:, ::-1]
        if kl[0] > 0.0:
            kl = np.concatenate(([0.0], kl))
            cols = np.concatenate((np.zeros((cols.shape[0], 1)), cols), axis=1)
        self._kl_axis = kl
        self._cols = cols


def _kl_coordinate_uncached(gamma: float, eta: float) -> float:
    ref = reference_dist(eta)
    p = uniform_marginal_dist(find_t_plus(gamma)) if gamma > 0.0 \
        else JointDist2x2(0.25, 0.25, 0.25, 0.25)
    return kl_divergence(p, ref)


_kl_coordinate = lru_cache(maxsize=1 << 16)(_kl_coordinate_uncached)


def _interp_extrap(x: float, xs: np.ndarray, ys: np.ndarray) -> float:
    """Piecewise-linear in the interior, linear extrapolation from the two
    end knots outside."""
    if xs.size == 1:
        return float(ys[0])
    j = int(np.searchsorted(xs, x))
    j = min(max(j, 1), xs.size - 1)
    x0, x1 = xs[j - 1], xs[j]
    y0, y1 = ys[j - 1], ys[j]
    return float(y0 + (y1 - y0) * (x - x0) / (x1 - x0))


def query_neg_ln_beta(table: BetaTable, n: int, gamma: float) -> float:
    """Interpolated -ln(beta) at (n, gamma); 0 for gamma >= eta.

    Bilinear in the coordinates (N, H(p_gamma||p_eta)); linear extrapolation
    in N outside the grid; clamped at 0 from below.
    """
    if n < 1:
        raise ValueError(f"n={n} must be >= 1")
    if gamma < 0.0:
        raise ValueError(f"gamma={gamma!r} must be >= 0")
    if gamma >= table.eta:
        return 0.0
    klq = _kl_coordinate(float(gamma), float(table.eta))
    per_row = np.array(
        [_interp_extrap(klq, table._kl_axis, row) for row in table._cols]
    )
    ns = np.asarray(table.N_grid, dtype=np.float64)
    val = _interp_extrap(float(n), ns, per_row)
    return max(val, 0.0)


def build_table(
    eta: float,
    N_grid=None,
    gamma_grid=None,
    samples: int = 100_000,
    seed: int = 0,
    exact_cap: int = DEFAULT_EXACT_CAP,
    ess_floor: float = 100.0,
    allow_large_eta: bool = False,
) -> BetaTable:
    """Tabulate -ln(beta) over the (N, gamma) grid for one eta.

    Cells with N <= exact_cap use the exact type sum, larger N the Monte
    Carlo estimate with a per-cell seed derived from (seed, row, column) so
    the result is independent of evaluation order. gamma = 0 cells always
    use the exact product-type sum: the continuous relaxation assigns the
    gamma = 0 acceptance region zero volume, so MC cannot see it.
    """
    if not (0.0 < eta < MI_UPPER):
        raise ValueError(f"eta={eta!r} outside (0, ln 2)")
    if eta > ETA_CONJECTURE_LIMIT and not allow_large_eta:
        raise ValueError(
            f"eta={eta!r} above {ETA_CONJECTURE_LIMIT}; proposal centering is "
            "unvalidated there, pass allow_large_eta=True to override"
        )
    N_grid = list(DEFAULT_N_GRID) if N_grid is None else [int(n) for n in N_grid]
    gamma_grid = (
        default_gamma_grid(eta) if gamma_grid is None else [float(g) for g in gamma_grid]
    )
    if not N_grid or not gamma_grid:
        raise ValueError("grids must be nonempty")
    if any(b <= a for a, b in zip(N_grid, N_grid[1:])) or N_grid[0] < 1:
        raise ValueError("N_grid must be ascending with entries >= 1")
    if any(b <= a for a, b in zip(gamma_grid, gamma_grid[1:])):
        raise ValueError("gamma_grid must be ascending")
    if gamma_grid[0] < 0.0 or gamma_grid[-1] >= eta:
        raise ValueError("gamma_grid must lie within [0, eta)")

    ref = reference_dist(eta)
    kl_of_gamma = [_kl_coordinate(g, eta) for g in gamma_grid]
    pos = [(j, g) for j, g in enumerate(gamma_grid) if g > 0.0]

    neg = np.zeros((len(N_grid), len(gamma_grid)))
    for i, n in enumerate(N_grid):
        for j, g in enumerate(gamma_grid):
            try:
                if g == 0.0:
                    b = beta_product_mass(n, ref)
                elif n <= exact_cap:
                    b = None  # filled below in one enumeration per n
                else:
                    cell_seed = int(
                        np.random.SeedSequence((seed, i, j)).generate_state(1)[0]
                    )
                    b = beta_mc(n, g, eta, samples, cell_seed, ess_floor)
            except Exception as exc:
                raise TableBuildError(f"cell N={n}, gamma={g!r}: {exc}") from exc
            if b is not None:
                neg[i, j] = max(0.0, -math.log(max(b, 1e-300)))
        if n <= exact_cap and pos:
            try:
                bs = _beta_exact_multi(n, [g for _, g in pos], ref)
            except Exception as exc:
                raise TableBuildError(f"exact cells at N={n}: {exc}") from exc
            for (j, _), b in zip(pos, bs):
                neg[i, j] = max(0.0, -math.log(max(b, 1e-300)))

    return BetaTable(
        eta=eta,
        N_grid=N_grid,
        gamma_grid=gamma_grid,
        neg_ln_beta=neg,
        kl_of_gamma=kl_of_gamma,
        mc_samples=samples,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# file format: UTF-8 JSON, floats with 17 significant digits
# ---------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def table_to_json(table: BetaTable) -> str:
    flat = table.neg_ln_beta.reshape(-1)  # row-major, N-major
    lines = [
        "{",
        f'  "eta": {_fmt(table.eta)},',
        f'  "mc_samples": {int(table.mc_samples)},',
        f'  "seed": {int(table.seed)},',
        f'  "N_grid": [{", ".join(str(int(n)) for n in table.N_grid)}],',
        f'  "gamma_grid": [{", ".join(_fmt(g) for g in table.gamma_grid)}],',
        f'  "kl_of_gamma": [{", ".join(_fmt(k) for k in table.kl_of_gamma)}],',
        f'  "neg_ln_beta": [{", ".join(_fmt(v) for v in flat)}]',
        "}",
    ]
    return "\n".join(lines) + "\n"


def table_from_json(text: str) -> BetaTable:
    doc = json.loads(text)
    n_rows = len(doc["N_grid"])
    n_cols = len(doc["gamma_grid"])
    return BetaTable(
        eta=float(doc["eta"]),
        N_grid=[int(n) for n in doc["N_grid"]],
        gamma_grid=[float(g) for g in doc["gamma_grid"]],
        neg_ln_beta=np.asarray(doc["neg_ln_beta"], dtype=np.float64).reshape(
            n_rows, n_cols
        ),
        kl_of_gamma=[float(k) for k in doc["kl_of_gamma"]],
        mc_samples=int(doc["mc_samples"]),
        seed=int(doc["seed"]),
    )


def save_table(table: BetaTable, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(table_to_json(table))


def load_table(path) -> BetaTable:
    with open(path, "r", encoding="utf-8") as fh:
        return table_from_json(fh.read())
