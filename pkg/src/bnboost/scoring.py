"""Structure scores: BIC and its independence-boosted extension.

The boosted score is BIC plus, for every nonadjacent pair (A, B), a
nonnegative reward max over separating sets S of the min over observed
assignments s of -ln(beta) at the conditional empirical MI. Confident
conditional independence earns a reward that grows with the sample count;
dependent pairs earn nothing once the empirical MI clears eta.

With bounded-size separating sets the per-pair reward does not depend on
the candidate graph, so the whole score decomposes into per-family terms
(ParentSetScoreTable) that combinatorial search can consume directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .beta import BetaTable, query_neg_ln_beta
from .data import BinaryDataset, Dag, Network
from .dist2x2 import JointDist2x2, mi_from_counts, mutual_information

__all__ = [
    "ScoreConfig",
    "ParentSetScoreTable",
    "log_likelihood",
    "dim",
    "edge_boost",
    "pair_boosts",
    "total_score",
    "build_parent_set_scores",
    "edge_strength",
    "save_scores",
    "load_scores",
]

BOUNDED = "bounded-size"
PARENT_BASED = "parent-based"


@dataclass(frozen=True)
class ScoreConfig:
    """Knobs of the boosted score.

    eta: MI level treated as solid dependence (nats); kappa: weight of the
    ln(N) complexity penalty (1/2 gives BIC/MDL); psi2: weight on the boost
    sum; d: max in-degree and max separating-set size; sepset_mode: which
    collection of separating sets certifies a missing edge.
    """

    eta: float = 0.01
    kappa: float = 0.5
    psi2: float = 1.0
    d: int = 2
    sepset_mode: str = BOUNDED

    def __post_init__(self):
        if self.eta <= 0.0:
            raise ValueError(f"eta={self.eta!r} must be > 0")
        if self.kappa <= 0.0:
            raise ValueError(f"kappa={self.kappa!r} must be > 0")
        if self.psi2 < 0.0:
            raise ValueError(f"psi2={self.psi2!r} must be >= 0")
        if self.d < 0:
            raise ValueError(f"d={self.d} must be >= 0")
        if self.sepset_mode not in (BOUNDED, PARENT_BASED):
            raise ValueError(f"unknown sepset_mode {self.sepset_mode!r}")


def _family_ll(counts: np.ndarray) -> float:
    """Maximized log-likelihood contribution of one family's contingency counts."""
    totals = counts.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(
            counts > 0, counts * np.log(counts / np.maximum(totals, 1)), 0.0
        )
    return float(terms.sum())


def _counts_for_family(data: BinaryDataset, i: int, parents) -> np.ndarray:
    parents = tuple(sorted(parents))
    idx = data.rows[:, i].astype(np.intp)
    for j, p in enumerate(parents):
        idx = idx + (data.rows[:, p].astype(np.intp) << (j + 1))
    return np.bincount(idx, minlength=2 ** (len(parents) + 1)).reshape(-1, 2)


def log_likelihood(data: BinaryDataset, dag: Dag) -> float:
    """Log-likelihood of the data under dag with MLE conditionals, in nats."""
    if dag.n != data.n_vars:
        raise ValueError("dag and dataset disagree on the variable count")
    return sum(
        _family_ll(_counts_for_family(data, i, dag.parents(i))) for i in range(dag.n)
    )


def dim(dag: Dag) -> int:
    """Free parameters of the binary network: one per parent assignment."""
    return sum(2 ** dag.in_degree(i) for i in range(dag.n))


def _separating_sets(n: int, a: int, b: int, cfg: ScoreConfig, dag: Dag | None):
    if cfg.sepset_mode == BOUNDED:
        rest = [v for v in range(n) if v != a and v != b]
        out = []
        for k in range(min(cfg.d, len(rest)) + 1):
            out.extend(combinations(rest, k))
        return out
    if dag is None:
        raise ValueError("parent-based separating sets need the candidate graph")
    sa = tuple(sorted(set(dag.parents(a)) - {b}))
    sb = tuple(sorted(set(dag.parents(b)) - {a}))
    return list({sa, sb})


def _boost_for_pair(data, a, b, table, sepsets) -> float:
    rows = data.rows
    best = 0.0
    for sep in sepsets:
        k = len(sep)
        idx = rows[:, b].astype(np.intp) + (rows[:, a].astype(np.intp) << 1)
        for j, c in enumerate(sep):
            idx += rows[:, c].astype(np.intp) << (j + 2)
        tables = np.bincount(idx, minlength=4 * 2 ** k).reshape(2 ** k, 2, 2)
        worst = math.inf
        for s_idx in range(2 ** k):
            t = tables[s_idx]
            n_s = int(t.sum())
            if n_s == 0:
                worst = 0.0  # unobserved assignment: no evidence, no reward
                break
            mi = mi_from_counts(int(t[0, 0]), int(t[0, 1]), int(t[1, 0]), int(t[1, 1]))
            worst = min(worst, query_neg_ln_beta(table, n_s, mi))
            if worst == 0.0:
                break
        best = max(best, worst)
    return best


def edge_boost(
    data: BinaryDataset,
    a: int,
    b: int,
    table: BetaTable,
    cfg: ScoreConfig,
    dag: Dag,
) -> float:
    """Independence reward for the nonadjacent pair (a, b) in dag.

    max over separating sets S of the min over observed assignments s of
    -ln(beta) at (N_s, empirical conditional MI); assignments never seen in
    the data contribute 0 to the min.
    """
    if dag.adjacent(a, b):
        raise ValueError(f"({a}, {b}) is an edge of the graph, no boost applies")
    return _boost_for_pair(data, a, b, table, _separating_sets(data.n_vars, a, b, cfg, dag))


def pair_boosts(data: BinaryDataset, table: BetaTable, cfg: ScoreConfig) -> dict:
    """Boost of every unordered pair under bounded-size separating sets."""
    if cfg.sepset_mode != BOUNDED:
        raise ValueError("graph-independent pair boosts need bounded-size mode")
    n = data.n_vars
    return {
        (a, b): _boost_for_pair(data, a, b, table, _separating_sets(n, a, b, cfg, None))
        for a, b in combinations(range(n), 2)
    }


def total_score(
    data: BinaryDataset,
    dag: Dag,
    table: BetaTable | None,
    cfg: ScoreConfig,
) -> float:
    """LL - kappa*ln(N)*dim + psi2 * sum of boosts over nonadjacent pairs.

    psi2 = 0 reduces exactly to BIC and needs no beta table.
    """
    dag.check_in_degree(cfg.d)
    score = log_likelihood(data, dag) - cfg.kappa * math.log(data.n_rows) * dim(dag)
    if cfg.psi2 == 0.0:
        return score
    if table is None:
        raise ValueError("a beta table is required when psi2 > 0")
    boost = sum(
        edge_boost(data, a, b, table, cfg, dag)
        for a, b in combinations(range(dag.n), 2)
        if not dag.adjacent(a, b)
    )
    return score + cfg.psi2 * boost


@dataclass
class ParentSetScoreTable:
    """Per-(node, parent set) scores plus a graph-independent constant.

    For any graph in the in-degree class the table covers,
    sum_i family_score(i, parents(i)) + constant reproduces total_score.
    """

    n: int
    scores: dict[int, dict[frozenset, float]]
    constant: float = 0.0
    variable_names: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.variable_names:
            self.variable_names = tuple(f"X{i}" for i in range(self.n))

    def family_score(self, i: int, parents) -> float:
        key = frozenset(parents)
        try:
            return self.scores[i][key]
        except KeyError:
            raise ValueError(
                f"no score for node {i} with parents {sorted(key)}"
            ) from None

    def has_family(self, i: int, parents) -> bool:
        return frozenset(parents) in self.scores.get(i, {})

    def dag_score(self, dag: Dag) -> float:
        return (
            sum(self.family_score(i, dag.parents(i)) for i in range(dag.n))
            + self.constant
        )

    def max_parent_size(self) -> int:
        return max(
            (len(pa) for fams in self.scores.values() for pa in fams), default=0
        )


def build_parent_set_scores(
    data: BinaryDataset, table: BetaTable | None, cfg: ScoreConfig
) -> ParentSetScoreTable:
    """Fold the boosted score into per-family terms.

    Each pair's boost is charged to whichever family contains the adjacency
    (the child's), and the constant carries the boost sum of the fully
    nonadjacent baseline, so adjacency exactly cancels its pair's reward.
    Requires bounded-size separating sets; parent-based sets depend on the
    graph and cannot be decomposed this way.
    """
    if cfg.sepset_mode != BOUNDED:
        raise ValueError("parent-set scores require bounded-size separating sets")
    n = data.n_vars
    log_n = math.log(data.n_rows)
    if cfg.psi2 > 0.0:
        if table is None:
            raise ValueError("a beta table is required when psi2 > 0")
        boosts = pair_boosts(data, table, cfg)
    else:
        boosts = {pair: 0.0 for pair in combinations(range(n), 2)}

    def boost_of(i, j):
        return boosts[(i, j) if i < j else (j, i)]

    scores: dict[int, dict[frozenset, float]] = {}
    for i in range(n):
        others = [v for v in range(n) if v != i]
        fam: dict[frozenset, float] = {}
        for k in range(min(cfg.d, len(others)) + 1):
            for pa in combinations(others, k):
                value = (
                    _family_ll(_counts_for_family(data, i, pa))
                    - cfg.kappa * log_n * 2 ** k
                    - cfg.psi2 * sum(boost_of(i, j) for j in pa)
                )
                fam[frozenset(pa)] = value
        scores[i] = fam
    constant = cfg.psi2 * sum(boosts.values())
    return ParentSetScoreTable(
        n=n, scores=scores, constant=constant,
        variable_names=data.variable_names,
    )


# ---------------------------------------------------------------------------
# true conditional dependence of a generating network
# ---------------------------------------------------------------------------

def _joint_probabilities(net: Network) -> np.ndarray:
    """Exact joint over all 2^n states; state bit i holds the value of X_i."""
    n = net.n
    states = np.arange(2 ** n, dtype=np.int64)
    probs = np.ones(2 ** n)
    for i in range(n):
        act = np.full(2 ** n, net.bias[i])
        for p, w in net.theta[i].items():
            act += w * ((states >> p) & 1)
        p1 = 1.0 / (1.0 + np.exp(-act))
        bit = (states >> i) & 1
        probs *= np.where(bit == 1, p1, 1.0 - p1)
    return probs


def edge_strength(net: Network, a: int, b: int, d: int) -> float:
    """Weakest certificate of dependence between a and b in the true joint.

    min over conditioning sets S (|S| <= d) of the max over assignments s
    with positive probability of MI(a, b | s). Zero means some small S
    renders the pair conditionally independent. Exact state enumeration,
    so the network must have at most 20 nodes.
    """
    n = net.n
    if n > 20:
        raise ValueError(f"n={n} too large for exact enumeration (max 20)")
    if a == b or not (0 <= a < n and 0 <= b < n):
        raise ValueError(f"bad pair ({a}, {b})")
    probs = _joint_probabilities(net)
    states = np.arange(2 ** n, dtype=np.int64)
    bit_a = (states >> a) & 1
    bit_b = (states >> b) & 1
    others = [v for v in range(n) if v != a and v != b]

    best = math.inf
    for k in range(min(d, len(others)) + 1):
        for sep in combinations(others, k):
            idx = bit_b + (bit_a << 1)
            for j, c in enumerate(sep):
                idx = idx + (((states >> c) & 1) << (j + 2))
            mass = np.bincount(idx, weights=probs, minlength=4 * 2 ** k)
            mass = mass.reshape(2 ** k, 4)
            worst = 0.0
            for s_idx in range(2 ** k):
                cell = mass[s_idx]
                total = cell.sum()
                if total <= 0.0:
                    continue
                q = cell / total
                worst = max(worst, mutual_information(JointDist2x2(*q)))
            best = min(best, worst)
            if best == 0.0:
                return 0.0
    return best


# ---------------------------------------------------------------------------
# parent-set score file: "n <count> constant <value>" header, then one line
# "<node> <k> <p1> ... <pk> <score>" per family
# ---------------------------------------------------------------------------

def save_scores(table: ParentSetScoreTable, path) -> None:
    lines = [f"n {table.n} constant {format(table.constant, '.17g')}"]
    for i in sorted(table.scores):
        for pa in sorted(table.scores[i], key=lambda s: (len(s), sorted(s))):
            parts = [str(i), str(len(pa)), *map(str, sorted(pa)),
                     format(table.scores[i][pa], ".17g")]
            lines.append(" ".join(parts))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_scores(path) -> ParentSetScoreTable:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    head = lines[0].split()
    if len(head) != 4 or head[0] != "n" or head[2] != "constant":
        raise ValueError(f"bad scores header: {lines[0]!r}")
    n = int(head[1])
    constant = float(head[3])
    scores: dict[int, dict[frozenset, float]] = {i: {} for i in range(n)}
    for ln in lines[1:]:
        toks = ln.split()
        node = int(toks[0])
        k = int(toks[1])
        if len(toks) != k + 3:
            raise ValueError(f"bad scores line: {ln!r}")
        parents = frozenset(int(t) for t in toks[2:2 + k])
        scores[node][parents] = float(toks[-1])
    return ParentSetScoreTable(n=n, scores=scores, constant=constant)
