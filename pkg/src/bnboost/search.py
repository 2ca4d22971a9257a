"""Maximization of a decomposed structure score over DAGs.

exact_dp runs the two-phase subset dynamic program (best parent set within
every predecessor set, then best sink per node subset) and is exact for up
to 24 nodes. greedy_hill_climb handles larger problems with restarts.
brute_force enumerates every labeled DAG and is the oracle for tiny n.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

from .data import Dag
from .scoring import ParentSetScoreTable

__all__ = ["SearchResult", "exact_dp", "greedy_hill_climb", "brute_force", "all_dags"]

DP_MAX_N = 24
BRUTE_MAX_N = 5
NEG_INF = float("-inf")


@dataclass(frozen=True)
class SearchResult:
    dag: Dag
    score: float
    method: str
    runtime_ms: float


def _mask_scores(table: ParentSetScoreTable):
    """Per node: dict mask(parent set) -> family score; mask over all n bits."""
    out = []
    for i in range(table.n):
        d = {}
        for pa, s in table.scores.get(i, {}).items():
            mask = 0
            for p in pa:
                mask |= 1 << p
            d[mask] = s
        out.append(d)
    return out


def _sorted_families(table: ParentSetScoreTable):
    """Families per node ordered by the tie-break: fewer parents first, then
    lexicographic parent list."""
    out = []
    for i in range(table.n):
        fams = sorted(
            table.scores.get(i, {}).items(), key=lambda kv: (len(kv[0]), sorted(kv[0]))
        )
        out.append([(frozenset(pa), s) for pa, s in fams])
    return out


def _best_family_within(families, allowed_mask: int):
    """Best (score, parents) over table families contained in allowed_mask,
    honoring the smaller-then-lexicographic tie-break via scan order."""
    best = None
    best_score = NEG_INF
    for pa, s in families:
        ok = all(allowed_mask >> p & 1 for p in pa)
        if ok and s > best_score:
            best_score = s
            best = pa
    return best_score, best


def exact_dp(table: ParentSetScoreTable) -> SearchResult:
    """Global maximizer of the decomposed score over all DAGs the table covers."""
    n = table.n
    if n > DP_MAX_N:
        raise ValueError(f"n={n} above the exact search cap {DP_MAX_N}")
    t0 = time.perf_counter()
    size = 1 << n
    mask_scores = _mask_scores(table)

    # phase 1: bps[i][W] = best family score of i with parents inside W
    bps = np.full((n, size), NEG_INF)
    for i in range(n):
        col = bps[i]
        for mask, s in mask_scores[i].items():
            if s > col[mask]:
                col[mask] = s
        for b in range(n):
            if b == i:
                continue
            bit = 1 << b
            has = (np.arange(size) & bit).astype(bool)
            col[has] = np.maximum(col[has], col[np.arange(size)[has] ^ bit])

    # phase 2: best[U] over orderings of U; sink[U] records the last node.
    # processed layer by layer in subset size so every best[U \ i] is final
    best = np.full(size, NEG_INF)
    best[0] = 0.0
    sink = np.full(size, -1, dtype=np.int8)
    masks = np.arange(size, dtype=np.int64)
    pop = np.bitwise_count(masks)
    for k in range(1, n + 1):
        layer = masks[pop == k]
        for i in range(n):
            bit = 1 << i
            sel = layer[(layer & bit) != 0]
            rest = sel ^ bit
            cand = best[rest] + bps[i][rest]
            upd = cand > best[sel]
            if upd.any():
                best[sel[upd]] = cand[upd]
                sink[sel[upd]] = i

    if not math.isfinite(best[size - 1]):
        raise ValueError("the score table covers no complete DAG")

    # reconstruct: peel sinks, then re-derive each node's parent set
    families = _sorted_families(table)
    edges = set()
    u = size - 1
    while u:
        i = int(sink[u])
        u ^= 1 << i
        _, pa = _best_family_within(families[i], u)
        for p in pa:
            edges.add((p, i))
    dag = Dag(n, frozenset(edges))
    score = table.dag_score(dag)
    return SearchResult(
        dag=dag, score=score, method="dp",
        runtime_ms=(time.perf_counter() - t0) * 1e3,
    )


# ---------------------------------------------------------------------------
# greedy hill climbing
# ---------------------------------------------------------------------------

def _has_path(parents: list[set], src: int, dst: int, n: int) -> bool:
    """True if dst is reachable from src along child edges."""
    if src == dst:
        return True
    seen = [False] * n
    stack = [src]
    seen[src] = True
    while stack:
        v = stack.pop()
        for w in range(n):
            if v in parents[w] and not seen[w]:
                if w == dst:
                    return True
                seen[w] = True
                stack.append(w)
    return False


def _climb(table: ParentSetScoreTable, parents: list[set]) -> tuple[list[set], float]:
    """Best-improving single-edge moves until a local maximum."""
    n = table.n

    def fam(i, pa):
        key = frozenset(pa)
        fams = table.scores.get(i, {})
        return fams.get(key, None)

    cur = [fam(i, parents[i]) for i in range(n)]
    if any(c is None for c in cur):
        raise ValueError("start graph contains a family missing from the table")
    total = sum(cur)

    improved = True
    while improved:
        improved = False
        best_delta = 1e-12
        best_move = None
        for u in range(n):
            for v in range(n):
                if u == v:
                    continue
                if u in parents[v]:
                    # deletion
                    s = fam(v, parents[v] - {u})
                    if s is not None:
                        delta = s - cur[v]
                        if delta > best_delta:
                            best_delta, best_move = delta, ("del", u, v)
                    # reversal: the new edge v -> u closes a cycle iff some
                    # other path u ~> v survives the deletion of u -> v
                    if v not in parents[u]:
                        s_v = fam(v, parents[v] - {u})
                        s_u = fam(u, parents[u] | {v})
                        if s_v is not None and s_u is not None:
                            parents[v].discard(u)
                            cyclic = _has_path(parents, u, v, n)
                            parents[v].add(u)
                            if not cyclic:
                                delta = (s_v - cur[v]) + (s_u - cur[u])
                                if delta > best_delta:
                                    best_delta, best_move = delta, ("rev", u, v)
                elif v not in parents[u]:
                    # addition u -> v
                    s = fam(v, parents[v] | {u})
                    if s is not None and not _has_path(parents, v, u, n):
                        delta = s - cur[v]
                        if delta > best_delta:
                            best_delta, best_move = delta, ("add", u, v)
        if best_move is not None:
            kind, u, v = best_move
            if kind == "add":
                parents[v].add(u)
            elif kind == "del":
                parents[v].discard(u)
            else:
                parents[v].discard(u)
                parents[u].add(v)
            cur = [fam(i, parents[i]) for i in range(n)]
            total = sum(cur)
            improved = True
    return parents, total + table.constant


def _random_start(table: ParentSetScoreTable, rng) -> list[set]:
    """Random DAG built along a random order, using only families the table has."""
    n = table.n
    d = table.max_parent_size()
    order = rng.permutation(n)
    parents: list[set] = [set() for _ in range(n)]
    for pos in range(n):
        child = int(order[pos])
        cap = min(d, pos)
        k = int(rng.integers(0, cap + 1))
        if k:
            pa = set(int(x) for x in rng.choice(order[:pos], size=k, replace=False))
            if table.has_family(child, pa):
                parents[child] = pa
    return parents


def greedy_hill_climb(
    table: ParentSetScoreTable, restarts: int = 10, seed: int = 0
) -> SearchResult:
    """Best local maximum over restarts; the first climb starts from the
    empty graph, later ones from random DAGs. Deterministic given seed."""
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    best_parents = None
    best_score = NEG_INF
    for r in range(restarts):
        start = (
            [set() for _ in range(table.n)] if r == 0 else _random_start(table, rng)
        )
        try:
            parents, score = _climb(table, start)
        except ValueError:
            continue
        if score > best_score:
            best_score = score
            best_parents = parents
    if best_parents is None:
        raise ValueError("no valid start: the table lacks the empty families")
    edges = frozenset(
        (u, v) for v in range(table.n) for u in best_parents[v]
    )
    dag = Dag(table.n, edges)
    return SearchResult(
        dag=dag, score=table.dag_score(dag), method="greedy",
        runtime_ms=(time.perf_counter() - t0) * 1e3,
    )


# ---------------------------------------------------------------------------
# exhaustive enumeration
# ---------------------------------------------------------------------------

@lru_cache(maxsize=8)
def all_dags(n: int) -> tuple[tuple[tuple[int, int], ...], ...]:
    """Every labeled DAG on n nodes as a sorted edge tuple (cached)."""
    if n > BRUTE_MAX_N:
        raise ValueError(f"n={n} above the enumeration cap {BRUTE_MAX_N}")
    pairs = [(u, v) for u in range(n) for v in range(n) if u != v]
    out = []
    for bits in product((0, 1), repeat=len(pairs)):
        edges = tuple(p for p, b in zip(pairs, bits) if b)
        parents: list[set] = [set() for _ in range(n)]
        for u, v in edges:
            parents[v].add(u)
        # Kahn check
        indeg = [len(p) for p in parents]
        ready = [i for i in range(n) if indeg[i] == 0]
        seen = 0
        while ready:
            i = ready.pop()
            seen += 1
            for v in range(n):
                if i in parents[v]:
                    indeg[v] -= 1
                    if indeg[v] == 0:
                        ready.append(v)
        if seen == n:
            out.append(tuple(sorted(edges)))
    return tuple(out)


def brute_force(table: ParentSetScoreTable) -> SearchResult:
    """Exact maximizer by scoring every labeled DAG; ties go to the
    lexicographically smallest edge set."""
    n = table.n
    if n > BRUTE_MAX_N:
        raise ValueError(f"n={n} above the enumeration cap {BRUTE_MAX_N}")
    t0 = time.perf_counter()
    best_score = NEG_INF
    best_edges = None
    for edges in all_dags(n):
        parents: list[list[int]] = [[] for _ in range(n)]
        for u, v in edges:
            parents[v].append(u)
        score = 0.0
        ok = True
        for i in range(n):
            if not table.has_family(i, parents[i]):
                ok = False
                break
            score += table.family_score(i, parents[i])
        if not ok:
            continue
        if score > best_score or (
            score == best_score and (best_edges is None or edges < best_edges)
        ):
            best_score = score
            best_edges = edges
    if best_edges is None:
        raise ValueError("the score table covers no complete DAG")
    dag = Dag(n, frozenset(best_edges))
    return SearchResult(
        dag=dag, score=best_score + table.constant, method="brute",
        runtime_ms=(time.perf_counter() - t0) * 1e3,
    )
