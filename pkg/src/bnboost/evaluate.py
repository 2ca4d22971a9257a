"""Markov-equivalence-aware evaluation and the synthetic-data harness.

A learned structure only identifies its Markov equivalence class, so graphs
are compared after conversion to the class's completed PDAG: compelled
edges stay directed, reversible edges become undirected. The distance
between two PDAGs counts one unit per pair-level mismatch (missing edge,
extra edge, or orientation/type disagreement).
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .beta import BetaTable, load_table
from .data import Dag, load_network, random_network, sample
from .scoring import ScoreConfig, build_parent_set_scores
from .search import brute_force, exact_dp, greedy_hill_climb

__all__ = [
    "Pdag",
    "ExperimentConfig",
    "dag_to_cpdag",
    "shd",
    "run_experiment",
    "rows_to_csv",
    "experiment_config_from_dict",
    "CSV_COLUMNS",
]

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "seed", "n", "d", "N", "score_name", "eta", "search_method",
    "shd", "total_score", "score_build_ms", "search_ms",
)


@dataclass(frozen=True)
class Pdag:
    """Partially directed graph: disjoint directed and undirected edge sets."""

    n: int
    directed: frozenset[tuple[int, int]]
    undirected: frozenset[tuple[int, int]]  # stored as (min, max)

    def __post_init__(self):
        und = frozenset(tuple(sorted(e)) for e in self.undirected)
        object.__setattr__(self, "undirected", und)
        object.__setattr__(self, "directed", frozenset(self.directed))
        pairs = set()
        for u, v in self.directed:
            if u == v or not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"bad directed edge ({u}, {v})")
            pairs.add((min(u, v), max(u, v)))
        if len(pairs) != len(self.directed):
            raise ValueError("conflicting directed edges on one pair")
        for u, v in und:
            if u == v or not (0 <= u < self.n and 0 <= v < self.n):
                raise ValueError(f"bad undirected edge ({u}, {v})")
            if (u, v) in pairs:
                raise ValueError(f"pair ({u}, {v}) is both directed and undirected")

    def skeleton(self) -> frozenset[tuple[int, int]]:
        return frozenset(
            {(min(u, v), max(u, v)) for u, v in self.directed} | self.undirected
        )


def _order_edges(dag: Dag) -> list[tuple[int, int]]:
    """Total order on edges: children by topological position, and within a
    child the parents from latest to earliest position."""
    pos = {node: k for k, node in enumerate(dag.topological_order())}
    return sorted(dag.edges, key=lambda e: (pos[e[1]], -pos[e[0]]))


def dag_to_cpdag(dag: Dag) -> Pdag:
    """Completed PDAG of the Markov equivalence class of dag.

    Order-based compelled-edge labeling: walk the edges in the canonical
    order, propagating compelled status from each node's already-labeled
    incoming edges and from v-structure witnesses.
    """
    edges = _order_edges(dag)
    rank = {e: k for k, e in enumerate(edges)}
    UNKNOWN, COMPELLED, REVERSIBLE = 0, 1, 2
    label = {e: UNKNOWN for e in edges}
    parents = {i: dag.parents(i) for i in range(dag.n)}

    while True:
        unknown = [e for e in edges if label[e] == UNKNOWN]
        if not unknown:
            break
        x, y = min(unknown, key=rank.get)
        forced = False
        for w in parents[x]:
            if label[(w, x)] != COMPELLED:
                continue
            if w not in parents[y]:
                for z in parents[y]:
                    label[(z, y)] = COMPELLED
                forced = True
                break
            label[(w, y)] = COMPELLED
        if forced:
            continue
        if any(z != x and z not in parents[x] for z in parents[y]):
            verdict = COMPELLED
        else:
            verdict = REVERSIBLE
        for z in parents[y]:
            if label[(z, y)] == UNKNOWN:
                label[(z, y)] = verdict

    directed = frozenset(e for e in edges if label[e] == COMPELLED)
    undirected = frozenset(
        tuple(sorted(e)) for e in edges if label[e] == REVERSIBLE
    )
    return Pdag(dag.n, directed, undirected)


def shd(p1: Pdag, p2: Pdag) -> int:
    """Structural Hamming distance: pair-level additions, deletions, and
    orientation or type mismatches, one unit each."""
    if p1.n != p2.n:
        raise ValueError(f"node counts differ: {p1.n} != {p2.n}")

    def classify(p: Pdag):
        kinds = {}
        for u, v in p.directed:
            kinds[(min(u, v), max(u, v))] = ("dir", u, v)
        for e in p.undirected:
            kinds[e] = ("und",)
        return kinds

    k1 = classify(p1)
    k2 = classify(p2)
    dist = 0
    for pair in set(k1) | set(k2):
        a = k1.get(pair)
        b = k2.get(pair)
        if a != b:  # missing, extra, dir-vs-und, or oppositely directed
            dist += 1
    return dist


# ---------------------------------------------------------------------------
# experiment harness
# ---------------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    """One synthetic-recovery experiment: networks, sample sizes, methods."""

    N_schedule: list[int]
    methods: list[tuple[str, str]]  # (score_name in {bic, boost}, search method)
    seeds: list[int]
    n: int = 8
    d: int = 2
    network_path: str | None = None
    score: ScoreConfig = field(default_factory=ScoreConfig)
    beta_table_path: str | None = None
    restarts: int = 10

    def __post_init__(self):
        if not self.N_schedule or any(
            b <= a for a, b in zip(self.N_schedule, self.N_schedule[1:])
        ):
            raise ValueError("N_schedule must be nonempty and ascending")
        if len(set(self.seeds)) != len(self.seeds) or not self.seeds:
            raise ValueError("seeds must be nonempty and distinct")
        for score_name, method in self.methods:
            if score_name not in ("bic", "boost"):
                raise ValueError(f"unknown score {score_name!r}")
            if method not in ("dp", "greedy", "brute"):
                raise ValueError(f"unknown search method {method!r}")


def _derived_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(parts).generate_state(1)[0])


def _search(table, method: str, restarts: int, seed: int):
    if method == "dp":
        return exact_dp(table)
    if method == "greedy":
        return greedy_hill_climb(table, restarts=restarts, seed=seed)
    return brute_force(table)


def run_experiment(cfg: ExperimentConfig, beta_table: BetaTable | None = None) -> list[dict]:
    """One row per (seed, N, method) plus per-(N, method) mean rows.

    Per run: draw (or load) the generating network, sample a fresh dataset
    of N rows, fold the configured score into a parent-set table, search,
    and record the SHD between the completed PDAGs of truth and the learned
    graph. Failures are logged and leave their row's result fields empty.
    """
    needs_table = any(s == "boost" for s, _ in cfg.methods)
    if needs_table and beta_table is None:
        if cfg.beta_table_path is None:
            raise ValueError("boost methods need a beta table")
        beta_table = load_table(cfg.beta_table_path)
    if beta_table is not None and abs(beta_table.eta - cfg.score.eta) > 1e-12:
        raise ValueError(
            f"beta table eta {beta_table.eta!r} != score eta {cfg.score.eta!r}"
        )

    shared_net = load_network(cfg.network_path) if cfg.network_path else None
    rows: list[dict] = []
    for seed in sorted(cfg.seeds):
        net = shared_net if shared_net is not None else random_network(cfg.n, cfg.d, seed)
        truth = dag_to_cpdag(net.dag)
        for n_rows in cfg.N_schedule:
            data = sample(net, n_rows, _derived_seed(seed, n_rows))
            for m_idx, (score_name, method) in enumerate(cfg.methods):
                row = {
                    "seed": seed, "n": net.n, "d": cfg.d, "N": n_rows,
                    "score_name": score_name, "eta": cfg.score.eta,
                    "search_method": method, "shd": "", "total_score": "",
                    "score_build_ms": "", "search_ms": "",
                }
                try:
                    run_cfg = (
                        cfg.score if score_name == "boost"
                        else ScoreConfig(
                            eta=cfg.score.eta, kappa=cfg.score.kappa, psi2=0.0,
                            d=cfg.score.d, sepset_mode=cfg.score.sepset_mode,
                        )
                    )
                    t0 = time.perf_counter()
                    table = build_parent_set_scores(
                        data, beta_table if score_name == "boost" else None, run_cfg
                    )
                    t1 = time.perf_counter()
                    result = _search(
                        table, method, cfg.restarts, _derived_seed(seed, n_rows, m_idx)
                    )
                    t2 = time.perf_counter()
                    row["shd"] = shd(truth, dag_to_cpdag(result.dag))
                    row["total_score"] = result.score
                    row["score_build_ms"] = (t1 - t0) * 1e3
                    row["search_ms"] = (t2 - t1) * 1e3
                except Exception:
                    log.exception(
                        "run failed: seed=%s N=%s method=%s/%s",
                        seed, n_rows, score_name, method,
                    )
                rows.append(row)

    rows.sort(key=lambda r: (r["N"], r["score_name"], r["search_method"], r["seed"]))
    means: list[dict] = []
    for n_rows in cfg.N_schedule:
        for score_name, method in sorted(set(cfg.methods)):
            group = [
                r for r in rows
                if r["N"] == n_rows and r["score_name"] == score_name
                and r["search_method"] == method and r["shd"] != ""
            ]
            if not group:
                continue
            means.append({
                "seed": "mean", "n": group[0]["n"], "d": cfg.d, "N": n_rows,
                "score_name": score_name, "eta": cfg.score.eta,
                "search_method": method,
                "shd": sum(r["shd"] for r in group) / len(group),
                "total_score": sum(r["total_score"] for r in group) / len(group),
                "score_build_ms": sum(r["score_build_ms"] for r in group) / len(group),
                "search_ms": sum(r["search_ms"] for r in group) / len(group),
            })
    return rows + means


def _fmt_cell(key: str, value) -> str:
    if value == "" or isinstance(value, str):
        return str(value)
    if key in ("score_build_ms", "search_ms"):
        return format(float(value), ".3f")
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def rows_to_csv(rows: list[dict]) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        lines.append(",".join(_fmt_cell(c, row[c]) for c in CSV_COLUMNS))
    return "\n".join(lines) + "\n"


def experiment_config_from_dict(doc: dict) -> ExperimentConfig:
    """Build a config from the JSON document accepted by the CLI."""
    network = doc.get("network", {})
    score = ScoreConfig(
        eta=float(doc.get("eta", 0.01)),
        kappa=float(doc.get("kappa", 0.5)),
        psi2=float(doc.get("psi2", 1.0)),
        d=int(doc.get("d", 2)),
    )
    return ExperimentConfig(
        N_schedule=[int(x) for x in doc["N_schedule"]],
        methods=[(str(a), str(b)) for a, b in doc["methods"]],
        seeds=[int(s) for s in doc["seeds"]],
        n=int(network.get("n", 8)),
        d=int(network.get("d", score.d)),
        network_path=network.get("path"),
        score=score,
        beta_table_path=doc.get("beta_table"),
        restarts=int(doc.get("restarts", 10)),
    )
