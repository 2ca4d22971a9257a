"""Binary datasets, synthetic generating networks, and empirical counts.

Synthetic networks attach a logistic conditional to every node:
P(X_i = 1 | parents) = sigmoid(sum_j theta_ij * x_j + u_i) with the parent
values entering as raw bits. Datasets are plain 0/1 matrices with named
columns; all empirical statistics needed by scoring are computed here.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .dist2x2 import JointDist2x2

__all__ = [
    "BinaryDataset",
    "Dag",
    "Network",
    "random_network",
    "sample",
    "conditional_joint",
    "family_counts",
    "save_dataset",
    "load_dataset",
    "save_network",
    "load_network",
    "network_to_dict",
    "network_from_dict",
]


class CycleError(ValueError):
    """The edge set contains a directed cycle."""


@dataclass(frozen=True)
class Dag:
    """Directed acyclic graph on nodes 0..n-1 with edges (parent, child)."""

    n: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"node count {self.n} must be >= 1")
        object.__setattr__(self, "edges", frozenset(self.edges))
        for u, v in self.edges:
            if not (0 <= u < self.n and 0 <= v < self.n) or u == v:
                raise ValueError(f"bad edge ({u}, {v}) for n={self.n}")
        self.topological_order()  # raises CycleError if cyclic

    def parents(self, i: int) -> tuple[int, ...]:
        return tuple(sorted(u for u, v in self.edges if v == i))

    def children(self, i: int) -> tuple[int, ...]:
        return tuple(sorted(v for u, v in self.edges if u == i))

    def in_degree(self, i: int) -> int:
        return sum(1 for _, v in self.edges if v == i)

    def max_in_degree(self) -> int:
        return max((self.in_degree(i) for i in range(self.n)), default=0)

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self.edges

    def adjacent(self, u: int, v: int) -> bool:
        return (u, v) in self.edges or (v, u) in self.edges

    def topological_order(self) -> list[int]:
        """Kahn's algorithm; ties broken by smallest node index."""
        indeg = [0] * self.n
        childmap: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            indeg[v] += 1
            childmap[u].append(v)
        ready = sorted(i for i in range(self.n) if indeg[i] == 0)
        order: list[int] = []
        while ready:
            i = ready.pop(0)
            order.append(i)
            for v in sorted(childmap[i]):
                indeg[v] -= 1
                if indeg[v] == 0:
                    ready.append(v)
            ready.sort()
        if len(order) != self.n:
            raise CycleError("edge set contains a directed cycle")
        return order

    def check_in_degree(self, d: int) -> None:
        bad = [i for i in range(self.n) if self.in_degree(i) > d]
        if bad:
            raise ValueError(f"nodes {bad} exceed the in-degree bound {d}")


@dataclass(frozen=True)
class BinaryDataset:
    """N rows of n binary observations with named columns."""

    variable_names: tuple[str, ...]
    rows: np.ndarray  # (N, n) uint8

    def __post_init__(self):
        rows = np.ascontiguousarray(np.asarray(self.rows, dtype=np.uint8))
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "variable_names", tuple(self.variable_names))
        if rows.ndim != 2 or rows.shape[0] < 1 or rows.shape[1] < 1:
            raise ValueError(f"rows must be a nonempty 2-d matrix, got {rows.shape}")
        if rows.shape[1] != len(self.variable_names):
            raise ValueError("column count does not match variable names")
        if len(set(self.variable_names)) != len(self.variable_names):
            raise ValueError("duplicate variable names")
        if (rows > 1).any():
            raise ValueError("cells must be 0 or 1")

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]

    @property
    def n_vars(self) -> int:
        return self.rows.shape[1]

    def index(self, name: str) -> int:
        return self.variable_names.index(name)


@dataclass(frozen=True)
class Network:
    """DAG plus logistic conditionals: per-edge weight theta and per-node bias u."""

    dag: Dag
    theta: dict[int, dict[int, float]] = field(default_factory=dict)
    bias: dict[int, float] = field(default_factory=dict)
    variable_names: tuple[str, ...] = ()

    def __post_init__(self):
        names = self.variable_names or tuple(f"X{i}" for i in range(self.dag.n))
        object.__setattr__(self, "variable_names", tuple(names))
        if len(self.variable_names) != self.dag.n:
            raise ValueError("variable name count does not match the DAG")
        for i in range(self.dag.n):
            pa = self.dag.parents(i)
            th = self.theta.get(i, {})
            if set(th) != set(pa):
                raise ValueError(
                    f"node {i}: theta keys {sorted(th)} != parents {list(pa)}"
                )
            if i not in self.bias:
                raise ValueError(f"node {i}: missing bias")

    @property
    def n(self) -> int:
        return self.dag.n


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def random_network(n: int, d: int, seed: int) -> Network:
    """Random DAG with in-degree <= d and logistic parameters.

    A random permutation fixes the topological order; each node draws its
    parent count uniformly from 0..min(d, #predecessors) and its parents
    uniformly without replacement. Weights are U[-1/2, 1/2] + N(0,1)/4,
    biases N(0,1)/4.
    """
    if n < 1 or d < 0:
        raise ValueError(f"need n >= 1 and d >= 0, got n={n}, d={d}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    edges: set[tuple[int, int]] = set()
    theta: dict[int, dict[int, float]] = {i: {} for i in range(n)}
    bias: dict[int, float] = {}
    for pos in range(n):
        child = int(order[pos])
        cap = min(d, pos)
        k = int(rng.integers(0, cap + 1))
        parents = rng.choice(order[:pos], size=k, replace=False) if k else []
        for p in parents:
            p = int(p)
            edges.add((p, child))
            theta[child][p] = float(rng.uniform(-0.5, 0.5) + 0.25 * rng.normal())
        bias[child] = float(0.25 * rng.normal())
    return Network(dag=Dag(n, frozenset(edges)), theta=theta, bias=bias)


def sample(net: Network, n_rows: int, seed: int) -> BinaryDataset:
    """Ancestral sampling: each node draws Bernoulli(sigmoid(theta.x_pa + u))."""
    if n_rows < 1:
        raise ValueError(f"n_rows={n_rows} must be >= 1")
    rng = np.random.default_rng(seed)
    rows = np.zeros((n_rows, net.n), dtype=np.uint8)
    for i in net.dag.topological_order():
        act = np.full(n_rows, net.bias[i])
        for p, w in net.theta[i].items():
            act += w * rows[:, p]
        rows[:, i] = rng.random(n_rows) < _sigmoid(act)
    return BinaryDataset(net.variable_names, rows)


def conditional_joint(
    data: BinaryDataset, a: int, b: int, cond: tuple[int, ...] = (),
    assignment: tuple[int, ...] = (),
):
    """Empirical joint of (a, b) among rows where cond == assignment.

    Returns (dist, n_matched) with dist the normalized JointDist2x2 of the
    matching rows, or (None, 0) when no row matches.
    """
    if a == b or a in cond or b in cond:
        raise ValueError("a, b must be distinct and outside the conditioning set")
    if len(cond) != len(assignment):
        raise ValueError("assignment length does not match the conditioning set")
    if cond:
        mask = np.ones(data.n_rows, dtype=bool)
        for c, v in zip(cond, assignment):
            mask &= data.rows[:, c] == v
        sub = data.rows[mask]
    else:
        sub = data.rows
    n_s = sub.shape[0]
    if n_s == 0:
        return None, 0
    idx = sub[:, a].astype(np.intp) * 2 + sub[:, b]
    counts = np.bincount(idx, minlength=4)
    dist = JointDist2x2(*(counts / n_s))
    return dist, int(n_s)


def family_counts(data: BinaryDataset, i: int, parents: tuple[int, ...]) -> np.ndarray:
    """Contingency counts for node i given its parent set.

    Shape (2^k, 2): row index encodes the parent assignment with parent
    `parents[j]` (sorted ascending) contributing bit j, column the child
    value. Rows sum to the number of observations.
    """
    parents = tuple(sorted(parents))
    if i in parents:
        raise ValueError(f"node {i} cannot be its own parent")
    k = len(parents)
    idx = data.rows[:, i].astype(np.intp)
    for j, p in enumerate(parents):
        idx = idx + (data.rows[:, p].astype(np.intp) << (j + 1))
    return np.bincount(idx, minlength=2 ** (k + 1)).reshape(2 ** k, 2)


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------

def save_dataset(data: BinaryDataset, path) -> None:
    """CSV with a header row of variable names and 0/1 body cells."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(data.variable_names)
        for row in data.rows:
            writer.writerow(int(x) for x in row)


def load_dataset(path) -> BinaryDataset:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[int(cell) for cell in row] for row in reader if row]
    return BinaryDataset(tuple(header), np.asarray(rows, dtype=np.uint8))


def network_to_dict(net: Network) -> dict:
    names = net.variable_names
    return {
        "variables": list(names),
        "edges": [[names[u], names[v]] for u, v in sorted(net.dag.edges)],
        "cpds": {
            names[i]: {
                "theta": {names[p]: w for p, w in sorted(net.theta[i].items())},
                "u": net.bias[i],
            }
            for i in range(net.n)
        },
    }


def network_from_dict(doc: dict) -> Network:
    names = list(doc["variables"])
    pos = {name: k for k, name in enumerate(names)}
    edges = frozenset((pos[u], pos[v]) for u, v in doc["edges"])
    theta: dict[int, dict[int, float]] = {i: {} for i in range(len(names))}
    bias: dict[int, float] = {}
    for name, cpd in doc["cpds"].items():
        i = pos[name]
        theta[i] = {pos[p]: float(w) for p, w in cpd["theta"].items()}
        bias[i] = float(cpd["u"])
    return Network(
        dag=Dag(len(names), edges), theta=theta, bias=bias,
        variable_names=tuple(names),
    )


def save_network(net: Network, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(network_to_dict(net), fh, indent=2)
        fh.write("\n")


def load_network(path) -> Network:
    with open(path, "r", encoding="utf-8") as fh:
        return network_from_dict(json.load(fh))
