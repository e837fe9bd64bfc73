"""Undirected friendship graphs and their topology metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Hashable, Iterable, Mapping, Sequence

import numpy as np
from scipy import sparse
from scipy.optimize import minimize_scalar
from scipy.sparse import csgraph
from scipy.special import zeta

from .errors import (ArgumentError, DisconnectedGraphError, InsufficientDataError,
                     UndefinedMetricError)
from .records import TimeWindow

EXACT_PATH_LIMIT = 20000
SAMPLED_SOURCES = 1000


class FriendshipNetwork:
    """Immutable simple undirected graph with per-node attributes.

    ``edges`` is any iterable of node pairs (extra tuple fields are ignored);
    ``nodes`` adds isolated nodes. Self-loops are rejected and repeated pairs
    collapse to one edge.
    """

    def __init__(self, edges: Iterable[Sequence[Hashable]] = (), nodes: Iterable[Hashable] = (),
                 attributes: Mapping[Hashable, Mapping[str, Any]] | None = None,
                 label: str = "", window: TimeWindow | None = None):
        adj: dict[Hashable, set] = {v: set() for v in nodes}
        for e in edges:
            u, v = e[0], e[1]
            if u == v:
                raise ArgumentError(f"self-loop on {u!r}")
            adj.setdefault(u, set()).add(v)
            adj.setdefault(v, set()).add(u)
        self.adjacency: dict[Hashable, tuple] = {v: tuple(sorted(adj[v])) for v in sorted(adj)}
        self.nodes = frozenset(self.adjacency)
        self.attributes: dict[Hashable, dict[str, Any]] = {
            v: dict(attrs) for v, attrs in (attributes or {}).items() if v in self.nodes
        }
        self.label = label or (window.label if window else "")
        self.window = window

    def __repr__(self):
        return (f"FriendshipNetwork(label={self.label!r}, nodes={self.number_of_nodes()}, "
                f"edges={self.number_of_edges()})")

    def number_of_nodes(self) -> int:
        return len(self.adjacency)

    def number_of_edges(self) -> int:
        return sum(len(nb) for nb in self.adjacency.values()) // 2

    def __len__(self) -> int:
        return len(self.adjacency)

    def __contains__(self, v) -> bool:
        return v in self.adjacency

    def neighbors(self, v) -> tuple:
        return self.adjacency[v]

    def degree(self, v) -> int:
        return len(self.adjacency[v])

    def degrees(self) -> dict:
        return {v: len(nb) for v, nb in self.adjacency.items()}

    def edges(self) -> list[tuple]:
        return [(u, v) for u, nb in self.adjacency.items() for v in nb if u < v]

    def has_edge(self, u, v) -> bool:
        return u in self.adjacency and v in self.adjacency[u]

    def attribute(self, name: str) -> dict:
        """Values of one attribute; ``degree`` is derived on the fly."""
        if name == "degree":
            return self.degrees()
        return {v: a[name] for v, a in self.attributes.items()
                if a.get(name) is not None}

    def with_attribute(self, name: str, values: Mapping) -> FriendshipNetwork:
        attrs = {v: dict(a) for v, a in self.attributes.items()}
        for v, x in values.items():
            if v in self.adjacency:
                attrs.setdefault(v, {})[name] = x
        return self._derive(self.edges(), self.adjacency, attrs)

    def subgraph(self, nodes: Iterable) -> FriendshipNetwork:
        keep = set(nodes) & self.nodes
        edges = [(u, v) for u, v in self.edges() if u in keep and v in keep]
        return self._derive(edges, keep, self.attributes)

    def _derive(self, edges, nodes, attrs) -> FriendshipNetwork:
        return FriendshipNetwork(edges, nodes, attrs, self.label, self.window)

    @cached_property
    def index(self) -> dict:
        return {v: i for i, v in enumerate(self.adjacency)}

    @cached_property
    def order(self) -> list:
        return list(self.adjacency)

    @cached_property
    def csr(self) -> sparse.csr_matrix:
        n = len(self.adjacency)
        idx = self.index
        rows, cols = [], []
        for u, nb in self.adjacency.items():
            iu = idx[u]
            for v in nb:
                rows.append(iu)
                cols.append(idx[v])
        data = np.ones(len(rows), dtype=np.int64)
        return sparse.csr_matrix((data, (rows, cols)), shape=(n, n))


@dataclass(frozen=True)
class ComponentReport:
    components: list[frozenset]
    S_G1: int
    S_G2: int
    N: int
    beta: float | None = None

    @property
    def sizes(self) -> list[int]:
        return [len(c) for c in self.components]

    @property
    def giant(self) -> frozenset:
        return self.components[0] if self.components else frozenset()


def _component_key(comp: frozenset):
    return (-len(comp), min(comp))


def connected_components(g: FriendshipNetwork, fit_beta: bool = True) -> ComponentReport:
    """Partition of the nodes into connected components, largest first.

    ``beta`` is the power-law exponent of the sizes of every component except
    the largest, or None when there are too few of them to fit.
    """
    n = g.number_of_nodes()
    if n == 0:
        return ComponentReport([], 0, 0, 0, None)
    _, labels = csgraph.connected_components(g.csr, directed=False)
    groups: dict[int, list] = {}
    for v, lab in zip(g.order, labels):
        groups.setdefault(int(lab), []).append(v)
    comps = sorted((frozenset(c) for c in groups.values()), key=_component_key)
    sizes = [len(c) for c in comps]
    beta = None
    if fit_beta and len(sizes) > 1:
        try:
            beta = fit_power_law(sizes[1:]).alpha
        except InsufficientDataError:
            beta = None
    return ComponentReport(comps, sizes[0], sizes[1] if len(sizes) > 1 else 0, len(comps), beta)


def giant_component(g: FriendshipNetwork) -> FriendshipNetwork:
    return g.subgraph(connected_components(g, fit_beta=False).giant)


def density(g: FriendshipNetwork) -> float:
    n = g.number_of_nodes()
    if n < 2:
        raise UndefinedMetricError(f"density needs at least 2 nodes, got {n}")
    return 2 * g.number_of_edges() / (n * (n - 1))


def avg_degree(g: FriendshipNetwork) -> float:
    n = g.number_of_nodes()
    if n == 0:
        raise UndefinedMetricError("average degree of an empty graph")
    return 2 * g.number_of_edges() / n


def local_clustering(g: FriendshipNetwork) -> np.ndarray:
    """Per-node clustering in ``g.order``; nodes of degree < 2 get 0."""
    if g.number_of_nodes() == 0:
        return np.zeros(0)
    A = g.csr
    triangles = np.asarray((A @ A).multiply(A).sum(axis=1)).ravel() / 2
    k = np.asarray(A.sum(axis=1)).ravel().astype(float)
    possible = k * (k - 1) / 2
    out = np.zeros_like(possible)
    np.divide(triangles, possible, out=out, where=possible > 0)
    return out


def avg_clustering(g: FriendshipNetwork) -> float:
    if g.number_of_nodes() == 0:
        raise UndefinedMetricError("clustering of an empty graph")
    return float(math.fsum(local_clustering(g)) / g.number_of_nodes())


def _bfs_distance_sum(A: sparse.csr_matrix, sources: np.ndarray, chunk: int = 256) -> tuple[float, int]:
    total = 0.0
    for start in range(0, len(sources), chunk):
        dist = csgraph.shortest_path(A, method="D", directed=False, unweighted=True,
                                     indices=sources[start:start + chunk])
        if np.isinf(dist).any():
            raise DisconnectedGraphError(
                "graph is disconnected; pass the giant component (giant_component(g))")
        total += float(dist.sum())
    return total, len(sources)


def avg_shortest_path(g: FriendshipNetwork, mode: str = "auto", k_sources: int = SAMPLED_SOURCES,
                      seed: int = 0) -> float:
    """Mean BFS distance over ordered pairs of distinct nodes.

    ``mode`` is ``exact``, ``sampled`` (mean over ``k_sources`` random BFS
    roots drawn without replacement under ``seed``) or ``auto``, which is
    exact up to 20 000 nodes.
    """
    n = g.number_of_nodes()
    if n < 2:
        raise UndefinedMetricError("average path length needs at least 2 nodes")
    if mode == "auto":
        mode = "exact" if n <= EXACT_PATH_LIMIT else "sampled"
    if mode == "exact":
        sources = np.arange(n)
    elif mode == "sampled":
        if k_sources < 1:
            raise ArgumentError("k_sources must be >= 1")
        rng = np.random.default_rng(seed)
        sources = np.sort(rng.choice(n, size=min(k_sources, n), replace=False))
    else:
        raise ArgumentError(f"unknown mode {mode!r}")
    total, count = _bfs_distance_sum(g.csr, sources)
    return total / (count * (n - 1))


@dataclass(frozen=True)
class PowerLawFit:
    """Discrete power-law fit of a tail ``x >= x_min``.

    ``alpha`` maximizes the exact discrete likelihood (Hurwitz zeta
    normalization). ``alpha_approx`` is the closed-form continuous
    approximation ``1 + n / sum(ln(x / (x_min - 0.5))`` and ``alpha_binned``
    the negated log-log least-squares slope of the log-binned histogram.
    """

    alpha: float
    alpha_approx: float
    alpha_binned: float | None
    x_min: int
    n_tail: int


def _discrete_mle(x: np.ndarray, x_min: int) -> float:
    n = len(x)
    s = float(np.log(x).sum())

    def nll(a):
        return a * s + n * math.log(zeta(a, x_min))

    res = minimize_scalar(nll, bounds=(1.0 + 1e-6, 20.0), method="bounded",
                          options={"xatol": 1e-10})
    return float(res.x)


def _binned_slope(x: np.ndarray, x_min: int, bins_per_decade: int = 10) -> float | None:
    hi = x.max()
    if hi <= x_min:
        return None
    edges = np.unique(np.floor(np.logspace(np.log10(x_min), np.log10(hi + 1),
                                           max(3, int(bins_per_decade * np.log10((hi + 1) / x_min)) + 1))))
    if len(edges) < 3:
        return None
    counts, edges = np.histogram(x, bins=edges)
    widths = np.diff(edges)
    centers = np.sqrt(edges[:-1] * np.maximum(edges[1:] - 1, edges[:-1]))
    ok = counts > 0
    if ok.sum() < 2:
        return None
    dens = counts[ok] / widths[ok] / len(x)
    slope = np.polyfit(np.log(centers[ok]), np.log(dens), 1)[0]
    return float(-slope)


def fit_power_law(values: Iterable[int], x_min: int | None = None) -> PowerLawFit:
    """Fit ``P(x) ~ x^-alpha`` to positive integers at or above ``x_min``
    (default: the smallest value)."""
    x = np.asarray(list(values), dtype=float)
    if x.size and (x < 1).any():
        raise ArgumentError("power-law values must be positive integers")
    if x_min is None:
        if x.size == 0:
            raise InsufficientDataError("no values to fit")
        x_min = int(x.min())
    if x_min < 1:
        raise ArgumentError("x_min must be >= 1")
    tail = x[x >= x_min]
    if tail.size < 10:
        raise InsufficientDataError(f"need at least 10 values >= x_min, got {tail.size}")
    if tail.max() == tail.min() == x_min:
        raise InsufficientDataError("all tail values are equal; exponent is unbounded")
    approx = 1.0 + tail.size / float(np.log(tail / (x_min - 0.5)).sum())
    return PowerLawFit(_discrete_mle(tail, x_min), approx, _binned_slope(tail, x_min),
                       x_min, int(tail.size))


def densification_fit(series: Iterable[tuple[float, float]]) -> float:
    """Least-squares slope of ln(edges) against ln(nodes)."""
    pts = np.asarray(list(series), dtype=float)
    if len(pts) < 3:
        raise InsufficientDataError(f"need at least 3 (n, e) points, got {len(pts)}")
    n, e = pts[:, 0], pts[:, 1]
    if (n < 2).any() or (e < 1).any():
        raise ArgumentError("every point needs n >= 2 and e >= 1")
    if np.ptp(np.log(n)) == 0:
        raise InsufficientDataError("all node counts are equal; slope is undefined")
    return float(np.polyfit(np.log(n), np.log(e), 1)[0])


@dataclass(frozen=True)
class TopologyReport:
    rho: float
    c_avg: float
    L_avg: float
    k_avg: float
    alpha: float | None = None
    gamma: float | None = None


def topology(gcc: FriendshipNetwork, path_mode: str = "auto", seed: int = 0) -> TopologyReport:
    """Metrics of a connected graph (normally a giant component)."""
    try:
        alpha = fit_power_law(gcc.degrees().values()).alpha
    except InsufficientDataError:
        alpha = None
    return TopologyReport(density(gcc), avg_clustering(gcc),
                          avg_shortest_path(gcc, path_mode, seed=seed), avg_degree(gcc), alpha)


EVOLUTION_COLUMNS = ["label", "S_G", "E_G", "N", "S_G1", "S_G2", "beta",
                     "rho", "c_avg", "L_avg", "k_avg", "alpha"]


def evolution_row(g: FriendshipNetwork, path_mode: str = "auto", seed: int = 0) -> dict:
    comps = connected_components(g)
    row: dict[str, Any] = {
        "label": g.label, "S_G": g.number_of_nodes(), "E_G": g.number_of_edges(),
        "N": comps.N, "S_G1": comps.S_G1, "S_G2": comps.S_G2, "beta": comps.beta,
        "rho": None, "c_avg": None, "L_avg": None, "k_avg": None, "alpha": None,
    }
    if comps.S_G1 >= 2:
        topo = topology(g.subgraph(comps.giant), path_mode, seed)
        row.update(rho=topo.rho, c_avg=topo.c_avg, L_avg=topo.L_avg,
                   k_avg=topo.k_avg, alpha=topo.alpha)
    return row


def evolution_report(networks: Sequence[FriendshipNetwork], path_mode: str = "auto",
                     seed: int = 0) -> list[dict]:
    """One row of size and giant-component metrics per network, ordered by
    window start (networks without a window keep their given order)."""
    if not networks:
        raise InsufficientDataError("evolution report needs at least one network")
    ordered = sorted(enumerate(networks),
                     key=lambda p: (p[1].window.start if p[1].window else 0, p[0]))
    return [evolution_row(g, path_mode, seed) for _, g in ordered]


def densification_from_report(rows: Sequence[Mapping]) -> float | None:
    """Densification exponent across the giant components of a report."""
    pts = []
    for r in rows:
        if r["S_G1"] >= 2 and r["k_avg"] is not None:
            pts.append((r["S_G1"], r["k_avg"] * r["S_G1"] / 2))
    try:
        return densification_fit(pts)
    except (InsufficientDataError, ArgumentError):
        return None
