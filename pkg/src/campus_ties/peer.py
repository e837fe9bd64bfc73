"""Peer effects on the friendship network: attribute assortativity and
orderliness percolation."""

from __future__ import annotations

import heapq
import logging
import math
from dataclasses import dataclass, field
from typing import Hashable, Mapping

import numpy as np

from .errors import ArgumentError, UndefinedMetricError
from .graph import FriendshipNetwork

log = logging.getLogger(__name__)


def attribute_subgraph(g: FriendshipNetwork, name: str,
                       values: Mapping | None = None) -> tuple[FriendshipNetwork, dict, int]:
    """Induced subgraph on nodes carrying the attribute, the values, and the
    number of nodes dropped."""
    vals = dict(values) if values is not None else g.attribute(name)
    keep = [v for v in g.order if vals.get(v) is not None]
    dropped = g.number_of_nodes() - len(keep)
    sub = g if dropped == 0 else g.subgraph(keep)
    if name == "degree" and values is None:
        vals = sub.degrees()
    return sub, {v: vals[v] for v in sub.order}, dropped


def assortativity(g: FriendshipNetwork, attr: str = "degree",
                  values: Mapping | None = None) -> float:
    """Newman assortativity of a scalar node attribute.

    Uses the edge-sum form: with S1 = sum_i k_i x_i,
    ``r = (2 sum_edges x_u x_v - S1^2/2M) / (sum_i k_i x_i^2 - S1^2/2M)``.
    Nodes without the attribute are removed first.
    """
    sub, vals, dropped = attribute_subgraph(g, attr, values)
    if dropped:
        log.info("assortativity(%s): %d nodes without the attribute dropped", attr, dropped)
    edges = sub.edges()
    M = len(edges)
    if M < 2:
        raise UndefinedMetricError(f"assortativity needs at least 2 edges, got {M}")
    idx = sub.index
    x = np.array([float(vals[v]) for v in sub.order])
    # centring does not change r but keeps the sums well conditioned
    x = x - x.mean()
    k = np.array([sub.degree(v) for v in sub.order], dtype=float)
    u = np.fromiter((idx[a] for a, _ in edges), dtype=np.int64, count=M)
    w = np.fromiter((idx[b] for _, b in edges), dtype=np.int64, count=M)
    s1 = float(k @ x)
    num = 2.0 * float(x[u] @ x[w]) - s1 * s1 / (2 * M)
    den = float(k @ (x * x)) - s1 * s1 / (2 * M)
    if den <= 1e-12 * max(1.0, float(k @ (x * x))):
        raise UndefinedMetricError(f"attribute {attr!r} has no variance over edge endpoints")
    return max(-1.0, min(1.0, num / den))


class UnionFind:
    """Disjoint sets over 0..n-1 with union by size and path halving."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, a: int) -> int:
        parent = self.parent
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(self, a: int, b: int) -> int:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return ra
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]
        return ra


class _SizeTracker:
    """Multiset of component sizes answering largest / second largest."""

    def __init__(self):
        self.count: dict[int, int] = {}
        self.heap: list[int] = []

    def add(self, s: int):
        if self.count.get(s, 0) == 0:
            heapq.heappush(self.heap, -s)
        self.count[s] = self.count.get(s, 0) + 1

    def remove(self, s: int):
        self.count[s] -= 1

    def _clean(self):
        while self.heap and self.count.get(-self.heap[0], 0) == 0:
            heapq.heappop(self.heap)

    def top_two(self) -> tuple[int, int]:
        self._clean()
        if not self.heap:
            return 0, 0
        g1 = -self.heap[0]
        if self.count[g1] >= 2:
            return g1, g1
        top = heapq.heappop(self.heap)
        self._clean()
        g2 = -self.heap[0] if self.heap else 0
        heapq.heappush(self.heap, top)
        return g1, g2


@dataclass(frozen=True)
class PercolationCurve:
    """Sweep of the threshold ``m`` from above the largest orderliness down
    to the smallest. Each step is ``(m, p, g1, g2)``."""

    steps: list[tuple[float, float, int, int]]
    p_c: float
    m_c: float
    n_nodes: int

    @property
    def m(self) -> np.ndarray:
        return np.array([s[0] for s in self.steps])

    @property
    def p(self) -> np.ndarray:
        return np.array([s[1] for s in self.steps])

    @property
    def g1(self) -> np.ndarray:
        return np.array([s[2] for s in self.steps])

    @property
    def g2(self) -> np.ndarray:
        return np.array([s[3] for s in self.steps])


def _threshold_grid(values: np.ndarray, delta_m: float) -> np.ndarray:
    hi, lo = float(values.max()), float(values.min())
    k = int(math.ceil((hi - lo) / delta_m - 1e-9))
    regular = hi - delta_m * np.arange(k + 1)
    regular = regular[regular > lo]
    # every distinct value is a grid point, so a step activates one value at most
    grid = np.unique(np.concatenate([regular, np.unique(values)]))[::-1]
    return np.concatenate([[hi + delta_m], grid])


def percolate(g: FriendshipNetwork, attr: Mapping[Hashable, float] | None = None,
              delta_m: float = 0.01) -> PercolationCurve:
    """Threshold site percolation: nodes with orderliness ``>= m`` are active.

    ``attr`` defaults to the ``orderliness`` node attribute and must cover
    every node. ``p_c`` is the active fraction at the step where the second
    largest active component peaks (earliest step on ties).
    """
    if not delta_m > 0:
        raise ArgumentError("delta_m must be positive")
    values = dict(attr) if attr is not None else g.attribute("orderliness")
    missing = [v for v in g.order if values.get(v) is None]
    if missing:
        raise ArgumentError(f"{len(missing)} nodes lack orderliness, e.g. {missing[0]!r}")
    n = g.number_of_nodes()
    if n == 0:
        raise ArgumentError("cannot percolate an empty graph")
    idx = g.index
    o = np.array([float(values[v]) for v in g.order])
    order = np.argsort(-o, kind="stable")
    neighbors = [[idx[w] for w in g.adjacency[v]] for v in g.order]

    uf = UnionFind(n)
    active = np.zeros(n, dtype=bool)
    sizes = _SizeTracker()
    steps = []
    ptr = 0
    for m in _threshold_grid(o, delta_m):
        while ptr < n and o[order[ptr]] >= m:
            v = int(order[ptr])
            active[v] = True
            sizes.add(1)
            for w in neighbors[v]:
                if active[w]:
                    rv, rw = uf.find(v), uf.find(w)
                    if rv != rw:
                        sizes.remove(uf.size[rv])
                        sizes.remove(uf.size[rw])
                        sizes.add(uf.size[uf.union(rv, rw)])
            ptr += 1
        g1, g2 = sizes.top_two()
        steps.append((float(m), ptr / n, g1, g2))
    best = max(range(len(steps)), key=lambda i: (steps[i][3], -i))
    return PercolationCurve(steps, steps[best][1], steps[best][0], n)


@dataclass(frozen=True)
class KeyNode:
    node: Hashable
    orderliness: float
    delta_g1: int
    g1_after: int


@dataclass(frozen=True)
class KeyNodeReport:
    nodes: list[KeyNode] = field(default_factory=list)
    m_c: float = math.nan
    g1_at_mc: int = 0


def active_components(g: FriendshipNetwork, values: Mapping, m: float) -> tuple[dict, UnionFind]:
    """Component root for every node active at threshold ``m`` and the size
    of each component, via union-find."""
    idx = g.index
    active = {v for v in g.order if values[v] >= m}
    uf = UnionFind(len(idx))
    for u, v in g.edges():
        if u in active and v in active:
            uf.union(idx[u], idx[v])
    return {v: uf.find(idx[v]) for v in active}, uf


def key_nodes(g: FriendshipNetwork, attr: Mapping[Hashable, float] | None = None,
              curve: PercolationCurve | None = None, top_k: int = 10,
              delta_m: float = 0.01) -> KeyNodeReport:
    """Inactive nodes at ``m_c`` whose activation grows active components most.

    ``delta_g1`` is the size of the component the node would form when
    activated alone, minus the largest active component it touches (so an
    isolated candidate scores 1 and a bridge between clusters A and B scores
    ``|A| + |B| + 1 - max(|A|, |B|)``). ``g1_after`` is the largest active
    component afterwards. Ties are broken by ``g1_after``, then node id.
    """
    if top_k < 1:
        raise ArgumentError("top_k must be >= 1")
    values = dict(attr) if attr is not None else g.attribute("orderliness")
    if curve is None:
        curve = percolate(g, values, delta_m)
    m_c = curve.m_c
    roots, uf = active_components(g, values, m_c)
    comp_size = {r: uf.size[r] for r in set(roots.values())}
    g1 = max(comp_size.values(), default=0)
    found = []
    for v in g.order:
        if v in roots:
            continue
        touched = {roots[w] for w in g.adjacency[v] if w in roots}
        merged = 1 + sum(comp_size[r] for r in touched)
        largest_touched = max((comp_size[r] for r in touched), default=0)
        found.append(KeyNode(v, float(values[v]), merged - largest_touched, max(g1, merged)))
    try:
        found.sort(key=lambda k: k.node)
    except TypeError:
        found.sort(key=lambda k: str(k.node))
    found.sort(key=lambda k: (-k.delta_g1, -k.g1_after))
    return KeyNodeReport(found[:top_k], m_c, g1)
