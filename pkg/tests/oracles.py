"""Slow, obviously-correct reference implementations used as test oracles.

Nothing here imports from the package; each function recomputes a quantity
from its definition.
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict, deque

import numpy as np
from scipy.integrate import quad
from scipy.special import zeta


def slice_p2_by_quadrature(N: int, delta_t: float, sigma: float) -> float:
    """Sum of squared Gaussian masses of N - 1 slices centred on the mean."""
    span = (N - 1) * delta_t
    mu = span / 2

    def pdf(x):
        return math.exp(-((x - mu) ** 2) / (2 * sigma * sigma)) / (math.sqrt(2 * math.pi) * sigma)

    masses = [quad(pdf, k * delta_t, (k + 1) * delta_t)[0] for k in range(N - 1)]
    return math.fsum(q * q for q in masses)


def enumerated_tail(b: int, p: float, a: int) -> float:
    """P(at least a successes) by enumerating all 2^b Bernoulli outcomes."""
    total = 0.0
    for outcome in itertools.product((0, 1), repeat=b):
        k = sum(outcome)
        if k >= a:
            total += p ** k * (1 - p) ** (b - k)
    return total


def naive_cooccurrences(records, radius: int = 120, gap: int = 1800) -> dict:
    """All-pairs scan: every two swipes of different students at one location
    within ``radius`` seconds is an encounter; encounters of a pair at one
    location separated by at most ``gap`` seconds are one meal."""
    recs = [r for r in records if r[2] != "LIBRARY"]
    times = defaultdict(list)
    for (t1, s1, l1), (t2, s2, l2) in itertools.combinations(recs, 2):
        if s1 != s2 and l1 == l2 and abs(t1 - t2) <= radius:
            times[(min(s1, s2), max(s1, s2), l1)].append(min(t1, t2))
    counts = defaultdict(int)
    for (u, v, _), ts in times.items():
        ts.sort()
        counts[(u, v)] += 1 + sum(1 for x, y in zip(ts, ts[1:]) if y - x > gap)
    return dict(counts)


def brute_novelty(seq) -> list[int]:
    """Shortest substring length starting at i that never starts earlier."""
    n = len(seq)
    out = []
    for i in range(n):
        length = None
        for L in range(1, n - i + 1):
            sub = list(seq[i:i + L])
            if not any(list(seq[j:j + L]) == sub for j in range(i)):
                length = L
                break
        out.append(length if length is not None else n - i + 1)
    return out


def brute_entropy(seq) -> float:
    n = len(seq)
    return n * math.log(n) / sum(brute_novelty(seq))


def adjacency(edges, nodes=()):
    adj = defaultdict(set)
    for v in nodes:
        adj[v]
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    return adj


def triangle_clustering(edges, nodes=()) -> dict:
    adj = adjacency(edges, nodes)
    out = {}
    for v, nb in adj.items():
        k = len(nb)
        if k < 2:
            out[v] = 0.0
            continue
        links = sum(1 for a, b in itertools.combinations(sorted(nb, key=str), 2) if b in adj[a])
        out[v] = links / (k * (k - 1) / 2)
    return out


def floyd_warshall_mean(edges, nodes=()) -> float:
    adj = adjacency(edges, nodes)
    vs = sorted(adj, key=str)
    idx = {v: i for i, v in enumerate(vs)}
    n = len(vs)
    d = np.full((n, n), np.inf)
    np.fill_diagonal(d, 0)
    for u, v in edges:
        d[idx[u], idx[v]] = d[idx[v], idx[u]] = 1
    for k in range(n):
        d = np.minimum(d, d[:, [k]] + d[[k], :])
    return float(d.sum() / (n * (n - 1)))


def double_sum_assortativity(edges, x: dict) -> float:
    """Newman's r as the double sum over node pairs of the adjacency matrix."""
    vs = sorted(x, key=str)
    idx = {v: i for i, v in enumerate(vs)}
    n = len(vs)
    A = np.zeros((n, n))
    for u, v in edges:
        A[idx[u], idx[v]] = A[idx[v], idx[u]] = 1
    k = A.sum(axis=1)
    two_m = k.sum()
    xs = np.array([x[v] for v in vs], dtype=float)
    num = den = 0.0
    for i in range(n):
        for j in range(n):
            expect = k[i] * k[j] / two_m
            num += (A[i, j] - expect) * xs[i] * xs[j]
            den += (k[i] * (i == j) - expect) * xs[i] * xs[j]
    return num / den


def bfs_components(adj, allowed) -> list[set]:
    seen, comps = set(), []
    for s in allowed:
        if s in seen:
            continue
        comp, queue = {s}, deque([s])
        seen.add(s)
        while queue:
            u = queue.popleft()
            for w in adj[u]:
                if w in allowed and w not in seen:
                    seen.add(w)
                    comp.add(w)
                    queue.append(w)
        comps.append(comp)
    return comps


def activation_gain(edges, nodes, values: dict, m: float, node) -> tuple[int, int]:
    """Recompute components with ``node`` switched on at threshold ``m``.

    Returns (size of the node's new component minus the largest active
    component it joins, largest active component afterwards).
    """
    adj = adjacency(edges, nodes)
    active = {v for v in adj if values[v] >= m}
    before = bfs_components(adj, active)
    after = bfs_components(adj, active | {node})
    mine = next(c for c in after if node in c)
    joined = max((len(c) for c in before if c & adj[node]), default=0)
    return len(mine) - joined, max(len(c) for c in after)


def sweep_g1_g2(edges, nodes, values: dict, m: float) -> tuple[int, int]:
    adj = adjacency(edges, nodes)
    sizes = sorted((len(c) for c in bfs_components(adj, {v for v in adj if values[v] >= m})),
                   reverse=True) + [0, 0]
    return sizes[0], sizes[1]


def sample_discrete_power_law(alpha: float, x_min: int, size: int, rng) -> np.ndarray:
    """Inverse-CDF draws from P(x) = x^-alpha / zeta(alpha, x_min), x >= x_min."""
    u = rng.random(size)
    norm = zeta(alpha, x_min)

    def survival(x):
        return zeta(alpha, x) / norm

    lo = np.full(size, x_min, dtype=np.int64)
    hi = np.full(size, x_min, dtype=np.int64)
    # grow hi until survival(hi + 1) < u, i.e. the draw is at most hi
    while True:
        grow = survival(hi + 1) >= u
        if not grow.any():
            break
        hi[grow] = hi[grow] * 2 + 1
    while (hi > lo).any():
        mid = (lo + hi) // 2
        beyond = survival(mid + 1) >= u
        lo = np.where(beyond, mid + 1, lo)
        hi = np.where(beyond, hi, mid)
    return lo


def rank_formula_spearman(x, y) -> float:
    """1 - 6 sum d^2 / (n (n^2 - 1)) for data without ties."""
    n = len(x)
    rx = {v: i for i, v in enumerate(sorted(x))}
    ry = {v: i for i, v in enumerate(sorted(y))}
    d2 = sum((rx[a] - ry[b]) ** 2 for a, b in zip(x, y))
    return 1 - 6 * d2 / (n * (n * n - 1))


def gnp_edges(n: int, p: float, rng) -> list[tuple[int, int]]:
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(len(iu)) < p
    return list(zip(iu[keep].tolist(), ju[keep].tolist()))
