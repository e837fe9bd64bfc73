"""Friend-tie inference from canteen co-occurrences.

Two students co-occur when they swipe at the same canteen window within a
short time radius. Under a null model where strangers pick windows uniformly
at random and meal times follow a normal distribution, the number of
co-occurrences of a stranger pair over ``b`` meals is binomial. The smallest
count that fewer than one stranger pair in the population is expected to
reach is the critical frequency ``a_c``; pairs at or above it become edges.
"""

from __future__ import annotations

import io
import math
from collections import Counter, defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import IO, Iterable, Iterator, Mapping, NamedTuple

import numpy as np
from scipy.special import gammaln, logsumexp, ndtr

from .errors import ArgumentError, FormatError
from .graph import FriendshipNetwork
from .records import LIBRARY, StudentTable, TimeWindow

# Co-occurrences of one pair at one location closer than this belong to one meal.
SESSION_GAP_SECONDS = 30 * 60


@dataclass(frozen=True)
class CooccurrenceModel:
    """Null-model parameters.

    m: student population, n: canteen windows, b: meals per period,
    N: slice boundaries of the meal-time span (N - 1 slices), delta_t: slice
    width in minutes, sigma: meal-time standard deviation in minutes,
    mu: meal-time mean (defaults to the centre of the slice span).
    """

    m: int = 30000
    n: int = 160
    b: int = 90
    N: int = 60
    delta_t: float = 2.0
    sigma: float = 20.0
    mu: float | None = None

    def __post_init__(self):
        if self.m < 2:
            raise ArgumentError(f"population m must be >= 2, got {self.m}")
        if self.n < 1:
            raise ArgumentError(f"window count n must be >= 1, got {self.n}")
        if self.b < 1:
            raise ArgumentError(f"meal count b must be >= 1, got {self.b}")
        if self.N < 2:
            raise ArgumentError(f"N must be >= 2, got {self.N}")
        if not self.delta_t > 0:
            raise ArgumentError(f"delta_t must be positive, got {self.delta_t}")
        if not self.sigma > 0:
            raise ArgumentError(f"sigma must be positive, got {self.sigma}")

    @property
    def span(self) -> float:
        return (self.N - 1) * self.delta_t

    @property
    def pairs(self) -> int:
        return self.m * (self.m - 1) // 2

    def slice_edges(self) -> np.ndarray:
        mu = self.span / 2 if self.mu is None else self.mu
        return mu + (np.arange(self.N) - (self.N - 1) / 2) * self.delta_t


@dataclass(frozen=True)
class TieParams:
    a_c: int = 5
    window_seconds: int = 120

    def __post_init__(self):
        if self.a_c < 1:
            raise ArgumentError(f"a_c must be >= 1, got {self.a_c}")
        if self.window_seconds < 1:
            raise ArgumentError(f"window_seconds must be >= 1, got {self.window_seconds}")


class Tail(NamedTuple):
    P: float
    E: float


def window_collision_prob(model: CooccurrenceModel) -> float:
    # sum over n windows of (1/n)^2
    return 1.0 / model.n


def slice_masses(model: CooccurrenceModel) -> np.ndarray:
    """Normal probability mass of each of the N - 1 time slices."""
    mu = model.span / 2 if model.mu is None else model.mu
    z = (model.slice_edges() - mu) / model.sigma
    return np.diff(ndtr(z))


def time_collision_prob(model: CooccurrenceModel) -> float:
    return float(np.sum(slice_masses(model) ** 2))


def cooccurrence_prob(model: CooccurrenceModel) -> float:
    return window_collision_prob(model) * time_collision_prob(model)


def binomial_tail(b: int, p: float, a: int) -> float:
    """P(X >= a) for X ~ Binomial(b, p), summed in log space."""
    if a <= 0:
        return 1.0
    if a > b:
        return 0.0
    if p <= 0.0:
        return 0.0
    if p >= 1.0:
        return 1.0
    x = np.arange(a, b + 1)
    log_terms = (gammaln(b + 1) - gammaln(x + 1) - gammaln(b - x + 1)
                 + x * math.log(p) + (b - x) * math.log1p(-p))
    # smallest terms first
    return float(min(1.0, math.exp(logsumexp(log_terms[::-1]))))


def cooccurrence_tail(model: CooccurrenceModel, a: int, p: float | None = None) -> Tail:
    """Probability that a stranger pair co-occurs at least ``a`` times in
    ``b`` meals, and the expected number of such pairs among C(m, 2).

    ``p`` overrides the per-meal co-occurrence probability derived from the
    model.
    """
    if a < 1:
        raise ArgumentError(f"a must be >= 1, got {a}")
    if a > model.b:
        raise ArgumentError(f"a = {a} exceeds the meal count b = {model.b}")
    if p is None:
        p = cooccurrence_prob(model)
    P = binomial_tail(model.b, p, a)
    return Tail(P, model.pairs * P)


def tail_table(model: CooccurrenceModel, a_values: Iterable[int] = range(1, 10),
               p: float | None = None) -> list[tuple[int, float, float]]:
    return [(a, *cooccurrence_tail(model, a, p)) for a in a_values if a <= model.b]


def critical_frequency(model: CooccurrenceModel, expectation_ceiling: float = 1.0,
                       p: float | None = None) -> int:
    """Smallest ``a`` whose expected stranger-pair count is at or below the ceiling.

    Returns ``b + 1`` when even ``a = b`` stays above the ceiling, since no
    pair can co-occur more than ``b`` times.
    """
    if not expectation_ceiling > 0:
        raise ArgumentError("expectation_ceiling must be positive")
    if p is None:
        p = cooccurrence_prob(model)
    for a in range(1, model.b + 1):
        if model.pairs * binomial_tail(model.b, p, a) <= expectation_ceiling:
            return a
    return model.b + 1


class EdgeList(Mapping):
    """Co-occurrence counts keyed by unordered student pairs.

    Keys are stored as ``(a, b)`` with ``a < b``; lookups accept either order.
    """

    def __init__(self, counts: Mapping[tuple, int] | Iterable[tuple] = ()):
        data: dict[tuple, int] = {}
        items = counts.items() if isinstance(counts, Mapping) else (
            (pair[:2], pair[2] if len(pair) > 2 else 1) for pair in counts)
        for (u, v), c in items:
            if u == v:
                raise ArgumentError(f"self-pair {u!r}")
            if c < 1:
                raise ArgumentError(f"count for ({u!r}, {v!r}) must be >= 1")
            key = (u, v) if u < v else (v, u)
            if key in data:
                raise ArgumentError(f"duplicate pair {key!r}")
            data[key] = int(c)
        self._data = dict(sorted(data.items()))

    @staticmethod
    def key(u, v) -> tuple:
        return (u, v) if u < v else (v, u)

    def __getitem__(self, pair):
        return self._data[self.key(*pair)]

    def __contains__(self, pair):
        try:
            return self.key(*pair) in self._data
        except (TypeError, ValueError):
            return False

    def __iter__(self) -> Iterator[tuple]:
        return iter(self._data)

    def __len__(self) -> int:
        return len(self._data)

    def __repr__(self):
        return f"EdgeList({len(self)} pairs)"

    def pairs(self) -> set[tuple]:
        return set(self._data)

    def at_least(self, a_c: int) -> EdgeList:
        return EdgeList({k: c for k, c in self._data.items() if c >= a_c})

    def nodes(self) -> set:
        return {u for pair in self._data for u in pair}

    def write_tsv(self, stream: IO[str]) -> None:
        for (u, v), c in self._data.items():
            stream.write(f"{u}\t{v}\t{c}\n")

    def to_tsv(self) -> str:
        buf = io.StringIO()
        self.write_tsv(buf)
        return buf.getvalue()

    @classmethod
    def read_tsv(cls, stream: IO[str] | str) -> EdgeList:
        """Read ``a<TAB>b[<TAB>count]`` lines; a missing count means 1."""
        text = stream if isinstance(stream, str) else stream.read()
        counts = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) not in (2, 3):
                raise FormatError(f"expected 2 or 3 tab-separated fields, got {len(parts)}", lineno)
            u, v = parts[0].strip(), parts[1].strip()
            try:
                c = int(parts[2]) if len(parts) == 3 else 1
            except ValueError:
                raise FormatError(f"non-integer count {parts[2]!r}", lineno) from None
            key = cls.key(u, v)
            if u == v:
                raise FormatError(f"self-pair {u!r}", lineno)
            counts[key] = counts.get(key, 0) + c
        return cls(counts)


def _location_pairs(times: np.ndarray, sids: np.ndarray, radius: int):
    """Index pairs ``i < j`` of one location's time-sorted swipes that lie
    within ``radius`` seconds, by student, with the earlier timestamp."""
    us, vs, ts = [], [], []
    for k in range(1, len(times)):
        close = np.flatnonzero(times[k:] - times[:-k] <= radius)
        if close.size == 0:
            # times are sorted, so larger offsets are even further apart
            break
        a, b = sids[close], sids[close + k]
        keep = a != b
        close, a, b = close[keep], a[keep], b[keep]
        us.append(np.minimum(a, b))
        vs.append(np.maximum(a, b))
        ts.append(times[close])
    if not us:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, empty
    return np.concatenate(us), np.concatenate(vs), np.concatenate(ts)


def _count_chunk(chunk, radius: int, gap: int) -> Counter:
    """Meal sessions per student pair over a set of locations."""
    parts = [(*_location_pairs(times, sids, radius), loc) for loc, times, sids in chunk]
    parts = [p for p in parts if p[0].size]
    if not parts:
        return Counter()
    u = np.concatenate([p[0] for p in parts])
    v = np.concatenate([p[1] for p in parts])
    t = np.concatenate([p[2] for p in parts])
    loc = np.concatenate([np.full(p[0].size, p[3], dtype=np.int64) for p in parts])
    order = np.lexsort((t, loc, v, u))
    u, v, t, loc = u[order], v[order], t[order], loc[order]
    # a new session starts at a new (pair, location) or after a long gap
    new = np.ones(u.size, dtype=bool)
    new[1:] = (u[1:] != u[:-1]) | (v[1:] != v[:-1]) | (loc[1:] != loc[:-1]) | (t[1:] - t[:-1] > gap)
    pairs, counts = np.unique(np.stack([u[new], v[new]]), axis=1, return_counts=True)
    return Counter({(int(a), int(b)): int(c) for (a, b), c in zip(pairs.T, counts)})


def count_cooccurrences(table: StudentTable, window_seconds: int = 120,
                        session_gap: int = SESSION_GAP_SECONDS,
                        workers: int = 1) -> EdgeList:
    """Count meal sessions in which each student pair co-occurs.

    Records are swept per location in time order, so only swipes within
    ``window_seconds`` of each other are ever compared. Co-occurrence events
    of one pair at one location that follow each other within
    ``session_gap`` seconds are the same meal and count once. Library
    records are ignored.
    """
    if window_seconds < 1:
        raise ArgumentError("window_seconds must be >= 1")
    ids = sorted(table)
    index = {sid: i for i, sid in enumerate(ids)}
    per_loc: dict[str, list[tuple[int, int]]] = defaultdict(list)
    for rec in table.records():
        if rec.location_id != LIBRARY:
            per_loc[rec.location_id].append((rec.timestamp, index[rec.student_id]))
    jobs = []
    for li, loc in enumerate(sorted(per_loc)):
        rows = np.array(sorted(per_loc[loc]), dtype=np.int64).reshape(-1, 2)
        jobs.append((li, rows[:, 0].copy(), rows[:, 1].copy()))

    workers = max(1, int(workers))
    if workers == 1 or len(jobs) < 2:
        total = _count_chunk(jobs, window_seconds, session_gap)
    else:
        # a location never spans two chunks, so sessions are never split
        chunks = [jobs[i::workers] for i in range(workers)]
        total = Counter()
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(lambda c: _count_chunk(c, window_seconds, session_gap), chunks):
                total.update(part)
    return EdgeList({(ids[a], ids[b]): c for (a, b), c in total.items()})


def infer_network(table: StudentTable, params: TieParams = TieParams(),
                  window: TimeWindow | None = None, counts: EdgeList | None = None,
                  workers: int = 1) -> FriendshipNetwork:
    """Friendship network of all pairs co-occurring at least ``a_c`` times.

    Only records inside ``window`` are used when one is given. Precomputed
    ``counts`` skip the co-occurrence scan.
    """
    if window is not None:
        table = table.restrict(window)
    if counts is None:
        counts = count_cooccurrences(table, params.window_seconds, workers=workers)
    kept = counts.at_least(params.a_c)
    return FriendshipNetwork(kept, label=window.label if window else "", window=window)


def network_size_curve(counts: EdgeList, a_values: Iterable[int]) -> list[tuple[int, int, int]]:
    """(a, node count, edge count) of the network thresholded at each ``a``."""
    out = []
    for a in a_values:
        kept = counts.at_least(a)
        out.append((a, len(kept.nodes()), len(kept)))
    return out


@dataclass(frozen=True)
class Validation:
    hit_rate: float
    missed: EdgeList
    extra: EdgeList


def _pair_set(edges) -> set[tuple]:
    if isinstance(edges, EdgeList):
        return edges.pairs()
    if isinstance(edges, FriendshipNetwork):
        return set(edges.edges())
    return {EdgeList.key(*e[:2]) for e in edges}


def validate_against_ground_truth(inferred, truth) -> Validation:
    """Fraction of true ties recovered, plus the missed and extra pairs."""
    inf, tru = _pair_set(inferred), _pair_set(truth)
    if not tru:
        raise ArgumentError("ground truth has no edges; hit rate is undefined")
    return Validation(len(inf & tru) / len(tru), EdgeList(tru - inf), EdgeList(inf - tru))
