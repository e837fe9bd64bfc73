"""Behavioural characters: orderliness, diligence and their link to GPA."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

from .errors import ArgumentError, InsufficientDataError, UndefinedMetricError
from .records import LIBRARY, StudentTable, TimeWindow

log = logging.getLogger(__name__)

SLICES_PER_DAY = 48
SLICE_SECONDS = 86400 // SLICES_PER_DAY


def discretize(times: Iterable[float]) -> list[int]:
    """Map seconds within a day, in (0, 86400], to half-hour codes 1..48.

    A slice is closed on the right: 00:30:00 is code 1, 00:30:01 code 2.
    """
    codes = []
    for t in times:
        if not 0 < t <= 86400:
            raise ArgumentError(f"time of day {t!r} outside (0, 86400] seconds")
        codes.append(math.ceil(t / SLICE_SECONDS))
    return codes


def seconds_of_day(timestamp: int, utc_offset: int = 0) -> int:
    """Seconds since local midnight; midnight itself maps to 86400."""
    s = (timestamp + utc_offset) % 86400
    return s or 86400


def _run_lengths(eq: np.ndarray) -> np.ndarray:
    """For each position, the number of consecutive True values starting there."""
    rev = eq[::-1].astype(np.int64)
    csum = np.cumsum(rev)
    reset = np.maximum.accumulate(np.where(rev == 0, csum, 0))
    return (csum - reset)[::-1]


def novelty_lengths(seq: Sequence[int]) -> np.ndarray:
    """Length of the shortest substring starting at each position that never
    starts at an earlier position.

    Earlier occurrences may run into and past the current position. When no
    such substring exists, the value is one more than the remaining length.
    """
    s = np.asarray(seq)
    n = len(s)
    longest = np.zeros(n, dtype=np.int64)
    for shift in range(1, n):
        runs = _run_lengths(s[shift:] == s[:n - shift])
        np.maximum(longest[shift:], runs, out=longest[shift:])
    return longest + 1


def actual_entropy(seq: Sequence[int]) -> float:
    """Lempel-Ziv estimate ``n ln n / sum(novelty lengths)`` in nats."""
    n = len(seq)
    if n < 2:
        raise InsufficientDataError(f"actual entropy needs at least 2 symbols, got {n}")
    return n * math.log(n) / float(novelty_lengths(seq).sum())


@dataclass(frozen=True)
class BehaviorProfile:
    student_id: str
    actual_entropy: float | None = None
    diligence: int | None = None
    gpa: float | None = None

    @property
    def orderliness(self) -> float | None:
        return None if self.actual_entropy is None else -self.actual_entropy


class ProfileMap(dict):
    """``student_id -> BehaviorProfile`` plus the number of students omitted
    for having too few records."""

    def __init__(self, *args, omitted: int = 0, **kwargs):
        super().__init__(*args, **kwargs)
        self.omitted = omitted


def _meal_records(table: StudentTable, sid: str, window: TimeWindow | None):
    return [r for r in table[sid].records
            if r.location_id != LIBRARY and (window is None or r.timestamp in window)]


def orderliness(table: StudentTable, window: TimeWindow | None = None, min_seq_len: int = 10,
                utc_offset: int = 0) -> ProfileMap:
    """Actual entropy of each student's meal-time code sequence.

    Students with fewer than ``min_seq_len`` canteen records in ``window``
    are left out and counted in ``.omitted``.
    """
    if min_seq_len < 2:
        raise ArgumentError("min_seq_len must be >= 2")
    out = ProfileMap()
    for sid, student in table.items():
        recs = _meal_records(table, sid, window)
        if len(recs) < min_seq_len:
            out.omitted += 1
            continue
        codes = discretize(seconds_of_day(r.timestamp, utc_offset) for r in recs)
        out[sid] = BehaviorProfile(sid, actual_entropy(codes), gpa=student.gpa)
    if out.omitted:
        log.info("orderliness: %d students below %d records omitted", out.omitted, min_seq_len)
    return out


def diligence(table: StudentTable, window: TimeWindow | None = None) -> dict[str, int]:
    """Library entries per student inside ``window``."""
    return {
        sid: sum(1 for r in s.records if r.location_id == LIBRARY
                 and (window is None or r.timestamp in window))
        for sid, s in table.items()
    }


def build_profiles(canteen: StudentTable, library: StudentTable | None = None,
                   window: TimeWindow | None = None, min_seq_len: int = 10,
                   utc_offset: int = 0) -> ProfileMap:
    """Merge orderliness, diligence and GPA into one profile per student."""
    order = orderliness(canteen, window, min_seq_len, utc_offset)
    dil = diligence(library, window) if library is not None else {}
    gpa = {**(library.gpa() if library is not None else {}), **canteen.gpa()}
    ids = sorted(set(order) | set(dil))
    out = ProfileMap(omitted=order.omitted)
    for sid in ids:
        entropy = order[sid].actual_entropy if sid in order else None
        visits = dil.get(sid, 0) if library is not None else None
        out[sid] = BehaviorProfile(sid, entropy, visits, gpa.get(sid))
    return out


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Rank correlation with average ranks for ties."""
    if len(x) != len(y):
        raise ArgumentError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 3:
        raise ArgumentError(f"need at least 3 pairs, got {len(x)}")
    rx = rankdata(x) - (len(x) + 1) / 2
    ry = rankdata(y) - (len(y) + 1) / 2
    den = math.sqrt(float(rx @ rx) * float(ry @ ry))
    if den == 0:
        raise UndefinedMetricError("spearman correlation of a constant sequence")
    return max(-1.0, min(1.0, float(rx @ ry) / den))


def regularize(values: Mapping[str, float]) -> dict[str, float]:
    """Min-max rescale to [0, 1]; a constant map goes to all zeros."""
    if not values:
        return {}
    lo, hi = min(values.values()), max(values.values())
    span = hi - lo
    return {k: (v - lo) / span if span > 0 else 0.0 for k, v in values.items()}


def binned_relation(attr: Mapping[str, float], gpa: Mapping[str, float], bins: int = 11,
                    scale: str = "linear") -> list[tuple[float, float, int]]:
    """Mean GPA in equal-width bins of an attribute.

    With ``scale="log"`` the bins are equal-width in ln(attr) and centres are
    geometric. Empty bins are dropped.
    """
    if bins < 1:
        raise ArgumentError("bins must be >= 1")
    if scale not in ("linear", "log"):
        raise ArgumentError(f"unknown scale {scale!r}")
    ids = sorted(set(attr) & set(gpa))
    if len(ids) < bins:
        raise InsufficientDataError(f"{len(ids)} students with both values, need >= {bins}")
    x = np.array([attr[i] for i in ids], dtype=float)
    g = np.array([gpa[i] for i in ids], dtype=float)
    if scale == "log":
        if (x <= 0).any():
            raise ArgumentError("log binning needs strictly positive attribute values")
        x = np.log(x)
    lo, hi = float(x.min()), float(x.max())
    if hi == lo:
        hi = lo + 1.0
    edges = np.linspace(lo, hi, bins + 1)
    which = np.clip(np.searchsorted(edges, x, side="right") - 1, 0, bins - 1)
    rows = []
    for b in range(bins):
        mask = which == b
        if not mask.any():
            continue
        center = (edges[b] + edges[b + 1]) / 2
        if scale == "log":
            center = math.exp(center)
        rows.append((float(center), float(g[mask].mean()), int(mask.sum())))
    return rows
