"""Synthetic campus data with planted friendships and behaviour.

Friend groups are drawn with power-law sizes and wired internally as sparse
random graphs. At every meal, friend pairs that want to eat together are
matched greedily (one companion per student per meal); a matched pair
shares a canteen window and swipes within a minute of each other. Everyone
else picks a window uniformly at random, so strangers only meet through
background collisions.

Orderly students keep one habitual half-hour slot per meal; disorderly ones
draw meal times from a normal distribution around the meal centre. Library
entries follow a Yule (preferential repeat) process whose per-student rate
is exponentially distributed, which gives a power-law count tail. GPA rises
with orderliness and the diligence rate and carries a shared group effect.
"""

from __future__ import annotations

import io
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import ndtri

from .errors import ArgumentError
from .records import LIBRARY, EventRecord, StudentTable, TimeWindow, month_range
from .ties import CooccurrenceModel, EdgeList

MEAL_CENTERS = (7.5 * 3600, 12.0 * 3600, 18.0 * 3600, 21.0 * 3600)
WINDOWS_PER_CANTEEN = 5
LIBRARY_OPEN, LIBRARY_CLOSE = 8 * 3600, 22 * 3600

# substream tags for np.random.default_rng([seed, tag, ...])
_STRUCTURE, _STUDENT, _MEAL, _LIBRARY = 0, 1, 2, 3


@dataclass(frozen=True)
class SynthConfig:
    students: int = 2000
    windows: int = 40
    days: int = 30
    meals_per_day: int = 3
    group_size_exponent: float = 2.0
    group_size_min: int = 5
    group_size_max: int = 200
    friend_degree: float = 3.0
    friend_meal_prob: float = 0.3
    sigma_minutes: float = 20.0
    attend_prob: float = 0.85
    jitter_minutes: float = 32.0
    jitter_spread: float = 0.6
    orderly_fraction: float = 0.25
    homophily: float = 0.8
    diligence_exponent: float = 2.5
    months: int = 1
    tie_decay: float = 0.1
    start_month: str = "2019-03"
    seed: int = 0

    def __post_init__(self):
        for name in ("students", "windows", "days", "meals_per_day", "group_size_min",
                     "group_size_max", "months"):
            if getattr(self, name) < 1:
                raise ArgumentError(f"{name} must be >= 1")
        if self.meals_per_day > len(MEAL_CENTERS):
            raise ArgumentError(f"at most {len(MEAL_CENTERS)} meals per day")
        if self.group_size_min > self.group_size_max:
            raise ArgumentError("group_size_min exceeds group_size_max")
        for name in ("friend_meal_prob", "attend_prob", "orderly_fraction",
                     "homophily", "tie_decay"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ArgumentError(f"{name} must lie in [0, 1]")
        if not self.sigma_minutes > 0:
            raise ArgumentError("sigma_minutes must be positive")
        if not self.diligence_exponent > 1:
            raise ArgumentError("diligence_exponent must exceed 1")
        if not self.friend_degree > 0:
            raise ArgumentError("friend_degree must be positive")

    @property
    def meals(self) -> int:
        return self.days * self.meals_per_day

    def null_model(self, window_seconds: int = 120) -> CooccurrenceModel:
        """Stranger co-occurrence model matching this configuration.

        Two swipes within +-r seconds collide with probability close to a
        2r-wide slice of the meal-time distribution, so the slice width is
        2r and the span covers +-4 sigma.
        """
        width = 2 * window_seconds / 60.0
        N = max(2, int(math.ceil(8 * self.sigma_minutes / width)) + 1)
        return CooccurrenceModel(m=max(2, self.students), n=self.windows, b=self.meals,
                                 N=N, delta_t=width, sigma=self.sigma_minutes)


@dataclass
class GroundTruth:
    edges: EdgeList
    groups: dict[str, int]
    attributes: dict[str, dict]
    monthly_edges: list[EdgeList] = field(default_factory=list)

    def attrs_tsv(self) -> str:
        out = io.StringIO()
        out.write("student_id\tgroup\torderly\tdiligence_rate\tgpa\n")
        for sid, a in self.attributes.items():
            out.write(f"{sid}\t{self.groups[sid]}\t{a['orderly']}\t"
                      f"{a['diligence_rate']:.6f}\t{a['gpa']:.4f}\n")
        return out.getvalue()


@dataclass
class Campus:
    config: SynthConfig
    consumption: StudentTable
    library: StudentTable
    gpa: dict[str, float]
    truth: GroundTruth
    windows: list[TimeWindow]

    def csv_files(self) -> dict[str, str]:
        """File name -> contents in the ingestion CSV layouts."""
        from .records import write_events
        files = {}
        for name, table, fmt in (("consumption.csv", self.consumption, "consumption"),
                                 ("library.csv", self.library, "library"),
                                 ("gpa.csv", self.consumption, "gpa")):
            buf = io.StringIO()
            write_events(table, buf, fmt)
            files[name] = buf.getvalue()
        files["truth_edges.tsv"] = self.truth.edges.to_tsv()
        files["truth_attrs.tsv"] = self.truth.attrs_tsv()
        for w, edges in zip(self.windows, self.truth.monthly_edges):
            files[f"truth_edges_{w.label}.tsv"] = edges.to_tsv()
        return files


def _sid(i: int, width: int) -> str:
    return f"S{i:0{width}d}"


def _group_sizes(cfg: SynthConfig, rng: np.random.Generator) -> list[int]:
    ks = np.arange(cfg.group_size_min, cfg.group_size_max + 1)
    w = ks.astype(float) ** -cfg.group_size_exponent
    w /= w.sum()
    sizes, left = [], cfg.students
    while left > 0:
        s = int(rng.choice(ks, p=w))
        s = min(s, left)
        sizes.append(s)
        left -= s
    return sizes


def _coupled_uniforms(groups: np.ndarray, n_groups: int, homophily: float,
                      rng: np.random.Generator) -> np.ndarray:
    """Uniform(0, 1) marginals; with probability ``homophily`` a student copies
    the group's draw."""
    shared = rng.random(n_groups)[groups]
    own = rng.random(len(groups))
    return np.where(rng.random(len(groups)) < homophily, shared, own)


def _friend_edges(sizes: list[int], cfg: SynthConfig, rng: np.random.Generator):
    edges = []
    start = 0
    for s in sizes:
        if s >= 2:
            p = min(1.0, cfg.friend_degree / (s - 1))
            iu, ju = np.triu_indices(s, 1)
            keep = rng.random(len(iu)) < p
            edges.extend(zip((start + iu[keep]).tolist(), (start + ju[keep]).tolist()))
        start += s
    return edges


def generate(cfg: SynthConfig) -> Campus:
    """Deterministic synthetic campus for ``cfg.seed``."""
    n = cfg.students
    width = max(5, len(str(n)))
    ids = [_sid(i, width) for i in range(n)]
    srng = np.random.default_rng([cfg.seed, _STRUCTURE])

    sizes = _group_sizes(cfg, srng)
    group = np.repeat(np.arange(len(sizes)), sizes)
    edges0 = _friend_edges(sizes, cfg, srng)

    # latent regularity: high z means small meal-time jitter
    z = ndtri(np.clip(_coupled_uniforms(group, len(sizes), cfg.homophily, srng), 1e-9, 1 - 1e-9))
    orderly = (z > ndtri(1 - cfg.orderly_fraction)).astype(int) if cfg.orderly_fraction > 0 \
        else np.zeros(n, dtype=int)
    jitter = cfg.jitter_minutes * 60 * np.exp(-cfg.jitter_spread * z)
    # exponential Yule rates give P(count > x) ~ x^-(exponent - 1)
    u_dil = _coupled_uniforms(group, len(sizes), cfg.homophily, srng)
    rate = -np.log1p(-np.minimum(u_dil, 1 - 1e-12)) / (cfg.diligence_exponent - 1)
    group_effect = srng.normal(0.0, 0.5, len(sizes))[group]
    noise = srng.normal(0.0, 0.2, n)
    gpa = 2.8 + 0.25 * z + 0.2 * ndtri(np.clip(u_dil, 1e-9, 1 - 1e-9)) \
        + cfg.homophily * group_effect + noise
    gpa = np.clip(gpa, 0.0, 4.0).round(4)

    habits = np.stack([np.random.default_rng([cfg.seed, _STUDENT, i]).normal(0.0, 1.0, len(MEAL_CENTERS))
                       for i in range(n)]) * cfg.sigma_minutes * 60

    windows = month_range(cfg.start_month, _month_after(cfg.start_month, cfg.months - 1))
    short = min(windows, key=lambda w: w.end - w.start)
    if cfg.days * 86400 > short.end - short.start:
        raise ArgumentError(f"days={cfg.days} does not fit in month {short.label}")
    monthly_edges = []
    live = list(edges0)
    consumption: list[EventRecord] = []
    library: list[EventRecord] = []
    for mi, win in enumerate(windows):
        if mi > 0:
            drop = np.random.default_rng([cfg.seed, _STRUCTURE, mi]).random(len(live))
            live = [e for e, x in zip(live, drop) if x >= cfg.tie_decay]
        monthly_edges.append(EdgeList({(ids[u], ids[v]): 1 for u, v in live}))
        for day in range(cfg.days):
            base = win.start + day * 86400
            for meal in range(cfg.meals_per_day):
                rng = np.random.default_rng([cfg.seed, _MEAL, mi, day, meal])
                center = MEAL_CENTERS[meal] + habits[:, meal]
                consumption.extend(_one_meal(cfg, rng, live, center, jitter, ids, base))
        for i in range(n):
            lrng = np.random.default_rng([cfg.seed, _LIBRARY, mi, i])
            visits = min(int(lrng.geometric(math.exp(-rate[i]))) - 1, 4 * cfg.days)
            days = lrng.integers(0, cfg.days, visits)
            tods = lrng.integers(LIBRARY_OPEN, LIBRARY_CLOSE, visits)
            # distinct minutes keep visits apart from the double-scan collapse
            stamps = sorted({int(win.start + d * 86400 + t - t % 60) for d, t in zip(days, tods)})
            library.extend(EventRecord(s, ids[i], LIBRARY) for s in stamps)

    gpa_map = {sid: float(g) for sid, g in zip(ids, gpa)}
    truth = GroundTruth(
        edges=monthly_edges[0],
        groups={sid: int(g) for sid, g in zip(ids, group)},
        attributes={sid: {"orderly": int(orderly[i]), "diligence_rate": float(rate[i]),
                          "gpa": gpa_map[sid]} for i, sid in enumerate(ids)},
        monthly_edges=monthly_edges,
    )
    return Campus(cfg, StudentTable.from_records(consumption, gpa_map),
                  StudentTable.from_records(library, gpa_map), gpa_map, truth, windows)


def _one_meal(cfg, rng, live, center, jitter, ids, base):
    n = cfg.students
    partner = np.full(n, -1)
    wants = rng.random(len(live)) < cfg.friend_meal_prob
    for k in rng.permutation(len(live)):
        if not wants[k]:
            continue
        u, v = live[k]
        if partner[u] < 0 and partner[v] < 0:
            partner[u], partner[v] = v, u
    attend = (rng.random(n) < cfg.attend_prob) | (partner >= 0)
    times = np.clip(center + rng.normal(0.0, 1.0, n) * jitter, 1, 86399).astype(np.int64)
    window = rng.integers(0, cfg.windows, n)
    offset = rng.integers(-60, 61, n)
    out = []
    for i in np.flatnonzero(attend):
        j = partner[i]
        if 0 <= j < i:
            continue
        loc = f"C{window[i] // WINDOWS_PER_CANTEEN + 1}.W{window[i] + 1}"
        ts = base + int(times[i])
        out.append(EventRecord(ts, ids[i], loc))
        if j >= 0:
            tj = min(max(ts + int(offset[i]), base + 1), base + 86399)
            out.append(EventRecord(tj, ids[j], loc))
    return out


def _month_after(label: str, k: int) -> str:
    year, mon = (int(p) for p in label.split("-"))
    total = year * 12 + (mon - 1) + k
    return f"{total // 12:04d}-{total % 12 + 1:02d}"


def evaluate_pipeline(truth: GroundTruth | EdgeList, inferred) -> dict[str, float]:
    """Precision and recall of inferred ties against the planted ones."""
    from .graph import FriendshipNetwork
    true_pairs = (truth.edges if isinstance(truth, GroundTruth) else truth).pairs()
    if isinstance(inferred, FriendshipNetwork):
        found = {EdgeList.key(u, v) for u, v in inferred.edges()}
    elif isinstance(inferred, EdgeList):
        found = inferred.pairs()
    else:
        found = {EdgeList.key(*e[:2]) for e in inferred}
    if not found:
        raise ArgumentError("inferred network has no edges; precision is undefined")
    if not true_pairs:
        raise ArgumentError("ground truth has no edges; recall is undefined")
    hits = len(found & true_pairs)
    return {"precision": hits / len(found), "recall": hits / len(true_pairs)}


def config_dict(cfg: SynthConfig) -> dict:
    return asdict(cfg)
