"""TSV/JSON writers and readers for the files the CLI exchanges."""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

from .behavior import BehaviorProfile
from .errors import FormatError
from .graph import FriendshipNetwork
from .records import TimeWindow
from .ties import EdgeList

PROFILE_COLUMNS = ["student_id", "entropy", "orderliness", "diligence", "gpa"]


def fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return f"{value:.10g}"
    return str(value)


def tsv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    lines = ["\t".join(header)]
    lines.extend("\t".join(fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def dumps(obj: Any) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def _clean(obj):
    if isinstance(obj, float) and (math.isnan(obj) or math.isinf(obj)):
        return None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item"):
        return obj.item()
    return obj


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def profiles_tsv(profiles: Iterable[BehaviorProfile]) -> str:
    return tsv(PROFILE_COLUMNS, ((p.student_id, p.actual_entropy, p.orderliness, p.diligence, p.gpa)
                                for p in profiles))


def read_profiles(path: str | Path) -> dict[str, BehaviorProfile]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if header != PROFILE_COLUMNS:
            raise FormatError(f"profiles header must be {' '.join(PROFILE_COLUMNS)}", line=1)
        for lineno, line in enumerate(fh, start=2):
            parts = line.rstrip("\n").split("\t")
            if len(parts) != len(PROFILE_COLUMNS):
                raise FormatError(f"expected {len(PROFILE_COLUMNS)} fields", lineno)
            sid, entropy, _, dil, gpa = parts
            try:
                out[sid] = BehaviorProfile(sid, float(entropy) if entropy else None,
                                           int(dil) if dil else None,
                                           float(gpa) if gpa else None)
            except ValueError as exc:
                raise FormatError(str(exc), lineno) from None
    return out


def network_sidecar(g: FriendshipNetwork, a_c: int | None, window_seconds: int | None) -> dict:
    w = g.window
    return {
        "window": g.label,
        "window_start": w.start if w else None,
        "window_end": w.end if w else None,
        "node_count": g.number_of_nodes(),
        "edge_count": g.number_of_edges(),
        "a_c": a_c,
        "window_seconds": window_seconds,
    }


def read_network(path: str | Path) -> tuple[FriendshipNetwork, EdgeList]:
    """Load an edge-list TSV and, when present, its ``.json`` sidecar."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        edges = EdgeList.read_tsv(fh)
    label, window = path.stem, None
    side = path.with_suffix(".json")
    if side.exists():
        meta = json.loads(side.read_text(encoding="utf-8"))
        label = meta.get("window") or label
        if meta.get("window_start") is not None and meta.get("window_end") is not None:
            window = TimeWindow(meta["window_start"], meta["window_end"], label)
    return FriendshipNetwork(edges, label=label, window=window), edges
