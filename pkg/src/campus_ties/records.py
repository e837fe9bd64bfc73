"""Check-in records, CSV ingestion and time-window slicing."""

from __future__ import annotations

import calendar
import csv
import io
import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import IO, Iterable, Iterator, Mapping

from .errors import ArgumentError, FormatError

log = logging.getLogger(__name__)

LIBRARY = "LIBRARY"

HEADERS = {
    "consumption": ["student_id", "location_id", "timestamp"],
    "library": ["student_id", "timestamp"],
    "gpa": ["student_id", "gpa"],
}

# Double scans closer than this at the same location collapse to one record.
DUPLICATE_SECONDS = 60

# Month labels of the three semesters covered by the canteen data set.
SEMESTER_MONTHS = [
    "2018-03", "2018-04", "2018-05", "2018-06",
    "2018-09", "2018-10", "2018-11", "2018-12",
    "2019-03", "2019-04", "2019-05", "2019-06",
]


@dataclass(frozen=True, order=True, slots=True)
class EventRecord:
    # field order gives chronological sorting
    timestamp: int
    student_id: str
    location_id: str

    def __post_init__(self):
        if self.timestamp <= 0:
            raise ArgumentError(f"timestamp must be positive, got {self.timestamp}")
        if not self.student_id:
            raise ArgumentError("empty student_id")
        if not self.location_id:
            raise ArgumentError("empty location_id")


@dataclass(frozen=True, slots=True)
class TimeWindow:
    """Half-open interval ``[start, end)`` of epoch seconds."""

    start: int
    end: int
    label: str = ""

    def __post_init__(self):
        if self.start >= self.end:
            raise ArgumentError(f"window start {self.start} must precede end {self.end}")

    def __contains__(self, timestamp: int) -> bool:
        return self.start <= timestamp < self.end

    def overlaps(self, other: TimeWindow) -> bool:
        return self.start < other.end and other.start < self.end

    @classmethod
    def month(cls, label: str) -> TimeWindow:
        """Calendar month ``YYYY-MM`` in UTC."""
        try:
            year, mon = (int(part) for part in label.split("-"))
            start = datetime(year, mon, 1, tzinfo=timezone.utc)
        except ValueError as exc:
            raise ArgumentError(f"bad month label {label!r}, expected YYYY-MM") from exc
        days = calendar.monthrange(year, mon)[1]
        return cls(int(start.timestamp()), int(start.timestamp()) + days * 86400, label)

    @classmethod
    def everything(cls) -> TimeWindow:
        return cls(1, 2**62, "all")


def monthly_windows(labels: Iterable[str]) -> list[TimeWindow]:
    return [TimeWindow.month(label) for label in labels]


def month_range(first: str, last: str) -> list[TimeWindow]:
    """Consecutive calendar months from ``first`` to ``last`` inclusive."""
    year, mon = (int(p) for p in first.split("-"))
    windows = []
    while True:
        label = f"{year:04d}-{mon:02d}"
        windows.append(TimeWindow.month(label))
        if label == last:
            return windows
        if len(windows) > 1200:
            raise ArgumentError(f"month range {first}..{last} is empty or too long")
        year, mon = (year + 1, 1) if mon == 12 else (year, mon + 1)


@dataclass(frozen=True)
class Student:
    records: tuple[EventRecord, ...] = ()
    gpa: float | None = None


def collapse_duplicates(records: Iterable[EventRecord],
                        min_gap: int = DUPLICATE_SECONDS) -> list[EventRecord]:
    """Sort one student's records and drop repeat swipes at the same location
    that follow the previously kept swipe by less than ``min_gap`` seconds."""
    kept = []
    last_at: dict[str, int] = {}
    # one student's records: (timestamp, location) fixes the order
    for rec in sorted(set(records), key=lambda r: (r.timestamp, r.location_id)):
        prev = last_at.get(rec.location_id)
        if prev is not None and rec.timestamp - prev < min_gap:
            continue
        last_at[rec.location_id] = rec.timestamp
        kept.append(rec)
    return kept


@dataclass(frozen=True)
class StudentTable:
    """Immutable mapping ``student_id -> Student``.

    ``malformed`` carries the number of rows rejected while parsing.
    """

    students: Mapping[str, Student] = field(default_factory=dict)
    malformed: int = 0

    @classmethod
    def from_records(cls, records: Iterable[EventRecord],
                     gpa: Mapping[str, float] | None = None,
                     min_gap: int = DUPLICATE_SECONDS, malformed: int = 0) -> StudentTable:
        grouped: dict[str, list[EventRecord]] = {}
        for rec in records:
            grouped.setdefault(rec.student_id, []).append(rec)
        gpa = dict(gpa or {})
        ids = sorted(set(grouped) | set(gpa))
        students = {
            sid: Student(tuple(collapse_duplicates(grouped.get(sid, ()), min_gap)), gpa.get(sid))
            for sid in ids
        }
        return cls(students, malformed)

    def __len__(self) -> int:
        return len(self.students)

    def __iter__(self) -> Iterator[str]:
        return iter(self.students)

    def __contains__(self, sid) -> bool:
        return sid in self.students

    def __getitem__(self, sid: str) -> Student:
        return self.students[sid]

    def items(self):
        return self.students.items()

    def records(self) -> Iterator[EventRecord]:
        for student in self.students.values():
            yield from student.records

    def record_count(self) -> int:
        return sum(len(s.records) for s in self.students.values())

    def gpa(self) -> dict[str, float]:
        return {sid: s.gpa for sid, s in self.students.items() if s.gpa is not None}

    def with_gpa(self, gpa: Mapping[str, float]) -> StudentTable:
        """Attach GPA values to students that already have records."""
        return StudentTable(
            {sid: Student(s.records, gpa.get(sid, s.gpa)) for sid, s in self.students.items()},
            self.malformed,
        )

    def restrict(self, window: TimeWindow) -> StudentTable:
        """Records inside ``window``; students left with no records are kept
        only when they carry a GPA."""
        out = {}
        for sid, s in self.students.items():
            recs = tuple(r for r in s.records if r.timestamp in window)
            if recs or s.gpa is not None:
                out[sid] = Student(recs, s.gpa)
        return StudentTable(out, self.malformed)

    def __eq__(self, other):
        if not isinstance(other, StudentTable):
            return NotImplemented
        return dict(self.students) == dict(other.students)


def parse_events(source: IO | str | bytes, fmt: str) -> StudentTable:
    """Parse one of the three CSV layouts into a :class:`StudentTable`.

    ``source`` may be a text or binary stream, raw bytes, or a string holding
    the file contents. Malformed data rows are skipped and counted; a header
    that does not match ``fmt`` raises :class:`FormatError`.
    """
    if fmt not in HEADERS:
        raise ArgumentError(f"unknown format {fmt!r}; choose from {sorted(HEADERS)}")
    text = _read_text(source)
    reader = csv.reader(io.StringIO(text, newline=""))
    header = next(reader, None)
    if header is None:
        raise FormatError(f"missing header, expected {','.join(HEADERS[fmt])}", line=1)
    if [h.strip() for h in header] != HEADERS[fmt]:
        raise FormatError(
            f"header {','.join(header)!r} does not match {','.join(HEADERS[fmt])!r}", line=1)

    records: list[EventRecord] = []
    gpa: dict[str, float] = {}
    bad = 0
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            if fmt == "gpa":
                sid, value = _fields(row, 2)
                score = float(value)
                if not score >= 0:
                    raise ValueError(f"negative or NaN gpa {value!r}")
                gpa[sid] = score
            elif fmt == "library":
                sid, ts = _fields(row, 2)
                records.append(EventRecord(int(ts), sid, LIBRARY))
            else:
                sid, loc, ts = _fields(row, 3)
                records.append(EventRecord(int(ts), sid, loc))
        except ValueError as exc:
            bad += 1
            log.warning("skipping malformed row at line %d: %s", lineno, exc)
    if bad:
        log.warning("%d malformed rows skipped", bad)
    return StudentTable.from_records(records, gpa, malformed=bad)


def _read_text(source) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, str):
        return source
    data = source.read()
    return data.decode("utf-8") if isinstance(data, bytes) else data


def _fields(row: list[str], width: int) -> list[str]:
    if len(row) != width:
        raise ValueError(f"expected {width} fields, got {len(row)}")
    values = [v.strip() for v in row]
    if not values[0]:
        raise ValueError("empty student_id")
    return values


def write_events(table: StudentTable, stream: IO[str], fmt: str) -> None:
    """Serialize ``table`` in the given CSV layout (inverse of :func:`parse_events`)."""
    if fmt not in HEADERS:
        raise ArgumentError(f"unknown format {fmt!r}")
    stream.write(",".join(HEADERS[fmt]) + "\n")
    if fmt == "gpa":
        for sid, score in table.gpa().items():
            stream.write(f"{sid},{score!r}\n")
        return
    rows = sorted(table.records())
    for rec in rows:
        if fmt == "library":
            stream.write(f"{rec.student_id},{rec.timestamp}\n")
        else:
            stream.write(f"{rec.student_id},{rec.location_id},{rec.timestamp}\n")


def read_table(consumption=None, library=None, gpa=None) -> tuple[StudentTable, StudentTable]:
    """Load canteen and library tables from file paths, attaching GPA to both."""
    scores = {}
    if gpa is not None:
        with open(gpa, "rb") as fh:
            scores = parse_events(fh, "gpa").gpa()
    tables = []
    for path, fmt in ((consumption, "consumption"), (library, "library")):
        if path is None:
            tables.append(StudentTable.from_records((), scores))
            continue
        with open(path, "rb") as fh:
            table = parse_events(fh, fmt)
        tables.append(StudentTable.from_records(table.records(), scores, malformed=table.malformed))
    return tables[0], tables[1]


def filter_valid(table: StudentTable, window: TimeWindow, min_records: int = 10) -> StudentTable:
    """Students with at least ``min_records`` records inside ``window``,
    their record lists cut down to the window."""
    if min_records < 1:
        raise ArgumentError("min_records must be >= 1")
    out = {}
    for sid, s in table.items():
        recs = tuple(r for r in s.records if r.timestamp in window)
        if len(recs) >= min_records:
            out[sid] = Student(recs, s.gpa)
    return StudentTable(out, table.malformed)


def split_windows(table: StudentTable,
                  windows: list[TimeWindow]) -> list[tuple[TimeWindow, StudentTable]]:
    ordered = sorted(windows, key=lambda w: w.start)
    for a, b in zip(ordered, ordered[1:]):
        if a.overlaps(b):
            raise ArgumentError(f"windows {a.label or a.start} and {b.label or b.start} overlap")
    return [(w, table.restrict(w)) for w in windows]
