"""Reading and writing observation logs and location catalogs.

Log formats:

* ``jsonl``: one snapshot per line, e.g.
  ``{"ts":"2013-04-12T00:00:00Z","loc":"austin","trends":[{"t":"#abc","r":1,"p":false}]}``
* ``csv``: one entry per row with header ``ts,loc,rank,trend,promoted``;
  rows sharing (ts, loc) form one snapshot.

Catalog format: CSV with header ``id,name,lat,lon,country_level``.
"""

from __future__ import annotations

import csv
import io as _stdio
import json
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple, Union

from .model import (
    DEFAULT_TICK,
    MAX_RANK,
    Location,
    ObservationLog,
    SnapshotEntry,
    TrendName,
    TrendSnapshot,
)

LOG_FORMATS = ("jsonl", "csv")

Source = Union[str, Path, _stdio.IOBase]


class LogParseError(ValueError):
    """A malformed record, with the 1-based line it came from when known."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Violation:
    line: Optional[int]
    message: str

    def __str__(self) -> str:
        return f"line {self.line}: {self.message}" if self.line else self.message


@dataclass(frozen=True)
class ValidationReport:
    path: str
    n_snapshots: int
    violations: Tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def parse_timestamp(text: str) -> datetime:
    try:
        ts = datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError as exc:
        raise ValueError(f"bad timestamp {text!r}: {exc}") from None
    if ts.tzinfo is None:
        raise ValueError(f"timestamp {text!r} lacks a timezone")
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _read_text(source: Source) -> str:
    if isinstance(source, (str, Path)):
        return Path(source).read_text(encoding="utf-8")
    data = source.read()
    if isinstance(data, bytes):
        return data.decode("utf-8")
    return data


def parse_catalog(source: Source) -> Tuple[Location, ...]:
    text = _read_text(source)
    reader = csv.DictReader(_stdio.StringIO(text))
    required = {"id", "name", "lat", "lon", "country_level"}
    if reader.fieldnames is None or not required.issubset(reader.fieldnames):
        raise LogParseError(f"catalog header must contain {sorted(required)}")
    locations = []
    for lineno, row in enumerate(reader, start=2):
        try:
            locations.append(
                Location(
                    id=row["id"].strip(),
                    display_name=row["name"].strip(),
                    latitude=float(row["lat"]),
                    longitude=float(row["lon"]),
                    is_country_level=_parse_bool(row["country_level"]),
                )
            )
        except (ValueError, KeyError) as exc:
            raise LogParseError(str(exc), lineno) from None
    return tuple(locations)


def serialize_catalog(catalog: Sequence[Location]) -> str:
    out = _stdio.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["id", "name", "lat", "lon", "country_level"])
    for loc in catalog:
        writer.writerow(
            [loc.id, loc.display_name, repr(loc.latitude), repr(loc.longitude),
             "true" if loc.is_country_level else "false"]
        )
    return out.getvalue()


def _parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("true", "1", "yes"):
        return True
    if t in ("false", "0", "no", ""):
        return False
    raise ValueError(f"bad boolean {text!r}")


def _snapshot_from_json_line(lineno: int, line: str) -> TrendSnapshot:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise LogParseError(f"invalid JSON: {exc.msg}", lineno) from None
    if not isinstance(obj, dict):
        raise LogParseError("record is not a JSON object", lineno)
    try:
        ts = parse_timestamp(str(obj["ts"]))
        loc = str(obj["loc"])
        raw_entries = obj["trends"]
    except KeyError as exc:
        raise LogParseError(f"missing field {exc.args[0]!r}", lineno) from None
    except ValueError as exc:
        raise LogParseError(str(exc), lineno) from None
    if not isinstance(raw_entries, list):
        raise LogParseError("'trends' must be a list", lineno)
    entries = []
    for raw in raw_entries:
        try:
            rank = int(raw["r"])
            entries.append(
                SnapshotEntry(
                    trend=TrendName.from_text(str(raw["t"])),
                    rank=rank,
                    promoted=_parse_bool(raw.get("p", False)),
                )
            )
        except (KeyError, TypeError) as exc:
            raise LogParseError(f"bad trend entry {raw!r}: {exc}", lineno) from None
        except ValueError as exc:
            raise LogParseError(str(exc), lineno) from None
    entries.sort(key=lambda e: e.rank)
    try:
        return TrendSnapshot(loc, ts, tuple(entries))
    except ValueError as exc:
        raise LogParseError(str(exc), lineno) from None


def _iter_jsonl(text: str) -> Iterator[Tuple[int, TrendSnapshot]]:
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        yield lineno, _snapshot_from_json_line(lineno, line)


def _iter_csv(text: str) -> Iterator[Tuple[int, TrendSnapshot]]:
    reader = csv.DictReader(_stdio.StringIO(text))
    required = {"ts", "loc", "rank", "trend", "promoted"}
    if reader.fieldnames is None:
        return
    if not required.issubset(reader.fieldnames):
        raise LogParseError(f"csv header must contain {sorted(required)}", 1)
    # (loc, ts) -> (first line seen, entries)
    groups: Dict[Tuple[str, datetime], Tuple[int, List[SnapshotEntry]]] = {}
    order: List[Tuple[str, datetime]] = []
    for lineno, row in enumerate(reader, start=2):
        try:
            ts = parse_timestamp(row["ts"])
            loc = row["loc"].strip()
            entry = SnapshotEntry(
                trend=TrendName.from_text(row["trend"]),
                rank=int(row["rank"]),
                promoted=_parse_bool(row["promoted"]),
            )
        except ValueError as exc:
            raise LogParseError(str(exc), lineno) from None
        key = (loc, ts)
        if key not in groups:
            groups[key] = (lineno, [])
            order.append(key)
        groups[key][1].append(entry)
    for key in order:
        lineno, entries = groups[key]
        entries.sort(key=lambda e: e.rank)
        try:
            yield lineno, TrendSnapshot(key[0], key[1], tuple(entries))
        except ValueError as exc:
            raise LogParseError(str(exc), lineno) from None


def parse_log(
    source: Source,
    catalog: Sequence[Location],
    format: str = "jsonl",
    tick_interval: timedelta = DEFAULT_TICK,
) -> ObservationLog:
    """Parse and validate an observation log against a location catalog.

    Raises LogParseError (with the offending line) for malformed records,
    unknown location ids, duplicate (location, timestamp) snapshots, and
    timestamps off the tick grid anchored at the earliest snapshot.
    """
    if format not in LOG_FORMATS:
        raise ValueError(f"unknown log format {format!r}, expected one of {LOG_FORMATS}")
    text = _read_text(source)
    iterator = _iter_jsonl(text) if format == "jsonl" else _iter_csv(text)

    known = {loc.id for loc in catalog}
    seen: Dict[Tuple[str, datetime], int] = {}
    snaps: List[Tuple[int, TrendSnapshot]] = []
    for lineno, snap in iterator:
        if snap.location_id not in known:
            raise LogParseError(f"unknown location id: {snap.location_id!r}", lineno)
        key = (snap.location_id, snap.timestamp)
        if key in seen:
            raise LogParseError(
                f"duplicate snapshot for {snap.location_id!r} at "
                f"{format_timestamp(snap.timestamp)} (first on line {seen[key]})",
                lineno,
            )
        seen[key] = lineno
        snaps.append((lineno, snap))

    if snaps:
        epoch = min(s.timestamp for _, s in snaps)
        for lineno, snap in snaps:
            if (snap.timestamp - epoch) % tick_interval != timedelta(0):
                raise LogParseError(
                    f"off-grid timestamp {format_timestamp(snap.timestamp)}", lineno
                )
    return ObservationLog(tuple(catalog), tuple(s for _, s in snaps), tick_interval)


def serialize_log(log: ObservationLog, format: str = "jsonl") -> str:
    if format == "jsonl":
        lines = []
        for snap in log.snapshots:
            obj = {
                "ts": format_timestamp(snap.timestamp),
                "loc": snap.location_id,
                "trends": [
                    {"t": e.trend.text, "r": e.rank, "p": e.promoted}
                    for e in snap.entries
                ],
            }
            lines.append(json.dumps(obj, separators=(",", ":"), ensure_ascii=False))
        return "\n".join(lines) + ("\n" if lines else "")
    if format == "csv":
        out = _stdio.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["ts", "loc", "rank", "trend", "promoted"])
        for snap in log.snapshots:
            for e in snap.entries:
                writer.writerow(
                    [format_timestamp(snap.timestamp), snap.location_id, e.rank,
                     e.trend.text, "true" if e.promoted else "false"]
                )
        return out.getvalue()
    raise ValueError(f"unknown log format {format!r}, expected one of {LOG_FORMATS}")


def write_log(log: ObservationLog, path: Union[str, Path], format: str = "jsonl") -> None:
    Path(path).write_text(serialize_log(log, format), encoding="utf-8")


def write_catalog(catalog: Sequence[Location], path: Union[str, Path]) -> None:
    Path(path).write_text(serialize_catalog(catalog), encoding="utf-8")


def scan_log(
    source: Source,
    catalog: Optional[Sequence[Location]] = None,
    format: str = "jsonl",
    tick_interval: timedelta = DEFAULT_TICK,
) -> ValidationReport:
    """Collect every violation in a log file instead of stopping at the first.

    Checks record shape, rank ranges, duplicate trends, duplicate snapshots
    and tick-grid alignment; location ids are checked when a catalog is given.
    """
    path = str(source) if isinstance(source, (str, Path)) else "<stream>"
    violations: List[Violation] = []
    snaps: List[Tuple[int, TrendSnapshot]] = []
    try:
        text = _read_text(source)
    except OSError as exc:
        return ValidationReport(path, 0, (Violation(None, f"unreadable file: {exc}"),))

    if format == "jsonl":
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                snaps.append((lineno, _snapshot_from_json_line(lineno, line)))
            except LogParseError as exc:
                violations.append(Violation(exc.line, str(exc).split(": ", 1)[-1]))
    else:
        # CSV groups rows into snapshots, so shape errors surface per group.
        try:
            snaps = list(_iter_csv(text))
        except LogParseError as exc:
            violations.append(Violation(exc.line, str(exc).split(": ", 1)[-1]))

    known = {loc.id for loc in catalog} if catalog is not None else None
    seen: Dict[Tuple[str, datetime], int] = {}
    for lineno, snap in snaps:
        if known is not None and snap.location_id not in known:
            violations.append(
                Violation(lineno, f"unknown location id: {snap.location_id!r}")
            )
        key = (snap.location_id, snap.timestamp)
        if key in seen:
            violations.append(
                Violation(
                    lineno,
                    f"duplicate snapshot for {snap.location_id!r} at "
                    f"{format_timestamp(snap.timestamp)} (first on line {seen[key]})",
                )
            )
        else:
            seen[key] = lineno
    if snaps:
        epoch = min(s.timestamp for _, s in snaps)
        for lineno, snap in snaps:
            if (snap.timestamp - epoch) % tick_interval != timedelta(0):
                violations.append(
                    Violation(
                        lineno,
                        f"off-grid timestamp {format_timestamp(snap.timestamp)}",
                    )
                )
    else:
        violations.append(Violation(None, "no snapshots"))
    return ValidationReport(path, len(snaps), tuple(violations))
