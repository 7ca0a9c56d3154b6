"""Core data model for location-level trending-topic observations.

An observation log is a time-ordered sequence of snapshots. A snapshot is
the ranked list (at most ten entries) of topics trending at one location at
one tick of a fixed sampling grid (ten minutes by default). Episode tables
aggregate a log into per-(trend, location) trending time, which is what all
downstream analyses consume.

Locations come in two flavors: regular (city-level) locations and at most
one country-level location, whose rows are kept apart because they anchor
the before/after trendsetter analysis rather than the geographic one.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from enum import Enum
from typing import Dict, Iterable, Iterator, Mapping, Optional, Sequence, Tuple

MAX_RANK = 10

DEFAULT_TICK = timedelta(minutes=10)


class TrendKind(str, Enum):
    HASHTAG = "hashtag"
    PHRASE = "phrase"


def canonical_trend_text(raw: str) -> str:
    """NFC-normalize, trim and casefold a raw trend string.

    Raw strings naming the same topic up to case and stray whitespace map to
    one canonical text, so they share a single identity downstream.
    """
    return unicodedata.normalize("NFC", raw).strip().casefold()


@dataclass(frozen=True, slots=True)
class TrendName:
    """A trending topic. Hashtags are exactly the texts starting with '#'."""

    text: str
    kind: TrendKind

    def __post_init__(self):
        canon = canonical_trend_text(self.text)
        if not canon:
            raise ValueError("trend text is empty after trimming")
        object.__setattr__(self, "text", canon)
        kind = TrendKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if (kind is TrendKind.HASHTAG) != canon.startswith("#"):
            raise ValueError(
                f"kind {kind.value!r} inconsistent with text {canon!r}"
            )

    @classmethod
    def from_text(cls, raw: str) -> "TrendName":
        canon = canonical_trend_text(raw)
        kind = TrendKind.HASHTAG if canon.startswith("#") else TrendKind.PHRASE
        return cls(canon, kind)

    def sort_key(self) -> Tuple[str, str]:
        return (self.text, self.kind.value)


@dataclass(frozen=True, slots=True)
class Location:
    id: str
    display_name: str
    latitude: float
    longitude: float
    is_country_level: bool = False

    def __post_init__(self):
        if not self.id:
            raise ValueError("location id must be non-empty")
        if not -90.0 <= self.latitude <= 90.0:
            raise ValueError(f"latitude {self.latitude} outside [-90, 90]")
        if not -180.0 <= self.longitude <= 180.0:
            raise ValueError(f"longitude {self.longitude} outside [-180, 180]")


@dataclass(frozen=True, slots=True)
class SnapshotEntry:
    trend: TrendName
    rank: int
    promoted: bool = False

    def __post_init__(self):
        if not 1 <= self.rank <= MAX_RANK:
            raise ValueError(f"rank out of range: {self.rank}")


@dataclass(frozen=True, slots=True)
class TrendSnapshot:
    """One location's ranked trend list at one sampling instant."""

    location_id: str
    timestamp: datetime
    entries: Tuple[SnapshotEntry, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        ts = self.timestamp
        if ts.tzinfo is None:
            raise ValueError("snapshot timestamp must be timezone-aware")
        object.__setattr__(self, "timestamp", ts.astimezone(timezone.utc))
        if len(self.entries) > MAX_RANK:
            raise ValueError(f"snapshot holds {len(self.entries)} entries, max {MAX_RANK}")
        seen_trends = set()
        prev_rank = 0
        for entry in self.entries:
            if entry.rank <= prev_rank:
                raise ValueError("entry ranks must be strictly increasing")
            prev_rank = entry.rank
            if entry.trend in seen_trends:
                raise ValueError(f"duplicate trend in snapshot: {entry.trend.text!r}")
            seen_trends.add(entry.trend)


@dataclass(frozen=True)
class ObservationLog:
    """A validated, time-ordered collection of snapshots over a catalog.

    Snapshots are sorted by (timestamp, location id) at construction. All
    timestamps must sit on the tick grid anchored at the earliest snapshot.
    """

    catalog: Tuple[Location, ...]
    snapshots: Tuple[TrendSnapshot, ...]
    tick_interval: timedelta = DEFAULT_TICK

    def __post_init__(self):
        object.__setattr__(self, "catalog", tuple(self.catalog))
        if self.tick_interval <= timedelta(0):
            raise ValueError("tick_interval must be positive")
        ids = [loc.id for loc in self.catalog]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate location ids in catalog")
        country = [loc for loc in self.catalog if loc.is_country_level]
        if len(country) > 1:
            raise ValueError("catalog may hold at most one country-level location")

        snaps = sorted(self.snapshots, key=lambda s: (s.timestamp, s.location_id))
        object.__setattr__(self, "snapshots", tuple(snaps))
        known = set(ids)
        seen = set()
        for snap in snaps:
            if snap.location_id not in known:
                raise ValueError(f"unknown location id: {snap.location_id!r}")
            key = (snap.location_id, snap.timestamp)
            if key in seen:
                raise ValueError(
                    f"duplicate snapshot for {snap.location_id!r} at "
                    f"{snap.timestamp.isoformat()}"
                )
            seen.add(key)
        if snaps:
            epoch = snaps[0].timestamp
            for snap in snaps:
                if (snap.timestamp - epoch) % self.tick_interval != timedelta(0):
                    raise ValueError(
                        f"off-grid timestamp {snap.timestamp.isoformat()} "
                        f"(tick {self.tick_interval})"
                    )

    @property
    def epoch(self) -> Optional[datetime]:
        return self.snapshots[0].timestamp if self.snapshots else None

    @property
    def country_location(self) -> Optional[Location]:
        for loc in self.catalog:
            if loc.is_country_level:
                return loc
        return None

    def location(self, loc_id: str) -> Location:
        for loc in self.catalog:
            if loc.id == loc_id:
                return loc
        raise KeyError(loc_id)

    def tick_of(self, ts: datetime) -> int:
        if self.epoch is None:
            raise ValueError("empty log has no tick grid")
        return (ts - self.epoch) // self.tick_interval


def filter_promoted(log: ObservationLog) -> ObservationLog:
    """Drop promoted entries, keeping snapshots (possibly empty) and ranks as given."""
    snaps = []
    for snap in log.snapshots:
        kept = tuple(e for e in snap.entries if not e.promoted)
        if len(kept) != len(snap.entries):
            snap = TrendSnapshot(snap.location_id, snap.timestamp, kept)
        snaps.append(snap)
    return ObservationLog(log.catalog, tuple(snaps), log.tick_interval)


@dataclass(frozen=True)
class TrendEpisodeTable:
    """Per-(trend, location) presence ticks derived from an observation log.

    `by_trend` maps each trend to the city locations where it appeared and the
    sorted ticks of those appearances; country-level rows live in `country`,
    keyed by trend. Durations are presence counts times the tick interval,
    regardless of gaps; `contiguous_runs` exposes the run-based view.
    """

    tick_interval: timedelta
    epoch: Optional[datetime]
    location_ids: Tuple[str, ...]
    country_location_id: Optional[str]
    by_trend: Mapping[TrendName, Mapping[str, Tuple[int, ...]]]
    country: Mapping[TrendName, Tuple[int, ...]]

    @property
    def tick_minutes(self) -> float:
        return self.tick_interval.total_seconds() / 60.0

    def trends(self) -> Tuple[TrendName, ...]:
        return tuple(sorted(self.by_trend, key=TrendName.sort_key))

    def country_trends(self) -> Tuple[TrendName, ...]:
        return tuple(sorted(self.country, key=TrendName.sort_key))

    def __contains__(self, trend: TrendName) -> bool:
        return trend in self.by_trend

    def locations_of(self, trend: TrendName) -> Tuple[str, ...]:
        return tuple(sorted(self.by_trend[trend]))

    def n_locations(self, trend: TrendName) -> int:
        return len(self.by_trend[trend])

    def ticks_of(self, trend: TrendName, loc_id: str) -> Tuple[int, ...]:
        return self.by_trend[trend][loc_id]

    def first_seen_tick(self, trend: TrendName, loc_id: str) -> int:
        return self.by_trend[trend][loc_id][0]

    def first_seen(self, trend: TrendName, loc_id: str) -> datetime:
        if self.epoch is None:
            raise ValueError("empty table has no time axis")
        return self.epoch + self.first_seen_tick(trend, loc_id) * self.tick_interval

    def duration_minutes(self, trend: TrendName, loc_id: str) -> float:
        return len(self.by_trend[trend][loc_id]) * self.tick_minutes

    def total_lifetime_minutes(self, trend: TrendName) -> float:
        return sum(len(t) for t in self.by_trend[trend].values()) * self.tick_minutes

    def mean_lifetime_minutes(self, trend: TrendName) -> float:
        """Average trending time per location where the trend appeared."""
        rows = self.by_trend[trend]
        return sum(len(t) for t in rows.values()) * self.tick_minutes / len(rows)

    def country_first_tick(self, trend: TrendName) -> int:
        return self.country[trend][0]

    def contiguous_runs(self, trend: TrendName, loc_id: str) -> Tuple[Tuple[int, int], ...]:
        """(start_tick, n_ticks) maximal runs of consecutive presence."""
        ticks = self.by_trend[trend][loc_id]
        runs = []
        start = ticks[0]
        length = 1
        for prev, cur in zip(ticks, ticks[1:]):
            if cur == prev + 1:
                length += 1
            else:
                runs.append((start, length))
                start, length = cur, 1
        runs.append((start, length))
        return tuple(runs)

    def filter_kind(self, kind: TrendKind) -> "TrendEpisodeTable":
        """Restrict the table to hashtags or to phrases."""
        kind = TrendKind(kind)
        return TrendEpisodeTable(
            tick_interval=self.tick_interval,
            epoch=self.epoch,
            location_ids=self.location_ids,
            country_location_id=self.country_location_id,
            by_trend={t: rows for t, rows in self.by_trend.items() if t.kind is kind},
            country={t: ticks for t, ticks in self.country.items() if t.kind is kind},
        )


def build_episodes(log: ObservationLog) -> TrendEpisodeTable:
    """Aggregate a log into per-(trend, location) presence ticks.

    Expects promoted entries to have been filtered already; every entry still
    present is counted. Country-level snapshots populate the country rows.
    """
    country_loc = log.country_location
    country_id = country_loc.id if country_loc else None
    city_ids = tuple(loc.id for loc in log.catalog if not loc.is_country_level)

    by_trend: Dict[TrendName, Dict[str, list]] = {}
    country: Dict[TrendName, list] = {}
    epoch = log.epoch
    for snap in log.snapshots:
        tick = log.tick_of(snap.timestamp)
        if snap.location_id == country_id:
            for entry in snap.entries:
                country.setdefault(entry.trend, []).append(tick)
        else:
            for entry in snap.entries:
                by_trend.setdefault(entry.trend, {}).setdefault(
                    snap.location_id, []
                ).append(tick)

    frozen: Dict[TrendName, Dict[str, Tuple[int, ...]]] = {
        trend: {loc: tuple(sorted(ticks)) for loc, ticks in rows.items()}
        for trend, rows in by_trend.items()
    }
    return TrendEpisodeTable(
        tick_interval=log.tick_interval,
        epoch=epoch,
        location_ids=city_ids,
        country_location_id=country_id,
        by_trend=frozen,
        country={t: tuple(sorted(ticks)) for t, ticks in country.items()},
    )
