"""Descriptive statistics of trend spread, lifetime and geographic entropy.

A trend's lifetime here is its mean trending time per location where it
appeared (total presence divided by the number of locations). Its entropy is
the Shannon entropy, in nats, of the distribution of its trending time over
locations: concentrated trends score near zero, trends spending equal time
everywhere score ln(number of locations).
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .model import TrendEpisodeTable, TrendName

X_AXES = ("n_locations", "entropy")


@dataclass(frozen=True)
class TrendSpreadStats:
    trend: TrendName
    n_locations: int
    total_lifetime_minutes: float
    mean_lifetime_minutes: float
    entropy_nats: float


@dataclass(frozen=True)
class BinnedCurve:
    """Mean of y per x-bin with standard errors; only non-empty bins emitted."""

    x: Tuple[float, ...]
    mean: Tuple[float, ...]
    stderr: Tuple[float, ...]
    count: Tuple[int, ...]


@dataclass(frozen=True)
class LifetimeCdf:
    """Step CDF over per-trend lifetimes, queryable at arbitrary durations."""

    sorted_values: Tuple[float, ...]

    def __call__(self, minutes: float) -> float:
        return bisect_right(self.sorted_values, minutes) / len(self.sorted_values)


def trend_entropy(episodes: TrendEpisodeTable, trend: TrendName) -> float:
    """Shannon entropy (nats) of a trend's trending-time share per location."""
    if trend not in episodes:
        raise KeyError(f"unknown trend: {trend.text!r}")
    counts = [len(t) for t in episodes.by_trend[trend].values()]
    total = sum(counts)
    entropy = 0.0
    for c in counts:
        p = c / total
        entropy -= p * math.log(p)
    # Clamp the -0.0 that a single-location trend produces.
    return max(entropy, 0.0)


def spread_histogram(episodes: TrendEpisodeTable) -> Dict[int, int]:
    """Number of trends per count of distinct locations reached.

    One bin per integer count from 1 to the number of catalog locations;
    bin values sum to the number of distinct trends. Empty table gives an
    empty histogram.
    """
    if not episodes.by_trend:
        return {}
    hist = {k: 0 for k in range(1, len(episodes.location_ids) + 1)}
    for trend in episodes.by_trend:
        hist[episodes.n_locations(trend)] += 1
    return hist


def trend_spread_stats(episodes: TrendEpisodeTable) -> List[TrendSpreadStats]:
    rows = []
    for trend in episodes.trends():
        rows.append(
            TrendSpreadStats(
                trend=trend,
                n_locations=episodes.n_locations(trend),
                total_lifetime_minutes=episodes.total_lifetime_minutes(trend),
                mean_lifetime_minutes=episodes.mean_lifetime_minutes(trend),
                entropy_nats=trend_entropy(episodes, trend),
            )
        )
    return rows


def _binned(xs: np.ndarray, ys: np.ndarray, edges: np.ndarray) -> BinnedCurve:
    idx = np.clip(np.searchsorted(edges, xs, side="right") - 1, 0, len(edges) - 2)
    x_out, mean, stderr, count = [], [], [], []
    for b in range(len(edges) - 1):
        mask = idx == b
        n = int(mask.sum())
        if n == 0:
            continue
        vals = ys[mask]
        x_out.append(float((edges[b] + edges[b + 1]) / 2))
        mean.append(float(vals.mean()))
        stderr.append(float(vals.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0)
        count.append(n)
    return BinnedCurve(tuple(x_out), tuple(mean), tuple(stderr), tuple(count))


def lifetime_vs(
    episodes: TrendEpisodeTable, x_axis: str = "n_locations", n_bins: int = 20
) -> BinnedCurve:
    """Mean trend lifetime as a function of geographic spread or entropy.

    ``n_locations`` uses one bin per observed integer count; ``entropy`` uses
    ``n_bins`` equal-width bins over the observed entropy range.
    """
    if x_axis not in X_AXES:
        raise ValueError(f"x_axis must be one of {X_AXES}")
    stats = trend_spread_stats(episodes)
    if not stats:
        raise ValueError("no trends in episode table")
    ys = np.array([s.mean_lifetime_minutes for s in stats])
    if x_axis == "n_locations":
        xs = np.array([s.n_locations for s in stats], dtype=float)
        values = np.unique(xs)
        x_out, mean, stderr, count = [], [], [], []
        for v in values:
            vals = ys[xs == v]
            n = len(vals)
            x_out.append(float(v))
            mean.append(float(vals.mean()))
            stderr.append(float(vals.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0)
            count.append(n)
        return BinnedCurve(tuple(x_out), tuple(mean), tuple(stderr), tuple(count))
    xs = np.array([s.entropy_nats for s in stats])
    lo, hi = float(xs.min()), float(xs.max())
    if hi == lo:
        hi = lo + 1e-12
    edges = np.linspace(lo, hi, n_bins + 1)
    return _binned(xs, ys, edges)


def lifetime_cdf(episodes: TrendEpisodeTable, per_episode: bool = False) -> LifetimeCdf:
    """CDF of trend lifetimes, or of contiguous episode lengths if requested.

    The default distribution has one value per trend (its mean per-location
    lifetime). ``per_episode=True`` instead pools the lengths of all maximal
    contiguous trending runs over every (trend, location) pair, the view
    relevant when a trend leaving and re-entering a top-10 list should count
    as separate episodes.
    """
    if per_episode:
        values = [
            n * episodes.tick_minutes
            for trend, rows in episodes.by_trend.items()
            for loc in rows
            for _, n in episodes.contiguous_runs(trend, loc)
        ]
    else:
        values = [episodes.mean_lifetime_minutes(t) for t in episodes.by_trend]
    if not values:
        raise ValueError("no trends in episode table")
    return LifetimeCdf(tuple(sorted(values)))
