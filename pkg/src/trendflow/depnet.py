"""Temporal dependence network between locations.

The network is directed and weighted: the arc (i, j) accumulates mass every
time location i first exhibits a trend strictly before location j does. Only
first appearances count; a location re-trending a topic later adds nothing.
Ties at snapshot resolution credit neither direction, since a ten-minute grid
cannot order simultaneous appearances.

Weighting modes:

* ``uniform``: every strictly ordered (earlier, later) pair adds 1.
* ``lag_discounted``: a pair adds 2**(-dt / halflife), dt the first-seen gap.
* ``initiator_only``: only the unique earliest location is credited, one unit
  per strictly later location; trends whose earliest tick is shared add
  nothing.
"""

from __future__ import annotations

import io as _stdio
from dataclasses import dataclass
from typing import Iterator, Tuple

import numpy as np

from .model import TrendEpisodeTable

MODES = ("uniform", "lag_discounted", "initiator_only")


@dataclass(frozen=True)
class DependenceNetwork:
    node_ids: Tuple[str, ...]
    weights: np.ndarray  # (n, n); weights[i, j] = precedence mass of i before j
    mode: str

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    def weight(self, src: str, dst: str) -> float:
        i = self.node_ids.index(src)
        j = self.node_ids.index(dst)
        return float(self.weights[i, j])

    def arcs(self) -> Iterator[Tuple[str, str, float]]:
        """Stored arcs (weight > 0) in (src, dst) order."""
        for i, src in enumerate(self.node_ids):
            row = self.weights[i]
            for j in np.flatnonzero(row):
                yield src, self.node_ids[j], float(row[j])


def build_dependence_network(
    episodes: TrendEpisodeTable,
    mode: str = "uniform",
    lag_halflife_minutes: float = 60.0,
) -> DependenceNetwork:
    """Accumulate first-appearance precedence over all trends.

    Country-level rows are kept out by construction (the episode table holds
    them separately). Per-trend contributions commute, so the result does not
    depend on trend order.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if lag_halflife_minutes <= 0:
        raise ValueError("lag_halflife_minutes must be positive")
    node_ids = episodes.location_ids
    index = {loc: i for i, loc in enumerate(node_ids)}
    n = len(node_ids)
    weights = np.zeros((n, n))
    tick_minutes = episodes.tick_minutes

    for trend in episodes.trends():
        rows = episodes.by_trend[trend]
        if len(rows) < 2:
            continue
        locs = list(rows)
        t = np.array([rows[loc][0] for loc in locs], dtype=float)
        idx = np.array([index[loc] for loc in locs])
        if mode == "initiator_only":
            t_min = t.min()
            earliest = np.flatnonzero(t == t_min)
            if len(earliest) != 1:
                continue  # shared minimum: nobody is the initiator
            src = idx[earliest[0]]
            weights[src, idx[t > t_min]] += 1.0
            continue
        gap = t[np.newaxis, :] - t[:, np.newaxis]  # gap[a, b] = t_b - t_a
        if mode == "uniform":
            contrib = (gap > 0).astype(float)
        else:
            contrib = np.where(
                gap > 0, 0.5 ** (gap * tick_minutes / lag_halflife_minutes), 0.0
            )
        weights[np.ix_(idx, idx)] += contrib

    return DependenceNetwork(node_ids, weights, mode)


def edge_rows(net: DependenceNetwork) -> Iterator[Tuple[str, str, float]]:
    return net.arcs()


def to_edge_csv(net: DependenceNetwork) -> str:
    out = _stdio.StringIO()
    out.write("src,dst,weight\n")
    for src, dst, w in net.arcs():
        out.write(f"{src},{dst},{w!r}\n")
    return out.getvalue()


def to_dot(net: DependenceNetwork, name: str = "depnet") -> str:
    lines = [f"digraph {name} {{"]
    for node in net.node_ids:
        lines.append(f'  "{node}";')
    for src, dst, w in net.arcs():
        lines.append(f'  "{src}" -> "{dst}" [weight={w!r}];')
    lines.append("}")
    return "\n".join(lines) + "\n"
