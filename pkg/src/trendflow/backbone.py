"""Multiscale backbone extraction and source/sink ranking.

An arc's significance score is the probability, under a uniform
stick-breaking null model at its endpoint, of seeing a normalized weight at
least as large as observed: with p the arc's share of the node's strength and
k the node's degree (both in the evaluated orientation), the score is
(1 - p)**(k - 1). Small scores mean the arc carries an implausibly large
share of its endpoint's strength. An arc is retained at level ``alpha`` when
its score is below ``alpha``.

Arcs incident to a degree-1 node (in the evaluated orientation) score 0: the
null model is undefined at k = 1 and dropping such arcs would disconnect
leaves, defeating the connectivity-preserving tuning below.

By default each arc is scored against both endpoints (the source's outgoing
distribution and the target's incoming one) and kept if it is significant on
either side; ``orientation_rule="out"`` restricts scoring to the source side.
"""

from __future__ import annotations

import io as _stdio
import json
import warnings
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .depnet import DependenceNetwork
from .model import Location

ORIENTATION_RULES = ("both", "out")


@dataclass(frozen=True)
class BackboneNetwork:
    node_ids: Tuple[str, ...]
    weights: np.ndarray  # retained arcs with their original weights
    alpha: float
    connected: bool
    orientation_rule: str

    @property
    def n_arcs(self) -> int:
        return int(np.count_nonzero(self.weights))

    def arcs(self) -> Iterator[Tuple[str, str, float]]:
        for i, src in enumerate(self.node_ids):
            row = self.weights[i]
            for j in np.flatnonzero(row):
                yield src, self.node_ids[j], float(row[j])


@dataclass(frozen=True)
class SourceSinkEntry:
    location_id: str
    ratio: float  # out-strength share of total strength; 1 = pure source
    s_in: float
    s_out: float
    rank: int


@dataclass(frozen=True)
class SourceSinkRanking:
    entries: Tuple[SourceSinkEntry, ...]
    skipped: Tuple[str, ...]  # isolated nodes with no strength at all


def _oriented_score(weights: np.ndarray, axis: int) -> np.ndarray:
    """Significance scores of every arc against one endpooint orientation.

    axis=1 scores arcs within each row (source's outgoing distribution),
    axis=0 within each column (target's incoming one). Cells without an arc
    score 1.0 so they are never retained (alpha never exceeds 1).
    """
    present = weights > 0
    strength = weights.sum(axis=axis, keepdims=True)
    degree = present.sum(axis=axis, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        share = np.where(strength > 0, weights / np.where(strength > 0, strength, 1.0), 0.0)
    score = np.clip(1.0 - share, 0.0, 1.0) ** np.maximum(degree - 1, 0)
    score = np.where(degree == 1, 0.0, score)  # degree-1 convention
    return np.where(present, score, 1.0)


def significance_matrix(
    net: DependenceNetwork, orientation_rule: str = "both"
) -> np.ndarray:
    if orientation_rule not in ORIENTATION_RULES:
        raise ValueError(f"orientation_rule must be one of {ORIENTATION_RULES}")
    out_score = _oriented_score(net.weights, axis=1)
    if orientation_rule == "out":
        return out_score
    in_score = _oriented_score(net.weights, axis=0)
    return np.minimum(out_score, in_score)


def disparity_significance(
    net: DependenceNetwork, src: str, dst: str, orientation: str = "out"
) -> float:
    """Score of one arc against one endpoint's weight distribution."""
    if orientation not in ("out", "in"):
        raise ValueError("orientation must be 'out' or 'in'")
    i = net.node_ids.index(src)
    j = net.node_ids.index(dst)
    w = net.weights[i, j]
    if w <= 0:
        raise KeyError(f"no arc {src!r} -> {dst!r}")
    row = net.weights[i, :] if orientation == "out" else net.weights[:, j]
    strength = row.sum()
    if strength <= 0:
        raise ValueError(f"zero {orientation}-strength node")
    degree = int(np.count_nonzero(row))
    if degree == 1:
        return 0.0
    return float((1.0 - w / strength) ** (degree - 1))


def _weakly_connected(adjacency: np.ndarray) -> bool:
    n_comp, _ = connected_components(
        csr_matrix(adjacency), directed=True, connection="weak"
    )
    return n_comp == 1


def extract_backbone(
    net: DependenceNetwork, alpha: float, orientation_rule: str = "both"
) -> BackboneNetwork:
    """Keep the arcs scoring below ``alpha``; weights are preserved."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")
    score = significance_matrix(net, orientation_rule)
    retained = np.where(score < alpha, net.weights, 0.0)
    return BackboneNetwork(
        node_ids=net.node_ids,
        weights=retained,
        alpha=alpha,
        connected=_weakly_connected(retained > 0),
        orientation_rule=orientation_rule,
    )


def tune_alpha(
    net: DependenceNetwork,
    coarse_step: float = 0.01,
    resolution: float = 1e-4,
    orientation_rule: str = "both",
) -> Tuple[float, BackboneNetwork]:
    """Smallest threshold keeping every node in one weak component.

    Retention grows monotonically with alpha, so a descending coarse scan
    brackets the critical value and a bisection over the ``resolution`` grid
    pins the smallest grid multiple that stays connected.
    """
    score = significance_matrix(net, orientation_rule)

    def connected_at(alpha: float) -> bool:
        return _weakly_connected(score < alpha)

    if not connected_at(1.0):
        raise ValueError("network is not weakly connected even at alpha = 1")

    # Coarse descent: find the largest grid alpha that disconnects.
    n_coarse = int(round(1.0 / coarse_step))
    hi = 1.0
    lo = 0.0
    for k in range(n_coarse - 1, 0, -1):
        alpha = k * coarse_step
        if connected_at(alpha):
            hi = alpha
        else:
            lo = alpha
            break

    lo_k = int(round(lo / resolution))
    hi_k = int(round(hi / resolution))
    while hi_k - lo_k > 1:
        mid = (lo_k + hi_k) // 2
        if connected_at(mid * resolution):
            hi_k = mid
        else:
            lo_k = mid
    alpha_star = hi_k * resolution
    return alpha_star, extract_backbone(net, alpha_star, orientation_rule)


def source_sink_ranking(backbone: BackboneNetwork) -> SourceSinkRanking:
    """Rank nodes by out-strength share; rank 1 is the strongest source."""
    s_out = backbone.weights.sum(axis=1)
    s_in = backbone.weights.sum(axis=0)
    total = s_in + s_out
    scored = []
    skipped = []
    for i, loc in enumerate(backbone.node_ids):
        if total[i] > 0:
            scored.append((loc, float(s_out[i] / total[i]), float(s_in[i]), float(s_out[i])))
        else:
            skipped.append(loc)
    if skipped:
        warnings.warn(
            f"{len(skipped)} isolated node(s) without strength, ratio undefined: "
            + ", ".join(sorted(skipped))
        )
    scored.sort(key=lambda row: (-row[1], row[0]))
    entries = tuple(
        SourceSinkEntry(loc, ratio, s_i, s_o, rank)
        for rank, (loc, ratio, s_i, s_o) in enumerate(scored, start=1)
    )
    return SourceSinkRanking(entries, tuple(sorted(skipped)))


def to_edge_csv(backbone: BackboneNetwork) -> str:
    out = _stdio.StringIO()
    out.write("src,dst,weight\n")
    for src, dst, w in backbone.arcs():
        out.write(f"{src},{dst},{w!r}\n")
    return out.getvalue()


def to_dot(backbone: BackboneNetwork, name: str = "backbone") -> str:
    lines = [f"digraph {name} {{"]
    for node in backbone.node_ids:
        lines.append(f'  "{node}";')
    for src, dst, w in backbone.arcs():
        lines.append(f'  "{src}" -> "{dst}" [weight={w!r}];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_geojson(backbone: BackboneNetwork, catalog: Sequence[Location]) -> str:
    """Arcs as a LineString collection using catalog coordinates."""
    coord = {loc.id: (loc.longitude, loc.latitude) for loc in catalog}
    missing = [n for n in backbone.node_ids if n not in coord]
    if missing:
        raise ValueError(f"catalog lacks coordinates for: {', '.join(sorted(missing))}")
    features = []
    for src, dst, w in backbone.arcs():
        features.append(
            {
                "type": "Feature",
                "geometry": {
                    "type": "LineString",
                    "coordinates": [list(coord[src]), list(coord[dst])],
                },
                "properties": {"src": src, "dst": dst, "weight": w},
            }
        )
    collection = {"type": "FeatureCollection", "features": features}
    return json.dumps(collection, sort_keys=True, separators=(",", ":")) + "\n"


def ranking_csv(ranking: SourceSinkRanking) -> str:
    out = _stdio.StringIO()
    out.write("loc,omega,s_in,s_out,rank\n")
    for e in ranking.entries:
        out.write(f"{e.location_id},{e.ratio!r},{e.s_in!r},{e.s_out!r},{e.rank}\n")
    return out.getvalue()
