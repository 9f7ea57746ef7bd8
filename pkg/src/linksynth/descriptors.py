"""Behavior descriptors and the grid that bins them into repertoire cells.

Three hand-crafted descriptor spaces (path width/height, lift/structure,
pure structure) plus the slot for autoencoder latents. 2-D spaces use 100
bins per dimension and 4-D spaces use 10, so every map has 10,000 cells.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .fitness import lift
from .genome import EncodingConfig
from .kinematics import (FIRST_JOINT_NODE, STATIC_NODE_IDS, Linkage,
                         PathTrace, path_metrics)

SPACE_IDS = ("wh", "lis", "st", "au")
TOTAL_CELLS = 10_000


@dataclass(frozen=True)
class GridSpec:
    space: str
    lower: tuple
    upper: tuple
    bins: tuple

    def __post_init__(self):
        if not (len(self.lower) == len(self.upper) == len(self.bins)):
            raise ValueError("lower/upper/bins must have equal length")
        for lo, hi in zip(self.lower, self.upper):
            if not lo < hi:
                raise ValueError("grid bounds must have lower < upper")

    @property
    def dims(self) -> int:
        return len(self.bins)

    @property
    def total_cells(self) -> int:
        return int(np.prod(self.bins))

    def with_bounds(self, lower, upper) -> "GridSpec":
        return replace(self, lower=tuple(float(v) for v in lower),
                       upper=tuple(float(v) for v in upper))

    def to_dict(self) -> dict:
        return {"space": self.space, "lower": list(self.lower),
                "upper": list(self.upper), "bins": list(self.bins)}

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        return cls(d["space"], tuple(d["lower"]), tuple(d["upper"]),
                   tuple(int(b) for b in d["bins"]))


def default_grid(space: str, cfg: Optional[EncodingConfig] = None) -> GridSpec:
    """Grid bounds per descriptor space. Out-of-range descriptors clamp to
    the edge bins rather than being discarded."""
    cfg = cfg or EncodingConfig()
    if space == "wh":
        return GridSpec("wh", (0.0, 0.0), (300.0, 300.0), (100, 100))
    if space == "lis":
        return GridSpec("lis", (0.0, 0.0), (300.0, 150.0), (100, 100))
    if space == "st":
        lo, hi = cfg.beam_len_range
        return GridSpec("st", (lo, 1.0, 1.0, 0.0), (hi, 10.0, 10.0, 1.0),
                        (10, 10, 10, 10))
    if space == "au":
        # tanh latents start in [-1, 1]; bounds are refreshed from data
        # whenever the autoencoder is retrained
        return GridSpec("au", (-1.0,) * 4, (1.0,) * 4, (10,) * 4)
    raise ValueError(f"unknown descriptor space {space!r}")


def bin_index(values, grid: GridSpec) -> tuple:
    """Cell of a descriptor: per-dimension floor((v - lo) / (hi - lo) * bins),
    clamped to the edge bins."""
    idx = []
    for v, lo, hi, b in zip(values, grid.lower, grid.upper, grid.bins):
        i = int(np.floor((v - lo) / (hi - lo) * b))
        idx.append(min(max(i, 0), b - 1))
    return tuple(idx)


def descriptor_wh(trace: PathTrace) -> Optional[tuple]:
    """(path width, path height); None when the path is empty."""
    m = path_metrics(trace)
    if not m.valid:
        return None
    return (m.width, m.height)


def mean_beam_length(linkage: Linkage) -> float:
    return float(np.mean([b.length for b in linkage.beams]))


def descriptor_lis(linkage: Linkage, trace: PathTrace) -> Optional[tuple]:
    """(mean beam length including the crank, path lift)."""
    if len(trace.foot_path) == 0:
        return None
    return (mean_beam_length(linkage), lift(trace))


def _anchor_distances(linkage: Linkage, foot: int) -> dict:
    """Beam-count BFS distances from the foot through the beam graph."""
    adjacency = {}
    for beam in linkage.beams:
        adjacency.setdefault(beam.node_a, []).append(beam.node_b)
        adjacency.setdefault(beam.node_b, []).append(beam.node_a)
    dist = {foot: 0}
    queue = deque([foot])
    while queue:
        node = queue.popleft()
        for nxt in adjacency.get(node, []):
            if nxt not in dist:
                dist[nxt] = dist[node] + 1
                queue.append(nxt)
    return dist


def _foot_ancestors(linkage: Linkage, foot: int) -> set:
    """Transitive closure of nodes the foot's position is computed from."""
    parents = {}
    for j, joint in enumerate(linkage.joints):
        nid = FIRST_JOINT_NODE + j
        if hasattr(joint, "parent_beam"):
            beam = linkage.beams[joint.parent_beam]
            parents[nid] = (beam.node_a, beam.node_b)
        else:
            parents[nid] = (joint.parent_a, joint.parent_b)
    closure = set()
    stack = [foot]
    while stack:
        node = stack.pop()
        if node in closure:
            continue
        closure.add(node)
        stack.extend(parents.get(node, ()))
    return closure


def descriptor_st(linkage: Linkage, trace: PathTrace) -> Optional[tuple]:
    """Structural 4-vector: mean beam length; the longest of the three
    anchor-to-foot beam-count paths (capped at 10 when disconnected); the
    number of moving nodes the foot's position depends on, foot included;
    and the moving share of all nodes."""
    if trace.foot_index is None:
        return None
    foot = trace.foot_index
    dist = _anchor_distances(linkage, foot)
    cap = 10.0
    anchor_path = max(min(float(dist.get(s, np.inf)), cap) for s in STATIC_NODE_IDS)
    moving = set(int(n) for n in trace.moving_nodes)
    contributing = len(_foot_ancestors(linkage, foot) & moving)
    proportion = len(moving) / linkage.n_nodes
    return (mean_beam_length(linkage), anchor_path, float(contributing), proportion)
