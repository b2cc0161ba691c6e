"""Segmented snake assembled on the rod.

A snake of ``m`` segments with ``n`` nodes each owns ``m*n + 1`` rod nodes;
neighbouring segments share their boundary node.  Each segment measures a
signed planar deformation from three reference nodes and is actuated by a
torque couple about the vertical axis: the command torque at its first node
and the reaction at its last node.
"""

import math
from dataclasses import dataclass

import numpy as np

from softsnake.rod import (EnvPhysics, RodMaterial, RodState, build_rod,
                           apply_node_torque)

__all__ = ["SnakeConfig", "SegmentView", "DestructionBounds", "Snake",
           "build_snake", "segment_views", "segment_deformation",
           "apply_segment_couple", "detect_destruction", "COUPLE_SIGN",
           "SEGMENT_TRACE_COLUMNS"]

SEGMENT_TRACE_COLUMNS = ["t", "segment", "d", "gamma"]

# Vertical couple orientation such that a positive command torque drives the
# segment deformation positive (toward +y in top view); keeping the two signs
# aligned is what makes opposite-threshold spiking restorative.
COUPLE_SIGN = -1.0


@dataclass(frozen=True)
class SnakeConfig:
    """Snake layout: m segments of n nodes plus one shared tail node."""

    m: int = 3
    n: int = 3
    node_radius: float = 0.25
    segment_length: float = 1.0
    start_xy: tuple = (0.0, 0.0)
    heading: tuple = (-1.0, 0.0)

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("need at least one segment")
        if self.n < 3:
            raise ValueError("deformation needs three reference nodes "
                             "per segment (n >= 3)")
        if self.segment_length <= 0.0 or self.node_radius <= 0.0:
            raise ValueError("lengths must be positive")

    @property
    def n_nodes(self) -> int:
        return self.m * self.n + 1

    @property
    def total_length(self) -> float:
        return self.m * self.segment_length


@dataclass(frozen=True)
class SegmentView:
    """Reference node indices of one segment within the rod."""

    segment_index: int
    first: int
    third_point: int
    two_thirds_point: int
    last: int

    def __post_init__(self):
        idx = (self.first, self.third_point, self.two_thirds_point, self.last)
        if not all(a < b for a, b in zip(idx, idx[1:])):
            raise ValueError(f"segment node indices must increase: {idx}")


@dataclass(frozen=True)
class DestructionBounds:
    """What counts as an invalid episode-ending state."""

    position_limit: float = 1e3
    strain_factor: float = 3.0


def segment_views(config: SnakeConfig):
    """Views for all segments; segment i owns nodes [i*n, (i+1)*n]."""
    views = []
    for i in range(config.m):
        base = i * config.n
        views.append(SegmentView(
            segment_index=i,
            first=base,
            third_point=base + config.n // 3,
            two_thirds_point=base + (2 * config.n) // 3,
            last=base + config.n,
        ))
    return views


def build_snake(config: SnakeConfig, material: RodMaterial) -> RodState:
    """Straight snake from the start point, head first along the heading."""
    direction = (config.heading[0], config.heading[1], 0.0)
    start = (config.start_xy[0], config.start_xy[1], 0.0)
    return build_rod(config.n_nodes, config.total_length, material,
                     start_position=start, direction=direction)


def segment_deformation(rod: RodState, seg: SegmentView) -> float:
    """Signed turning angle (radians) at the segment's reference triple.

    The angle runs from (first -> third-point) to (third-point ->
    two-thirds-point), projected into the ground plane; bending toward +y in
    top view is positive.
    """
    pos = rod.node_positions
    ux = pos[seg.third_point, 0] - pos[seg.first, 0]
    uy = pos[seg.third_point, 1] - pos[seg.first, 1]
    vx = pos[seg.two_thirds_point, 0] - pos[seg.third_point, 0]
    vy = pos[seg.two_thirds_point, 1] - pos[seg.third_point, 1]
    if ux * ux + uy * uy < 1e-24 or vx * vx + vy * vy < 1e-24:
        raise ValueError(f"coincident reference nodes in segment "
                         f"{seg.segment_index}")
    return math.atan2(ux * vy - uy * vx, ux * vx + uy * vy)


def apply_segment_couple(rod: RodState, seg: SegmentView,
                         gamma: float) -> None:
    """Accumulate the vertical couple: +gamma at the segment's first node,
    -gamma at its last node (orientation fixed by ``COUPLE_SIGN``)."""
    z = COUPLE_SIGN * gamma
    apply_node_torque(rod, seg.first, (0.0, 0.0, z))
    apply_node_torque(rod, seg.last, (0.0, 0.0, -z))


def detect_destruction(rod: RodState,
                       bounds: DestructionBounds = DestructionBounds()
                       ) -> bool:
    """True iff the state is non-finite, out of bounds, or over-strained."""
    pos = rod.node_positions
    if not np.all(np.isfinite(pos)):
        return True
    if np.abs(pos).max() > bounds.position_limit:
        return True
    d = pos[1:] - pos[:-1]
    lengths = np.sqrt((d * d).sum(axis=1))
    ratio = lengths / rod.element_rest_lengths
    f = bounds.strain_factor
    return bool(np.any(ratio > f) or np.any(ratio < 1.0 / f))


class Snake:
    """A rod plus its segment structure and environment constants."""

    def __init__(self, config: SnakeConfig,
                 material: RodMaterial | None = None,
                 env: EnvPhysics | None = None,
                 bounds: DestructionBounds = DestructionBounds()):
        self.config = config
        self.material = material if material is not None else RodMaterial(
            base_radius=config.node_radius)
        if env is None:
            env = EnvPhysics.for_rod(self.material, config.total_length,
                                     config.n_nodes)
        self.env = env
        self.bounds = bounds
        self.segments = segment_views(config)
        self.rod = build_snake(config, self.material)
        n_el = self.rod.n_elements
        self.seg_a = np.array([s.first for s in self.segments],
                              dtype=np.int64)
        self.seg_b = np.array([s.third_point for s in self.segments],
                              dtype=np.int64)
        self.seg_c = np.array([s.two_thirds_point for s in self.segments],
                              dtype=np.int64)
        self.first_el = np.array([min(s.first, n_el - 1)
                                  for s in self.segments], dtype=np.int64)
        self.last_el = np.array([min(s.last, n_el - 1)
                                 for s in self.segments], dtype=np.int64)

    def rebuild(self) -> None:
        """Fresh straight rod (episode reset)."""
        self.rod = build_snake(self.config, self.material)

    def deformations(self):
        return np.array([segment_deformation(self.rod, s)
                         for s in self.segments])

    def head_xy(self):
        return (float(self.rod.node_positions[0, 0]),
                float(self.rod.node_positions[0, 1]))

    def destroyed(self) -> bool:
        return detect_destruction(self.rod, self.bounds)
