"""2D linkage mechanism model and crank-rotation solver.

A linkage is a crank driven by a motor at the origin, three static anchor
nodes, and a chain of joint nodes, each attached either rigidly to an
existing beam (extension) or by two freely rotating beams (two-beam).
Node positions over one full crank rotation are solved step by step with
plain trigonometry; steps where some node cannot be placed are counted as
errors rather than rejected.

Node ids are fixed by construction order: 0 = motor, 1..3 = static nodes,
4 = crank tip, 5.. = joint nodes in genome order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np
from numba import njit

NODE_MOTOR = 0
STATIC_NODE_IDS = (1, 2, 3)
NODE_CRANK_TIP = 4
FIRST_JOINT_NODE = 5

GEOM_TOL = 1e-9

JOINT_EXTENSION = 0
JOINT_TWO_BEAM = 1


@dataclass(frozen=True)
class ExtensionJoint:
    """Node rigidly attached to one existing beam; rotates with it."""

    parent_beam: int
    end: int  # 0 = anchor at the beam's first node, 1 = at its second
    angle_offset: float  # radians, relative to the parent beam direction
    length: float  # mm


@dataclass(frozen=True)
class TwoBeamJoint:
    """Node held by two freely rotating beams; placed by circle intersection."""

    parent_a: int
    parent_b: int
    branch: int  # 0 = left of the a->b line, 1 = right
    length_a: float  # mm
    length_b: float  # mm


Joint = Union[ExtensionJoint, TwoBeamJoint]


@dataclass(frozen=True)
class Beam:
    node_a: int
    node_b: int
    length: float  # mm


@dataclass
class Linkage:
    """Decoded kinematic structure. Beams are derived from the joint list."""

    crank_length: float
    static_nodes: np.ndarray  # (3, 2) mm, relative to the motor at the origin
    joints: list
    beams: list = field(init=False)

    def __post_init__(self):
        if self.crank_length <= 0:
            raise ValueError("crank length must be positive")
        self.static_nodes = np.asarray(self.static_nodes, dtype=float).reshape(3, 2)
        self.beams = _build_beams(self.crank_length, self.joints)

    @property
    def n_nodes(self) -> int:
        return FIRST_JOINT_NODE + len(self.joints)

    def with_beam_lengths(self, overrides: dict) -> "Linkage":
        """Return a copy with the given beam lengths replaced.

        Keys are beam indices into ``beams``; beam 0 is the crank.
        """
        for idx, length in overrides.items():
            if not 0 <= idx < len(self.beams):
                raise ValueError(f"beam index {idx} out of range")
            if length <= 0:
                raise ValueError(f"beam {idx}: length must be positive")
        crank = overrides.get(0, self.crank_length)
        joints = []
        beam_idx = 1
        for joint in self.joints:
            if isinstance(joint, ExtensionJoint):
                length = overrides.get(beam_idx, joint.length)
                joints.append(replace(joint, length=length))
                beam_idx += 1
            else:
                la = overrides.get(beam_idx, joint.length_a)
                lb = overrides.get(beam_idx + 1, joint.length_b)
                joints.append(replace(joint, length_a=la, length_b=lb))
                beam_idx += 2
        return Linkage(crank, self.static_nodes.copy(), joints)


def _build_beams(crank_length: float, joints: list) -> list:
    beams = [Beam(NODE_MOTOR, NODE_CRANK_TIP, crank_length)]
    for j, joint in enumerate(joints):
        nid = FIRST_JOINT_NODE + j
        if isinstance(joint, ExtensionJoint):
            parent = beams[joint.parent_beam]
            anchor = parent.node_a if joint.end == 0 else parent.node_b
            if joint.length <= 0:
                raise ValueError("beam lengths must be positive")
            beams.append(Beam(anchor, nid, joint.length))
        elif isinstance(joint, TwoBeamJoint):
            if joint.length_a <= 0 or joint.length_b <= 0:
                raise ValueError("beam lengths must be positive")
            beams.append(Beam(joint.parent_a, nid, joint.length_a))
            beams.append(Beam(joint.parent_b, nid, joint.length_b))
        else:
            raise TypeError(f"unknown joint type: {joint!r}")
    return beams


def moving_node_ids(linkage: Linkage) -> np.ndarray:
    """Ids of nodes whose position depends on the crank angle.

    A joint chain anchored only to static nodes is stationary even though
    it was produced by the joint list.
    """
    moving = {NODE_CRANK_TIP}
    for j, joint in enumerate(linkage.joints):
        nid = FIRST_JOINT_NODE + j
        if isinstance(joint, ExtensionJoint):
            parent = linkage.beams[joint.parent_beam]
            if parent.node_a in moving or parent.node_b in moving:
                moving.add(nid)
        else:
            if joint.parent_a in moving or joint.parent_b in moving:
                moving.add(nid)
    return np.array(sorted(moving), dtype=np.int64)


@dataclass
class PathTrace:
    """Solved node positions over one crank rotation.

    ``node_positions[n, k]`` is NaN where node n could not be placed at
    step k. A step is feasible only if every node resolved; the foot path
    contains the foot positions of feasible steps, in step order.
    """

    steps: np.ndarray  # (K,) crank angles, radians
    node_positions: np.ndarray  # (n_nodes, K, 2) mm, NaN = unresolved
    feasible: np.ndarray  # (K,) bool
    moving_nodes: np.ndarray  # ids of crank-dependent nodes
    foot_index: Optional[int]
    foot_path: np.ndarray  # (K - error_count, 2)
    error_count: int


@dataclass
class PathMetrics:
    width: float
    height: float
    min_y: float
    valid: bool


@njit(cache=True)
def _solve_kernel(pos, feasible, K, crank_length, jint, jflt, tol):  # pragma: no cover
    n_nodes = pos.shape[0]
    n_joints = jint.shape[0]
    for k in range(K):
        theta = 2.0 * np.pi * k / K
        pos[NODE_CRANK_TIP, k, 0] = crank_length * np.cos(theta)
        pos[NODE_CRANK_TIP, k, 1] = crank_length * np.sin(theta)
        for j in range(n_joints):
            nid = FIRST_JOINT_NODE + j
            p1 = jint[j, 1]
            p2 = jint[j, 2]
            sel = jint[j, 3]
            ax = pos[p1, k, 0]
            ay = pos[p1, k, 1]
            bx = pos[p2, k, 0]
            by = pos[p2, k, 1]
            if np.isnan(ax) or np.isnan(bx):
                continue
            dx = bx - ax
            dy = by - ay
            if jint[j, 0] == JOINT_EXTENSION:
                c = jflt[j, 0]
                s = jflt[j, 1]
                length = jflt[j, 2]
                norm = np.sqrt(dx * dx + dy * dy)
                if norm <= tol:
                    continue
                ux = (dx * c - dy * s) / norm
                uy = (dx * s + dy * c) / norm
                if sel == 0:
                    pos[nid, k, 0] = ax + length * ux
                    pos[nid, k, 1] = ay + length * uy
                else:
                    pos[nid, k, 0] = bx + length * ux
                    pos[nid, k, 1] = by + length * uy
            else:
                ra = jflt[j, 2]
                rb = jflt[j, 3]
                d2 = dx * dx + dy * dy
                d = np.sqrt(d2)
                if d <= tol:
                    continue
                if d - (ra + rb) > tol or abs(ra - rb) - d > tol:
                    continue
                a = (ra * ra - rb * rb + d2) / (2.0 * d)
                h2 = ra * ra - a * a
                h = np.sqrt(h2) if h2 > 0.0 else 0.0
                ex = dx / d
                ey = dy / d
                mx = ax + a * ex
                my = ay + a * ey
                if sel == 0:
                    pos[nid, k, 0] = mx - h * ey
                    pos[nid, k, 1] = my + h * ex
                else:
                    pos[nid, k, 0] = mx + h * ey
                    pos[nid, k, 1] = my - h * ex
        ok = True
        for nid in range(NODE_CRANK_TIP, n_nodes):
            if np.isnan(pos[nid, k, 0]):
                ok = False
                break
        feasible[k] = ok


def _joint_plan(linkage: Linkage):
    """Flatten the joint list into arrays the solver kernel can consume."""
    n = len(linkage.joints)
    jint = np.zeros((n, 4), dtype=np.int64)
    jflt = np.zeros((n, 4), dtype=np.float64)
    for j, joint in enumerate(linkage.joints):
        if isinstance(joint, ExtensionJoint):
            parent = linkage.beams[joint.parent_beam]
            jint[j] = (JOINT_EXTENSION, parent.node_a, parent.node_b, joint.end)
            jflt[j, 0] = math.cos(joint.angle_offset)
            jflt[j, 1] = math.sin(joint.angle_offset)
            jflt[j, 2] = joint.length
        else:
            jint[j] = (JOINT_TWO_BEAM, joint.parent_a, joint.parent_b, joint.branch)
            jflt[j, 2] = joint.length_a
            jflt[j, 3] = joint.length_b
    return jint, jflt


def solve(linkage: Linkage, steps: int = 72) -> PathTrace:
    """Rotate the crank through ``steps`` equal increments and place every node.

    The foot is the node reaching the lowest y over the feasible steps
    (ties broken by lowest node id). A linkage with no feasible step yields
    an empty foot path and error_count == steps.
    """
    if steps < 3:
        raise ValueError("steps must be >= 3")
    n_nodes = linkage.n_nodes
    pos = np.full((n_nodes, steps, 2), np.nan)
    pos[NODE_MOTOR] = 0.0
    for i, sid in enumerate(STATIC_NODE_IDS):
        pos[sid, :, 0] = linkage.static_nodes[i, 0]
        pos[sid, :, 1] = linkage.static_nodes[i, 1]
    feasible = np.zeros(steps, dtype=np.bool_)
    jint, jflt = _joint_plan(linkage)
    _solve_kernel(pos, feasible, steps, linkage.crank_length, jint, jflt, GEOM_TOL)

    angles = 2.0 * np.pi * np.arange(steps) / steps
    n_feasible = int(feasible.sum())
    error_count = steps - n_feasible
    if n_feasible == 0:
        return PathTrace(angles, pos, feasible, moving_node_ids(linkage), None,
                         np.empty((0, 2)), error_count)
    min_y = pos[:, feasible, 1].min(axis=1)
    foot = int(np.argmin(min_y))
    foot_path = pos[foot, feasible, :].copy()
    return PathTrace(angles, pos, feasible, moving_node_ids(linkage), foot,
                     foot_path, error_count)


def circle_intersection(c1, r1: float, c2, r2: float, branch: int = 0,
                        tol: float = GEOM_TOL) -> Optional[tuple]:
    """Intersection of two circles, on the side of the c1->c2 line picked by branch.

    Returns None when the circles are too far apart, one contains the other,
    or the centers coincide. A tangent contact within ``tol`` returns the
    single touching point for either branch.
    """
    if r1 <= 0 or r2 <= 0:
        raise ValueError("radii must be positive")
    ax, ay = float(c1[0]), float(c1[1])
    bx, by = float(c2[0]), float(c2[1])
    dx = bx - ax
    dy = by - ay
    d2 = dx * dx + dy * dy
    d = math.sqrt(d2)
    if d <= tol:
        return None
    if d - (r1 + r2) > tol or abs(r1 - r2) - d > tol:
        return None
    a = (r1 * r1 - r2 * r2 + d2) / (2.0 * d)
    h2 = r1 * r1 - a * a
    h = math.sqrt(h2) if h2 > 0.0 else 0.0
    ex = dx / d
    ey = dy / d
    mx = ax + a * ex
    my = ay + a * ey
    if branch == 0:
        return (mx - h * ey, my + h * ex)
    return (mx + h * ey, my - h * ex)


def path_metrics(trace: PathTrace) -> PathMetrics:
    """Bounding-box width/height and lowest y of the foot path."""
    path = trace.foot_path
    if len(path) == 0:
        return PathMetrics(0.0, 0.0, 0.0, valid=False)
    xs = path[:, 0]
    ys = path[:, 1]
    return PathMetrics(float(xs.max() - xs.min()), float(ys.max() - ys.min()),
                       float(ys.min()), valid=True)
