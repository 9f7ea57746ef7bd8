"""Fitness functions over a foot path.

Two families:

* point-set fitness ("fp"): negative sum of distances from target points to
  the path; 0 is perfect and higher is better.
* step/lift fitness ("fsl"): rewards a long flat bottom stroke and leg
  lift; lower is better (-0.8*step - 0.2*lift + angle_error).

Every fitness additionally carries the infeasibility error count with the
sign that worsens it, so linkages that cannot complete a rotation rank
behind working ones.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .kinematics import NODE_CRANK_TIP, PathTrace

# distance charged per target point when the path is empty; dominates any
# achievable real distance but stays finite for sorting
EMPTY_PATH_DISTANCE = 1e6

STEP_BAND_MM = 5.0
STEP_WEIGHT = 0.8
LIFT_WEIGHT = 0.2

FITNESS_IDS = ("fp", "fsl")


@dataclass(frozen=True)
class TargetPointSet:
    """Goal points the foot path should pass through, split into the points
    shaping the ground stroke and the points shaping the leg lift."""

    step_points: np.ndarray  # (Ns, 2) mm
    lift_points: np.ndarray  # (Nl, 2) mm

    def __post_init__(self):
        object.__setattr__(self, "step_points",
                           np.asarray(self.step_points, dtype=float).reshape(-1, 2))
        object.__setattr__(self, "lift_points",
                           np.asarray(self.lift_points, dtype=float).reshape(-1, 2))
        if len(self.step_points) == 0 or len(self.lift_points) == 0:
            raise ValueError("both point sets must be non-empty")

    @property
    def all_points(self) -> np.ndarray:
        return np.vstack([self.step_points, self.lift_points])

    def to_dict(self) -> dict:
        return {"step": self.step_points.tolist(), "lift": self.lift_points.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "TargetPointSet":
        return cls(np.asarray(d["step"]), np.asarray(d["lift"]))


def default_target_points(n_step: int = 10, n_lift: int = 5,
                          width: float = 60.0, height: float = 20.0) -> TargetPointSet:
    """Lying-D arrangement: a flat row of step points with an arc of lift
    points above it, symmetric about the middle of the row."""
    xs = np.linspace(0.0, width, n_step)
    step = np.column_stack([xs, np.zeros(n_step)])
    t = np.pi * (1.0 - np.arange(1, n_lift + 1) / (n_lift + 1))
    lift = np.column_stack([width / 2.0 + (width / 2.0) * np.cos(t),
                            height * np.sin(t)])
    return TargetPointSet(step, lift)


def load_target_points(path) -> TargetPointSet:
    """Read points from a text file of `x y label` rows, label in {step, lift}.
    Blank lines and #-comments are skipped; commas count as whitespace."""
    step, lift = [], []
    for line_no, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip().replace(",", " ")
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"{path}:{line_no}: expected `x y label`, got {raw!r}")
        x, y, label = float(parts[0]), float(parts[1]), parts[2].lower()
        if label == "step":
            step.append((x, y))
        elif label == "lift":
            lift.append((x, y))
        else:
            raise ValueError(f"{path}:{line_no}: unknown label {label!r}")
    return TargetPointSet(np.asarray(step), np.asarray(lift))


def nearest_point_distances(targets: np.ndarray, path: np.ndarray) -> np.ndarray:
    """Distance from each target point to the closest path vertex, by
    exhaustive scan. An empty path charges the sentinel distance."""
    if len(path) == 0:
        return np.full(len(targets), EMPTY_PATH_DISTANCE)
    diff = targets[:, None, :] - path[None, :, :]
    d2 = (diff * diff).sum(axis=2)
    return np.sqrt(d2.min(axis=1))


def fitness_fp(trace: PathTrace, points: TargetPointSet) -> float:
    """Point-set fitness: -sum of nearest distances - error count. Higher is
    better; 0 means the path passes through every target with no errors."""
    d = nearest_point_distances(points.all_points, trace.foot_path)
    return float(-d.sum() - trace.error_count)


def fitness_fp_mo(trace: PathTrace, points: TargetPointSet) -> tuple:
    """Point-set fitness split into (step, lift) objectives, each carrying
    the error count. Both are maximized."""
    ds = nearest_point_distances(points.step_points, trace.foot_path)
    dl = nearest_point_distances(points.lift_points, trace.foot_path)
    return (float(-ds.sum() - trace.error_count),
            float(-dl.sum() - trace.error_count))


def _motion_signs(path: np.ndarray) -> np.ndarray:
    """Per-point x-motion sign by cyclic central difference; exactly zero
    motion gets sign 0 and counts for neither direction."""
    dx = np.roll(path[:, 0], -1) - np.roll(path[:, 0], 1)
    return np.sign(dx)


def _bottom_reference(path: np.ndarray):
    signs = _motion_signs(path)
    bottom = int(np.argmin(path[:, 1]))
    return signs, path[bottom, 1], signs[bottom]


def step_length(trace: PathTrace) -> float:
    """Arc length of the path sections within 5 mm of the lowest point that
    move in the same x direction as the path does at that lowest point."""
    path = trace.foot_path
    if len(path) < 2:
        return 0.0
    signs, y_bottom, sign_bottom = _bottom_reference(path)
    if sign_bottom == 0:
        return 0.0
    qualifies = (path[:, 1] <= y_bottom + STEP_BAND_MM) & (signs == sign_bottom)
    seg = np.linalg.norm(np.roll(path, -1, axis=0) - path, axis=1)
    return float(seg[qualifies & np.roll(qualifies, -1)].sum())


def lift(trace: PathTrace) -> float:
    """Greatest height above the lowest point reached while the foot moves
    in the x direction opposite to its motion at the lowest point."""
    path = trace.foot_path
    if len(path) < 2:
        return 0.0
    signs, y_bottom, sign_bottom = _bottom_reference(path)
    if sign_bottom == 0:
        return 0.0
    opposite = signs == -sign_bottom
    if not opposite.any():
        return 0.0
    return float(path[opposite, 1].max() - y_bottom)


def angle_error(trace: PathTrace) -> int:
    """Number of feasible steps at which some other moving node hangs
    strictly below the foot, i.e. the foot is not the mechanism's lowest
    point at that step."""
    if trace.foot_index is None:
        return 0
    others = trace.moving_nodes[trace.moving_nodes != trace.foot_index]
    if len(others) == 0:
        return 0
    foot_y = trace.node_positions[trace.foot_index, trace.feasible, 1]
    other_y = trace.node_positions[others][:, trace.feasible, 1]
    return int((other_y < foot_y).any(axis=0).sum())


def fitness_fsl(trace: PathTrace) -> float:
    """Step/lift fitness: -0.8*step - 0.2*lift + angle_error + error count.
    Lower is better."""
    return (-STEP_WEIGHT * step_length(trace) - LIFT_WEIGHT * lift(trace)
            + angle_error(trace) + trace.error_count)


def fitness_fsl_mo(trace: PathTrace) -> tuple:
    """Step/lift fitness split into (-step + angle_error, -lift + angle_error)
    objectives, each carrying the error count. Both are minimized."""
    ae = angle_error(trace) + trace.error_count
    return (float(-step_length(trace) + ae), float(-lift(trace) + ae))


def higher_is_better(fitness_id: str) -> bool:
    if fitness_id not in FITNESS_IDS:
        raise ValueError(f"unknown fitness id {fitness_id!r}")
    return fitness_id == "fp"


def scalar_score(fitness_id: str, value: float) -> float:
    """Orient a fitness value so that larger always means better."""
    return value if higher_is_better(fitness_id) else -value


def objective_scores(fitness_id: str, values: tuple) -> tuple:
    """Orient a multi-objective fitness pair so both axes are maximized."""
    if higher_is_better(fitness_id):
        return (values[0], values[1])
    return (-values[0], -values[1])
