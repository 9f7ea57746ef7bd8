"""Shared fixtures and trace-construction helpers."""
import math

import numpy as np
import pytest

from linksynth.kinematics import PathTrace


def synthetic_trace(foot_path, error_count=0, other_node=None):
    """Build a PathTrace by hand: node 4 is the foot tracing ``foot_path``,
    fixed nodes sit far above, and ``other_node`` (optional) adds a second
    moving node with the given per-step positions."""
    path = np.asarray(foot_path, dtype=float).reshape(-1, 2)
    K = len(path) + error_count
    n_nodes = 6 if other_node is not None else 5
    pos = np.full((n_nodes, K, 2), np.nan)
    pos[0] = (0.0, 1000.0)
    pos[1] = (-10.0, 1000.0)
    pos[2] = (10.0, 1000.0)
    pos[3] = (0.0, 1010.0)
    feasible = np.zeros(K, dtype=bool)
    feasible[:len(path)] = True
    pos[4, :len(path)] = path
    moving = [4]
    if other_node is not None:
        other = np.asarray(other_node, dtype=float).reshape(-1, 2)
        assert len(other) == len(path)
        pos[5, :len(path)] = other
        moving.append(5)
    return PathTrace(
        steps=2.0 * np.pi * np.arange(K) / K,
        node_positions=pos,
        feasible=feasible,
        moving_nodes=np.array(moving, dtype=np.int64),
        foot_index=4,
        foot_path=path.copy(),
        error_count=error_count,
    )


def rectangle_path(width=40.0, height=20.0, spacing=5.0):
    """Closed rectangle traversed counter-clockwise from the origin, bottom
    edge moving +x. Corners are included once each."""
    nx = int(round(width / spacing))
    ny = int(round(height / spacing))
    pts = []
    for i in range(nx + 1):
        pts.append((i * spacing, 0.0))
    for j in range(1, ny):
        pts.append((width, j * spacing))
    for i in range(nx, -1, -1):
        pts.append((i * spacing, height))
    for j in range(ny - 1, 0, -1):
        pts.append((0.0, j * spacing))
    return np.asarray(pts)


def circle_path(radius, n, center=(0.0, 0.0)):
    theta = 2.0 * np.pi * np.arange(n) / n
    return np.column_stack([center[0] + radius * np.cos(theta),
                            center[1] + radius * np.sin(theta)])


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
