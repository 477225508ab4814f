"""Nodal field snapshots and uniformly time-stamped trajectories."""

from dataclasses import dataclass, field

import numpy as np

RANK_SHAPES = {"scalar": 0, "vector": 1, "tensor": 2}


@dataclass
class FieldSnapshot:
    """Nodal coefficients of one field on one space at one time.

    values shape: (ndof,) scalar, (ndof, d) vector, (ndof, d, d) tensor.
    """

    space: object
    rank: str
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expect = self.space.ndof
        if self.values.shape[0] != expect:
            raise ValueError(
                f"coefficient count {self.values.shape[0]} does not match space ({expect})"
            )
        if self.values.ndim != RANK_SHAPES[self.rank] + 1:
            raise ValueError(f"values shape {self.values.shape} inconsistent with rank {self.rank}")

    def copy(self):
        return FieldSnapshot(self.space, self.rank, self.values.copy(), self.time)


@dataclass
class Trajectory:
    """Time-ordered nodal values with uniform spacing.

    values shape: (nt, ndof, ...) matching the snapshot layout.
    """

    space: object
    rank: str
    values: np.ndarray
    t0: float = 0.0
    dt: float = 1.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)

    @property
    def nt(self):
        return self.values.shape[0]

    @property
    def times(self):
        return self.t0 + self.dt * np.arange(self.nt)

    def snapshot(self, i):
        return FieldSnapshot(self.space, self.rank, self.values[i], self.times[i])

    def time_derivative(self):
        """Centered-difference time derivative (one-sided at the ends)."""
        vt = np.gradient(self.values, self.dt, axis=0, edge_order=2)
        return Trajectory(self.space, self.rank, vt, self.t0, self.dt)

    def second_time_derivative(self):
        return self.time_derivative().time_derivative()

    def check_grid(self, other):
        if self.nt != other.nt or abs(self.dt - other.dt) > 1e-14 or abs(self.t0 - other.t0) > 1e-14:
            raise ValueError("trajectories do not share a time grid")


def constant_trajectory(space, rank, values, nt, t0, dt):
    vals = np.broadcast_to(values, (nt,) + np.asarray(values).shape).copy()
    return Trajectory(space, rank, vals, t0, dt)
