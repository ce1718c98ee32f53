"""Multilinear value-function approximation over per-dimension grids.

The value function is stored as one parameter per grid point and evaluated
by multilinear (finite-element) interpolation, so a query touches at most
2^D points with nonnegative weights summing to one.  A :class:`Subgrid`
names the local block of points that the learning controller sweeps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class ValueGrid:
    """Per-dimension sorted grid axes plus the parameter array theta.

    ``theta`` has shape ``tuple(len(axis) for axis in axes)``; entry ``i``
    is the value at the grid point with per-dimension indices ``i``.
    """

    axes: tuple[np.ndarray, ...]
    theta: np.ndarray

    def __post_init__(self):
        self.axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        for a in self.axes:
            if a.size > 1 and not np.all(np.diff(a) > 0):
                raise ValueError("grid axes must be strictly increasing")
        self.theta = np.asarray(self.theta, dtype=float)
        if self.theta.shape != self.shape:
            raise ValueError(f"theta shape {self.theta.shape} does not match grid {self.shape}")

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(a.size for a in self.axes)

    @staticmethod
    def zeros(axes) -> "ValueGrid":
        axes = tuple(np.asarray(a, dtype=float) for a in axes)
        return ValueGrid(axes=axes, theta=np.zeros(tuple(a.size for a in axes)))


@dataclass(frozen=True)
class Subgrid:
    """Inclusive per-dimension index ranges [lo_m, hi_m] into a ValueGrid."""

    lo: tuple[int, ...]
    hi: tuple[int, ...]

    def slices(self) -> tuple[slice, ...]:
        return tuple(slice(l, h + 1) for l, h in zip(self.lo, self.hi))

    def size(self) -> int:
        return int(np.prod([h - l + 1 for l, h in zip(self.lo, self.hi)]))


def locate(axis: np.ndarray, q):
    """Cell index and fractional offset for query values, clamped to the axis span.

    Returns ``(idx, frac)`` with ``axis[idx] + frac * (axis[idx+1] - axis[idx])``
    equal to the clamped query; singleton axes yield (0, 0).
    """
    q = np.asarray(q, dtype=float)
    if axis.size == 1:
        return np.zeros_like(q, dtype=int), np.zeros_like(q)
    qc = np.clip(q, axis[0], axis[-1])
    idx = np.clip(np.searchsorted(axis, qc, side="right") - 1, 0, axis.size - 2)
    frac = (qc - axis[idx]) / (axis[idx + 1] - axis[idx])
    return idx, frac


def interpolate(grid: ValueGrid, state) -> float:
    """Multilinear interpolation of theta at one state vector (clamped to the box)."""
    x = np.asarray(state, dtype=float)
    if x.size != len(grid.axes):
        raise ValueError(f"state has {x.size} components, grid has {len(grid.axes)}")
    idxs, fracs = zip(*(locate(a, x[m]) for m, a in enumerate(grid.axes)))
    value = 0.0
    ndim = len(grid.axes)
    for corner in range(1 << ndim):
        w = 1.0
        pos = []
        for m in range(ndim):
            if corner >> m & 1:
                w *= fracs[m]
                pos.append(int(idxs[m]) + 1)
            else:
                w *= 1.0 - fracs[m]
                pos.append(int(idxs[m]))
        if w != 0.0:
            value += w * grid.theta[tuple(pos)]
    return float(value)


def interpolate_many(grid: ValueGrid, states: np.ndarray) -> np.ndarray:
    """Vectorized :func:`interpolate` for an (n, D) array of state vectors."""
    X = np.asarray(states, dtype=float)
    ndim = len(grid.axes)
    located = [locate(grid.axes[m], X[:, m]) for m in range(ndim)]
    value = np.zeros(X.shape[0])
    for corner in range(1 << ndim):
        w = np.ones(X.shape[0])
        pos = []
        for m in range(ndim):
            idx, frac = located[m]
            if corner >> m & 1:
                w = w * frac
                pos.append(idx + 1)
            else:
                w = w * (1.0 - frac)
                pos.append(idx)
        value += w * grid.theta[tuple(pos)]
    return value


def select_subgrid(grid: ValueGrid, state, r_dp: int) -> Subgrid:
    """Local block of grid points around a state, ``r_dp`` points to either side.

    The center on each dimension is the last grid point at or below the state
    (the first point when the state lies below the whole axis); the range is
    clamped to the axis bounds.
    """
    if r_dp < 1:
        raise ValueError("r_dp must be >= 1")
    x = np.asarray(state, dtype=float)
    lo, hi = [], []
    for m, axis in enumerate(grid.axes):
        center = int(np.clip(np.searchsorted(axis, x[m], side="right") - 1, 0, axis.size - 1))
        lo.append(max(0, center - r_dp))
        hi.append(min(axis.size - 1, center + r_dp))
    return Subgrid(lo=tuple(lo), hi=tuple(hi))
