"""Sample memory and local linear regression (LLR) for the rate field.

Each observed (position, value) pair is memorized once; queries fit an
affine model a'p + c on the N nearest stored neighbors and evaluate it at
the query point.  Straight-line trajectories make neighbor positions
collinear, in which case a smaller affinely independent subset is used when
one exists, and otherwise the first nearest neighbor's value is returned.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class EstimatorNotReady(RuntimeError):
    """Raised when an estimate is requested from an empty store."""


@dataclass
class LlrConfig:
    n_neighbors: int = 1
    dedupe_tol: float = 1e-9
    rank_tol: float = 1e-8  # relative singular-value threshold for affine rank

    def __post_init__(self):
        if self.n_neighbors < 1:
            raise ValueError("N must be >= 1")


class SampleStore:
    """Ordered memory of (position, value) samples with near-duplicate replacement."""

    def __init__(self, dedupe_tol: float = 1e-9):
        self.dedupe_tol = dedupe_tol
        self._positions = np.zeros((0, 2))
        self._values = np.zeros(0)

    def __len__(self) -> int:
        return self._values.size

    @property
    def positions(self) -> np.ndarray:
        return self._positions

    @property
    def values(self) -> np.ndarray:
        return self._values

    def add(self, position, value: float) -> None:
        """Append a sample; a position already seen (within tolerance) is updated."""
        if value < 0:
            raise ValueError("stored values must be nonnegative")
        p = np.asarray(position, dtype=float).reshape(2)
        if len(self):
            d = np.linalg.norm(self._positions - p, axis=1)
            hit = int(np.argmin(d))
            if d[hit] < self.dedupe_tol:
                self._values[hit] = value
                return
        self._positions = np.vstack([self._positions, p])
        self._values = np.append(self._values, value)

    def nearest(self, query, n: int) -> np.ndarray:
        """Indices of the n nearest samples; distance ties keep insertion order."""
        if not len(self):
            raise EstimatorNotReady("sample store is empty")
        q = np.asarray(query, dtype=float).reshape(2)
        d = np.linalg.norm(self._positions - q, axis=1)
        order = np.argsort(d, kind="stable")
        return order[: min(n, len(self))]


def add_sample(store: SampleStore, position, value: float) -> SampleStore:
    store.add(position, value)
    return store


def _affine_fit(positions: np.ndarray, values: np.ndarray) -> tuple[np.ndarray, float]:
    A = np.hstack([positions, np.ones((positions.shape[0], 1))])
    coef, *_ = np.linalg.lstsq(A, values, rcond=None)
    return coef[:2], float(coef[2])


def _affine_rank(positions: np.ndarray, rank_tol: float) -> int:
    centered = positions - positions.mean(axis=0)
    s = np.linalg.svd(centered, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rank_tol * s[0]))


def _independent_subset(store: SampleStore, neighbor_idx: np.ndarray, rank_tol: float):
    """Greedy scan by distance keeping samples that raise the affine rank.

    Returns the kept indices when they span a plane (three points, affine
    rank 2), else None.
    """
    kept: list[int] = []
    for idx in neighbor_idx:
        candidate = kept + [int(idx)]
        pts = store.positions[candidate]
        if _affine_rank(pts, rank_tol) >= len(candidate) - 1 or len(candidate) == 1:
            kept = candidate
        if len(kept) == 3:
            return np.array(kept)
    return None


def estimate(store: SampleStore, query, config: LlrConfig) -> float:
    """LLR estimate at ``query``: affine least squares on the N nearest samples.

    Degenerate neighbor geometries fall back to an affinely independent
    subset, then to the first nearest neighbor's value.
    """
    idx = store.nearest(query, config.n_neighbors)
    if config.n_neighbors == 1 or len(idx) == 1:
        return float(store.values[idx[0]])
    pts = store.positions[idx]
    if _affine_rank(pts, config.rank_tol) >= 2:
        alpha, beta = _affine_fit(pts, store.values[idx])
        return float(alpha @ np.asarray(query, dtype=float) + beta)
    sub = _independent_subset(store, store.nearest(query, len(store)), config.rank_tol)
    if sub is not None:
        alpha, beta = _affine_fit(store.positions[sub], store.values[sub])
        return float(alpha @ np.asarray(query, dtype=float) + beta)
    return float(store.values[idx[0]])


def estimate_gradient(store: SampleStore, query, config: LlrConfig) -> np.ndarray | None:
    """Gradient (the plane coefficients) of the LLR fit, or None when the
    neighbors are affinely dependent and no independent subset exists."""
    if config.n_neighbors < 3:
        raise ValueError("gradient estimation needs N >= 3 neighbors")
    idx = store.nearest(query, config.n_neighbors)
    if len(idx) < 3:
        return None
    pts = store.positions[idx]
    if _affine_rank(pts, config.rank_tol) >= 2:
        alpha, _ = _affine_fit(pts, store.values[idx])
        return alpha
    return None
