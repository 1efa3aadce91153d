"""
History segments: sampled elements of C([-tau, 0], R^n)
"""
from __future__ import annotations

import logging
from typing import Callable, Sequence, Union

import numpy as np

from errors import RangeError, ValidationError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, Sequence[float], np.ndarray]


class HistorySegment:
    """A function on [-tau, 0] sampled on N+1 uniform nodes, linear in between"""

    __slots__ = ("tau", "dim", "nodes", "values", "step")

    def __init__(self, tau: float, values: np.ndarray, *, _trusted: bool = False):
        values = np.asarray(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if not _trusted:
            if not np.isfinite(tau) or tau <= 0:
                raise ValidationError(f"tau must be positive, got {tau}")
            if values.ndim != 2 or values.shape[0] < 3:
                raise ValidationError("a history segment needs at least 3 nodes (N >= 2)")
            bad = np.flatnonzero(~np.all(np.isfinite(values), axis=1))
            if bad.size:
                raise ValidationError(f"non-finite history value at node {int(bad[0])}")
        values = values.copy() if not _trusted else values
        values.setflags(write=False)

        n_intervals = values.shape[0] - 1
        nodes = np.linspace(-tau, 0.0, n_intervals + 1)
        nodes[0] = -tau
        nodes[-1] = 0.0
        nodes.setflags(write=False)

        self.tau = float(tau)
        self.dim = values.shape[1]
        self.values = values
        self.nodes = nodes
        self.step = self.tau / n_intervals

    # Construction

    @classmethod
    def from_function(
        cls,
        f: Callable[[float], ArrayLike],
        tau: float,
        N: int,
        dim: int,
    ) -> "HistorySegment":
        """Sample f on the uniform grid theta_j = -tau + j*tau/N.

        Args:
            f: map from [-tau, 0] to R^dim
            tau: delay length
            N: number of grid intervals (N+1 nodes)
            dim: state dimension

        Returns:
            HistorySegment with values[j] = f(theta_j)
        """
        if tau <= 0:
            raise ValidationError(f"tau must be positive, got {tau}")
        if N < 2:
            raise ValidationError(f"N must be at least 2, got {N}")
        nodes = np.linspace(-tau, 0.0, N + 1)
        nodes[-1] = 0.0
        values = np.empty((N + 1, dim))
        for j, theta in enumerate(nodes):
            value = np.atleast_1d(np.asarray(f(float(theta)), dtype=float))
            if value.shape != (dim,):
                raise ValidationError(
                    f"history function returned shape {value.shape} at node {j}, expected ({dim},)"
                )
            if not np.all(np.isfinite(value)):
                raise ValidationError(f"non-finite history value at node {j} (theta={theta})")
            values[j] = value
        return cls(tau, values)

    @classmethod
    def constant(cls, value: ArrayLike, tau: float, N: int) -> "HistorySegment":
        vec = np.atleast_1d(np.asarray(value, dtype=float))
        return cls(tau, np.tile(vec, (N + 1, 1)))

    @classmethod
    def from_values(cls, tau: float, values: ArrayLike) -> "HistorySegment":
        return cls(tau, np.asarray(values, dtype=float))

    # Evaluation

    def eval(self, theta: float) -> np.ndarray:
        """Piecewise-linear value at theta, exact at grid nodes"""
        half = 0.5 * self.step
        if theta < -self.tau - half or theta > half or not np.isfinite(theta):
            raise RangeError(f"theta={theta} outside [-{self.tau}, 0]")
        theta = min(max(theta, -self.tau), 0.0)
        idx = int(np.searchsorted(self.nodes, theta))
        if idx < len(self.nodes) and self.nodes[idx] == theta:
            return self.values[idx].copy()
        lo = max(idx - 1, 0)
        hi = min(idx, len(self.nodes) - 1)
        w = (theta - self.nodes[lo]) / (self.nodes[hi] - self.nodes[lo])
        return (1.0 - w) * self.values[lo] + w * self.values[hi]

    def sup_norm(self) -> float:
        """Grid maximum of the Euclidean norm"""
        return float(np.max(np.linalg.norm(self.values, axis=1)))

    def resample(self, N: int) -> "HistorySegment":
        if N == self.n_intervals:
            return self
        nodes = np.linspace(-self.tau, 0.0, N + 1)
        nodes[-1] = 0.0
        values = np.array([self.eval(float(theta)) for theta in nodes])
        return HistorySegment(self.tau, values)

    @property
    def n_intervals(self) -> int:
        return self.values.shape[0] - 1

    # Pointwise arithmetic

    def _check_compatible(self, other: "HistorySegment") -> None:
        if not isinstance(other, HistorySegment):
            raise ValidationError("segment arithmetic requires another HistorySegment")
        if abs(self.tau - other.tau) > 1e-12 * self.tau or self.values.shape != other.values.shape:
            raise ValidationError("segments live on different grids")

    def __add__(self, other: "HistorySegment") -> "HistorySegment":
        self._check_compatible(other)
        return HistorySegment(self.tau, self.values + other.values)

    def __sub__(self, other: "HistorySegment") -> "HistorySegment":
        self._check_compatible(other)
        return HistorySegment(self.tau, self.values - other.values)

    def __mul__(self, scalar: float) -> "HistorySegment":
        return HistorySegment(self.tau, float(scalar) * self.values)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"HistorySegment(tau={self.tau}, dim={self.dim}, N={self.n_intervals})"
