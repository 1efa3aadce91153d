"""
Trajectory container shared by the NDDE, difference and memory solvers
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd

from errors import RangeError, ValidationError
from models.history import HistorySegment


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled solution x(t_j) on t_0 < t_1 < ...

    For delay systems the first rows hold the initial history on [-tau, 0]
    and ``points_per_delay`` rows span one delay interval.
    """

    label: str
    h: float
    spacing: float
    times: np.ndarray
    states: np.ndarray
    tau: Optional[float] = None
    points_per_delay: Optional[int] = None
    breakpoints: Optional[np.ndarray] = None
    jumps: Optional[np.ndarray] = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for arr in (self.times, self.states, self.breakpoints, self.jumps):
            if arr is not None:
                arr.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    @property
    def start(self) -> float:
        return float(self.times[0])

    def index_of(self, t: float) -> Optional[int]:
        """Grid index of t, or None when t is not a grid time"""
        j = int(round((t - self.start) / self.spacing))
        if 0 <= j < len(self.times) and abs(self.times[j] - t) <= 1e-9 * max(1.0, abs(t)):
            return j
        return None

    def state_at(self, t: float) -> np.ndarray:
        """Linear interpolation of the stored states at time t"""
        tol = 1e-9 * max(1.0, abs(t))
        if t < self.start - tol or t > self.horizon + tol:
            raise RangeError(f"t={t} outside trajectory range [{self.start}, {self.horizon}]")
        j = self.index_of(t)
        if j is not None:
            return self.states[j].copy()
        pos = (t - self.start) / self.spacing
        lo = min(max(int(np.floor(pos)), 0), len(self.times) - 2)
        w = (t - self.times[lo]) / (self.times[lo + 1] - self.times[lo])
        return (1.0 - w) * self.states[lo] + w * self.states[lo + 1]

    def segment(self, t: float) -> HistorySegment:
        """The phase-space point x_t: theta -> x(t + theta) on [-tau, 0]"""
        if self.tau is None or self.points_per_delay is None:
            raise ValidationError(f"trajectory '{self.label}' carries no delay structure")
        M = self.points_per_delay
        j = self.index_of(t)
        if j is not None and j >= M:
            return HistorySegment(self.tau, self.states[j - M:j + 1], _trusted=True)
        if t - self.tau < self.start - 1e-9 * max(1.0, abs(t)):
            raise RangeError(f"segment at t={t} needs history before {self.start}")
        thetas = np.linspace(-self.tau, 0.0, M + 1)
        thetas[-1] = 0.0
        return HistorySegment(self.tau, np.array([self.state_at(t + th) for th in thetas]))

    def segment_times(self, start: float = 0.0) -> np.ndarray:
        """Grid indices j with t_j >= start whose segment x_{t_j} is stored"""
        M = self.points_per_delay or 0
        mask = self.times >= start - 1e-9 * max(1.0, abs(start))
        idx = np.flatnonzero(mask)
        return idx[idx >= M]

    def to_frame(self) -> pd.DataFrame:
        """CSV layout: t, x1..xn, breakpoint"""
        data = {"t": self.times}
        for k in range(self.dim):
            data[f"x{k + 1}"] = self.states[:, k]
        if self.breakpoints is not None:
            data["breakpoint"] = self.breakpoints.astype(int)
        return pd.DataFrame(data)
