"""Time series of the heating function."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

NEGATIVE_TOL = 1e-12


@dataclass
class HeatingSeries:
    """``<n>`` sampled on an ascending grid of ``omega0 * t`` values.

    ``meta`` records where the numbers came from (band, phase mode, model
    parameters) and is written verbatim into CSV/JSON summaries.
    """

    times: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.atleast_1d(np.asarray(self.times, dtype=float))
        self.values = np.atleast_1d(np.asarray(self.values, dtype=float))
        if self.times.shape != self.values.shape or self.times.ndim != 1:
            raise ValueError("times and values must be 1-D arrays of equal length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly ascending")

    def check(self, *, negative_tol: float = NEGATIVE_TOL) -> None:
        """Raise ``ValueError`` if values are negative or nonzero at ``t = 0``."""
        if np.any(self.values < -negative_tol):
            raise ValueError(f"negative heating value {self.values.min():.3e}")
        at_zero = self.times == 0
        if np.any(at_zero) and np.any(np.abs(self.values[at_zero]) > negative_tol):
            raise ValueError("heating function must vanish at t = 0")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def peak(self) -> float:
        return float(np.max(self.values))

    def linear_fit(self, lo: float, hi: float) -> tuple[float, float, float]:
        """Least-squares line over ``lo <= omega0 t <= hi``: ``(slope, intercept, R^2)``."""
        sel = (self.times >= lo) & (self.times <= hi)
        if sel.sum() < 3:
            raise ValueError(f"fewer than 3 samples in [{lo}, {hi}]")
        t, y = self.times[sel], self.values[sel]
        slope, intercept = np.polyfit(t, y, 1)
        resid = y - (slope * t + intercept)
        ss_tot = float(np.sum((y - y.mean()) ** 2))
        r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
        return float(slope), float(intercept), r2

    def local_extrema(self) -> np.ndarray:
        """Indices of strict interior local maxima and minima."""
        y = self.values
        d = np.sign(np.diff(y))
        # drop flat steps so plateaus do not register as turning points
        nz = np.nonzero(d)[0]
        turns = nz[1:][d[nz[1:]] != d[nz[:-1]]]
        return turns


def default_time_grid(n: int = 600, t_max: float = 30.0) -> np.ndarray:
    """Uniform grid of ``n`` values of ``omega0 t`` over ``[0, t_max]``."""
    return np.linspace(0.0, t_max, n)
