"""Shot-level estimators and jackknife errors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractError


@dataclass
class ShotSet:
    """R x N matrix of measured bits (1 = +1 outcome along ``axis``)."""

    shots: np.ndarray
    axis: str = "x"
    time: float | None = None

    def __post_init__(self):
        s = np.asarray(self.shots)
        if s.ndim != 2:
            raise ContractError("shots must be a 2-d (repetitions x ions) array")
        if s.shape[0] < 2:
            raise ContractError("need at least 2 repetitions")
        if not np.all((s == 0) | (s == 1)):
            raise ContractError("shot entries must be 0 or 1")
        self.shots = s.astype(np.int8)

    @classmethod
    def unchecked(cls, shots, axis="x", time=None):
        """Build without validation; used for leave-one-out subsets of a valid set."""
        obj = cls.__new__(cls)
        obj.shots, obj.axis, obj.time = shots, axis, time
        return obj

    @property
    def repetitions(self):
        return self.shots.shape[0]

    @property
    def n(self):
        return self.shots.shape[1]

    def magnetization(self):
        """Per-shot total spin s = sum_i (2 b_i - 1) / 2."""
        return (2.0 * self.shots - 1.0).sum(axis=1) / 2.0


def _as_shots(x):
    return x if isinstance(x, ShotSet) else ShotSet(x)


def correlator_estimate(shots):
    """mean(s^2) - mean(s)^2 of the per-shot total spin."""
    s = _as_shots(shots).magnetization()
    return float(np.mean(s**2) - np.mean(s) ** 2)


def jackknife_error(shots, estimator=correlator_estimate, mode="standard"):
    """Leave-one-out standard error of ``estimator``.

    ``mode="standard"`` uses SE^2 = (R-1)/R sum (theta_i - mean)^2; ``"raw"``
    reports the plain variance of the leave-one-out estimates, sum / R.
    """
    shots = _as_shots(shots)
    r = shots.repetitions
    data = shots.shots
    theta = np.empty(r)
    keep = np.ones(r, dtype=bool)
    for i in range(r):
        keep[i] = False
        theta[i] = estimator(ShotSet.unchecked(data[keep], shots.axis, shots.time))
        keep[i] = True
    dev2 = np.sum((theta - theta.mean()) ** 2)
    if mode == "standard":
        return float(np.sqrt((r - 1) / r * dev2))
    if mode == "raw":
        return float(np.sqrt(dev2 / r))
    raise ContractError(f"unknown jackknife mode {mode!r}")


def correlator_jackknife_fast(shots, mode="standard"):
    """Same result as :func:`jackknife_error` with the default estimator,
    using running sums instead of R re-evaluations."""
    shots = _as_shots(shots)
    s = shots.magnetization()
    r = s.size
    s1, s2 = s.sum(), (s**2).sum()
    m1 = (s1 - s) / (r - 1)
    m2 = (s2 - s**2) / (r - 1)
    theta = m2 - m1**2
    dev2 = np.sum((theta - theta.mean()) ** 2)
    if mode == "standard":
        return float(np.sqrt((r - 1) / r * dev2))
    if mode == "raw":
        return float(np.sqrt(dev2 / r))
    raise ContractError(f"unknown jackknife mode {mode!r}")
