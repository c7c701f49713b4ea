"""Power-law learning curves ``MSE(n) = C * n**(-s)`` fitted in log-log space."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import _io
from .errors import DomainError, InsufficientDataError


@dataclass(frozen=True)
class LearningCurve:
    """Validation MSE recorded at increasing training-sample counts."""

    n: np.ndarray
    mse: np.ndarray

    def __init__(self, n, mse):
        n = np.asarray(n, dtype=float).ravel()
        mse = np.asarray(mse, dtype=float).ravel()
        if n.shape != mse.shape:
            raise DomainError("n and mse must have equal length")
        if np.any(n < 1):
            raise DomainError("sample counts must be >= 1")
        if np.any(np.diff(n) <= 0):
            raise DomainError("sample counts must be strictly increasing")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "mse", mse)

    @classmethod
    def from_points(cls, points) -> "LearningCurve":
        points = list(points)
        return cls([p[0] for p in points], [p[1] for p in points])

    def __len__(self):
        return self.n.size

    def tail(self, fraction: float) -> "LearningCurve":
        if not 0 < fraction <= 1:
            raise DomainError(f"tail fraction must lie in (0, 1], got {fraction}")
        k = math.ceil(fraction * len(self) - 1e-12)
        return LearningCurve(self.n[len(self) - k:], self.mse[len(self) - k:])

    def to_csv(self, path) -> None:
        _io.write_csv(path, ["n", "mse"], zip(self.n.astype(int), self.mse))

    @classmethod
    def from_csv(cls, path) -> "LearningCurve":
        data = _io.read_numeric_csv(path, ["n", "mse"])
        return cls(data[:, 0], data[:, 1])


@dataclass(frozen=True)
class PowerLawFit:
    C: float
    s: float
    r_squared: float
    n_points: int

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d) -> "PowerLawFit":
        return cls(C=float(d["C"]), s=float(d["s"]), r_squared=float(d["r_squared"]), n_points=int(d["n_points"]))


def fit_power_law(curve: LearningCurve) -> PowerLawFit:
    """Ordinary least squares of log(mse) on log(n); ``s`` is minus the slope."""
    if np.any(curve.mse <= 0) or not np.all(np.isfinite(curve.mse)):
        raise DomainError("all mse values must be positive and finite")
    if np.unique(curve.n).size < 2:
        raise InsufficientDataError(f"need at least 2 distinct sample counts, got {np.unique(curve.n).size}")
    x = np.log(curve.n)
    y = np.log(curve.mse)
    xm, ym = x.mean(), y.mean()
    dx, dy = x - xm, y - ym
    slope = float(np.dot(dx, dy) / np.dot(dx, dx))
    intercept = float(ym - slope * xm)
    resid = y - (intercept + slope * x)
    sst = float(np.dot(dy, dy))
    ssr = float(np.dot(resid, resid))
    r2 = 1.0 if sst <= 1e-300 else min(1.0, max(0.0, 1.0 - ssr / sst))
    return PowerLawFit(C=math.exp(intercept), s=-slope, r_squared=r2, n_points=len(curve))


def fit_stable_regime(curve: LearningCurve, tail_fraction: float = 0.2) -> PowerLawFit:
    """Fit only the last ``ceil(tail_fraction * len(curve))`` recorded points."""
    return fit_power_law(curve.tail(tail_fraction))


def predict_mse(fit: PowerLawFit, n) -> float:
    if np.any(np.asarray(n) < 1):
        raise DomainError("n must be >= 1")
    return fit.C * np.power(n, -fit.s, dtype=float)


def mse_to_sigma(fit: PowerLawFit, n) -> float:
    """Estimator standard deviation implied by the fitted curve at ``n`` samples."""
    return np.sqrt(predict_mse(fit, n))
