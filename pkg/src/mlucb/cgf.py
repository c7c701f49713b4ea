"""CGF upper bounds, their convex conjugates, and the tail bounds they imply.

A CGF upper bound ``psi`` is symmetric, convex and vanishes at zero. Its
Fenchel-Legendre transform ``psi*(eps) = sup_lam (eps*lam - psi(lam))`` gives
the two-sided tail bound ``P(|X - EX| >= t) <= 2 exp(-psi*(t))``.

For an estimator trained on ``n`` samples whose error decays at rate ``s`` we
use ``psi*_n(eps) = n**s * psi*_1(eps)``; with ``s = 1`` this is the exact
sample-mean identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _io
from .errors import DomainError, InvariantError, TruncatedSupremumError

DEFAULT_LAMBDA_MAX = 1e4
_GRID_SIZE = 4001
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class CgfBound:
    """Symmetric convex upper bound on a cumulant generating function.

    Build with :meth:`gaussian` or :meth:`tabulated`. ``evaluate`` accepts
    scalars or arrays.
    """

    family: str
    sigma2: float | None = None
    lambdas: np.ndarray | None = field(default=None, repr=False)
    psis: np.ndarray | None = field(default=None, repr=False)

    @classmethod
    def gaussian(cls, sigma2: float) -> "CgfBound":
        if not sigma2 > 0 or not math.isfinite(sigma2):
            raise DomainError(f"sigma2 must be positive and finite, got {sigma2}")
        return cls("gaussian", sigma2=float(sigma2))

    @classmethod
    def tabulated(cls, lambdas, psis) -> "CgfBound":
        """Piecewise-linear bound through ``(lambda, psi)`` pairs with lambda >= 0.

        The table must start at (0, 0), be strictly increasing in lambda and
        convex. The bound is extended to negative lambda by symmetry and is
        +inf beyond the last tabulated lambda.
        """
        lam = np.asarray(lambdas, dtype=float).ravel()
        psi = np.asarray(psis, dtype=float).ravel()
        if lam.shape != psi.shape or lam.size < 2:
            raise DomainError("need at least two (lambda, psi) pairs of equal length")
        if not (np.all(np.isfinite(lam)) and np.all(np.isfinite(psi))):
            raise DomainError("table entries must be finite")
        if lam[0] != 0.0 or psi[0] != 0.0:
            raise InvariantError("tabulated CGF bound must start at (0, 0)")
        if np.any(np.diff(lam) <= 0):
            raise InvariantError("lambda grid must be strictly increasing")
        slopes = np.diff(psi) / np.diff(lam)
        if np.any(np.diff(slopes) < -1e-12 * np.maximum(1.0, np.abs(slopes[1:]))):
            raise InvariantError("tabulated CGF bound is not convex")
        if slopes[0] < -1e-12:
            raise InvariantError("symmetric convex bound must be nondecreasing on lambda >= 0")
        lam.setflags(write=False)
        psi.setflags(write=False)
        return cls("tabulated", lambdas=lam, psis=psi)

    @property
    def lambda_max(self) -> float:
        if self.family == "tabulated":
            return float(self.lambdas[-1])
        return math.inf

    def evaluate(self, lam):
        a = np.abs(np.asarray(lam, dtype=float))
        if self.family == "gaussian":
            out = 0.5 * self.sigma2 * a * a
        else:
            out = np.where(a <= self.lambdas[-1], np.interp(a, self.lambdas, self.psis), np.inf)
        return float(out) if out.ndim == 0 else out

    __call__ = evaluate

    def to_csv(self, path) -> None:
        if self.family != "tabulated":
            raise DomainError("only tabulated bounds serialize to CSV")
        _io.write_csv(path, ["lambda", "psi"], zip(self.lambdas, self.psis))

    @classmethod
    def from_csv(cls, path) -> "CgfBound":
        data = _io.read_numeric_csv(path, ["lambda", "psi"])
        return cls.tabulated(data[:, 0], data[:, 1])


def _golden_max(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-12):
    """Maximise a unimodal ``f`` on [lo, hi]; returns (argmax, max)."""
    c = hi - _GOLDEN * (hi - lo)
    d = lo + _GOLDEN * (hi - lo)
    fc, fd = f(c), f(d)
    for _ in range(400):
        if hi - lo <= max(tol, 4 * np.finfo(float).eps * abs(hi)):
            break
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - _GOLDEN * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _GOLDEN * (hi - lo)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def legendre_transform(bound: CgfBound, epsilon: float, lambda_max: float = DEFAULT_LAMBDA_MAX) -> float:
    """Numerical ``sup_{lam >= 0} (epsilon*lam - psi(lam))``.

    A geometric grid on [1e-6, lambda_max] (plus lambda = 0) locates the
    maximiser, then golden-section search refines it to 1e-12 in lambda.

    Raises:
        TruncatedSupremumError: the maximiser sits on the upper end of the
            search interval, so the returned value would be a lower bound.
    """
    if not epsilon >= 0 or not math.isfinite(epsilon):
        raise DomainError(f"epsilon must be a finite nonnegative number, got {epsilon}")
    if epsilon == 0:
        return 0.0
    top = min(float(lambda_max), bound.lambda_max)
    grid = np.concatenate(([0.0], np.geomspace(min(1e-6, top / 2), top, _GRID_SIZE)))
    vals = epsilon * grid - bound.evaluate(grid)
    k = int(np.argmax(vals))
    if k == grid.size - 1:
        raise TruncatedSupremumError(
            f"supremum for epsilon={epsilon} attained at lambda_max={top}; widen lambda_max",
            value=float(vals[k]),
            argmax=float(grid[k]),
        )
    lo, hi = grid[max(k - 1, 0)], grid[k + 1]
    _, best = _golden_max(lambda lam: epsilon * lam - bound.evaluate(lam), lo, hi)
    return max(float(best), float(vals[k]), 0.0)


@dataclass(frozen=True)
class ConjugateBound:
    """``eps -> n**s * base(eps)``, the conjugate after ``n`` samples at rate ``s``.

    ``base_inverse`` is the analytic inverse of ``base`` when one exists;
    otherwise :func:`conjugate_inverse` falls back to bisection.
    """

    base: Callable[[float], float]
    base_inverse: Callable[[float], float] | None = None
    sample_size: int = 1
    rate: float = 1.0
    sigma2: float | None = None

    def __post_init__(self):
        if self.sample_size < 1:
            raise DomainError(f"sample size must be >= 1, got {self.sample_size}")
        if not self.rate > 0:
            raise DomainError(f"decay rate must be positive, got {self.rate}")

    @property
    def scale(self) -> float:
        return float(self.sample_size) ** self.rate

    def evaluate(self, epsilon: float) -> float:
        if not epsilon >= 0:
            raise DomainError(f"epsilon must be nonnegative, got {epsilon}")
        return self.scale * self.base(epsilon)

    __call__ = evaluate

    def inverse(self, y: float) -> float:
        return conjugate_inverse(self, y)


def gaussian_conjugate(sigma2: float) -> ConjugateBound:
    """Closed-form conjugate ``eps**2 / (2 sigma2)`` with inverse ``sqrt(2 sigma2 y)``."""
    if not sigma2 > 0 or not math.isfinite(sigma2):
        raise DomainError(f"sigma2 must be positive and finite, got {sigma2}")
    sigma2 = float(sigma2)
    return ConjugateBound(
        base=lambda eps: eps * eps / (2.0 * sigma2),
        base_inverse=lambda y: math.sqrt(2.0 * sigma2 * y),
        sigma2=sigma2,
    )


def numerical_conjugate(bound: CgfBound, lambda_max: float = DEFAULT_LAMBDA_MAX) -> ConjugateBound:
    """Conjugate of an arbitrary bound, evaluated by :func:`legendre_transform`."""
    if bound.family == "gaussian":
        return gaussian_conjugate(bound.sigma2)
    return ConjugateBound(base=lambda eps: legendre_transform(bound, eps, lambda_max))


def scale_by_samples(base: ConjugateBound, n: int, s: float) -> ConjugateBound:
    """Rescale a one-sample conjugate to ``n`` samples at decay rate ``s``."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if not s > 0:
        raise DomainError(f"s must be positive, got {s}")
    return ConjugateBound(
        base=lambda eps: base.scale * base.base(eps),
        base_inverse=(None if base.base_inverse is None else lambda y: base.base_inverse(y / base.scale)),
        sample_size=int(n),
        rate=float(s),
        sigma2=base.sigma2,
    )


def _bisect_inverse(conj: ConjugateBound, y: float) -> float:
    tol = 1e-9 * max(1.0, y)
    f0 = conj.evaluate(0.0)
    if y < f0 - tol:
        raise DomainError(f"y={y} lies below psi*(0)={f0}")
    lo, flo = 0.0, f0
    hi = 1.0
    fhi = conj.evaluate(hi)
    while fhi < y:
        if fhi < flo:
            raise InvariantError(f"conjugate decreases between eps={lo} and eps={hi}")
        lo, flo = hi, fhi
        hi *= 2.0
        if hi > 1e300:
            raise InvariantError("conjugate never reaches the requested level")
        fhi = conj.evaluate(hi)
    if abs(fhi - y) <= tol:
        return hi
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        fmid = conj.evaluate(mid)
        if fmid < flo - tol or fmid > fhi + tol:
            raise InvariantError(f"conjugate is not monotone near eps={mid}")
        if abs(fmid - y) <= tol:
            return mid
        if fmid < y:
            lo, flo = mid, fmid
        else:
            hi, fhi = mid, fmid
        if hi - lo <= 4 * np.finfo(float).eps * hi:
            break
    raise InvariantError(f"conjugate jumps across level y={y} near eps={lo}")


def conjugate_inverse(conj: ConjugateBound, y: float) -> float:
    """Smallest ``eps >= 0`` with ``conj(eps) = y``.

    Uses the analytic inverse when the family has one, otherwise bisection on
    a doubling bracket until the residual is within ``1e-9 * max(1, y)``.
    """
    if not y >= 0 or not math.isfinite(y):
        raise DomainError(f"y must be a finite nonnegative number, got {y}")
    if y == 0:
        return 0.0
    if conj.base_inverse is not None:
        return conj.base_inverse(y / conj.scale)
    return _bisect_inverse(conj, y)


def concentration_bound(conj: ConjugateBound, t: float) -> float:
    """``min(1, 2 exp(-psi*(t)))``, a bound on ``P(|X - EX| >= t)``."""
    if not t >= 0:
        raise DomainError(f"t must be nonnegative, got {t}")
    return min(1.0, 2.0 * math.exp(-conj.evaluate(t)))
