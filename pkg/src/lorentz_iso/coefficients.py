"""Distortion coefficients and model profile functions.

All curvature checks in the package are phrased through the generalized sine
``sin_kappa``, the distortion coefficients ``sigma`` / ``tau_coeff`` and the
isoperimetric profile ``profile_D``. Everything here is a pure function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DomainError

__all__ = [
    "CurvatureParams",
    "sin_kappa",
    "sigma",
    "tau_coeff",
    "max_time",
    "profile_D",
]

# below this value of |kappa| * theta**2 the ratio is evaluated by its series
_SERIES_CUTOFF = 1e-8
PROFILE_ABS_TOL = 1e-10


@dataclass(frozen=True)
class CurvatureParams:
    """Timelike Ricci lower bound ``K`` and dimension bound ``N``."""

    K: float
    N: float

    def __post_init__(self):
        if not math.isfinite(self.K):
            raise DomainError(f"K must be finite, got {self.K}")
        if not (self.N >= 1):
            raise DomainError(f"N must be >= 1, got {self.N}")

    @property
    def kappa(self) -> float:
        """Curvature ``K/(N-1)`` of the one-dimensional model."""
        if self.N == 1:
            return 0.0 if self.K == 0 else math.copysign(math.inf, self.K)
        return self.K / (self.N - 1)

    def to_dict(self) -> dict:
        return {"K": self.K, "N": self.N}

    @classmethod
    def from_dict(cls, d) -> "CurvatureParams":
        return cls(K=float(d["K"]), N=float(d["N"]))


def sin_kappa(kappa: float, theta):
    """Generalized sine: ``sin(sqrt(k) x)/sqrt(k)``, ``x`` or ``sinh(sqrt(-k) x)/sqrt(-k)``.

    ``theta`` may be a scalar or an array; ``kappa`` is a scalar.
    """
    th = np.asarray(theta, dtype=float)
    if kappa > 0:
        r = math.sqrt(kappa)
        out = np.sin(r * th) / r
    elif kappa < 0:
        r = math.sqrt(-kappa)
        out = np.sinh(r * th) / r
    else:
        out = th * 1.0
    return float(out) if out.ndim == 0 else out


def _series_factor(u: float) -> float:
    # sin_kappa(x) / x as a series in u = kappa * x**2
    return 1.0 - u / 6.0 + u * u / 120.0 - u * u * u / 5040.0


def sigma(kappa: float, t: float, theta: float) -> float:
    """Distortion coefficient ``sin_kappa(t*theta) / sin_kappa(theta)``.

    Returns ``t`` when ``kappa*theta**2 == 0`` and ``math.inf`` when
    ``kappa*theta**2 >= pi**2``.
    """
    if not (0.0 <= t <= 1.0):
        raise DomainError(f"t must lie in [0, 1], got {t}")
    if theta < 0:
        raise DomainError(f"theta must be >= 0, got {theta}")
    u = kappa * theta * theta
    if u >= math.pi ** 2:
        return math.inf
    if u == 0.0:
        return float(t)
    if abs(u) < _SERIES_CUTOFF:
        return t * _series_factor(u * t * t) / _series_factor(u)
    return sin_kappa(kappa, t * theta) / sin_kappa(kappa, theta)


def tau_coeff(params: CurvatureParams, t: float, theta: float) -> float:
    """Volume distortion coefficient ``t**(1/N) * sigma_{K/N}(t, theta)**((N-1)/N)``."""
    N = params.N
    s = sigma(params.K / N, t, theta)
    if math.isinf(s):
        return math.inf
    return t ** (1.0 / N) * s ** ((N - 1.0) / N)


def max_time(params: CurvatureParams) -> float:
    """First positive zero of ``sin_{K/(N-1)}``; infinite unless ``K > 0``."""
    if params.K <= 0:
        return math.inf
    return math.pi * math.sqrt((params.N - 1.0) / params.K)


def profile_D(params: CurvatureParams, t: float, *, closed_form: bool = True) -> float:
    """Isoperimetric profile ``int_0^t s(u)^(N-1) du / s(t)^(N-1)``, ``s = sin_{K/(N-1)}``.

    For ``K == 0`` the closed form ``t/N`` is used unless ``closed_form`` is
    False, in which case the quadrature path runs for every ``K``.
    The integral is evaluated on the rescaled form ``t * int_0^1 sigma(r)^(N-1) dr``
    so the integrand stays in ``[0, 1]``.
    """
    if not (t > 0):
        raise DomainError(f"profile_D needs t > 0, got {t}")
    T = max_time(params)
    if t >= T:
        raise DomainError(f"t={t} outside (0, {T})")
    N = params.N
    if N == 1:
        return float(t)
    if params.K == 0 and closed_form:
        return t / N
    kappa = params.kappa
    st = sin_kappa(kappa, t)

    def integrand(r):
        return (sin_kappa(kappa, r * t) / st) ** (N - 1.0)

    # the rescaled integral is O(1), so absolute tolerance / t bounds the final error
    val, _ = integrate.quad(integrand, 0.0, 1.0, epsabs=PROFILE_ABS_TOL / max(t, 1.0),
                            epsrel=1e-13, limit=200)
    return t * val
