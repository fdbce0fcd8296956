"""Warped products ``-dr^2 + theta(r)^2 |dy|^2`` over a flat fiber.

Two independent routes to the time separation live here:

* ``maximize_knots`` maximizes proper time over piecewise geodesic paths whose
  knots sit on a uniform ``r`` grid, freezing ``theta`` at segment midpoints,
  and doubles the knot count until the Richardson-extrapolated value settles.
* ``tau_quadrature`` integrates the first integral of the geodesic equation
  (conserved fiber momentum ``c``) with adaptive quadrature.

Maximizers never leave the fiber geodesic joining the endpoint projections, so
only the fiber distance ``delta`` matters.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate, optimize

from .errors import ConvergenceError, DomainError

PROFILES = ("one", "linear", "sinh", "sin")


def theta(profile: str, r):
    """Warping function ``theta(r)``; accepts scalars and arrays."""
    r = np.asarray(r, dtype=float)
    if profile == "one":
        out = np.ones_like(r)
    elif profile == "linear":
        out = r * 1.0
    elif profile == "sinh":
        out = np.sinh(r)
    elif profile == "sin":
        out = np.sin(r)
    else:
        raise DomainError(f"unknown warping profile {profile!r}")
    return float(out) if out.ndim == 0 else out


def domain(profile: str) -> tuple[float, float]:
    """Open interval of ``r`` on which ``theta`` is positive."""
    if profile == "one":
        return (-math.inf, math.inf)
    if profile in ("linear", "sinh"):
        return (0.0, math.inf)
    if profile == "sin":
        return (0.0, math.pi)
    raise DomainError(f"unknown warping profile {profile!r}")


def null_primitive(profile: str, r):
    """Antiderivative of ``1/theta``: the fiber distance a null ray covers."""
    r = np.asarray(r, dtype=float)
    if profile == "one":
        out = r * 1.0
    elif profile == "linear":
        out = np.log(r)
    elif profile == "sinh":
        out = np.log(np.tanh(r / 2.0))
    elif profile == "sin":
        out = np.log(np.tan(r / 2.0))
    else:
        raise DomainError(f"unknown warping profile {profile!r}")
    return float(out) if out.ndim == 0 else out


def horizon(profile: str, r0: float, r1: float) -> float:
    """Largest fiber distance reachable causally from ``r0`` to ``r1``."""
    return null_primitive(profile, r1) - null_primitive(profile, r0)


def _solve_momentum(delta_of_c, target: float) -> float:
    hi = 1.0
    for _ in range(200):
        if delta_of_c(hi) > target:
            break
        hi *= 2.0
    else:
        raise ConvergenceError("could not bracket the fiber momentum")
    return optimize.brentq(lambda c: delta_of_c(c) - target, 0.0, hi,
                           xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)


def _segment_value(profile: str, r0: float, r1: float, delta: float, segments: int) -> float:
    edges = np.linspace(r0, r1, segments + 1)
    dr = np.diff(edges)
    th = theta(profile, 0.5 * (edges[1:] + edges[:-1]))
    if delta >= float(np.sum(dr / th)):
        return 0.0

    def spread(c):
        return float(np.sum(dr * c / (th * np.sqrt(th * th + c * c))))

    c = _solve_momentum(spread, delta)
    return float(np.sum(dr * th / np.sqrt(th * th + c * c)))


def maximize_knots(profile: str, r0: float, r1: float, delta: float, *,
                   initial_knots: int = 4, atol: float = 1e-7,
                   max_segments: int = 5 * 2 ** 16) -> float:
    """Maximal proper time from ``(r0, y0)`` to ``(r1, y1)`` with fiber distance ``delta``.

    Piecewise geodesic refinement: ``initial_knots`` interior knots, doubling
    the segment count until successive Richardson values differ by < ``atol``.
    """
    if r1 <= r0:
        return 0.0
    if delta <= 0.0:
        return r1 - r0
    if delta >= horizon(profile, r0, r1):
        return 0.0
    segments = initial_knots + 1
    prev_raw = _segment_value(profile, r0, r1, delta, segments)
    prev_extrap = None
    while segments <= max_segments:
        segments *= 2
        raw = _segment_value(profile, r0, r1, delta, segments)
        # midpoint freezing has an O(h^2) error, so one Richardson step removes it
        extrap = (4.0 * raw - prev_raw) / 3.0
        if prev_extrap is not None and abs(extrap - prev_extrap) < atol:
            return max(extrap, 0.0)
        prev_raw, prev_extrap = raw, extrap
    raise ConvergenceError(
        f"knot refinement did not settle below {atol} with {max_segments} segments")


def _momentum_quadrature(profile: str, r0: float, r1: float, delta: float) -> float:
    def spread(c):
        val, _ = integrate.quad(lambda r: c / (theta(profile, r) * math.hypot(theta(profile, r), c)),
                                r0, r1, epsabs=1e-14, epsrel=1e-13, limit=200)
        return val

    return _solve_momentum(spread, delta)


def _proper_time(profile: str, r0: float, r1: float, c: float) -> float:
    val, _ = integrate.quad(lambda r: theta(profile, r) / math.hypot(theta(profile, r), c),
                            r0, r1, epsabs=1e-14, epsrel=1e-13, limit=200)
    return val


def _fiber_travel(profile: str, r0: float, r1: float, c: float) -> float:
    val, _ = integrate.quad(lambda r: c / (theta(profile, r) * math.hypot(theta(profile, r), c)),
                            r0, r1, epsabs=1e-14, epsrel=1e-13, limit=200)
    return val


def tau_quadrature(profile: str, r0: float, r1: float, delta: float) -> float:
    """Same quantity as ``maximize_knots`` through the conserved fiber momentum."""
    if r1 <= r0:
        return 0.0
    if delta <= 0.0:
        return r1 - r0
    if delta >= horizon(profile, r0, r1):
        return 0.0
    c = _momentum_quadrature(profile, r0, r1, delta)
    return _proper_time(profile, r0, r1, c)


def geodesic_fraction(profile: str, r0: float, r1: float, delta: float, t: float):
    """Return ``(r, fiber_travel)`` of the point at proper-time fraction ``t``."""
    if delta <= 0.0:
        return r0 + t * (r1 - r0), 0.0
    c = _momentum_quadrature(profile, r0, r1, delta)
    total = _proper_time(profile, r0, r1, c)
    if t <= 0.0:
        return r0, 0.0
    if t >= 1.0:
        return r1, delta
    target = t * total
    r = optimize.brentq(lambda s: _proper_time(profile, r0, s, c) - target, r0, r1,
                        xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return r, _fiber_travel(profile, r0, r, c)
