"""Analytic model spacetimes.

Charts and coordinate order (time coordinate last except in the black hole):

* ``minkowski``: ``(x_1, ..., x_n, t)``, metric ``|dx|^2 - dt^2``.
* ``cone``: a convex conical region of Minkowski space, same coordinates.
  Either ``params["a"]`` (the truncated cone ``|x| <= a, t >= |x| sqrt(1+a^2)/a``)
  or ``params["aperture"]`` (``t^2 >= aperture |x|^2, t >= 0``, aperture > 1).
* ``warped``: ``(y_1, ..., y_n, r)``, metric ``-dr^2 + theta(r)^2 |dy|^2`` with a
  flat ``line`` fiber or, for ``dim == 2``, a ``circle`` fiber of given radius
  whose coordinate is an angle.
* ``schwarzschild_interior``: ``(t, r, theta, phi)`` with ``0 < r < 2m``; the
  time orientation makes ``-d/dr`` future directed.

Array routines take points as ``(..., dim)`` arrays and broadcast.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import optimize

from . import warped as _warped
from .errors import DomainError, UnsupportedChartError

CHARTS = ("minkowski", "cone", "warped", "schwarzschild_interior")
SET_KINDS = ("point", "tau_level", "coordinate_slice", "hyperboloid", "singular_set")

# tau values below this are rounding noise, not chronology
TAU_FLOOR = 1e-12


# ---------------------------------------------------------------------------
# descriptors


@dataclass(frozen=True)
class Event:
    """A point of a model spacetime in chart coordinates."""

    chart: str
    coords: tuple

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(float(c) for c in self.coords))

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)


@dataclass(frozen=True, eq=False)
class SpacetimeDescriptor:
    kind: str
    dim: int
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in CHARTS:
            raise DomainError(f"unknown chart {self.kind!r}")
        if int(self.dim) != self.dim or self.dim < 2:
            raise DomainError(f"dimension must be an integer >= 2, got {self.dim}")
        p = self.params
        if self.kind == "cone":
            if ("a" in p) == ("aperture" in p):
                raise DomainError("cone needs exactly one of 'a' or 'aperture'")
            if "a" in p and not p["a"] > 0:
                raise DomainError("cone parameter a must be > 0")
            if "aperture" in p and not p["aperture"] > 1:
                raise DomainError("cone aperture must be > 1")
        elif self.kind == "warped":
            if p.get("profile", "one") not in _warped.PROFILES:
                raise DomainError(f"unknown warping profile {p.get('profile')!r}")
            fiber = p.get("fiber", "line")
            if fiber not in ("line", "circle"):
                raise DomainError(f"unknown fiber {fiber!r}")
            if fiber == "circle" and (self.dim != 2 or not p.get("radius", 1.0) > 0):
                raise DomainError("circle fiber needs dim 2 and radius > 0")
        elif self.kind == "schwarzschild_interior":
            if self.dim != 4:
                raise DomainError("schwarzschild_interior is four dimensional")
            if not p.get("m", 0) > 0:
                raise DomainError("schwarzschild mass m must be > 0")

    def __eq__(self, other):
        return isinstance(other, SpacetimeDescriptor) and self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(self.to_json())

    @property
    def n(self) -> int:
        """Spatial (fiber) dimension."""
        return self.dim - 1

    def to_dict(self) -> dict:
        return {"kind": self.kind, "dim": int(self.dim), "params": _plain(self.params)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d) -> "SpacetimeDescriptor":
        try:
            return cls(kind=d["kind"], dim=int(d["dim"]), params=dict(d.get("params", {})))
        except (KeyError, TypeError) as exc:
            raise DomainError(f"malformed spacetime descriptor: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "SpacetimeDescriptor":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class AchronalSetDescriptor:
    """An achronal set: kind plus named parameters (lists and nested sets allowed)."""

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in SET_KINDS:
            raise DomainError(f"unknown achronal set kind {self.kind!r}")
        p = self.params
        if self.kind == "point" and "coords" not in p:
            raise DomainError("point set needs 'coords'")
        if self.kind == "coordinate_slice" and "value" not in p:
            raise DomainError("coordinate_slice needs 'value'")
        if self.kind == "hyperboloid" and not p.get("radius", 0) > 0:
            raise DomainError("hyperboloid needs radius > 0")
        if self.kind == "tau_level" and ("base" not in p or "t" not in p):
            raise DomainError("tau_level needs 'base' and 't'")

    def __eq__(self, other):
        return isinstance(other, AchronalSetDescriptor) and self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(self.to_json())

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": _plain(self.params)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d) -> "AchronalSetDescriptor":
        try:
            return cls(kind=d["kind"], params=dict(d.get("params", {})))
        except (KeyError, TypeError) as exc:
            raise DomainError(f"malformed achronal set descriptor: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "AchronalSetDescriptor":
        return cls.from_dict(json.loads(text))


def _plain(obj):
    if isinstance(obj, AchronalSetDescriptor):
        return obj.to_dict()
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _as_set(obj) -> AchronalSetDescriptor:
    return obj if isinstance(obj, AchronalSetDescriptor) else AchronalSetDescriptor.from_dict(obj)


# convenience constructors

def minkowski(dim: int) -> SpacetimeDescriptor:
    return SpacetimeDescriptor("minkowski", dim)


def cone(dim: int, *, a: float | None = None, aperture: float | None = None) -> SpacetimeDescriptor:
    params = {"a": a} if aperture is None else {"aperture": aperture}
    return SpacetimeDescriptor("cone", dim, params)


def warped_product(dim: int, profile: str, fiber: str = "line", radius: float = 1.0) -> SpacetimeDescriptor:
    params = {"profile": profile, "fiber": fiber}
    if fiber == "circle":
        params["radius"] = radius
    return SpacetimeDescriptor("warped", dim, params)


def schwarzschild_interior(m: float) -> SpacetimeDescriptor:
    return SpacetimeDescriptor("schwarzschild_interior", 4, {"m": m})


def point(*coords) -> AchronalSetDescriptor:
    return AchronalSetDescriptor("point", {"coords": [float(c) for c in coords]})


def coordinate_slice(value: float, radius: float | None = None, center=None) -> AchronalSetDescriptor:
    params = {"value": float(value)}
    if radius is not None:
        params["radius"] = float(radius)
    if center is not None:
        params["center"] = [float(c) for c in center]
    return AchronalSetDescriptor("coordinate_slice", params)


def hyperboloid(radius: float, center=None, max_rapidity: float | None = None) -> AchronalSetDescriptor:
    params = {"radius": float(radius)}
    if center is not None:
        params["center"] = [float(c) for c in center]
    if max_rapidity is not None:
        params["max_rapidity"] = float(max_rapidity)
    return AchronalSetDescriptor("hyperboloid", params)


def tau_level(base: AchronalSetDescriptor, t: float) -> AchronalSetDescriptor:
    return AchronalSetDescriptor("tau_level", {"base": base.to_dict(), "t": float(t)})


def singular_set() -> AchronalSetDescriptor:
    return AchronalSetDescriptor("singular_set", {})


# ---------------------------------------------------------------------------
# chart geometry


def cone_speed(st: SpacetimeDescriptor) -> float:
    """Largest ``|x|/t`` allowed by the cone walls."""
    p = st.params
    if "a" in p:
        a = p["a"]
        return a / math.sqrt(1.0 + a * a)
    return 1.0 / math.sqrt(p["aperture"])


def cone_truncation(st: SpacetimeDescriptor) -> float:
    """Spatial radius bound of the truncated cone (infinite for the aperture form)."""
    return float(st.params["a"]) if "a" in st.params else math.inf


def validate_event(st: SpacetimeDescriptor, x: Event) -> np.ndarray:
    if x.chart != st.kind:
        raise UnsupportedChartError(f"event chart {x.chart!r} does not match {st.kind!r}")
    arr = x.array
    if arr.shape != (st.dim,):
        raise DomainError(f"event has {arr.size} coordinates, chart needs {st.dim}")
    if not bool(contains(st, arr)):
        raise DomainError(f"event {x.coords} lies outside the {st.kind} chart")
    return arr


def contains(st: SpacetimeDescriptor, X) -> np.ndarray:
    """Membership of chart points in the spacetime (boolean array)."""
    X = np.asarray(X, dtype=float)
    if st.kind == "minkowski":
        return np.all(np.isfinite(X), axis=-1)
    if st.kind == "cone":
        t = X[..., -1]
        rho = np.linalg.norm(X[..., :-1], axis=-1)
        ok = (t >= 0) & (rho <= cone_speed(st) * t * (1 + 1e-14) + 1e-300)
        return ok & (rho <= cone_truncation(st) * (1 + 1e-14))
    if st.kind == "warped":
        lo, hi = _warped.domain(st.params.get("profile", "one"))
        r = X[..., -1]
        return (r > lo) & (r < hi)
    m = st.params["m"]
    r, th = X[..., 1], X[..., 2]
    return (r > 0) & (r < 2 * m) & (th >= 0) & (th <= math.pi)


def volume_density(st: SpacetimeDescriptor, x) -> float | np.ndarray:
    """Density of the volume measure with respect to chart Lebesgue measure."""
    if isinstance(x, Event):
        arr = validate_event(st, x)
        return float(volume_density(st, arr))
    X = np.asarray(x, dtype=float)
    if st.kind in ("minkowski", "cone"):
        out = np.ones(X.shape[:-1])
    elif st.kind == "warped":
        th = _warped.theta(st.params.get("profile", "one"), X[..., -1])
        out = np.asarray(th, dtype=float) ** st.n
        if st.params.get("fiber", "line") == "circle":
            out = out * st.params.get("radius", 1.0)
    else:
        out = X[..., 1] ** 2 * np.abs(np.sin(X[..., 2]))
    return float(out) if np.ndim(out) == 0 else out


def density_bound(st: SpacetimeDescriptor, bounds) -> float:
    """Upper bound of ``volume_density`` on a coordinate box."""
    bounds = np.asarray(bounds, dtype=float)
    if st.kind in ("minkowski", "cone"):
        return 1.0
    if st.kind == "schwarzschild_interior":
        return float(max(bounds[1, 1], 0.0) ** 2)
    prof = st.params.get("profile", "one")
    lo, hi = _warped.domain(prof)
    r_lo, r_hi = max(bounds[-1, 0], lo), min(bounds[-1, 1], hi)
    cand = [r_lo, r_hi]
    if prof == "sin" and r_lo < math.pi / 2 < r_hi:
        cand.append(math.pi / 2)
    cand = [c for c in cand if np.isfinite(c)]
    vals = np.abs(np.asarray(_warped.theta(prof, np.asarray(cand)))) ** st.n
    scale = st.params.get("radius", 1.0) if st.params.get("fiber") == "circle" else 1.0
    return float(np.max(vals)) * scale


def fiber_distance(st: SpacetimeDescriptor, Y0, Y1) -> np.ndarray:
    """Distance in the (unwarped) fiber between the projections of two points."""
    d = np.asarray(Y1, dtype=float)[..., :-1] - np.asarray(Y0, dtype=float)[..., :-1]
    if st.params.get("fiber", "line") == "circle":
        ang = np.mod(np.abs(d[..., 0]), 2 * math.pi)
        return st.params.get("radius", 1.0) * np.minimum(ang, 2 * math.pi - ang)
    return np.linalg.norm(d, axis=-1)


# ---------------------------------------------------------------------------
# time separation


def _minkowski_tau(X, Y):
    D = np.asarray(Y, dtype=float) - np.asarray(X, dtype=float)
    dt = D[..., -1]
    q = dt * dt - np.sum(D[..., :-1] ** 2, axis=-1)
    return np.where((dt > 0) & (q > 0), np.sqrt(np.maximum(q, 0.0)), 0.0)


def tau_array(st: SpacetimeDescriptor, X, Y) -> np.ndarray:
    """Time separation ``tau(x, y)`` for broadcast arrays of chart points."""
    if st.kind in ("minkowski", "cone"):
        return _minkowski_tau(X, Y)
    if st.kind == "warped":
        X, Y = np.broadcast_arrays(np.asarray(X, dtype=float), np.asarray(Y, dtype=float))
        delta = fiber_distance(st, X, Y)
        prof = st.params.get("profile", "one")
        out = np.empty(X.shape[:-1])
        for idx in np.ndindex(out.shape):
            out[idx] = _warped.maximize_knots(prof, X[idx][-1], Y[idx][-1], float(delta[idx]))
        return out
    raise UnsupportedChartError("general two-point tau is not available in the black hole interior")


def causal_array(st: SpacetimeDescriptor, X, Y) -> np.ndarray:
    """``x <= y`` (causal precedence, reflexive) for broadcast arrays."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if st.kind in ("minkowski", "cone"):
        D = Y - X
        dt = D[..., -1]
        q = dt * dt - np.sum(D[..., :-1] ** 2, axis=-1)
        return (dt >= 0) & (q >= -1e-12 * (1 + dt * dt))
    if st.kind == "warped":
        prof = st.params.get("profile", "one")
        r0, r1 = np.broadcast_arrays(X[..., -1], Y[..., -1])
        delta = fiber_distance(st, X, Y)
        same = delta <= 0
        with np.errstate(invalid="ignore", divide="ignore"):
            reach = np.where(r1 > r0, _warped.null_primitive(prof, np.maximum(r1, r0))
                             - _warped.null_primitive(prof, r0), 0.0)
        return ((r1 >= r0) & same) | ((r1 > r0) & (delta <= reach + 1e-12))
    raise UnsupportedChartError("causal relation is not available in the black hole interior")


def tau(st: SpacetimeDescriptor, x: Event, y: Event) -> float:
    """Time separation of two events; 0 unless ``x`` precedes ``y``."""
    xa, ya = validate_event(st, x), validate_event(st, y)
    return float(tau_array(st, xa, ya))


def maximize_warped_tau(st: SpacetimeDescriptor, x: Event, y: Event) -> float:
    """Maximal proper time over piecewise geodesic paths in a warped chart."""
    if st.kind != "warped":
        raise UnsupportedChartError("maximize_warped_tau needs a warped chart")
    xa, ya = validate_event(st, x), validate_event(st, y)
    delta = float(fiber_distance(st, xa, ya))
    return _warped.maximize_knots(st.params.get("profile", "one"), xa[-1], ya[-1], delta)


def warped_tau_quadrature(st: SpacetimeDescriptor, x: Event, y: Event) -> float:
    """Independent route to the warped time separation via the geodesic first integral."""
    xa, ya = validate_event(st, x), validate_event(st, y)
    delta = float(fiber_distance(st, xa, ya))
    return _warped.tau_quadrature(st.params.get("profile", "one"), xa[-1], ya[-1], delta)


def geodesic_point(st: SpacetimeDescriptor, x: Event, y: Event, t: float) -> Event:
    """Point at parameter ``t`` of the maximizing geodesic from ``x`` to ``y``."""
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"t must lie in [0, 1], got {t}")
    xa, ya = validate_event(st, x), validate_event(st, y)
    return Event(st.kind, tuple(geodesic_array(st, xa, ya, t)))


def geodesic_array(st: SpacetimeDescriptor, X, Y, t: float) -> np.ndarray:
    """Vectorized ``geodesic_point`` on chart arrays; pairs must be chronological."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if st.kind in ("minkowski", "cone"):
        if np.any(_minkowski_tau(X, Y) <= 0):
            raise DomainError("geodesic interpolation needs chronologically related endpoints")
        if t == 0.0:
            return X.copy()
        if t == 1.0:
            return Y.copy()
        return (1.0 - t) * X + t * Y
    if st.kind == "warped":
        prof = st.params.get("profile", "one")
        X, Y = np.broadcast_arrays(X, Y)
        out = np.empty(X.shape)
        for idx in np.ndindex(X.shape[:-1]):
            x, y = X[idx], Y[idx]
            delta = float(fiber_distance(st, x, y))
            if not (y[-1] > x[-1] and delta < _warped.horizon(prof, x[-1], y[-1])):
                raise DomainError("geodesic interpolation needs chronologically related endpoints")
            r, travel = _warped.geodesic_fraction(prof, x[-1], y[-1], delta, t)
            z = x.copy()
            z[-1] = r
            if delta > 0:
                if st.params.get("fiber", "line") == "circle":
                    rad = st.params.get("radius", 1.0)
                    d = math.remainder(y[0] - x[0], 2 * math.pi)
                    z[0] = x[0] + math.copysign(travel / rad, d)
                else:
                    z[:-1] = x[:-1] + (y[:-1] - x[:-1]) * (travel / delta)
            if t == 1.0:
                z = y.copy()
            out[idx] = z
        return out
    raise UnsupportedChartError("geodesics are not available in the black hole interior")


# ---------------------------------------------------------------------------
# Schwarzschild interior closed forms


def schwarzschild_tau_to_singularity(m: float, r) -> float | np.ndarray:
    """Longest proper time from radius ``r`` to the singularity ``r = 0``."""
    r_arr = np.asarray(r, dtype=float)
    if not m > 0:
        raise DomainError(f"mass must be positive, got {m}")
    if np.any(r_arr <= 0) or np.any(r_arr > 2 * m):
        raise DomainError(f"r must lie in (0, 2m], got {r}")
    val = (math.pi * m - np.sqrt(2 * m * r_arr - r_arr ** 2)
           - 2 * m * np.arctan(np.sqrt((2 * m - r_arr) / r_arr)))
    return float(val) if val.ndim == 0 else val


def schwarzschild_radius_at_time(m: float, s: float) -> float:
    """Inverse of ``schwarzschild_tau_to_singularity`` in ``r``."""
    if not 0 < s <= math.pi * m:
        raise DomainError(f"proper time {s} outside (0, pi m]")
    if s == math.pi * m:
        return 2.0 * m
    return optimize.brentq(lambda r: schwarzschild_tau_to_singularity(m, r) - s,
                           1e-300, 2 * m, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def schwarzschild_slab_volume(m: float, a: float, b: float) -> float:
    """Spacetime volume of ``{a <= t <= b}`` inside the horizon."""
    if b < a:
        raise DomainError("slab needs b >= a")
    return 32.0 * math.pi * m ** 3 * (b - a) / 3.0


def schwarzschild_slice_area(m: float, r0: float, a: float, b: float) -> float:
    """Induced area of ``{r = r0, a <= t <= b}``."""
    if not 0 < r0 <= 2 * m:
        raise DomainError(f"r0 must lie in (0, 2m), got {r0}")
    return 4.0 * math.pi * r0 ** 2 * math.sqrt(max(2 * m / r0 - 1.0, 0.0)) * (b - a)


# ---------------------------------------------------------------------------
# achronal sets and signed time separation


def reduce_set(st: SpacetimeDescriptor, V) -> AchronalSetDescriptor:
    """Replace ``tau_level`` descriptors by the equivalent explicit set."""
    V = _as_set(V)
    if V.kind != "tau_level":
        return V
    base = reduce_set(st, V.params["base"])
    t = float(V.params["t"])
    if t == 0:
        return base
    bp = base.params
    if base.kind == "point":
        if st.kind == "warped":
            raise UnsupportedChartError("level sets of a point are not closed form in warped charts")
        if t < 0:
            return hyperboloid_sheet(-t, bp["coords"], sheet=-1)
        return AchronalSetDescriptor("hyperboloid", {"radius": t, "center": list(bp["coords"])})
    if base.kind == "hyperboloid":
        sheet = bp.get("sheet", 1)
        radius = bp["radius"] + sheet * t
        if radius <= 0:
            raise DomainError("level set collapses past the hyperboloid center")
        params = dict(bp)
        params["radius"] = radius
        return AchronalSetDescriptor("hyperboloid", params)
    if base.kind == "coordinate_slice":
        if st.kind == "schwarzschild_interior":
            m = st.params["m"]
            s = schwarzschild_tau_to_singularity(m, bp["value"]) - t
            return coordinate_slice(schwarzschild_radius_at_time(m, s))
        if st.kind == "cone" and "radius" in bp:
            raise UnsupportedChartError("level sets of a capped slice in a cone are not slices")
        params = dict(bp)
        params["value"] = bp["value"] + t
        if "radius" in bp and st.kind == "minkowski":
            raise UnsupportedChartError("level sets of a capped slice are not slices")
        return AchronalSetDescriptor("coordinate_slice", params)
    if base.kind == "singular_set":
        if t >= 0:
            raise DomainError("the singular set has no future level sets")
        return coordinate_slice(schwarzschild_radius_at_time(st.params["m"], -t))
    raise UnsupportedChartError(f"cannot reduce level set of {base.kind}")


def hyperboloid_sheet(radius, center, sheet=1, max_rapidity=None) -> AchronalSetDescriptor:
    params = {"radius": float(radius), "center": [float(c) for c in center], "sheet": int(sheet)}
    if max_rapidity is not None:
        params["max_rapidity"] = float(max_rapidity)
    return AchronalSetDescriptor("hyperboloid", params)


def _center(st, params):
    c = params.get("center")
    if c is None:
        return np.zeros(st.dim)
    c = np.asarray(c, dtype=float)
    if c.shape != (st.dim,):
        raise DomainError(f"center needs {st.dim} coordinates")
    return c


def effective_max_rapidity(st: SpacetimeDescriptor, V: AchronalSetDescriptor) -> float:
    """Rapidity range of a hyperboloid after intersecting with the chart."""
    p = V.params
    phi = float(p.get("max_rapidity", math.inf))
    if st.kind == "cone":
        if np.any(_center(st, p) != 0) or p.get("sheet", 1) != 1:
            raise UnsupportedChartError("hyperboloids in a cone chart must be centered at the apex")
        phi = min(phi, math.atanh(cone_speed(st)))
        trunc = cone_truncation(st)
        if np.isfinite(trunc):
            phi = min(phi, math.asinh(trunc / p["radius"]))
    return phi


def effective_slice_radius(st: SpacetimeDescriptor, V: AchronalSetDescriptor) -> float:
    """Spatial radius of a coordinate slice after intersecting with the chart."""
    p = V.params
    R = float(p.get("radius", math.inf))
    if st.kind == "cone":
        if "center" in p and np.any(np.asarray(p["center"], dtype=float)[:-1] != 0):
            raise UnsupportedChartError("slices in a cone chart must be centered on the axis")
        R = min(R, cone_speed(st) * p["value"], cone_truncation(st))
        if R < 0:
            raise DomainError("slice lies below the cone apex")
    return R


def _hyperboloid_signed(st, V, X):
    p = V.params
    sheet = int(p.get("sheet", 1))
    c = _center(st, p)
    X = np.asarray(X, dtype=float)
    if sheet == -1:
        # reflect time about the center: past sheet becomes a future sheet
        Xr = X.copy()
        Xr[..., -1] = 2 * c[-1] - X[..., -1]
        mirrored = dict(p)
        mirrored["sheet"] = 1
        return -_hyperboloid_signed(st, AchronalSetDescriptor("hyperboloid", mirrored), Xr)
    rho = float(p["radius"])
    phim = effective_max_rapidity(st, V)
    D = X - c
    dt = D[..., -1]
    dxv = D[..., :-1]
    dx = np.linalg.norm(dxv, axis=-1)
    future_of_center = dt > dx
    with np.errstate(divide="ignore", invalid="ignore"):
        phix = np.where(future_of_center, np.arctanh(np.clip(dx / np.where(dt > 0, dt, 1.0), 0, 1 - 1e-16)), 0.0)
    psi = np.where(future_of_center, np.minimum(phix, phim), phim)
    unbounded = ~future_of_center & ~np.isfinite(phim)
    psi = np.where(np.isfinite(psi), psi, 0.0)
    yt = rho * np.cosh(psi)
    yr = rho * np.sinh(psi)
    # foot point y* aligned with x's spatial direction; tau^2 along (y*, x)
    et = dt - yt
    er = dx - yr
    q = et * et - er * er
    val = np.sqrt(np.maximum(q, 0.0))
    chrono = q > 0
    out = np.where(chrono & (et > 0), val, np.where(chrono & (et < 0), -val, 0.0))
    return np.where(unbounded, -np.inf, out)


def _slice_signed_flat(st, V, X):
    p = V.params
    X = np.asarray(X, dtype=float)
    R = effective_slice_radius(st, V)
    c = _center(st, p)
    dt = X[..., -1] - float(p["value"])
    d = np.linalg.norm(X[..., :-1] - c[:-1], axis=-1)
    if not np.isfinite(R):
        return dt
    gap = np.maximum(d - R, 0.0)
    q = dt * dt - gap * gap
    val = np.where(gap > 0, np.sqrt(np.maximum(q, 0.0)), np.abs(dt))
    return np.where(np.abs(dt) > gap, np.sign(dt) * val, 0.0)


def tau_signed_array(st: SpacetimeDescriptor, V, X) -> np.ndarray:
    """Signed time separation ``tau_V`` on an array of chart points."""
    V = reduce_set(st, _as_set(V))
    X = np.asarray(X, dtype=float)
    if V.kind == "point":
        P = np.asarray(V.params["coords"], dtype=float)
        if st.kind == "warped":
            fut = tau_array(st, P, X)
            past = tau_array(st, X, P)
            return fut - past
        return _minkowski_tau(P, X) - _minkowski_tau(X, P)
    if V.kind == "hyperboloid":
        if st.kind not in ("minkowski", "cone"):
            raise UnsupportedChartError("hyperboloids live in flat charts")
        return _hyperboloid_signed(st, V, X)
    if V.kind == "coordinate_slice":
        if st.kind in ("minkowski", "cone"):
            return _slice_signed_flat(st, V, X)
        if st.kind == "warped":
            return X[..., -1] - float(V.params["value"])
        m = st.params["m"]
        return (schwarzschild_tau_to_singularity(m, float(V.params["value"]))
                - schwarzschild_tau_to_singularity(m, X[..., 1]))
    if V.kind == "singular_set":
        if st.kind != "schwarzschild_interior":
            raise UnsupportedChartError("the singular set belongs to the black hole interior")
        return -np.asarray(schwarzschild_tau_to_singularity(st.params["m"], X[..., 1]))
    raise UnsupportedChartError(f"no signed time separation for {V.kind}")


def tau_signed_from_set(st: SpacetimeDescriptor, V, x: Event) -> float:
    """``sup_V tau(., x)`` on the future of ``V``, ``-sup_V tau(x, .)`` on its past, else 0."""
    arr = validate_event(st, x)
    validate_achronal(st, V)
    return float(tau_signed_array(st, V, arr))


# ---------------------------------------------------------------------------
# sampling points of a set and achronality


def set_dimension(st: SpacetimeDescriptor, V) -> int:
    V = reduce_set(st, _as_set(V))
    return 0 if V.kind == "point" else st.dim - 1


def set_points(st: SpacetimeDescriptor, V, U) -> np.ndarray:
    """Map parameters ``U`` in the unit cube ``[0,1]^k`` to points of ``V``."""
    V = reduce_set(st, _as_set(V))
    U = np.atleast_2d(np.asarray(U, dtype=float))
    p = V.params
    n = st.dim - 1
    if V.kind == "point":
        return np.tile(np.asarray(p["coords"], dtype=float), (U.shape[0], 1))
    if st.kind in ("minkowski", "cone") and V.kind in ("coordinate_slice", "hyperboloid"):
        if V.kind == "coordinate_slice":
            R = effective_slice_radius(st, V)
            R = 1.0 if not np.isfinite(R) else R
        else:
            phim = effective_max_rapidity(st, V)
            phim = 2.0 if not np.isfinite(phim) else phim
        c = _center(st, p)
        Up = _pad(U, n)
        if n == 1:
            frac = np.abs(2 * Up[:, 0] - 1)
            direction = np.where(Up[:, 0] < 0.5, -1.0, 1.0)[:, None]
        else:
            frac = Up[:, 0]
            direction = _sphere_directions(Up[:, 1:], n)
        out = np.empty((U.shape[0], st.dim))
        if V.kind == "coordinate_slice":
            out[:, :-1] = c[:-1] + R * frac[:, None] * direction
            out[:, -1] = p["value"]
        else:
            psi = phim * frac
            rho = p["radius"]
            sheet = p.get("sheet", 1)
            out[:, :-1] = c[:-1] + rho * np.sinh(psi)[:, None] * direction
            out[:, -1] = c[-1] + sheet * rho * np.cosh(psi)
        return out
    if st.kind == "warped" and V.kind == "coordinate_slice":
        out = np.empty((U.shape[0], st.dim))
        if st.params.get("fiber", "line") == "circle":
            out[:, 0] = 2 * math.pi * U[:, 0]
        else:
            out[:, :-1] = -1.0 + 2.0 * _pad(U, n)
        out[:, -1] = p["value"]
        return out
    if st.kind == "schwarzschild_interior" and V.kind == "coordinate_slice":
        Up = _pad(U, 3)
        out = np.empty((U.shape[0], 4))
        out[:, 0] = Up[:, 0]
        out[:, 1] = p["value"]
        out[:, 2] = np.arccos(1 - 2 * Up[:, 1])
        out[:, 3] = 2 * math.pi * Up[:, 2]
        return out
    raise UnsupportedChartError(f"cannot parametrize {V.kind} in the {st.kind} chart")


def _pad(U, k):
    if U.shape[1] >= k:
        return U[:, :k]
    return np.hstack([U, np.full((U.shape[0], k - U.shape[1]), 0.5)])


def _sphere_directions(U, n):
    # hyperspherical angles: n-2 polar angles in [0, pi], one azimuth in [0, 2 pi)
    k = U.shape[0]
    out = np.ones((k, n))
    for j in range(n - 1):
        last = j == n - 2
        ang = (2 * math.pi if last else math.pi) * U[:, j]
        out[:, j] *= np.cos(ang)
        out[:, j + 1:] *= np.sin(ang)[:, None]
    return out


def sample_set(st: SpacetimeDescriptor, V, n: int, rng: np.random.Generator) -> np.ndarray:
    """Random points of ``V`` (parameters drawn uniformly from the unit cube)."""
    k = max(set_dimension(st, V), 1)
    return set_points(st, V, rng.random((n, k)))


@lru_cache(maxsize=256)
def _achronal_cached(st_json: str, v_json: str, n: int) -> bool:
    st = SpacetimeDescriptor.from_json(st_json)
    V = reduce_set(st, AchronalSetDescriptor.from_json(v_json))
    if V.kind in ("point", "singular_set") or st.kind == "schwarzschild_interior":
        # points trivially; constant-r hypersurfaces inside the horizon are spacelike
        return True
    if st.kind == "warped" and V.kind == "coordinate_slice":
        # no path can return to the same r, so the slice is achronal
        return True
    pts = sample_set(st, V, n, np.random.default_rng(0))
    T = tau_array(st, pts[:, None, :], pts[None, :, :])
    return not bool(np.any(T > TAU_FLOOR))


def validate_achronal(st: SpacetimeDescriptor, V, n: int = 1000) -> None:
    """Raise ``DomainError`` if sampled points of ``V`` are chronologically related."""
    V = _as_set(V)
    if not _achronal_cached(st.to_json(), V.to_json(), n):
        raise DomainError(f"{V.kind} set is not achronal in the {st.kind} chart")
