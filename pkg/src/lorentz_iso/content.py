"""Timelike Minkowski content of achronal sets.

``future_content`` estimates ``vol({x in U : 0 < tau_A(x) < eps}) / eps`` for a
grid of ``eps`` and extrapolates linearly to ``eps -> 0``. When ``A`` is a
graph over space (slices, hyperboloids, warped slices) the band is sampled by
a volume-preserving shear: a uniform spatial point plus a uniform height above
the graph, so almost every sample lands in the band.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import spacetimes as stm
from .errors import DomainError
from .localization import RayDecomposition, ray_points
from .sampler import RegionDescriptor, _split, _substreams

DEFAULT_EPS = (0.04, 0.02, 0.01)
THICKENINGS = (0.2, 0.1, 0.05)


@dataclass
class ContentEstimate:
    value: float
    stderr: float
    eps_grid: list
    per_eps: list  # (eps, value, stderr)
    window: RegionDescriptor | None = None
    side: str = "future"
    monotone_trend: bool = True
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"value": self.value, "stderr": self.stderr, "eps_grid": list(self.eps_grid),
                "per_eps": [list(r) for r in self.per_eps], "side": self.side,
                "monotone_trend": self.monotone_trend,
                "window": None if self.window is None else self.window.to_dict(), "meta": self.meta}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


# ---------------------------------------------------------------------------
# graph description of the supported sets


def _graph(st, A):
    """Return ``(height_fn, spatial_box, slope_bound)`` for sets that are graphs over space.

    ``height_fn`` maps spatial points to the time (or ``r``) coordinate of ``A``.
    ``slope_bound(eps, box)`` bounds the band thickness above the graph.
    """
    p = A.params
    if st.kind in ("minkowski", "cone") and A.kind == "coordinate_slice":
        R = stm.effective_slice_radius(st, A)
        c = stm._center(st, p)
        value = float(p["value"])
        box = None if not np.isfinite(R) else [[ci - R, ci + R] for ci in c[:-1]]

        def band(eps, spatial_box):
            if not np.isfinite(R):
                return eps
            sb = np.asarray(spatial_box, dtype=float)
            far = np.linalg.norm(np.maximum(np.abs(sb - c[:-1, None]).max(axis=1), 0.0))
            return math.sqrt(eps * eps + max(far - R, 0.0) ** 2)

        return (lambda Y: np.full(Y.shape[0], value)), box, band
    if st.kind in ("minkowski", "cone") and A.kind == "hyperboloid" and p.get("sheet", 1) == 1:
        c = stm._center(st, p)
        rho = float(p["radius"])
        phim = stm.effective_max_rapidity(st, A)
        ext = rho * math.sinh(phim) if np.isfinite(phim) else None
        box = None if ext is None else [[ci - ext, ci + ext] for ci in c[:-1]]
        height = lambda Y: c[-1] + np.sqrt(rho * rho + np.sum((Y - c[:-1]) ** 2, axis=1))
        return height, box, (lambda eps, spatial_box: eps)
    if st.kind == "warped" and A.kind == "coordinate_slice":
        value = float(p["value"])
        if st.params.get("fiber", "line") == "circle":
            box = [[0.0, 2 * math.pi]]
        else:
            box = None
        return (lambda Y: np.full(Y.shape[0], value)), box, (lambda eps, spatial_box: eps)
    return None


def default_windows(st, A, fractions=THICKENINGS):
    """Chart-coordinate thickenings of ``A`` by ``fraction * diameter``."""
    A = stm.reduce_set(st, A)
    g = _graph(st, A)
    pts = stm.sample_set(st, A, 2000, np.random.default_rng(0))
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    diam = float(np.linalg.norm(hi - lo)) or 1.0
    if g is not None and g[1] is not None:
        sb = np.asarray(g[1], dtype=float)
        lo[:-1], hi[:-1] = sb[:, 0], sb[:, 1]
    out = []
    for f in fractions:
        pad = f * diam
        out.append(RegionDescriptor(st, [[a - pad, b + pad] for a, b in zip(lo, hi)]))
    return out


def _band_volume(st, A, U, eps, n, rng, side):
    """Monte Carlo volume of ``{x in U: 0 < side * tau_A(x) < eps}`` with its stderr."""
    sign = 1.0 if side == "future" else -1.0
    box = U.box
    g = _graph(st, A)
    if g is not None:
        height, _, band = g
        sbox = box[:-1]
        H = band(eps, sbox)
        Y = sbox[:, 0] + (sbox[:, 1] - sbox[:, 0]) * rng.random((n, sbox.shape[0]))
        base = height(Y)
        tcol = base + sign * H * rng.random(n)
        X = np.column_stack([Y, tcol])
        scale = float(np.prod(sbox[:, 1] - sbox[:, 0])) * H
    else:
        X = box[:, 0] + (box[:, 1] - box[:, 0]) * rng.random((n, box.shape[0]))
        scale = U.box_volume
    inside = U.indicator(X)
    f = np.zeros(n)
    if np.any(inside):
        tv = sign * stm.tau_signed_array(st, A, X[inside])
        keep = (tv > 0) & (tv < eps)
        idx = np.flatnonzero(inside)[keep]
        f[idx] = stm.volume_density(st, X[idx])
    mean = float(f.mean())
    se = float(f.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return scale * mean, scale * se


def _extrapolate(per_eps):
    rows = sorted(per_eps)
    (e1, v1, s1), (e2, v2, s2) = rows[0], rows[1]
    c1 = e2 / (e2 - e1)
    c2 = -e1 / (e2 - e1)
    return c1 * v1 + c2 * v2, math.sqrt((c1 * s1) ** 2 + (c2 * s2) ** 2)


def _monotone(per_eps, z=2.0):
    rows = sorted(per_eps)
    diffs = [(b[1] - a[1], math.hypot(a[2], b[2])) for a, b in zip(rows, rows[1:])]
    up = all(d >= -z * s for d, s in diffs)
    down = all(d <= z * s for d, s in diffs)
    return up or down


def future_content(st, A, U: RegionDescriptor | None = None, eps_grid=DEFAULT_EPS,
                   n_per_eps: int = 100_000, seed: int = 0, *, side: str = "future",
                   workers: int = 1) -> ContentEstimate:
    """Timelike Minkowski content of ``A`` relative to the window ``U``.

    Without ``U`` the smallest default thickening of ``A`` is used. The value
    is the linear extrapolation from the two smallest ``eps``; if the
    ``per_eps`` trend is not monotone within noise the smallest-``eps`` value is
    reported instead and ``monotone_trend`` is False.
    """
    if side not in ("future", "past"):
        raise DomainError("side must be 'future' or 'past'")
    A = stm.reduce_set(st, A)
    stm.validate_achronal(st, A)
    if A.kind == "point":
        return ContentEstimate(0.0, 0.0, list(eps_grid), [(e, 0.0, 0.0) for e in eps_grid], U, side)
    if U is None:
        U = default_windows(st, A)[-1]
    eps_grid = sorted(float(e) for e in eps_grid)
    if len(eps_grid) < 2 or eps_grid[0] <= 0:
        raise DomainError("need at least two positive eps values")
    per_eps = []
    for k, eps in enumerate(eps_grid):
        vals, ses, counts = [], [], _split(n_per_eps, workers)
        for cnt, rng in zip(counts, _substreams(seed * 1000 + k, workers)):
            v, s = _band_volume(st, A, U, eps, cnt, rng, side)
            vals.append(v * cnt)
            ses.append((s * cnt) ** 2)
        vol = sum(vals) / n_per_eps
        se = math.sqrt(sum(ses)) / n_per_eps
        per_eps.append((eps, vol / eps, se / eps))
    monotone = _monotone(per_eps)
    if monotone:
        value, stderr = _extrapolate(per_eps)
    else:
        _, value, stderr = min(per_eps)
    return ContentEstimate(max(value, 0.0), stderr, eps_grid, per_eps, U, side, monotone,
                           {"seed": seed, "n_per_eps": n_per_eps})


def past_content(st, A, U=None, eps_grid=DEFAULT_EPS, n_per_eps=100_000, seed=0, **kw) -> ContentEstimate:
    """Causally reversed ``future_content``."""
    return future_content(st, A, U, eps_grid, n_per_eps, seed, side="past", **kw)


# ---------------------------------------------------------------------------
# one-dimensional reductions


def one_d_content(density_samples, s0: float, side: str = "future", *, log: bool = False) -> float:
    """One-sided density value at ``s0`` from a sampled density ``[(s, h), ...]``.

    Linear interpolation (log-log when ``log``); ``s0`` may not sit on the
    boundary of the sampled domain on the requested side.
    """
    arr = np.asarray(density_samples, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 1:
        raise DomainError("density samples must be a list of (s, h) pairs")
    order = np.argsort(arr[:, 0])
    s, h = arr[order, 0], arr[order, 1]
    lo, hi = s[0], s[-1]
    if side == "future":
        if not lo <= s0 < hi:
            raise DomainError(f"s0={s0} not interior to [{lo}, {hi}) on the future side")
    elif side == "past":
        if not lo < s0 <= hi:
            raise DomainError(f"s0={s0} not interior to ({lo}, {hi}] on the past side")
    else:
        raise DomainError("side must be 'future' or 'past'")
    if log:
        if np.any(h <= 0) or s0 <= 0:
            raise DomainError("log interpolation needs positive values")
        return float(np.exp(np.interp(math.log(s0), np.log(s), np.log(h))))
    return float(np.interp(s0, s, h))


def _ray_hit_parameter(dec: RayDecomposition, ray, A, st):
    V = stm.AchronalSetDescriptor.from_dict(dec.meta["V"])
    A = stm.reduce_set(st, A)
    # level sets of V meet every ray at the same arclength
    level = _level_of(st, V, A)
    if level is not None:
        return level
    sign = 1.0 if dec.direction == "future" else -1.0
    lo, hi = ray.edges[1], ray.domain[1]
    f = lambda s: sign * float(stm.tau_signed_array(st, A, ray_points(st, ray.anchor, ray.direction, np.array([s]), ray.mode))[0])
    flo, fhi = f(lo), f(hi)
    if not (flo < 0 < fhi):
        return None
    from scipy.optimize import brentq
    return brentq(f, lo, hi, xtol=1e-12)


def _level_of(st, V, A):
    if A.kind == "tau_level":
        return None
    # compare A with the reduced level sets of V at a probe of candidate values
    probe = stm.sample_set(st, A, 16, np.random.default_rng(1)) if A.kind != "point" else None
    if probe is None:
        return None
    vals = stm.tau_signed_array(st, V, probe)
    if np.ptp(vals) <= 1e-10 * max(1.0, float(np.abs(vals).max())):
        return float(abs(vals[0]))
    return None


def content_via_rays(dec: RayDecomposition, A, *, return_stderr: bool = False):
    """``sum_alpha q_alpha h(alpha, s_alpha(A))`` over the rays that reach ``A``.

    Rays no longer than the hit parameter do not contribute.
    """
    st = stm.SpacetimeDescriptor.from_dict(dec.meta["st"])
    A = stm.AchronalSetDescriptor.from_dict(A.to_dict()) if isinstance(A, stm.AchronalSetDescriptor) else stm.AchronalSetDescriptor.from_dict(A)
    total, var = 0.0, 0.0
    for q, ray in zip(dec.q_weights, dec.rays):
        s_hit = _ray_hit_parameter(dec, ray, A, st)
        if s_hit is None or not (s_hit < ray.domain[1]):
            continue
        s, h = ray.check_s, ray.check_h
        ok = h > 0
        if ok.sum() < 2 or not (s[ok][0] <= s_hit < s[ok][-1]):
            if s_hit < s[0]:
                raise DomainError(f"hit parameter {s_hit} below the sampled density range")
            continue
        val = one_d_content(list(zip(s[ok], h[ok])), s_hit, "future", log=True)
        total += q * val
        if ray.counts is not None:
            c = ray.check_counts[ok]
            k = int(np.clip(np.searchsorted(s[ok], s_hit), 1, c.size - 1))
            # interpolation between two bins: relative error of the nearer one dominates
            w = (math.log(s_hit) - math.log(s[ok][k - 1])) / (math.log(s[ok][k]) - math.log(s[ok][k - 1]))
            rel2 = (1 - w) ** 2 / c[k - 1] + w ** 2 / c[k]
            var += (q * val) ** 2 * rel2
    if return_stderr:
        return total, math.sqrt(var)
    return total
