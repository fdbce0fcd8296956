"""Ray decompositions of the future (or past) of an achronal set.

In every supported model the maximizing rays of ``tau_V`` are known in closed
form: straight timelike lines from a point, vertical lines over a flat slice,
radial lines in a warped chart and constant-``(t, theta, phi)`` lines inside
the black hole. Points are assigned to rays analytically; only the
one-dimensional densities along rays are estimated, by histograms over
equal-mass cells of the quotient parameter.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import coefficients as coef
from . import spacetimes as stm
from .coefficients import CurvatureParams
from .errors import DomainError, InfeasibleError, UnsupportedChartError
from .report import VerificationReport
from .sampler import CausalSample, RegionDescriptor, sprinkle, tau_band

PASS_FRACTION = 0.95
NOISE_Z = 3.0
HEAD_QUANTILE = 0.02
MAX_CELLS = 8
MIN_CHECK_BINS = 8
BALANCE_TOL = 1e-9
# relative allowance for equality cases evaluated in floating point
ROUNDOFF = 1e-9


# ---------------------------------------------------------------------------
# closed-form ray frames


@dataclass
class RayFrame:
    """Per-point ray data: arclength ``s``, quotient label, ray anchor and direction."""

    s: np.ndarray
    label: np.ndarray
    anchor: np.ndarray
    direction: np.ndarray
    valid: np.ndarray
    mode: str  # "affine" or "schwarzschild"


def _flat_point_frame(st, P, X, sign):
    D = (X - P) * sign
    dt = D[:, -1]
    q = dt * dt - np.sum(D[:, :-1] ** 2, axis=1)
    valid = (dt > 0) & (q > stm.TAU_FLOOR ** 2)
    s = np.where(valid, np.sqrt(np.maximum(q, 0.0)), 0.0)
    safe = np.where(valid, s, 1.0)
    U = D / safe[:, None]
    return s, U, valid


def _rapidity_label(U):
    if U.shape[1] == 2:
        return np.arctanh(np.clip(U[:, 0] / U[:, 1], -1 + 1e-16, 1 - 1e-16))
    return np.arcsinh(np.linalg.norm(U[:, :-1], axis=1))


def ray_frame(st, V, X, direction: str = "future") -> RayFrame:
    """Closed-form ray data for points ``X`` relative to the achronal set ``V``."""
    if direction not in ("future", "past"):
        raise DomainError("direction must be 'future' or 'past'")
    sign = 1.0 if direction == "future" else -1.0
    V = stm.reduce_set(st, V)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    k = X.shape[0]
    p = V.params
    if st.kind in ("minkowski", "cone"):
        if V.kind == "point":
            P = np.asarray(p["coords"], dtype=float)
            s, U, valid = _flat_point_frame(st, P, X, sign)
            return RayFrame(s, _rapidity_label(U), np.tile(P, (k, 1)), sign * U, valid, "affine")
        if V.kind == "hyperboloid" and p.get("sheet", 1) == 1:
            C = stm._center(st, p)
            sc, U, inside = _flat_point_frame(st, C, X, 1.0)
            rho = p["radius"]
            rap = np.arcsinh(np.linalg.norm(U[:, :-1], axis=1))
            ok = inside & (rap <= stm.effective_max_rapidity(st, V))
            s = sign * (sc - rho)
            valid = ok & (s > 0)
            return RayFrame(np.where(valid, s, 0.0), _rapidity_label(U), C + rho * U,
                            sign * U, valid, "affine")
        if V.kind == "coordinate_slice":
            tv = stm.tau_signed_array(st, V, X) * sign
            valid = tv > 0
            R = stm.effective_slice_radius(st, V)
            c = stm._center(st, p)
            dxv = X[:, :-1] - c[:-1]
            d = np.linalg.norm(dxv, axis=1)
            over = d <= R
            anchor = X.copy()
            anchor[:, -1] = p["value"]
            U = np.zeros_like(X)
            U[:, -1] = 1.0
            fan = valid & ~over
            if np.any(fan):
                e = c[:-1] + dxv[fan] * (R / d[fan])[:, None]
                anchor[fan, :-1] = e
                Dv = X[fan] - anchor[fan]
                Dv[:, -1] *= sign
                U[fan] = Dv / tv[fan][:, None]
            return RayFrame(np.where(valid, tv, 0.0), anchor[:, 0].copy(), anchor,
                            sign * U, valid, "affine")
    if st.kind == "warped" and V.kind == "coordinate_slice":
        s = sign * (X[:, -1] - p["value"])
        anchor = X.copy()
        anchor[:, -1] = p["value"]
        U = np.zeros_like(X)
        U[:, -1] = sign
        return RayFrame(np.maximum(s, 0.0), X[:, 0].copy(), anchor, U, s > 0, "affine")
    if st.kind == "schwarzschild_interior" and V.kind in ("coordinate_slice", "singular_set"):
        tv = sign * stm.tau_signed_array(st, V, X)
        anchor = X.copy()
        anchor[:, 1] = p.get("value", 0.0)
        U = np.zeros_like(X)
        U[:, 1] = -sign
        return RayFrame(np.maximum(tv, 0.0), X[:, 0].copy(), anchor, U, tv > 0, "schwarzschild")
    raise UnsupportedChartError(f"no closed-form rays for {V.kind} in the {st.kind} chart")


def ray_points(st, anchor, direction, s, mode):
    """Evaluate ray maps ``s -> X(s)`` for arrays of anchors and directions."""
    anchor = np.atleast_2d(np.asarray(anchor, dtype=float))
    direction = np.atleast_2d(np.asarray(direction, dtype=float))
    s = np.asarray(s, dtype=float)
    if mode == "affine":
        return anchor + s[..., None] * direction
    m = st.params["m"]
    r0 = anchor[:, 1]
    base = np.array([stm.schwarzschild_tau_to_singularity(m, r) if r > 0 else 0.0 for r in r0])
    target = np.broadcast_to(base + s * direction[:, 1], r0.shape)
    out = np.array(np.broadcast_to(anchor, (target.size, anchor.shape[1])), dtype=float)
    out[:, 1] = [stm.schwarzschild_radius_at_time(m, float(v)) for v in target]
    return out


# ---------------------------------------------------------------------------
# cone regions C(V, S)


def on_set(st, S, X, tol: float = 1e-7) -> np.ndarray:
    """Chart points within ``tol`` of the achronal set ``S`` (closed-form shapes)."""
    S = stm.reduce_set(st, S)
    X = np.atleast_2d(X)
    p = S.params
    if st.kind in ("minkowski", "cone"):
        if S.kind == "coordinate_slice":
            R = stm.effective_slice_radius(st, S)
            d = np.linalg.norm(X[:, :-1] - stm._center(st, p)[:-1], axis=1)
            return (np.abs(X[:, -1] - p["value"]) <= tol) & (d <= R + tol)
        if S.kind == "hyperboloid":
            C = stm._center(st, p)
            D = (X - C) * p.get("sheet", 1)
            D[:, :-1] *= p.get("sheet", 1)
            dt = D[:, -1]
            dx = np.linalg.norm(D[:, :-1], axis=1)
            sc = np.sqrt(np.maximum(dt * dt - dx * dx, 0.0))
            rap = np.arcsinh(dx / p["radius"])
            return (dt > 0) & (np.abs(sc - p["radius"]) <= tol) & (rap <= stm.effective_max_rapidity(st, S) + tol)
        if S.kind == "point":
            return np.linalg.norm(X - np.asarray(p["coords"]), axis=1) <= tol
    if S.kind == "coordinate_slice":
        col = -1 if st.kind == "warped" else 1
        return np.abs(X[:, col] - p["value"]) <= tol
    raise UnsupportedChartError(f"no membership test for {S.kind} in the {st.kind} chart")


def ray_hit(st, V, S, frame: RayFrame, sign: float = 1.0) -> np.ndarray:
    """Arclength at which each point's ray meets ``S`` (``nan`` when it misses)."""
    V = stm.reduce_set(st, V)
    S = stm.reduce_set(st, S)
    out = np.full(frame.s.shape, np.nan)
    valid = frame.valid
    if not np.any(valid):
        return out
    flat = st.kind in ("minkowski", "cone")
    A, U = frame.anchor[valid], frame.direction[valid]
    if flat and V.kind == "point" and S.kind == "hyperboloid" and S.params.get("sheet", 1) == 1 \
            and np.allclose(stm._center(st, S.params), V.params["coords"]) and sign > 0:
        rap = np.arcsinh(np.linalg.norm(U[:, :-1], axis=1))
        out[valid] = np.where(rap <= stm.effective_max_rapidity(st, S), S.params["radius"], np.nan)
        return out
    if flat and V.kind == "point" and S.kind == "coordinate_slice" and sign > 0:
        sh = (S.params["value"] - A[:, -1]) / U[:, -1]
        hit = A + sh[:, None] * U
        ok = (sh > 0) & on_set(st, S, hit, tol=1e-9) & stm.contains(st, hit)
        out[valid] = np.where(ok, sh, np.nan)
        return out
    if st.kind == "warped" and V.kind == "coordinate_slice" and S.kind == "coordinate_slice":
        sh = sign * (S.params["value"] - V.params["value"])
        out[valid] = sh if sh > 0 else np.nan
        return out
    if frame.mode != "affine":
        raise UnsupportedChartError("ray hits inside the black hole need a closed form")
    # generic route: bracket the sign change of tau_S along the ray, then bisect
    g = lambda s: sign * stm.tau_signed_array(st, S, A + s[:, None] * U)
    lo = np.zeros(A.shape[0])
    hi = np.maximum(2.0 * frame.s[valid], 1.0)
    for _ in range(60):
        need = g(hi) < 0
        if not np.any(need):
            break
        hi = np.where(need, 2.0 * hi, hi)
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        neg = g(mid) < 0
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
    sh = 0.5 * (lo + hi)
    hit = A + sh[:, None] * U
    ok = on_set(st, S, hit, tol=1e-7) & stm.contains(st, hit)
    out[valid] = np.where(ok, sh, np.nan)
    return out


def cone_region_indicator(st, V, S, X) -> np.ndarray:
    """Points on a maximizing segment from ``V`` to ``S``: ``0 < tau_V(x) <= s_hit``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    fr = ray_frame(st, V, X, "future")
    sh = ray_hit(st, V, S, fr)
    return fr.valid & np.isfinite(sh) & (fr.s <= sh)


# ---------------------------------------------------------------------------
# decomposition


@dataclass(frozen=True, eq=False)
class Ray:
    """One quotient cell of rays with its estimated density table."""

    alpha: float
    label_range: tuple
    anchor: np.ndarray
    direction: np.ndarray
    domain: tuple
    edges: np.ndarray
    s: np.ndarray
    h: np.ndarray
    counts: np.ndarray | None
    mode: str = "affine"

    @property
    def density_samples(self):
        """``(s, h)`` pairs of the bins used by the curvature checks."""
        return list(zip(self.s[1:].tolist(), self.h[1:].tolist()))

    @property
    def check_s(self):
        return self.s[1:]

    @property
    def check_h(self):
        return self.h[1:]

    @property
    def check_counts(self):
        return None if self.counts is None else self.counts[1:]

    def mass(self) -> float:
        return float(np.sum(self.h * np.diff(self.edges)))


@dataclass(frozen=True, eq=False)
class RayDecomposition:
    rays: list
    q_weights: np.ndarray
    params: CurvatureParams | None = None
    volume: float = math.nan
    volume_stderr: float = 0.0
    direction: str = "future"
    unassigned_fraction: float = 0.0
    meta: dict = field(default_factory=dict)
    sample: CausalSample | None = None
    point_s: np.ndarray | None = None
    point_cell: np.ndarray | None = None

    def total_mass(self) -> float:
        """``sum_alpha q_alpha * int h(alpha, s) ds``."""
        return float(sum(q * r.mass() for q, r in zip(self.q_weights, self.rays)))

    def to_dict(self) -> dict:
        return {"direction": self.direction, "volume": self.volume,
                "params": None if self.params is None else self.params.to_dict(),
                "rays": [{"label": r.alpha, "label_range": list(r.label_range),
                          "domain": list(r.domain), "q": float(q),
                          "table": [[float(a), float(b)] for a, b in zip(r.s, r.h)]}
                         for r, q in zip(self.rays, self.q_weights)]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_tables(cls, tables, q_weights=None, params=None, counts=None):
        """Build a decomposition from explicit ``(edges, h)`` tables (exact densities).

        ``edges`` includes the head bin ``[0, s_lo]``; bin nodes are geometric
        centers except for the head bin.
        """
        rays = []
        for k, (edges, h) in enumerate(tables):
            edges = np.asarray(edges, dtype=float)
            s = _bin_nodes(edges)
            c = None if counts is None else np.asarray(counts[k], dtype=float)
            rays.append(Ray(float(k), (float(k), float(k)), np.zeros(1), np.zeros(1),
                            (0.0, float(edges[-1])), edges, s, np.asarray(h, dtype=float), c))
        q = np.full(len(rays), 1.0 / len(rays)) if q_weights is None else np.asarray(q_weights, dtype=float)
        return cls(rays, q, params)


def _bin_nodes(edges):
    s = np.sqrt(edges[1:] * edges[:-1])
    s[0] = 0.5 * (edges[0] + edges[1]) if edges[0] == 0 else s[0]
    return s


def build_ray_decomposition(st, V, region: RegionDescriptor, n: int, bins: int = 16, seed: int = 0,
                            *, cells: int | None = None, params: CurvatureParams | None = None,
                            direction: str = "future", workers: int = 1) -> RayDecomposition:
    """Sprinkle ``region`` intersected with the future (past) of ``V`` and histogram along rays.

    Each quotient cell gets ``bins`` geometric bins between a low cutoff
    (the 2% arclength quantile) and the largest sampled arclength, plus one
    head bin ``[0, s_lo]`` that only carries mass. Densities are normalized so
    that ``sum_alpha q_alpha int h = volume``.
    """
    V = stm.reduce_set(st, V)
    if bins < 3:
        raise DomainError("need at least 3 bins")
    band = tau_band(V, 0.0, math.inf) if direction == "future" else tau_band(V, -math.inf, 0.0)
    reg = RegionDescriptor(region.st, region.bounds, tuple(region.predicate) + (band,))
    try:
        sample = sprinkle(reg, n, seed, workers=workers)
    except Exception as exc:
        if type(exc).__name__ == "DegenerateRegionError":
            raise DomainError("region does not meet the chosen side of V") from exc
        raise
    fr = ray_frame(st, V, sample.points, direction)
    assigned = fr.valid
    unassigned = 1.0 - float(np.mean(assigned))
    s_all = fr.s[assigned]
    lab = fr.label[assigned]
    if s_all.size < 10:
        raise DomainError("too few points could be assigned to rays")
    volume = sample.total_mass * float(np.mean(assigned))
    ncell = cells if cells is not None else max(1, min(int(math.isqrt(n)), MAX_CELLS))
    qs = np.quantile(lab, np.linspace(0, 1, ncell + 1))
    cell = np.clip(np.searchsorted(qs, lab, side="right") - 1, 0, ncell - 1)
    s_hi = float(s_all.max())
    s_lo = max(float(np.quantile(s_all, HEAD_QUANTILE)), 1e-3 * s_hi)
    edges = np.concatenate([[0.0], np.geomspace(s_lo, s_hi, bins + 1)])
    edges[-1] = s_hi * (1 + 1e-12)
    nodes = _bin_nodes(edges)
    widths = np.diff(edges)
    n_tot = s_all.size
    rays, q = [], []
    idx_assigned = np.flatnonzero(assigned)
    for c in range(ncell):
        mask = cell == c
        nc = int(mask.sum())
        if nc == 0:
            continue
        counts = np.histogram(s_all[mask], bins=edges)[0].astype(float)
        h = volume * counts / (nc * widths)
        pick = idx_assigned[mask][np.argsort(lab[mask])[nc // 2]]
        rays.append(Ray(float(np.median(lab[mask])), (float(qs[c]), float(qs[c + 1])),
                        fr.anchor[pick].copy(), fr.direction[pick].copy(),
                        (0.0, float(s_all[mask].max())), edges, nodes, h, counts, fr.mode))
        q.append(nc / n_tot)
    point_cell = np.full(len(sample), -1)
    point_cell[assigned] = cell
    vol_se = sample.volume_stderr * float(np.mean(assigned))
    return RayDecomposition(rays, np.asarray(q), params, volume, vol_se, direction, unassigned,
                            {"n": n, "seed": seed, "bins": bins, "cells": ncell,
                             "st": st.to_dict(), "V": V.to_dict(), "s_lo": s_lo, "s_hi": s_hi},
                            sample, fr.s, point_cell)


# ---------------------------------------------------------------------------
# curvature checks on the densities


def _smoothing_matrix(B):
    S = np.zeros((B, B))
    for i in range(1, B - 1):
        S[i, i - 1:i + 2] = 1.0 / 3.0
    return S


def cd_lhs(s, h, N, counts=None):
    """Left side ``(log h)'' + ((log h)')^2/(N-1)`` at interior nodes, with noise sigma.

    ``s`` must be geometric (uniform in ``log s``). Returns ``(index, lhs, sigma)``
    for the nodes where the smoothed second difference is defined.
    """
    s = np.asarray(s, dtype=float)
    h = np.asarray(h, dtype=float)
    B = s.size
    if B < 5:
        return np.array([], int), np.array([]), np.array([])
    u = np.log(s)
    du = np.diff(u)
    if not np.allclose(du, du.mean(), rtol=1e-6, atol=1e-12):
        raise DomainError("density nodes must be geometrically spaced")
    d = float(du.mean())
    with np.errstate(divide="ignore"):
        g = np.log(h)
    Sm = _smoothing_matrix(B)
    gs = Sm @ np.where(np.isfinite(g), g, 0.0)
    idx = np.arange(2, B - 2)
    gu = (gs[idx + 1] - gs[idx - 1]) / (2 * d)
    guu = (gs[idx + 1] - 2 * gs[idx] + gs[idx - 1]) / (d * d)
    si = s[idx]
    lhs = (guu - gu + gu * gu / (N - 1.0)) / (si * si)
    # linear noise propagation from Poisson counts through smoothing and differences
    if counts is None:
        sigma = np.zeros(idx.size)
    else:
        counts = np.asarray(counts, dtype=float)
        var = np.where(counts > 0, 1.0 / np.maximum(counts, 1.0), np.inf)
        sigma = np.empty(idx.size)
        for k, i in enumerate(idx):
            w = np.zeros(B)
            a = 1.0 / (d * d)
            b = (1.0 - 2.0 * gu[k] / (N - 1.0)) / (2 * d)
            w[i + 1] += a - b
            w[i] += -2 * a
            w[i - 1] += a + b
            J = (w @ Sm) / (si[k] ** 2)
            nz = J != 0
            sigma[k] = math.sqrt(float(np.sum(J[nz] ** 2 * var[nz]))) if np.all(np.isfinite(var[nz])) else math.inf
    finite = np.array([np.all(np.isfinite(g[i - 2:i + 3])) for i in idx])
    return idx[finite], lhs[finite], sigma[finite]


def check_cd_density(dec: RayDecomposition, params: CurvatureParams | None = None, tol: float = 0.0,
                     *, z: float = NOISE_Z) -> VerificationReport:
    """Fraction of (ray, bin) checks with ``lhs <= -K + tol + z * sigma``; pass iff >= 95%."""
    params = params or dec.params
    if params is None:
        raise DomainError("curvature parameters are required")
    if not params.N > 1:
        raise DomainError("the density inequality needs N > 1")
    total, good = 0, 0
    worst = -math.inf
    rows = []
    for k, ray in enumerate(dec.rays):
        if ray.check_s.size < MIN_CHECK_BINS:
            raise DomainError(f"ray {k} has {ray.check_s.size} density samples, need {MIN_CHECK_BINS}")
        idx, lhs, sig = cd_lhs(ray.check_s, ray.check_h, params.N, ray.check_counts)
        slack = ROUNDOFF * np.maximum(max(1.0, abs(params.K)), 1.0 / ray.check_s[idx] ** 2)
        ok = lhs <= -params.K + tol + z * sig + slack
        total += idx.size
        good += int(ok.sum())
        if idx.size:
            worst = max(worst, float(np.max(lhs + params.K - z * sig)))
        rows.extend([[k, float(ray.check_s[i]), float(l), float(sg), bool(o)]
                     for i, l, sg, o in zip(idx, lhs, sig, ok)])
    if total == 0:
        raise DomainError("no interior bins with data to check")
    frac = good / total
    return VerificationReport("cd_density", frac, PASS_FRACTION, frac - PASS_FRACTION, 0.0, 0.0,
                              {"K": params.K, "N": params.N, "tol": tol, "z": z, "checks": total,
                               "passed_checks": good, "worst_excess": worst, "table": rows})


def _mcp_side(kappa, x0, x1, N):
    a0 = coef.sin_kappa(kappa, x0)
    a1 = coef.sin_kappa(kappa, x1)
    return (a1 / a0) ** (N - 1.0)


def check_mcp_bound(dec: RayDecomposition, params: CurvatureParams | None = None, a: float = 0.0,
                    b: float = math.inf) -> VerificationReport:
    """Two-sided one-endpoint contraction bounds on density ratios ``h(s1)/h(s0)``."""
    params = params or dec.params
    if params is None:
        raise DomainError("curvature parameters are required")
    N, K = params.N, params.K
    if not N > 1:
        raise DomainError("the contraction bound needs N > 1")
    span = math.pi * math.sqrt((N - 1) / K) if K > 0 else math.inf
    if not b - a <= span or not b > a:
        raise DomainError(f"interval ({a}, {b}) longer than {span}")
    kappa = K / (N - 1)
    total, good = 0, 0
    for ray in dec.rays:
        s, h, c = ray.check_s, ray.check_h, ray.check_counts
        inside = (s > a) & (s < b) & (h > 0)
        ii = np.flatnonzero(inside)
        for p0 in range(ii.size):
            for p1 in range(p0 + 1, ii.size):
                i0, i1 = ii[p0], ii[p1]
                s0, s1 = s[i0], s[i1]
                ratio = h[i1] / h[i0]
                upper = _mcp_side(kappa, s0 - a, s1 - a, N)
                if math.isinf(b):
                    lower = 1.0 if kappa == 0 else math.exp(-math.sqrt(-kappa) * (N - 1) * (s1 - s0)) if kappa < 0 else 0.0
                else:
                    lower = _mcp_side(kappa, b - s0, b - s1, N)
                f = 1.0 + ROUNDOFF if c is None else 1.0 + 5.0 * math.sqrt(1.0 / c[i0] + 1.0 / c[i1])
                total += 1
                good += int(lower / f <= ratio <= upper * f)
    if total == 0:
        raise DomainError("no bin pairs inside the interval")
    frac = good / total
    return VerificationReport("mcp_bound", frac, PASS_FRACTION, frac - PASS_FRACTION, 0.0, 0.0,
                              {"K": K, "N": N, "a": a, "b": b, "pairs": total, "passed_pairs": good})


def fit_power_exponent(dec: RayDecomposition):
    """Pooled least-squares slope of ``log h`` against ``log s`` with per-ray intercepts.

    Returns ``(slope, stderr)``.
    """
    xs, ys, ws = [], [], []
    for ray in dec.rays:
        s, h = ray.check_s, ray.check_h
        c = ray.check_counts
        ok = h > 0
        if ok.sum() < 3:
            continue
        x, y = np.log(s[ok]), np.log(h[ok])
        w = np.ones_like(x) if c is None else c[ok]
        xm = np.sum(w * x) / np.sum(w)
        ym = np.sum(w * y) / np.sum(w)
        xs.append(x - xm)
        ys.append(y - ym)
        ws.append(w)
    x, y, w = np.concatenate(xs), np.concatenate(ys), np.concatenate(ws)
    sxx = float(np.sum(w * x * x))
    slope = float(np.sum(w * x * y) / sxx)
    return slope, math.sqrt(1.0 / sxx)


# ---------------------------------------------------------------------------
# zero-mean localization


@dataclass
class ZeroMeanReport:
    rays: list
    value: float
    passed: bool
    plan: object = None

    def __bool__(self):
        return self.passed


def localize_zero_mean(sample: CausalSample, f, p: float = 1.0, tol: float = BALANCE_TOL) -> ZeroMeanReport:
    """Split a zero-mean function along the transport rays of its positive and negative parts.

    Rays are connected components of the optimal plan's support; each ray's
    balance ``|sum f w|`` must stay below ``tol`` times the ray's mass.
    """
    from .transport import DiscreteMeasure, causal_coupling_exists, plan_components, solve_lp_optimal

    f = np.asarray(f, dtype=float)
    w = sample.weights
    if f.shape != w.shape:
        raise DomainError("f needs one value per event")
    scale = float(np.sum(np.abs(f) * w))
    if scale == 0:
        return ZeroMeanReport([], 0.0, True)
    if abs(float(np.sum(f * w))) > 1e-9 * scale:
        raise DomainError("f does not have zero mean")
    pos, neg = np.flatnonzero(f > 0), np.flatnonzero(f < 0)
    mu = DiscreteMeasure.from_weights(pos, f[pos] * w[pos])
    nu = DiscreteMeasure.from_weights(neg, -f[neg] * w[neg])
    C = sample.causal_between(mu.support, nu.support)
    if not causal_coupling_exists(C, mu.masses, nu.masses):
        raise InfeasibleError("positive and negative parts admit no causal coupling")
    plan = solve_lp_optimal(sample, mu, nu, p)
    nodes, labels, ncomp = plan_components(plan)
    pot = dict(zip(mu.support.tolist(), plan.certificate.get("row_potential", [0.0] * len(mu))))
    rays = []
    for comp in range(ncomp):
        members = nodes[labels == comp]
        bal = float(np.sum(f[members] * w[members]))
        mass = float(np.sum(np.abs(f[members]) * w[members]))
        order = float(np.mean([pot.get(int(i), 0.0) for i in members if f[i] > 0] or [0.0]))
        rays.append({"members": members.tolist(), "balance": bal, "mass": mass,
                     "tolerance": tol * mass, "balanced": abs(bal) <= tol * mass, "potential": order})
    rays.sort(key=lambda r: r["potential"])
    return ZeroMeanReport(rays, plan.value, all(r["balanced"] for r in rays), plan)
