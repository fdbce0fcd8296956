"""End-to-end inequality checks returning ``VerificationReport`` records.

Every check reports ``lhs``, ``rhs`` and a signed ``slack`` oriented so that
the inequality holds when ``slack >= -tolerance``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate, optimize
from scipy.spatial import cKDTree

from . import coefficients as coef
from . import spacetimes as stm
from .coefficients import CurvatureParams
from .content import content_via_rays, future_content
from .errors import DomainError, UnsupportedChartError
from .localization import build_ray_decomposition
from .report import VerificationReport
from .sampler import CausalSample, RegionDescriptor, cone_region, estimate_volume, tau_band

Z_TOL = 4.0
SHARP_TOL = 1e-8
SCHWARZSCHILD_TOL = 1e-12
DIST_GRID = 20_000


# ---------------------------------------------------------------------------
# distance from V to S


def distance_to_set(st, V, S, *, grid: int = DIST_GRID, rtol: float = 1e-6) -> float:
    """``inf_S tau_V`` by a parameter grid over ``S`` and local refinement of the best node."""
    S = stm.reduce_set(st, S)
    k = stm.set_dimension(st, S)
    if k == 0:
        return float(stm.tau_signed_array(st, V, stm.set_points(st, S, np.zeros((1, 1))))[0])
    per = max(2, int(round(grid ** (1.0 / k))))
    axes = [np.linspace(0.0, 1.0, per)] * k
    U = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, k)
    vals = stm.tau_signed_array(st, V, stm.set_points(st, S, U))
    best = int(np.argmin(vals))
    f = lambda u: float(stm.tau_signed_array(st, V, stm.set_points(st, S, np.clip(u, 0, 1)[None, :]))[0])
    res = optimize.minimize(f, U[best], method="Powell", bounds=[(0.0, 1.0)] * k,
                            options={"xtol": 1e-10, "ftol": rtol * 1e-3})
    return float(min(vals[best], res.fun))


def _region_box(st, V, S, pad=0.02):
    rng = np.random.default_rng(12345)
    pts = [stm.sample_set(st, V, 4000, rng), stm.sample_set(st, S, 4000, rng)]
    P = np.vstack(pts)
    lo, hi = P.min(axis=0), P.max(axis=0)
    span = np.maximum(hi - lo, 1e-9 * max(1.0, float(np.abs(P).max())))
    if st.kind in ("minkowski", "cone"):
        return [[float(a), float(b)] for a, b in zip(lo, hi)]
    return [[float(a - pad * s), float(b + pad * s)] for a, b, s in zip(lo, hi, span)]


# ---------------------------------------------------------------------------
# isoperimetric inequality


def check_isoperimetric(st, V, S, params: CurvatureParams, n: int, seed: int, *,
                        eps_grid=(0.02, 0.01), n_content: int | None = None,
                        window: RegionDescriptor | None = None) -> VerificationReport:
    """``content(S) * D_{K,N}(dist(V, S)) <= vol(C(V, S))`` within 4 standard errors."""
    V = stm.reduce_set(st, V)
    S = stm.reduce_set(st, S)
    stm.validate_achronal(st, V)
    stm.validate_achronal(st, S)
    probe = stm.sample_set(st, S, 2000, np.random.default_rng(seed))
    if not np.all(stm.tau_signed_array(st, V, probe) > 0):
        raise DomainError("S is not contained in the chronological future of V")
    dist = distance_to_set(st, V, S)
    D = coef.profile_D(params, dist)
    est = future_content(st, S, window, eps_grid, n_content or n, seed)
    region = RegionDescriptor(st, _region_box(st, V, S), (cone_region(V, S),))
    vol, vol_se = estimate_volume(region, n, seed + 1)
    lhs = est.value * D
    stderr = math.hypot(D * est.stderr, vol_se)
    return VerificationReport("isoperimetric", lhs, vol, vol - lhs, Z_TOL * stderr, stderr,
                              {"spacetime": st.to_dict(), "V": V.to_dict(), "S": S.to_dict(),
                               "params": params.to_dict(), "n": n, "seed": seed, "dist": dist,
                               "profile_D": D, "content": est.value, "content_stderr": est.stderr,
                               "volume": vol, "volume_stderr": vol_se,
                               "monotone_trend": est.monotone_trend})


def cone_sharpness(n: int, a: float) -> dict:
    """Area of the unit hyperboloid cap and volume of its cone in the truncated ``a``-cone.

    Both are computed by one-dimensional quadrature in independent coordinates:
    the area in rapidity, the volume in the spatial radius.
    """
    if n < 1 or not a > 0:
        raise DomainError("need n >= 1 and a > 0")
    omega = 2.0 if n == 1 else 2 * math.pi ** (n / 2) / math.gamma(n / 2)
    area = omega * integrate.quad(lambda p: math.sinh(p) ** (n - 1), 0.0, math.asinh(a),
                                  epsabs=0, epsrel=1e-13)[0]
    slope = math.sqrt(1 + a * a) / a
    vol = omega * integrate.quad(lambda r: r ** (n - 1) * (math.sqrt(1 + r * r) - slope * r), 0.0, a,
                                 epsabs=0, epsrel=1e-13)[0]
    return {"area": area, "volume": vol, "dist": 1.0, "N": n + 1}


def isoperimetric_suite(model: str, count: int = 20, seed: int = 0, n: int = 20_000) -> list:
    """Randomized ``(V, S)`` configurations with K = 0, N = dim."""
    rng = np.random.default_rng(seed)
    reports = []
    for k in range(count):
        st, V, S = _random_configuration(model, rng)
        params = CurvatureParams(0.0, float(st.dim))
        rep = check_isoperimetric(st, V, S, params, n, seed * 1000 + k)
        rep.metadata["model"] = model
        reports.append(rep)
    return reports


def _random_configuration(model, rng):
    if model == "minkowski":
        dim = int(rng.choice([2, 3]))
        st = stm.minkowski(dim)
        V = stm.point(*([0.0] * dim))
        if rng.random() < 0.5:
            S = stm.hyperboloid(float(rng.uniform(0.5, 2.0)), max_rapidity=float(rng.uniform(0.3, 1.2)))
        else:
            h = float(rng.uniform(0.5, 2.0))
            S = stm.coordinate_slice(h, radius=float(h * rng.uniform(0.2, 0.8)))
        return st, V, S
    if model == "cone":
        dim = int(rng.choice([2, 3]))
        st = stm.cone(dim, aperture=float(rng.uniform(1.5, 4.0)))
        V = stm.point(*([0.0] * dim))
        if rng.random() < 0.5:
            S = stm.hyperboloid(float(rng.uniform(0.5, 2.0)))
        else:
            S = stm.coordinate_slice(float(rng.uniform(0.5, 2.0)))
        return st, V, S
    if model == "warped":
        st = stm.warped_product(2, "linear", fiber="circle")
        r0 = float(rng.uniform(0.5, 1.5))
        return st, stm.coordinate_slice(r0), stm.coordinate_slice(r0 + float(rng.uniform(0.2, 1.5)))
    raise DomainError(f"unknown model {model!r}")


# ---------------------------------------------------------------------------
# monotonicity of level-set contents


def point_future_region(st, V, T: float, direction: str = "future") -> RegionDescriptor:
    """Coordinate box of ``{0 < +-tau_V < T}`` for a point ``V`` in a cone chart."""
    V = stm.reduce_set(st, V)
    if st.kind != "cone" or V.kind != "point":
        raise UnsupportedChartError("automatic regions exist only for points in cone charts")
    v = stm.cone_speed(st)
    c = np.asarray(V.params["coords"], dtype=float)
    half = min(T * v / math.sqrt(1 - v * v), stm.cone_truncation(st))
    height = T / math.sqrt(1 - v * v)
    bounds = [[ci - half, ci + half] for ci in c[:-1]]
    bounds.append([c[-1], c[-1] + height] if direction == "future" else [c[-1] - height, c[-1]])
    band = tau_band(V, 0.0, T) if direction == "future" else tau_band(V, -T, 0.0)
    return RegionDescriptor(st, bounds, (band,))


def check_monotonicity(st, V, params: CurvatureParams, t_grid, n: int, seed: int, *,
                       region: RegionDescriptor | None = None, direction: str = "future",
                       bins: int = 16) -> list:
    """Ratios ``content(V_t) / s_{K/(N-1)}(t)^{N-1}`` must not increase along ``t_grid``.

    ``t_grid`` holds magnitudes ``|tau_V|``; in the past direction the level
    sets sit at ``tau_V = -t`` and the same non-increase in ``t`` is checked
    (non-decrease in ``tau_V``).
    """
    t_grid = [float(t) for t in t_grid]
    if any(t <= 0 for t in t_grid) or any(b <= a for a, b in zip(t_grid, t_grid[1:])):
        raise DomainError("t_grid must be positive and strictly increasing")
    if len(t_grid) < 2:
        return [VerificationReport("monotonicity", 0.0, 0.0, 0.0, 0.0, 0.0,
                                   {"t_grid": t_grid, "vacuous": True, "seed": seed})]
    if region is None:
        region = point_future_region(st, V, 1.25 * t_grid[-1], direction)
    dec = build_ray_decomposition(st, V, region, n, bins=bins, seed=seed, params=params,
                                  direction=direction)
    if t_grid[-1] >= dec.meta["s_hi"] or t_grid[0] <= dec.meta["s_lo"]:
        raise DomainError(f"t_grid outside the sampled ray range ({dec.meta['s_lo']:.3g}, {dec.meta['s_hi']:.3g})")
    kappa = params.kappa if params.N > 1 else 0.0
    sign = 1.0 if direction == "future" else -1.0
    ratios = []
    for t in t_grid:
        val, se = content_via_rays(dec, stm.tau_level(V, sign * t), return_stderr=True)
        norm = abs(float(coef.sin_kappa(kappa, sign * t))) ** (params.N - 1)
        ratios.append((t, val / norm, se / norm))
    reports = []
    for (t0, r0, s0), (t1, r1, s1) in zip(ratios, ratios[1:]):
        rel = math.hypot(s0 / r0, s1 / r1) if r0 > 0 and r1 > 0 else math.inf
        # r1 <= r0 (1 + 4 rel)
        reports.append(VerificationReport(
            "monotonicity", r1, r0, r0 - r1, Z_TOL * rel * r0, math.hypot(s0, s1),
            {"t0": t0, "t1": t1, "direction": direction, "params": params.to_dict(),
             "spacetime": st.to_dict(), "V": stm.reduce_set(st, V).to_dict(), "n": n, "seed": seed,
             "ratio_stderr": [s0, s1]}))
    return reports


# ---------------------------------------------------------------------------
# closed-form checks


def check_claim_sharp_identity(n: int, a: float) -> VerificationReport:
    """Quadrature of ``n (x^2-1)^{(n-2)/2} + (n+1)(x^2-1)^{n/2}`` over ``[1, sqrt(1+a^2)]``."""
    if n < 2 or not a >= 0:
        raise DomainError("need n >= 2 and a >= 0")
    top = math.sqrt(1 + a * a)
    # integrate in u = x - 1 so that x^2 - 1 = u (u + 2) has no cancellation near x = 1
    span = a * a / (1 + top)

    def f(u):
        y = u * (u + 2)
        return n * y ** ((n - 2) / 2) + (n + 1) * y ** (n / 2)

    if span == 0:
        lhs = 0.0
    elif n % 2:
        # u^{(n-2)/2} endpoint singularity for odd n goes into the algebraic weight
        g = lambda u: n * (u + 2) ** ((n - 2) / 2) + (n + 1) * (u + 2) ** (n / 2) * u
        lhs = integrate.quad(g, 0.0, span, weight="alg", wvar=((n - 2) / 2, 0.0),
                             epsabs=0, epsrel=1e-12, limit=200)[0]
    else:
        lhs = integrate.quad(f, 0.0, span, epsabs=0, epsrel=1e-12, limit=200)[0]
    rhs = a ** n * top
    return VerificationReport("sharp_identity", lhs, rhs, -abs(lhs - rhs), SHARP_TOL, 0.0,
                              {"n": n, "a": a})


def check_schwarzschild_bound(m: float, a: float, b: float, r0_grid) -> list:
    """``Area(r = r0) * tau_to_singularity(r0) <= 4 * vol(slab)`` per ``r0`` (N = 4, K = 0)."""
    r0_grid = [float(r) for r in r0_grid]
    if any(not 0 < r < 2 * m for r in r0_grid):
        raise DomainError("r0 must lie in (0, 2m)")
    rhs = 4.0 * stm.schwarzschild_slab_volume(m, a, b)
    out = []
    for r0 in r0_grid:
        lhs = stm.schwarzschild_slice_area(m, r0, a, b) * stm.schwarzschild_tau_to_singularity(m, r0)
        out.append(VerificationReport("schwarzschild_bound", lhs, rhs, rhs - lhs,
                                      SCHWARZSCHILD_TOL * max(1.0, rhs), 0.0,
                                      {"m": m, "a": a, "b": b, "r0": r0}))
    return out


# ---------------------------------------------------------------------------
# Brunn-Minkowski


def _set_measure(sample, idx):
    idx = np.asarray(idx)
    if idx.size <= 1:
        return 0.0, 0.0
    w = sample.weights[idx]
    total = sample.total_mass
    frac = w.sum() / total
    return float(w.sum()), float(total * math.sqrt(frac * (1 - frac) / len(sample)))


def check_brunn_minkowski(sample: CausalSample, A0, A1, t: float, params: CurvatureParams,
                          p: float = 0.5, *, cover_factor: float = 1.0, max_pairs: int = 400_000,
                          seed: int = 0) -> VerificationReport:
    """``m(A_t)^{1/N} >= tau_coeff(1-t) m(A0)^{1/N} + tau_coeff(t) m(A1)^{1/N}``.

    ``A_t`` is estimated by an epsilon-cover: sample points within ``eps`` of
    the ``t``-intermediate points of the product coupling, with ``eps`` equal to
    ``cover_factor`` times the mean sample spacing.
    """
    if not 0 <= t <= 1:
        raise DomainError("t must lie in [0, 1]")
    st = sample.st
    A0, A1 = np.asarray(A0, dtype=int), np.asarray(A1, dtype=int)
    N = params.N
    meta = {"t": t, "p": p, "params": params.to_dict(), "n": len(sample), "seed": sample.seed,
            "sizes": [int(A0.size), int(A1.size)]}
    if A0.size <= 1 and A1.size <= 1:
        meta["vacuous"] = True
        return VerificationReport("brunn_minkowski", 0.0, 0.0, 0.0, 0.0, 0.0, meta)
    T = sample.tau_between(A0, A1)
    if not np.all(T > 0):
        raise DomainError("A0 x A1 is not chronological; dualisability is not guaranteed")
    theta_sup, theta_inf = float(T.max()), float(T.min())
    theta = theta_sup if params.K < 0 else theta_inf
    m0, s0 = _set_measure(sample, A0)
    m1, s1 = _set_measure(sample, A1)
    rng = np.random.default_rng(seed)
    npairs = A0.size * A1.size
    if npairs <= max_pairs:
        I, J = np.meshgrid(A0, A1, indexing="ij")
        I, J = I.ravel(), J.ravel()
    else:
        I, J = rng.choice(A0, max_pairs), rng.choice(A1, max_pairs)
    P = sample.points
    images = stm.geodesic_array(st, P[I], P[J], t)
    box = np.ptp(P, axis=0)
    spacing = float((np.prod(box[box > 0]) / len(sample)) ** (1.0 / st.dim))
    eps = cover_factor * spacing
    hit, _ = cKDTree(images).query(P, k=1, distance_upper_bound=eps)
    covered = np.isfinite(hit)
    mt, st_err = _set_measure(sample, np.flatnonzero(covered))
    c0 = coef.tau_coeff(params, 1 - t, theta)
    c1 = coef.tau_coeff(params, t, theta)
    lhs = mt ** (1 / N)
    rhs = c0 * m0 ** (1 / N) + c1 * m1 ** (1 / N)
    d = lambda m, s: 0.0 if m <= 0 else s * m ** (1 / N - 1) / N
    stderr = math.sqrt(d(mt, st_err) ** 2 + (c0 * d(m0, s0)) ** 2 + (c1 * d(m1, s1)) ** 2)
    meta.update({"theta": theta, "theta_sup": theta_sup, "theta_inf": theta_inf,
                 "theta_rule": "sup" if params.K < 0 else "inf", "eps": eps,
                 "measure_At": mt, "measure_A0": m0, "measure_A1": m1, "pairs": int(I.size)})
    return VerificationReport("brunn_minkowski", lhs, rhs, lhs - rhs, Z_TOL * stderr, stderr, meta)
