"""Numeric acceptance criteria; each test prints one PASS/FAIL line."""

import math
import time

import numpy as np

import conftest
from lorentz_iso import spacetimes as stm
from lorentz_iso.coefficients import CurvatureParams
from lorentz_iso.content import content_via_rays, future_content
from lorentz_iso.localization import (BALANCE_TOL, PASS_FRACTION, build_ray_decomposition, check_cd_density,
                                      check_mcp_bound, fit_power_exponent, localize_zero_mean)
from lorentz_iso.sampler import RegionDescriptor, sprinkle
from lorentz_iso.transport import brute_force_optimal, check_cyclical_monotonicity, solve_lp_optimal
from lorentz_iso.verify import (check_brunn_minkowski, check_claim_sharp_identity, check_isoperimetric,
                                check_monotonicity, check_schwarzschild_bound, cone_sharpness,
                                point_future_region)
from test_localization import zero_mean_instance
from test_transport import instance


def record(k, ok, detail):
    line = f"CRITERION {k:2d}: {'PASS' if ok else 'FAIL'} {detail}"
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_1_two_dimensional_equality():
    start = time.perf_counter()
    closed, mc = [], []
    for a in (0.5, 1.0, 2.0):
        d = cone_sharpness(1, a)
        lhs, rhs = d["area"] * d["dist"], 2 * d["volume"]
        closed.append(max(abs(lhs - rhs) / rhs, abs(d["area"] - 2 * math.asinh(a)) / d["area"]))
        rep = check_isoperimetric(stm.cone(2, a=a), stm.point(0, 0), stm.hyperboloid(1.0),
                                  CurvatureParams(0, 2), 1_000_000, 1)
        mc.append(abs(rep.lhs - rep.rhs) / rep.rhs)
    elapsed = time.perf_counter() - start
    ok = max(closed) <= 1e-10 and max(mc) <= 0.01 and elapsed < 30
    record(1, ok, f"closed-form rel {max(closed):.1e} <= 1e-10, MC rel {max(mc):.2%} <= 1%, {elapsed:.1f}s < 30s")


def test_criterion_2_sharp_identity():
    start = time.perf_counter()
    err = 0.0
    for n in (2, 3, 4, 5):
        for a in (0.5, 1.0, 2.0, 4.0):
            rep = check_claim_sharp_identity(n, a)
            err = max(err, abs(rep.lhs - a ** n * math.sqrt(1 + a * a)))
    elapsed = time.perf_counter() - start
    record(2, err <= 1e-8 and elapsed < 1, f"max |lhs - a^n sqrt(1+a^2)| {err:.1e} <= 1e-8, {elapsed:.2f}s < 1s")


def test_criterion_3_higher_dimensional_equality():
    start = time.perf_counter()
    d = cone_sharpness(3, 1.0)
    closed = abs(d["area"] - 4 * d["volume"]) / (4 * d["volume"])
    rep = check_isoperimetric(stm.cone(4, a=1.0), stm.point(0, 0, 0, 0), stm.hyperboloid(1.0),
                              CurvatureParams(0, 4), 1_000_000, 2)
    # lhs = Area * dist / 4, rhs = Vol
    rel = abs(rep.lhs - rep.rhs) / rep.rhs
    elapsed = time.perf_counter() - start
    ok = rel <= 0.03 and closed <= 1e-10 and elapsed < 120
    record(3, ok, f"MC |Area - 4 Vol| / 4 Vol {rel:.2%} <= 3% (quadrature {closed:.1e}), {elapsed:.1f}s < 120s")


def test_criterion_4_schwarzschild():
    start = time.perf_counter()
    grid = np.linspace(0, 2, 52)[1:-1]
    reps = check_schwarzschild_bound(1.0, 0.0, 1.0, grid)
    spot = check_schwarzschild_bound(1.0, 0.0, 1.0, [1.0])[0].lhs
    spot_err = abs(spot - 4 * math.pi * (math.pi / 2 - 1))
    elapsed = time.perf_counter() - start
    ok = (len(reps) == 50 and all(r.slack > 0 for r in reps)
          and all(abs(r.rhs - 128 * math.pi / 3) < 1e-10 for r in reps) and spot_err <= 1e-10 and elapsed < 1)
    record(4, ok, f"min slack {min(r.slack for r in reps):.4g} > 0 on 50 points, "
                  f"spot {spot:.6f} err {spot_err:.1e}, {elapsed:.2f}s < 1s")


def test_criterion_5_monotonicity():
    start = time.perf_counter()
    ap = 2.0
    C2 = stm.cone(2, aperture=ap)
    r2 = check_monotonicity(C2, stm.point(0, 0), CurvatureParams(0, 2), np.linspace(0.5, 2.0, 10), 2_000_000, 3)
    C4 = stm.cone(4, aperture=ap)
    r4 = check_monotonicity(C4, stm.point(0, 0, 0, 0), CurvatureParams(0, 4), np.linspace(1.0, 2.0, 10),
                            1_000_000, 4)
    exact = 2 * math.atanh(1 / math.sqrt(ap))
    ratios = [r2[0].rhs] + [r.lhs for r in r2]
    const_err = max(abs(r - exact) / exact for r in ratios)
    elapsed = time.perf_counter() - start
    ok = all(r.passed for r in r2 + r4) and len(r2) == len(r4) == 9 and const_err <= 0.02 and elapsed < 60
    record(5, ok, f"{sum(r.passed for r in r2 + r4)}/18 consecutive ratios within 1 + 4 stderr, "
                  f"2D constant max rel err {const_err:.2%} <= 2%, {elapsed:.1f}s < 60s")


def test_criterion_6_transport_oracle():
    start = time.perf_counter()
    worst, audited, feasible = 0.0, 0, 0
    ok = True
    for seed in range(200):
        k = 1 + seed % 8
        s, mu, nu = instance(seed, k)
        a = solve_lp_optimal(s, mu, nu)
        b = brute_force_optimal(s, mu, nu)
        ok &= a.feasible == b.feasible
        if a.feasible:
            feasible += 1
            worst = max(worst, abs(a.objective - b.objective))
            audit = check_cyclical_monotonicity(a, s, 4)
            ok &= bool(audit)
            audited += 1
    elapsed = time.perf_counter() - start
    ok = ok and worst <= 1e-10 and elapsed < 30
    record(6, ok, f"200 instances ({feasible} feasible): max |LP - brute force| {worst:.1e} <= 1e-10, "
                  f"{audited} plans pass the 4-cycle audit, {elapsed:.1f}s < 30s")


def test_criterion_7_localized_densities():
    start = time.perf_counter()
    parts = []
    ok = True
    for dim in (2, 3, 4):
        C = stm.cone(dim, aperture=2.0)
        V = stm.point(*([0.0] * dim))
        params = CurvatureParams(0, dim)
        dec = build_ray_decomposition(C, V, point_future_region(C, V, 2.5), 100_000, seed=7, params=params)
        cd, mcp = check_cd_density(dec, params), check_mcp_bound(dec, params)
        slope, _ = fit_power_exponent(dec)
        ok &= cd.lhs >= PASS_FRACTION and mcp.lhs >= PASS_FRACTION and abs(slope - (dim - 1)) <= 0.1
        parts.append(f"{dim}D cd {cd.lhs:.1%} mcp {mcp.lhs:.1%} exponent {slope:.3f}")
    elapsed = time.perf_counter() - start
    ok = ok and elapsed < 60
    record(7, ok, "; ".join(parts) + f", {elapsed:.1f}s < 60s")


def test_criterion_8_level_set_content():
    start = time.perf_counter()
    C = stm.cone(2, aperture=2.0)
    V = stm.point(0, 0)
    dec = build_ray_decomposition(C, V, point_future_region(C, V, 2.5), 100_000, seed=8,
                                  params=CurvatureParams(0, 2))
    zs = []
    for t in (0.5, 1.0, 2.0):
        A = stm.tau_level(V, t)
        via, se = content_via_rays(dec, A, return_stderr=True)
        est = future_content(C, A, n_per_eps=100_000, seed=9)
        zs.append(abs(via - est.value) / math.hypot(se, est.stderr))
    elapsed = time.perf_counter() - start
    ok = max(zs) <= 4 and elapsed < 60
    record(8, ok, f"max |direct - rays| / combined stderr {max(zs):.2f} <= 4 at t = 0.5, 1, 2, {elapsed:.1f}s < 60s")


def test_criterion_9_zero_mean_localization():
    start = time.perf_counter()
    worst, rays = 0.0, 0
    ok = True
    for seed in range(50):
        s, f = zero_mean_instance(seed)
        rep = localize_zero_mean(s, f)
        ok &= rep.passed
        for ray in rep.rays:
            rays += 1
            worst = max(worst, abs(ray["balance"]) / ray["mass"])
    elapsed = time.perf_counter() - start
    ok = ok and worst <= BALANCE_TOL and elapsed < 10
    record(9, ok, f"50 functions, {rays} rays, max |balance| / mass {worst:.1e} <= {BALANCE_TOL:g}, "
                  f"{elapsed:.1f}s < 10s")


def test_criterion_10_brunn_minkowski():
    start = time.perf_counter()
    M = stm.minkowski(2)
    s = sprinkle(RegionDescriptor(M, [[-0.3, 0.3], [-0.05, 2.05]]), 20_000, 10)
    P = s.points
    square = lambda lo: np.flatnonzero((np.abs(P[:, 0]) <= 0.25) & (P[:, 1] >= lo) & (P[:, 1] <= lo + 0.5))
    rep = check_brunn_minkowski(s, square(0.0), square(1.5), 0.5, CurvatureParams(0, 2), seed=10)
    rel = abs(rep.lhs - rep.rhs) / rep.rhs
    elapsed = time.perf_counter() - start
    ok = rep.lhs >= rep.rhs - 4 * rep.stderr and rel <= 0.03 and elapsed < 60
    record(10, ok, f"lhs {rep.lhs:.4f} rhs {rep.rhs:.4f} (stderr {rep.stderr:.1e}), rel {rel:.2%} <= 3%, "
                   f"{elapsed:.1f}s < 60s")
