import csv
import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from lorentz_iso import spacetimes as stm
from lorentz_iso.coefficients import CurvatureParams
from lorentz_iso.errors import DomainError
from lorentz_iso.report import VerificationReport, reports_to_csv, reports_to_json
from lorentz_iso.sampler import RegionDescriptor, sprinkle
from lorentz_iso.verify import (check_brunn_minkowski, check_claim_sharp_identity, check_isoperimetric,
                                check_monotonicity, check_schwarzschild_bound, cone_sharpness,
                                distance_to_set, isoperimetric_suite)


def antiderivative_identity(n, a):
    # d/dx [x (x^2 - 1)^(n/2)] is the integrand, so the integral is a^n sqrt(1 + a^2)
    F = lambda x: x * max(x * x - 1, 0.0) ** (n / 2)
    return F(math.sqrt(1 + a * a)) - F(1.0)


@given(st.integers(2, 7), st.floats(0.0, 5.0))
def test_report_flag_recomputable(n, a):
    rep = check_claim_sharp_identity(n, a)
    assert rep.passed == (rep.slack >= -rep.tolerance)
    assert rep.passed


@pytest.mark.parametrize("n,a", [(2, 1.0), (3, 2.0), (5, 4.0), (4, 0.5)])
def test_sharp_identity_against_antiderivative(n, a):
    rep = check_claim_sharp_identity(n, a)
    assert abs(rep.lhs - antiderivative_identity(n, a)) < 1e-8
    assert rep.rhs == pytest.approx(a ** n * math.sqrt(1 + a * a))


def test_sharp_identity_limits():
    assert check_claim_sharp_identity(3, 2.0).rhs == pytest.approx(8 * math.sqrt(5))
    rep = check_claim_sharp_identity(2, 0.0)
    assert rep.lhs == 0.0 and rep.rhs == 0.0
    with pytest.raises(DomainError):
        check_claim_sharp_identity(1, 1.0)


def test_schwarzschild_spot_and_limits():
    rep = check_schwarzschild_bound(1.0, 0.0, 1.0, [1.0])[0]
    assert rep.lhs == pytest.approx(4 * math.pi * (math.pi / 2 - 1), abs=1e-10)
    assert rep.rhs == pytest.approx(128 * math.pi / 3)
    edge = check_schwarzschild_bound(1.0, 0.0, 1.0, [1e-8, 2 - 1e-10])
    assert all(r.passed for r in edge) and max(r.lhs for r in edge) < 1e-2
    with pytest.raises(DomainError):
        check_schwarzschild_bound(1.0, 0.0, 1.0, [2.0])


@given(st.floats(0.2, 5.0), st.floats(0.01, 0.999))
def test_schwarzschild_bound_everywhere(m, frac):
    rep = check_schwarzschild_bound(m, 0.0, 2.0, [2 * m * frac])[0]
    assert rep.passed and rep.slack > 0


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
def test_cone_sharpness_closed_form(a):
    d = cone_sharpness(1, a)
    assert d["area"] == pytest.approx(2 * math.asinh(a), rel=1e-12)
    assert d["area"] * d["dist"] == pytest.approx(2 * d["volume"], rel=1e-10)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_cone_sharpness_higher_dimensions(n):
    d = cone_sharpness(n, 1.3)
    assert d["area"] == pytest.approx((n + 1) * d["volume"], rel=1e-10)


def test_distance_to_set():
    M = stm.minkowski(3)
    assert distance_to_set(M, stm.point(0, 0, 0), stm.hyperboloid(1.7, max_rapidity=1.0)) == pytest.approx(1.7)
    d = distance_to_set(M, stm.point(0, 0, 0), stm.coordinate_slice(2.0, radius=1.0))
    assert d == pytest.approx(math.sqrt(3.0), rel=1e-6)


def test_isoperimetric_equality_and_strict_cases():
    C = stm.cone(2, a=1.0)
    V = stm.point(0, 0)
    eq = check_isoperimetric(C, V, stm.hyperboloid(1.0), CurvatureParams(0, 2), 200_000, 0)
    assert eq.passed and abs(eq.slack) <= 4 * eq.stderr
    assert eq.rhs == pytest.approx(math.asinh(1.0), abs=4 * eq.stderr)
    cap = check_isoperimetric(C, V, stm.coordinate_slice(1.2), CurvatureParams(0, 2), 200_000, 0)
    assert cap.passed and cap.slack > 4 * cap.stderr


@pytest.mark.slow
@pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("dim", [2, 3, 4])
def test_equality_detection_family(a, dim):
    C = stm.cone(dim, a=a)
    rep = check_isoperimetric(C, stm.point(*([0.0] * dim)), stm.hyperboloid(1.0),
                              CurvatureParams(0, dim), 200_000, 11)
    assert abs(rep.slack) <= 4 * rep.stderr


def test_isoperimetric_rejects_sets_outside_the_future():
    M = stm.minkowski(2)
    with pytest.raises(DomainError):
        check_isoperimetric(M, stm.point(0, 0), stm.coordinate_slice(0.5, radius=1.0), CurvatureParams(0, 2), 1000, 0)


@pytest.mark.slow
@pytest.mark.parametrize("model", ["minkowski", "cone", "warped"])
def test_randomized_isoperimetric_suite(model):
    reps = isoperimetric_suite(model, 20, seed=3, n=20_000)
    assert len(reps) == 20 and all(r.passed for r in reps)


def test_monotonicity_vacuous_and_bad_grid():
    C = stm.cone(2, aperture=2.0)
    V = stm.point(0, 0)
    reps = check_monotonicity(C, V, CurvatureParams(0, 2), [1.0], 1000, 0)
    assert len(reps) == 1 and reps[0].passed and reps[0].metadata["vacuous"]
    with pytest.raises(DomainError):
        check_monotonicity(C, V, CurvatureParams(0, 2), [1.0, 0.5], 1000, 0)


def test_monotonicity_past_mirror():
    M = stm.minkowski(2)
    region = RegionDescriptor(M, [[-1, 1], [-3, 0]])
    grid = np.linspace(0.3, 1.5, 6)
    reps = check_monotonicity(M, stm.point(0, 0), CurvatureParams(0, 2), grid, 100_000, 0,
                              region=region, direction="past")
    assert all(r.passed for r in reps)
    # content of the hyperbola arc inside |x| <= 1 over t is 2 asinh(1/t)
    for r in reps:
        assert r.lhs == pytest.approx(2 * math.asinh(1 / r.metadata["t1"]), rel=0.05)


def squares(n, seed, gap=1.5):
    M = stm.minkowski(2)
    s = sprinkle(RegionDescriptor(M, [[-0.3, 0.3], [-0.05, gap + 0.55]]), n, seed)
    P = s.points
    sq = lambda lo: np.flatnonzero((np.abs(P[:, 0]) <= 0.25) & (P[:, 1] >= lo) & (P[:, 1] <= lo + 0.5))
    return s, sq(0.0), sq(gap)


def test_brunn_minkowski_time_translates():
    s, A0, A1 = squares(20_000, 1)
    rep = check_brunn_minkowski(s, A0, A1, 0.5, CurvatureParams(0, 2))
    assert rep.passed and abs(rep.lhs - rep.rhs) / rep.rhs <= 0.03
    assert rep.metadata["theta_rule"] == "inf"
    assert rep.metadata["theta_inf"] <= rep.metadata["theta_sup"]


def test_brunn_minkowski_flat_rhs_is_linear():
    s, A0, A1 = squares(5000, 2)
    rep = check_brunn_minkowski(s, A0, A1, 0.3, CurvatureParams(0, 2))
    m0, m1 = rep.metadata["measure_A0"], rep.metadata["measure_A1"]
    assert rep.rhs == pytest.approx(0.7 * math.sqrt(m0) + 0.3 * math.sqrt(m1))


def test_brunn_minkowski_negative_curvature_uses_sup():
    s, A0, A1 = squares(5000, 3)
    rep = check_brunn_minkowski(s, A0, A1, 0.5, CurvatureParams(-1, 2))
    assert rep.metadata["theta"] == rep.metadata["theta_sup"]


def test_brunn_minkowski_degenerate_inputs():
    s, A0, A1 = squares(5000, 4)
    rep = check_brunn_minkowski(s, A0[:1], A0[:1], 0.5, CurvatureParams(0, 2))
    assert rep.passed and rep.lhs == 0 and rep.rhs == 0
    s, A0, A1 = squares(5000, 4, gap=0.6)
    with pytest.raises(DomainError):
        check_brunn_minkowski(s, A0, A1, 0.5, CurvatureParams(0, 2))


def test_report_serialization_roundtrip():
    r = VerificationReport("x", 1.0, 2.0, 1.0, 0.1, 0.05, {"arr": np.arange(2), "inf": math.inf})
    d = json.loads(reports_to_json([r]))[0]
    assert d["pass"] is True and d["metadata"]["arr"] == [0, 1] and d["metadata"]["inf"] == "inf"
    back = VerificationReport.from_dict(d)
    assert back.passed == r.passed and back.slack == r.slack
    rows = list(csv.reader(io.StringIO(reports_to_csv([r]))))
    assert rows[0] == ["name", "lhs", "rhs", "slack", "stderr", "pass"] and rows[1][-1] == "true"
    with pytest.raises(ValueError):
        VerificationReport("x", 0, 0, 0, 0, -1.0)
    assert not VerificationReport("y", 2.0, 1.0, -1.0, 0.5).passed
