import math

import numpy as np
import pytest

from lorentz_iso import spacetimes as stm
from lorentz_iso.content import (_monotone, content_via_rays, default_windows, future_content, one_d_content,
                                 past_content)
from lorentz_iso.coefficients import CurvatureParams
from lorentz_iso.errors import DomainError
from lorentz_iso.localization import build_ray_decomposition
from lorentz_iso.sampler import RegionDescriptor
from lorentz_iso.verify import point_future_region


@pytest.fixture(scope="module")
def cone_dec():
    C = stm.cone(2, aperture=2.0)
    V = stm.point(0, 0)
    return C, V, build_ray_decomposition(C, V, point_future_region(C, V, 2.5), 100_000, seed=1,
                                         params=CurvatureParams(0, 2))


def test_slice_content_in_a_box_is_the_cross_section():
    M = stm.minkowski(3)
    U = RegionDescriptor(M, [[-1, 1], [0, 3], [0.5, 1.5]])
    est = future_content(M, stm.coordinate_slice(1.0), U, n_per_eps=20_000)
    assert abs(est.value - 6.0) <= 3 * est.stderr + 1e-9
    assert all(v > 0 for _, v, _ in est.per_eps)


def test_hyperboloid_content_in_truncated_cone():
    C = stm.cone(2, a=1.0)
    est = future_content(C, stm.hyperboloid(1.0), n_per_eps=200_000, seed=3)
    assert abs(est.value - 2 * math.asinh(1.0)) <= 3 * est.stderr
    assert est.monotone_trend


@pytest.mark.parametrize("t", [0.5, 1.5])
def test_level_set_content_in_aperture_cone(t):
    a = 3.0
    C = stm.cone(2, aperture=a)
    est = future_content(C, stm.tau_level(stm.point(0, 0), t), n_per_eps=200_000, seed=4)
    assert abs(est.value - 2 * math.atanh(1 / math.sqrt(a)) * t) <= 3 * est.stderr


def test_per_eps_is_stable_for_smooth_sets():
    C = stm.cone(3, aperture=2.0)
    est = future_content(C, stm.hyperboloid(1.0), eps_grid=(0.04, 0.02, 0.01), n_per_eps=100_000, seed=2)
    vals = [v for _, v, _ in est.per_eps]
    assert (max(vals) - min(vals)) / est.value <= 0.05


def test_past_content_mirrors_future_in_minkowski():
    M = stm.minkowski(2)
    S = stm.coordinate_slice(1.0, radius=1.0)
    f = future_content(M, S, n_per_eps=50_000, seed=5)
    p = past_content(M, S, n_per_eps=50_000, seed=5)
    assert p.side == "past"
    assert abs(f.value - p.value) <= 4 * math.hypot(f.stderr, p.stderr) + 1e-12
    assert abs(f.value - 2.0) <= 4 * f.stderr


def test_point_content_is_zero():
    est = future_content(stm.minkowski(2), stm.point(0, 0))
    assert est.value == 0.0


def test_bad_grids():
    M = stm.minkowski(2)
    with pytest.raises(DomainError):
        future_content(M, stm.coordinate_slice(0.0, radius=1.0), eps_grid=(0.01,))
    with pytest.raises(DomainError):
        future_content(M, stm.coordinate_slice(0.0, radius=1.0), side="up")


def test_default_windows_shrink():
    M = stm.minkowski(2)
    wins = default_windows(M, stm.coordinate_slice(0.0, radius=1.0))
    vols = [w.box_volume for w in wins]
    assert vols == sorted(vols, reverse=True)


def test_monotone_trend_flag():
    assert _monotone([(0.01, 1.0, 0.001), (0.02, 1.1, 0.001), (0.04, 1.2, 0.001)])
    assert not _monotone([(0.01, 1.0, 0.001), (0.02, 1.5, 0.001), (0.04, 1.0, 0.001)])


def test_one_d_content_examples():
    assert one_d_content([(0, 1.0), (5, 1.0)], 2.0) == 1.0
    assert one_d_content([(1, 1.0), (3, 3.0)], 2.0) == 2.0
    f = lambda s: math.exp(-s) * (1 + s)
    table = [(s, f(s)) for s in np.linspace(0, 3, 3001)]
    assert one_d_content(table, 1.3) == pytest.approx(f(1.3), rel=1e-6)
    assert one_d_content([(1, 1.0), (4, 8.0)], 2.0, log=True) == pytest.approx(2.0 ** 1.5)
    assert one_d_content([(1, 1.0), (3, 3.0)], 3.0, side="past") == 3.0


@pytest.mark.parametrize("s0,side", [(3.0, "future"), (1.0, "past"), (0.5, "future"), (2.0, "left")])
def test_one_d_content_boundaries(s0, side):
    with pytest.raises(DomainError):
        one_d_content([(1, 1.0), (3, 3.0)], s0, side=side)


def test_level_set_identity_via_rays(cone_dec):
    C, V, dec = cone_dec
    for t in (0.7, 1.6):
        A = stm.tau_level(V, t)
        via, se = content_via_rays(dec, A, return_stderr=True)
        est = future_content(C, A, n_per_eps=100_000, seed=6)
        assert abs(via - est.value) <= 4 * math.hypot(se, est.stderr)


def test_rays_give_upper_bound_for_flat_caps(cone_dec):
    C, V, dec = cone_dec
    A = stm.coordinate_slice(1.5)
    via, se = content_via_rays(dec, A, return_stderr=True)
    est = future_content(C, A, n_per_eps=100_000, seed=7)
    assert est.value <= via + 4 * math.hypot(se, est.stderr)


def test_sets_beyond_every_ray_have_no_content(cone_dec):
    C, V, dec = cone_dec
    assert content_via_rays(dec, stm.tau_level(V, 50.0)) == 0.0
    assert content_via_rays(dec, stm.coordinate_slice(100.0)) == 0.0
