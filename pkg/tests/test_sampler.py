import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lorentz_iso import spacetimes as stm
from lorentz_iso.errors import DegenerateRegionError, DomainError
from lorentz_iso.sampler import (CausalSample, RegionDescriptor, bounding_box, estimate_volume, sprinkle,
                                 tau_band)


def diamond(dim=2):
    M = stm.minkowski(dim)
    lo, hi = stm.point(*([0.0] * dim)), stm.point(*([0.0] * (dim - 1) + [2.0]))
    return RegionDescriptor(M, [[-1, 1]] * (dim - 1) + [[0, 2]],
                            (tau_band(lo, 0.0, math.inf), tau_band(hi, -math.inf, 0.0)))


def test_region_validation_and_roundtrip():
    M = stm.minkowski(2)
    with pytest.raises(DomainError):
        RegionDescriptor(M, [[0, 1]])
    with pytest.raises(DomainError):
        RegionDescriptor(M, [[0, 1], [1, 0]])
    R = diamond()
    R2 = RegionDescriptor.from_dict(R.to_dict())
    X = np.random.default_rng(0).uniform(-1, 2, (500, 2))
    np.testing.assert_array_equal(R.indicator(X), R2.indicator(X))


def test_unknown_constraint():
    R = RegionDescriptor(stm.minkowski(2), [[0, 1], [0, 1]], ({"kind": "blob"},))
    with pytest.raises(DomainError):
        R.indicator(np.zeros((3, 2)))


def test_plain_box_volume_is_exact():
    R = RegionDescriptor(stm.minkowski(3), [[0, 1], [0, 2], [0, 3]])
    s = sprinkle(R, 1000, 0)
    assert s.total_mass == pytest.approx(6.0) and s.volume_stderr == 0.0
    assert np.all(R.indicator(s.points))


def test_diamond_volume_estimate():
    s = sprinkle(diamond(), 40_000, 1)
    assert abs(s.total_mass - 2.0) < 4 * s.volume_stderr + 1e-12
    v, se = estimate_volume(diamond(), 200_000, 2)
    assert abs(v - 2.0) < 4 * se


def test_warped_and_schwarzschild_volumes():
    W = stm.warped_product(2, "sinh", fiber="circle", radius=1.0)
    R = RegionDescriptor(W, [[0, 2 * math.pi], [0.5, 1.5]])
    v, se = estimate_volume(R, 200_000, 0)
    exact = 2 * math.pi * (math.cosh(1.5) - math.cosh(0.5))
    assert abs(v - exact) < 4 * se
    S = stm.schwarzschild_interior(1.0)
    R = RegionDescriptor(S, [[0, 1], [1e-9, 2.0], [0, math.pi], [0, 2 * math.pi]])
    s = sprinkle(R, 50_000, 3)
    assert abs(s.total_mass - 32 * math.pi / 3) < 4 * s.volume_stderr


def test_sprinkle_is_deterministic_and_thread_independent(monkeypatch):
    a = sprinkle(diamond(), 2000, 7, workers=4)
    monkeypatch.setenv("LORENTZ_ISO_THREADS", "4")
    b = sprinkle(diamond(), 2000, 7, workers=4)
    np.testing.assert_array_equal(a.points, b.points)
    c = sprinkle(diamond(), 2000, 8, workers=4)
    assert not np.array_equal(a.points, c.points)


def test_degenerate_region():
    M = stm.minkowski(2)
    R = RegionDescriptor(M, [[0, 1], [0, 1]], (tau_band(stm.point(0, 0), 5.0, 6.0),))
    with pytest.raises(DegenerateRegionError):
        sprinkle(R, 10, 0, batch=1024)
    with pytest.raises(DegenerateRegionError):
        estimate_volume(R, 100, 0)
    with pytest.raises(DomainError):
        sprinkle(R, 0, 0)


@settings(max_examples=20)
@given(st.integers(2, 40), st.integers(0, 10_000))
def test_matrices_are_consistent(n, seed):
    s = sprinkle(diamond(), n, seed)
    T, C = s.tau_matrix, s.causal_matrix
    assert np.all(np.diag(T) == 0) and np.all(np.diag(C))
    assert not np.any((T > 0) & (T.T > 0))
    assert np.all(C[T > 0])
    i = np.arange(min(n, 5))
    np.testing.assert_allclose(s.tau_between(i, i), T[np.ix_(i, i)])


def test_jsonl_roundtrip_and_subset():
    s = sprinkle(diamond(3), 50, 4)
    r = CausalSample.from_jsonl(s.to_jsonl())
    np.testing.assert_array_equal(r.points, s.points)
    np.testing.assert_array_equal(r.weights, s.weights)
    assert r.st == s.st and r.seed == 4
    sub = s.subset([0, 2])
    assert len(sub) == 2 and len(CausalSample.concat([sub, sub])) == 4
    with pytest.raises(DomainError):
        CausalSample(s.st, s.points, -s.weights)


def test_bounding_box():
    box = bounding_box([[0, 0], [1, 2]], pad=0.1)
    assert box == [[-0.1, 1.1], [-0.2, 2.2]]
