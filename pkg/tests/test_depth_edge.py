import numpy as np
import pytest
from hypothesis import given, strategies as st

from fded.depth_edge import (
    AdaptiveThresholdParams,
    ParameterError,
    adaptive_threshold_map,
    depth_edge_detect,
    gaussian_window,
)

import oracles

seeds = st.integers(0, 2**32 - 1)


@pytest.mark.parametrize("w,sigma", [(3, 0.5), (5, 1.0), (9, 2.25), (13, 3.25), (7, 100.0)])
def test_window_normalised_symmetric_peaked(w, sigma):
    g = gaussian_window(w, sigma)
    assert abs(g.sum() - 1.0) < 1e-12
    assert np.array_equal(g, g[::-1, :]) and np.array_equal(g, g[:, ::-1]) and np.array_equal(g, g.T)
    assert g[w // 2, w // 2] == g.max()


def test_window_flat_limit():
    assert np.allclose(gaussian_window(3, 1e6), 1 / 9, atol=1e-12)


def test_window_monotone_from_centre():
    g = gaussian_window(3, 0.8)
    assert g[1, 1] >= g[1, 2] == g[2, 1] == g[1, 0] == g[0, 1]


def test_window_matches_formula():
    assert np.allclose(gaussian_window(9, 2.25), oracles.gaussian_weights(9, 2.25), atol=1e-15)


@pytest.mark.parametrize("w", [1, 2, 4, 8])
def test_bad_window_width(w):
    with pytest.raises(ParameterError):
        gaussian_window(w, 1.0)
    with pytest.raises(ParameterError):
        AdaptiveThresholdParams(w=w)


@pytest.mark.parametrize("sigma", [0.0, -1.0])
def test_bad_sigma(sigma):
    with pytest.raises(ParameterError):
        gaussian_window(3, sigma)


def test_negative_offset_rejected():
    with pytest.raises(ParameterError):
        AdaptiveThresholdParams(offset_c=-0.1)


def test_default_sigma_is_quarter_window():
    assert AdaptiveThresholdParams(w=9).resolved_sigma == 2.25


def test_uniform_threshold_is_constant_including_borders():
    t = adaptive_threshold_map(np.full((11, 13), 5.0), AdaptiveThresholdParams(w=9))
    assert np.allclose(t, 5.0, atol=1e-12)


def test_single_bright_pixel_neighbour_weight():
    d = np.zeros((7, 7))
    d[3, 3] = 2.0
    p = AdaptiveThresholdParams(w=3, sigma=0.9)
    g = gaussian_window(3, 0.9)
    t = adaptive_threshold_map(d, p)
    assert abs(t[3, 4] - g[1, 0] * 2.0) < 1e-12
    assert abs(t[2, 2] - g[0, 0] * 2.0) < 1e-12


@pytest.mark.parametrize("seed", range(3))
def test_threshold_map_matches_brute_force(seed):
    d = np.random.default_rng(seed).uniform(0, 10, (32, 32))
    p = AdaptiveThresholdParams(w=9)
    assert np.max(np.abs(adaptive_threshold_map(d, p) - oracles.threshold_map(d, 9, 2.25))) < 1e-10


@given(st.floats(-1e3, 1e3, allow_nan=False), st.floats(0, 10), st.sampled_from([3, 5, 9]))
def test_uniform_depth_has_no_edges(value, offset, w):
    d = np.full((12, 12), value)
    assert not depth_edge_detect(d, AdaptiveThresholdParams(w=w, offset_c=offset)).any()
    assert not depth_edge_detect(d, AdaptiveThresholdParams(w=w, offset_c=offset, symmetric=True)).any()


def test_vertical_step_marks_deeper_side_only():
    d = np.ones((8, 10))
    d[:, 5:] = 2.0
    e = depth_edge_detect(d, AdaptiveThresholdParams(w=3, offset_c=0.0))
    want = np.zeros_like(e)
    want[:, 5] = True
    assert np.array_equal(e, want)


def test_step_matches_direct_evaluation():
    d = np.ones((8, 10))
    d[:, 5:] = 2.0
    t = oracles.threshold_map(d, 5, 1.25)
    e = depth_edge_detect(d, AdaptiveThresholdParams(w=5, offset_c=0.05))
    assert np.array_equal(e, d > t + 0.05)


def test_background_never_reported():
    d = np.full((20, 20), 100.0)
    d[5:15, 5:15] = 5.0
    d[8:12, 8:12] = 6.0
    e = depth_edge_detect(d, AdaptiveThresholdParams(w=5, background_depth=100.0))
    assert e.any()
    assert not e[d >= 100.0].any()


def test_non_finite_depth_rejected():
    d = np.ones((5, 5))
    d[2, 2] = np.nan
    with pytest.raises(ParameterError):
        depth_edge_detect(d)


@given(seeds, st.floats(0.1, 10), st.floats(-50, 50), st.sampled_from([3, 7, 9]))
def test_affine_invariance(seed, a, c, w):
    d = np.random.default_rng(seed).uniform(1, 3, (16, 16))
    base = depth_edge_detect(d, AdaptiveThresholdParams(w=w, offset_c=0.2))
    scaled = depth_edge_detect(a * d + c, AdaptiveThresholdParams(w=w, offset_c=a * 0.2))
    assert np.array_equal(base, scaled)


@given(seeds, st.integers(-3, 3), st.integers(-3, 3))
def test_translation_equivariance(seed, dx, dy):
    big = np.random.default_rng(seed).uniform(0, 1, (40, 40))
    p = AdaptiveThresholdParams(w=5, offset_c=0.05)
    e0 = depth_edge_detect(big, p)
    e1 = depth_edge_detect(np.roll(big, (dy, dx), axis=(0, 1)), p)
    m = 3 + 5  # shift plus window radius margin
    assert np.array_equal(np.roll(e0, (dy, dx), axis=(0, 1))[m:-m, m:-m], e1[m:-m, m:-m])
