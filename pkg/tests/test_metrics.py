import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from fded.metrics import edge_prf, ssim, temporal_consistency
from fded.raster import ShapeError

import oracles

seeds = st.integers(0, 2**32 - 1)


def _sparse(seed, shape=(20, 20), p=0.08):
    return np.random.default_rng(seed).random(shape) < p


def _line(shape=(32, 32), x=10):
    m = np.zeros(shape, bool)
    m[4:28, x] = True
    return m


def test_identical_maps_score_one():
    m = _line()
    s = edge_prf(m, m, 0)
    assert (s.precision, s.recall, s.f1) == (1.0, 1.0, 1.0)
    assert (s.matched_pred, s.total_pred) == (24, 24)


def test_empty_prediction():
    s = edge_prf(np.zeros((32, 32), bool), _line(), 2)
    assert s.empty_pred and not s.empty_oracle
    assert (s.precision, s.recall, s.f1) == (0.0, 0.0, 0.0)


def test_empty_oracle_gives_unit_recall():
    s = edge_prf(_line(), np.zeros((32, 32), bool), 2)
    assert s.empty_oracle
    assert s.recall == 1.0 and s.precision == 0.0 and s.f1 == 0.0


def test_one_pixel_shift_within_tolerance():
    s = edge_prf(_line(x=11), _line(x=10), 2)
    assert s.f1 == 1.0
    s0 = edge_prf(_line(x=11), _line(x=10), 0)
    assert s0.f1 == 0.0


def test_shift_beyond_tolerance():
    s = edge_prf(_line(x=13), _line(x=10), 2)
    assert s.precision == 0.0 and s.recall == 0.0


def test_tolerance_is_chebyshev():
    a = np.zeros((9, 9), bool)
    b = np.zeros((9, 9), bool)
    a[4, 4] = True
    b[6, 6] = True  # Chebyshev 2, Euclidean 2.83
    assert edge_prf(a, b, 2).f1 == 1.0
    assert edge_prf(a, b, 1).f1 == 0.0


def test_prf_rejects_bad_input():
    with pytest.raises(ShapeError):
        edge_prf(np.zeros((4, 4), bool), np.zeros((4, 5), bool))
    with pytest.raises(ValueError):
        edge_prf(np.zeros((4, 4), bool), np.zeros((4, 4), bool), -1)


@given(seeds, seeds, st.integers(0, 3))
def test_prf_matches_brute_force(sa, sb, tol):
    a, b = _sparse(sa), _sparse(sb)
    s = edge_prf(a, b, tol)
    mp, mo = oracles.edge_match(a, b, tol)
    assert (s.matched_pred, s.matched_oracle) == (mp, mo)
    assert s.total_pred == a.sum() and s.total_oracle == b.sum()
    if a.any():
        assert s.precision == pytest.approx(mp / a.sum(), abs=1e-15)
    if b.any():
        assert s.recall == pytest.approx(mo / b.sum(), abs=1e-15)


@given(seeds, seeds)
def test_prf_monotone_in_tolerance(sa, sb):
    a, b = _sparse(sa), _sparse(sb)
    prev = edge_prf(a, b, 0)
    for tol in range(1, 5):
        cur = edge_prf(a, b, tol)
        assert cur.precision >= prev.precision and cur.recall >= prev.recall
        prev = cur


@given(seeds, seeds)
def test_prf_swap_exchanges_precision_and_recall(sa, sb):
    a, b = _sparse(sa), _sparse(sb)
    assume(a.any() and b.any())
    s, t = edge_prf(a, b, 1), edge_prf(b, a, 1)
    assert s.precision == t.recall and s.recall == t.precision
    assert s.f1 == pytest.approx(t.f1, abs=1e-15)


@given(seeds, seeds, st.integers(1, 7))
def test_ssim_matches_brute_force(sa, sb, window):
    a = np.random.default_rng(sa).random((12, 11))
    b = np.random.default_rng(sb).random((12, 11))
    assert ssim(a, b, window) == pytest.approx(oracles.ssim(a, b, window), abs=1e-9)


@given(seeds, seeds)
def test_ssim_symmetric_and_bounded(sa, sb):
    a = (np.random.default_rng(sa).random((16, 16)) < 0.3).astype(float)
    b = (np.random.default_rng(sb).random((16, 16)) < 0.3).astype(float)
    v = ssim(a, b)
    assert v == pytest.approx(ssim(b, a), abs=1e-12)
    assert -1.0 - 1e-12 <= v <= 1.0 + 1e-12


@given(seeds)
def test_ssim_self_is_one(sa):
    a = np.random.default_rng(sa).random((16, 16))
    assert ssim(a, a) == pytest.approx(1.0, abs=1e-12)


def test_ssim_uses_only_full_windows():
    a = np.zeros((10, 10))
    b = np.zeros((10, 10))
    b[0, :] = 1.0  # touches only the first row of windows
    b[9, 9] = 1.0
    assert ssim(a, b, 7) == pytest.approx(oracles.ssim(a, b, 7), abs=1e-12)


def test_ssim_rejects_oversized_window():
    with pytest.raises(ValueError):
        ssim(np.zeros((5, 5)), np.zeros((5, 5)), 7)
    with pytest.raises(ShapeError):
        ssim(np.zeros((8, 8)), np.zeros((8, 9)))


def test_temporal_consistency_of_static_sequence_is_one():
    m = _line().astype(float)
    assert temporal_consistency([m, m, m]) == pytest.approx(1.0, abs=1e-12)


def test_temporal_consistency_is_mean_of_consecutive_ssim():
    rng = np.random.default_rng(3)
    fr = [rng.random((16, 16)) < 0.2 for _ in range(4)]
    want = np.mean([oracles.ssim(fr[i].astype(float), fr[i + 1].astype(float)) for i in range(3)])
    assert temporal_consistency(fr) == pytest.approx(want, abs=1e-9)


def test_temporal_consistency_drops_with_flicker():
    m = _line()
    steady = temporal_consistency([m, m, m, m])
    flicker = temporal_consistency([m, np.zeros_like(m), m, np.zeros_like(m)])
    assert flicker < steady


def test_temporal_consistency_needs_two_frames():
    with pytest.raises(ValueError):
        temporal_consistency([np.zeros((8, 8))])
