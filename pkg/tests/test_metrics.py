import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from secoinr import metrics
from secoinr.fields import ImageField


def field(arr):
    return ImageField(np.asarray(arr, dtype=float))


def random_pair(rng, dims=16):
    a = rng.uniform(0.0, 1.0, (dims, dims))
    b = rng.uniform(0.05, 1.0, (dims, dims))
    return field(a), field(b)


def test_rmse_identical_is_zero(rng):
    a, _ = random_pair(rng)
    assert metrics.rmse(a, a) == 0.0


def test_rmse_constant_offset(rng):
    a, _ = random_pair(rng)
    shifted = field(a.values + 0.1)
    assert metrics.rmse(shifted, a) == pytest.approx(0.1, abs=1e-12)


def test_rmse_matches_two_pass_oracle(rng):
    a, b = random_pair(rng, 8)
    assert metrics.rmse(a, b) == pytest.approx(
        oracles.rmse_loops(a.values, b.values), abs=1e-12)


def test_rmse_dim_mismatch():
    with pytest.raises(ValueError):
        metrics.rmse(field(np.zeros((4, 4))), field(np.zeros((4, 5))))


def test_psnr_formula():
    assert metrics.psnr_from_rmse(0.01, 1.0) == pytest.approx(40.0, abs=1e-9)


def test_psnr_paper_rmse_pairing():
    # 20*log10(1/0.0210) for the published 2x RMSE/PSNR pair.
    value = metrics.psnr_from_rmse(0.0210, 1.0)
    assert value == pytest.approx(33.5556, abs=1e-3)
    assert abs(value - 33.6511) < 0.25


def test_psnr_data_range_doubling(rng):
    a, b = random_pair(rng)
    d1 = metrics.psnr(a, b, data_range=1.0)
    d2 = metrics.psnr(a, b, data_range=2.0)
    assert d2 - d1 == pytest.approx(20.0 * math.log10(2.0), abs=1e-9)


def test_psnr_identical_images_is_infinite_sentinel(rng):
    a, _ = random_pair(rng)
    assert metrics.psnr(a, a) == math.inf


def test_psnr_requires_positive_data_range(rng):
    a, b = random_pair(rng)
    with pytest.raises(ValueError):
        metrics.psnr(a, b, data_range=0.0)


def test_ssim_identical_is_one(rng):
    a, _ = random_pair(rng)
    assert metrics.ssim(a, a) == pytest.approx(1.0, abs=1e-12)


def test_ssim_inverted_matches_window_oracle(rng):
    a, _ = random_pair(rng, 12)
    b = field(1.0 - a.values)
    got = metrics.ssim(a, b, data_range=1.0)
    want = oracles.ssim_loops(a.values, b.values, 1.0)
    assert got < 1.0
    assert got == pytest.approx(want, abs=1e-9)


def test_ssim_tiny_noise_stays_near_one(rng):
    a, _ = random_pair(rng)
    noisy = field(a.values + rng.normal(0.0, 1e-6, a.values.shape))
    assert metrics.ssim(noisy, a, data_range=1.0) > 0.9999


def test_ssim_window_contract():
    small = field(np.zeros((5, 6)))
    with pytest.raises(ValueError):
        metrics.ssim(small, small, data_range=1.0)


def test_all_three_match_loop_oracles(rng):
    for _ in range(10):
        a, b = random_pair(rng)
        dr = float(b.values.max())
        assert metrics.rmse(a, b) == pytest.approx(
            oracles.rmse_loops(a.values, b.values), abs=1e-9)
        assert metrics.psnr(a, b) == pytest.approx(
            oracles.psnr_loops(a.values, b.values, dr), abs=1e-9)
        assert metrics.ssim(a, b) == pytest.approx(
            oracles.ssim_loops(a.values, b.values, dr), abs=1e-9)


def test_evaluate_report_and_csv(rng):
    a, b = random_pair(rng)
    report = metrics.evaluate(a, b)
    assert report.data_range == pytest.approx(b.values.max())
    assert report.rmse >= 0.0
    assert -1.0 <= report.ssim <= 1.0
    row = report.csv_row()
    assert len(row) == len(metrics.MetricReport.CSV_HEADER)
    assert float(row[0]) == report.rmse


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_symmetry_given_fixed_range(seed):
    rng = np.random.default_rng(seed)
    a, b = random_pair(rng, 10)
    assert metrics.rmse(a, b) == metrics.rmse(b, a)
    assert metrics.ssim(a, b, data_range=1.0) == pytest.approx(
        metrics.ssim(b, a, data_range=1.0), abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.floats(1e-6, 0.5), st.floats(1.01, 4.0))
def test_psnr_strictly_decreasing_in_rmse(r, mult):
    assert metrics.psnr_from_rmse(r, 1.0) > metrics.psnr_from_rmse(r * mult, 1.0)
