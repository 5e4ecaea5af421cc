"""Reconstruction fidelity metrics: RMSE, PSNR, SSIM.

Conventions follow the common MRI-evaluation setup: PSNR and SSIM are
relative to a data range defaulting to the ground-truth maximum, SSIM uses
a 7x7 uniform window with sample covariance and valid-region aggregation.
Metrics are computed on unclamped values; export clamping is separate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import uniform_filter

from .fields import ImageField

SSIM_WINDOW = 7
SSIM_K1 = 0.01
SSIM_K2 = 0.03


@dataclass
class MetricReport:
    rmse: float
    psnr: float
    ssim: float
    data_range: float

    CSV_HEADER = ("rmse", "psnr", "ssim", "data_range")

    def csv_row(self) -> list[str]:
        return [repr(self.rmse), repr(self.psnr), repr(self.ssim), repr(self.data_range)]


def _check_dims(a: ImageField, b: ImageField) -> None:
    if a.values.shape != b.values.shape:
        raise ValueError(f"image dims differ: {a.values.shape} vs {b.values.shape}")


def rmse(a: ImageField, b: ImageField) -> float:
    _check_dims(a, b)
    d = a.values - b.values
    return float(np.sqrt(np.mean(d * d)))


def psnr_from_rmse(rmse_value: float, data_range: float) -> float:
    """20*log10(data_range / rmse); identical images yield the +inf sentinel."""
    if data_range <= 0:
        raise ValueError(f"data_range must be positive, got {data_range}")
    if rmse_value == 0.0:
        return math.inf
    return 20.0 * math.log10(data_range / rmse_value)


def psnr(a: ImageField, b: ImageField, data_range: float | None = None) -> float:
    """Peak signal-to-noise ratio of a against ground truth b, in dB.

    ``data_range`` defaults to the maximum of the ground truth.
    """
    _check_dims(a, b)
    if data_range is None:
        data_range = float(b.values.max())
    return psnr_from_rmse(rmse(a, b), data_range)


def ssim(a: ImageField, b: ImageField, data_range: float | None = None) -> float:
    """Mean structural similarity with a 7x7 uniform window.

    Local statistics use sample (N-1) covariance normalization; the mean is
    taken over windows that lie fully inside the image.
    """
    _check_dims(a, b)
    win = SSIM_WINDOW
    if a.height < win or a.width < win:
        raise ValueError(f"image {a.values.shape} smaller than {win}x{win} window")
    if data_range is None:
        data_range = float(b.values.max())
    if data_range <= 0:
        raise ValueError(f"data_range must be positive, got {data_range}")

    x, y = a.values, b.values
    np_win = win * win
    cov_norm = np_win / (np_win - 1)
    ux = uniform_filter(x, size=win)
    uy = uniform_filter(y, size=win)
    uxx = uniform_filter(x * x, size=win)
    uyy = uniform_filter(y * y, size=win)
    uxy = uniform_filter(x * y, size=win)
    vx = cov_norm * (uxx - ux * ux)
    vy = cov_norm * (uyy - uy * uy)
    vxy = cov_norm * (uxy - ux * uy)

    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2
    s = ((2 * ux * uy + c1) * (2 * vxy + c2)) / ((ux**2 + uy**2 + c1) * (vx + vy + c2))

    pad = (win - 1) // 2
    return float(s[pad:-pad, pad:-pad].mean())


def evaluate(pred: ImageField, truth: ImageField,
             data_range: float | None = None) -> MetricReport:
    """All three metrics of a reconstruction against ground truth."""
    if data_range is None:
        data_range = float(truth.values.max())
    return MetricReport(
        rmse=rmse(pred, truth),
        psnr=psnr(pred, truth, data_range),
        ssim=ssim(pred, truth, data_range),
        data_range=data_range,
    )
