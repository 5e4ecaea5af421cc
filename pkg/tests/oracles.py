"""Independent loop-based references the fast implementations are checked
against. Deliberately naive: per-pixel and per-window python loops, no
shared code with the package."""

import math

import numpy as np


def rmse_loops(a: np.ndarray, b: np.ndarray) -> float:
    total = 0.0
    h, w = a.shape
    for i in range(h):
        for j in range(w):
            d = a[i, j] - b[i, j]
            total += d * d
    return math.sqrt(total / (h * w))


def psnr_loops(a: np.ndarray, b: np.ndarray, data_range: float) -> float:
    r = rmse_loops(a, b)
    if r == 0.0:
        return math.inf
    return 20.0 * math.log10(data_range / r)


def ssim_loops(a: np.ndarray, b: np.ndarray, data_range: float,
               win: int = 7) -> float:
    """Mean SSIM over fully interior windows, sample covariance, uniform
    window, C1=(0.01 L)^2 and C2=(0.03 L)^2."""
    c1 = (0.01 * data_range) ** 2
    c2 = (0.03 * data_range) ** 2
    h, w = a.shape
    npix = win * win
    values = []
    for i in range(h - win + 1):
        for j in range(w - win + 1):
            x = a[i:i + win, j:j + win]
            y = b[i:i + win, j:j + win]
            mx = x.sum() / npix
            my = y.sum() / npix
            vx = ((x - mx) ** 2).sum() / (npix - 1)
            vy = ((y - my) ** 2).sum() / (npix - 1)
            vxy = ((x - mx) * (y - my)).sum() / (npix - 1)
            values.append(((2 * mx * my + c1) * (2 * vxy + c2))
                          / ((mx * mx + my * my + c1) * (vx + vy + c2)))
    return float(np.mean(values))


def central_diff(fn, tensor, step: float = 1e-5) -> np.ndarray:
    """Central finite differences of scalar fn w.r.t. every entry of the
    tensor's array, perturbing in place."""
    flat = tensor.data.ravel()
    grad = np.empty_like(flat)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        hi = fn()
        flat[i] = orig - step
        lo = fn()
        flat[i] = orig
        grad[i] = (hi - lo) / (2.0 * step)
    return grad.reshape(tensor.data.shape)


def assert_grad_close(analytic: np.ndarray, numeric: np.ndarray,
                      rtol: float = 1e-4, atol: float = 1e-6) -> None:
    err = np.abs(analytic - numeric)
    bound = atol + rtol * np.maximum(np.abs(analytic), np.abs(numeric))
    worst = (err - bound).max()
    assert (err <= bound).all(), (
        f"gradient mismatch: worst excess {worst:.3e}, "
        f"max abs err {err.max():.3e}"
    )
