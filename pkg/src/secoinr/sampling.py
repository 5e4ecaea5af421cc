"""Coordinate grids, retrospective downsampling, and super-resolution inference."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import ClassField, ImageField


@dataclass
class CoordinateGrid:
    """Pixel-center coordinates of an H x W grid, row-major, in [-1, 1]^2.

    ``coords[i*width + j] == (x_j, y_i)`` with x indexed by column and y by
    row; the mapping index -> coordinate depends only on (index, dims).
    """

    height: int
    width: int
    coords: np.ndarray

    @property
    def n(self) -> int:
        return self.height * self.width


def make_grid(height: int, width: int) -> CoordinateGrid:
    """Build the grid with x_j = -1 + (2j+1)/width and y_i = -1 + (2i+1)/height."""
    if height < 1 or width < 1:
        raise ValueError(f"grid dims must be >= 1, got {height}x{width}")
    xs = -1.0 + (2.0 * np.arange(width) + 1.0) / width
    ys = -1.0 + (2.0 * np.arange(height) + 1.0) / height
    X, Y = np.meshgrid(xs, ys)
    return CoordinateGrid(height, width, np.column_stack([X.ravel(), Y.ravel()]))


def _round_dim(x: float) -> int:
    return int(np.floor(x + 0.5))


def downsample_dims(height: int, width: int, factor: float) -> tuple[int, int]:
    return _round_dim(height / factor), _round_dim(width / factor)


def _box_weights(n_in: int, n_out: int) -> np.ndarray:
    """Row-stochastic (n_out, n_in) matrix of exact box-overlap fractions."""
    s = n_in / n_out
    w = np.zeros((n_out, n_in))
    for i in range(n_out):
        lo, hi = i * s, (i + 1) * s
        j0 = int(np.floor(lo))
        j1 = min(int(np.ceil(hi)), n_in)
        for j in range(j0, j1):
            w[i, j] = min(hi, j + 1.0) - max(lo, float(j))
    return w / s


def _bilinear_weights(n_in: int, n_out: int) -> np.ndarray:
    """Two-tap linear interpolation at output pixel centers, edge-clamped."""
    s = n_in / n_out
    w = np.zeros((n_out, n_in))
    for i in range(n_out):
        p = (i + 0.5) * s - 0.5
        j0 = int(np.floor(p))
        t = p - j0
        lo = min(max(j0, 0), n_in - 1)
        hi = min(max(j0 + 1, 0), n_in - 1)
        w[i, lo] += 1.0 - t
        w[i, hi] += t
    return w


def downsample(image: ImageField, factor: float, method: str = "box") -> ImageField:
    """Resize by 1/factor via area-average (box) resampling.

    Non-integer factors integrate over fractional source regions. A bilinear
    kernel exists behind ``method`` for sensitivity checks only.
    """
    if factor <= 1.0:
        raise ValueError(f"downsample factor must be > 1, got {factor}")
    out_h, out_w = downsample_dims(image.height, image.width, factor)
    if out_h < 8 or out_w < 8:
        raise ValueError(f"output dims {out_h}x{out_w} are below the 8x8 minimum")
    if method == "box":
        wr, wc = _box_weights(image.height, out_h), _box_weights(image.width, out_w)
    elif method == "bilinear":
        wr = _bilinear_weights(image.height, out_h)
        wc = _bilinear_weights(image.width, out_w)
    else:
        raise ValueError(f"unknown resampling method {method!r}")
    return ImageField(wr @ image.values @ wc.T)


def downsample_labels(labels: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Downsample an integer label map by area-weighted per-block majority vote.

    Ties resolve to the lowest class index (argmax order), keeping the result
    deterministic. Masks are categorical, so probabilities are never averaged.
    """
    lab = np.asarray(labels)
    wr = _box_weights(lab.shape[0], out_h)
    wc = _box_weights(lab.shape[1], out_w)
    classes = int(lab.max()) + 1
    votes = np.stack([wr @ (lab == c) @ wc.T for c in range(classes)])
    return votes.argmax(axis=0)


def superresolve(model, height: int, width: int) -> tuple[ImageField, ClassField | None]:
    """Evaluate trained networks on an extended grid of the target dims.

    Runs the class net on the new coordinates, derives the per-coordinate
    activation parameters from its output, then evaluates the image net.
    Intensities are returned raw; clamping to [0, 1] happens only at export.
    """
    grid = make_grid(height, width)
    pred, probs = model.predict(grid)
    image = ImageField.from_flat(pred, height, width)
    seg = ClassField(height, width, probs) if probs is not None else None
    return image, seg
