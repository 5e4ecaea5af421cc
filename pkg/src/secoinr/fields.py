"""Image and per-pixel class-probability containers shared across modules."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class ImageField:
    """A grayscale image as an (H, W) float64 array, nominally in [0, 1].

    Raw network predictions may fall outside [0, 1]; clamping happens only
    at export time, never here.
    """

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"image must be 2-D, got {arr.ndim}-D")
        if not np.isfinite(arr).all():
            raise ValueError("image values must be finite")
        self.values = arr

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def flat(self) -> np.ndarray:
        """Row-major (n, 1) column of intensities."""
        return self.values.reshape(-1, 1)

    @classmethod
    def from_flat(cls, col: np.ndarray, height: int, width: int) -> "ImageField":
        return cls(np.asarray(col, dtype=np.float64).reshape(height, width))


@dataclass
class ClassField:
    """Per-pixel probability distributions over h classes, row-major order."""

    height: int
    width: int
    probs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.probs, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != self.height * self.width:
            raise ValueError(
                f"probs must be ({self.height * self.width}, h), got {arr.shape}"
            )
        sums = arr.sum(axis=1)
        if not np.allclose(sums, 1.0, atol=1e-6):
            raise ValueError("class rows must sum to 1")
        self.probs = arr

    @property
    def class_count(self) -> int:
        return self.probs.shape[1]

    def labels(self) -> np.ndarray:
        """Argmax class label per pixel as an (H, W) int array."""
        return self.probs.argmax(axis=1).reshape(self.height, self.width)

    @classmethod
    def from_labels(cls, labels: np.ndarray, class_count: int) -> "ClassField":
        lab = np.asarray(labels)
        if lab.ndim != 2:
            raise ValueError("labels must be 2-D")
        if lab.min() < 0 or lab.max() >= class_count:
            raise ValueError(
                f"labels must lie in [0, {class_count}), found "
                f"[{lab.min()}, {lab.max()}]"
            )
        flat = lab.reshape(-1)
        probs = np.zeros((flat.size, class_count))
        probs[np.arange(flat.size), flat] = 1.0
        return cls(lab.shape[0], lab.shape[1], probs)
