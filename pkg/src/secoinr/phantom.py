"""Synthetic piecewise-region test images with exact analytic masks.

A phantom is an ordered list of regions: class 0 covers the whole canvas
and each later region is an ellipse that occludes everything below it.
Every region carries its own base intensity and a directional sinusoidal
texture, so each class has a distinct contrast and dominant frequency.
Geometry is defined on [-1, 1]^2, making renders at different resolutions
mutually consistent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import ClassField, ImageField
from .sampling import make_grid


@dataclass
class RegionSpec:
    """One textured region; ``axes=None`` marks the full-canvas background."""

    base: float
    amplitude: float
    frequency: float
    angle: float = 0.0
    center: tuple[float, float] = (0.0, 0.0)
    axes: tuple[float, float] | None = None


@dataclass
class PhantomSpec:
    name: str
    seed: int
    regions: list[RegionSpec]

    @property
    def class_count(self) -> int:
        return len(self.regions)

    def validate(self) -> None:
        if not self.regions:
            raise ValueError("phantom needs at least one region")
        if self.regions[0].axes is not None:
            raise ValueError("region 0 must be the full-canvas background")
        for i, r in enumerate(self.regions):
            if r.base - r.amplitude < 0.0 or r.base + r.amplitude > 1.0:
                raise ValueError(
                    f"region {i}: base {r.base} +- amplitude {r.amplitude} "
                    "leaves [0, 1]"
                )
            if r.axes is not None and (r.axes[0] <= 0 or r.axes[1] <= 0):
                raise ValueError(f"region {i}: ellipse axes must be positive")
            if i > 0 and r.axes is None:
                raise ValueError(f"region {i}: only region 0 may cover the canvas")


def _contains(region: RegionSpec, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    if region.axes is None:
        return np.ones_like(x, dtype=bool)
    dx, dy = x - region.center[0], y - region.center[1]
    c, s = np.cos(region.angle), np.sin(region.angle)
    u = (dx * c + dy * s) / region.axes[0]
    v = (-dx * s + dy * c) / region.axes[1]
    return u * u + v * v <= 1.0


def class_map(spec: PhantomSpec, height: int, width: int) -> np.ndarray:
    """Exact (H, W) class labels: the topmost region containing each pixel center."""
    spec.validate()
    grid = make_grid(height, width)
    x = grid.coords[:, 0].reshape(height, width)
    y = grid.coords[:, 1].reshape(height, width)
    labels = np.zeros((height, width), dtype=np.int64)
    for idx, region in enumerate(spec.regions[1:], start=1):
        labels[_contains(region, x, y)] = idx
    return labels


def render(spec: PhantomSpec, height: int, width: int) -> tuple[ImageField, ClassField]:
    """Evaluate the phantom analytically at pixel centers.

    Intensity at a pixel is base + amplitude * sin(2 pi f (x cos a + y sin a))
    of its topmost region; the mask is the exact one-hot class map.
    """
    if height < 8 or width < 8:
        raise ValueError(f"render dims must be >= 8, got {height}x{width}")
    spec.validate()
    grid = make_grid(height, width)
    x = grid.coords[:, 0].reshape(height, width)
    y = grid.coords[:, 1].reshape(height, width)
    labels = class_map(spec, height, width)
    values = np.zeros((height, width))
    for idx, r in enumerate(spec.regions):
        # texture rides in the region's own frame, so patterns break at
        # region boundaries instead of continuing across them
        axis = ((x - r.center[0]) * np.cos(r.angle)
                + (y - r.center[1]) * np.sin(r.angle))
        tex = r.base + r.amplitude * np.sin(2.0 * np.pi * r.frequency * axis)
        values = np.where(labels == idx, tex, values)
    return ImageField(values), ClassField.from_labels(labels, spec.class_count)


def standard_suite() -> list[PhantomSpec]:
    """The fixed five-phantom suite used by acceptance runs.

    Region counts span 2-6 and every region has its own base contrast and
    texture frequency; constants are pinned so renders are stable across
    releases.
    """
    return [
        PhantomSpec("twotone", 101, [
            RegionSpec(base=0.30, amplitude=0.06, frequency=0.50, angle=0.00),
            RegionSpec(base=0.72, amplitude=0.16, frequency=2.20, angle=0.60,
                       center=(0.10, -0.08), axes=(0.55, 0.42)),
        ]),
        PhantomSpec("nested", 102, [
            RegionSpec(base=0.18, amplitude=0.06, frequency=0.35, angle=2.00),
            RegionSpec(base=0.52, amplitude=0.15, frequency=1.60, angle=-0.40,
                       center=(-0.10, 0.05), axes=(0.72, 0.58)),
            RegionSpec(base=0.86, amplitude=0.12, frequency=3.20, angle=0.90,
                       center=(-0.14, 0.02), axes=(0.44, 0.33)),
        ]),
        PhantomSpec("triple", 103, [
            RegionSpec(base=0.25, amplitude=0.05, frequency=0.30, angle=1.10),
            RegionSpec(base=0.60, amplitude=0.14, frequency=1.20, angle=0.30,
                       center=(-0.42, -0.30), axes=(0.40, 0.30)),
            RegionSpec(base=0.78, amplitude=0.12, frequency=2.40, angle=-0.70,
                       center=(0.40, -0.25), axes=(0.34, 0.42)),
            RegionSpec(base=0.45, amplitude=0.18, frequency=3.20, angle=0.15,
                       center=(0.02, 0.45), axes=(0.50, 0.28)),
        ]),
        PhantomSpec("quad", 104, [
            RegionSpec(base=0.35, amplitude=0.05, frequency=0.40, angle=-1.30),
            RegionSpec(base=0.62, amplitude=0.15, frequency=1.00, angle=0.50,
                       center=(-0.45, -0.40), axes=(0.38, 0.30)),
            RegionSpec(base=0.80, amplitude=0.12, frequency=1.90, angle=-0.30,
                       center=(0.45, -0.40), axes=(0.32, 0.34)),
            RegionSpec(base=0.55, amplitude=0.16, frequency=2.70, angle=1.00,
                       center=(-0.40, 0.45), axes=(0.34, 0.32)),
            RegionSpec(base=0.18, amplitude=0.10, frequency=3.40, angle=0.20,
                       center=(0.42, 0.45), axes=(0.36, 0.30)),
        ]),
        PhantomSpec("five", 105, [
            RegionSpec(base=0.28, amplitude=0.06, frequency=0.45, angle=0.70),
            RegionSpec(base=0.58, amplitude=0.16, frequency=1.00, angle=-0.60,
                       center=(-0.52, -0.48), axes=(0.40, 0.34)),
            RegionSpec(base=0.75, amplitude=0.15, frequency=1.80, angle=0.40,
                       center=(0.52, -0.48), axes=(0.38, 0.36)),
            RegionSpec(base=0.88, amplitude=0.11, frequency=2.60, angle=1.20,
                       center=(-0.52, 0.50), axes=(0.38, 0.34)),
            RegionSpec(base=0.14, amplitude=0.13, frequency=3.30, angle=-0.20,
                       center=(0.52, 0.50), axes=(0.38, 0.34)),
            RegionSpec(base=0.50, amplitude=0.22, frequency=4.20, angle=0.95,
                       center=(0.00, 0.01), axes=(0.46, 0.38)),
        ]),
    ]
