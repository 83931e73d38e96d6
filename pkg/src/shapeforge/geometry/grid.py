"""Dense scalar field samples on a regular lattice over [-1, 1]^3."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class ScalarGrid:
    """``values[i, j, k]`` sampled at ``origin + spacing * (i, j, k)``."""

    values: np.ndarray
    origin: np.ndarray
    spacing: float

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        self.origin = np.asarray(self.origin, dtype=np.float64).reshape(3)
        self.spacing = float(self.spacing)
        if self.values.ndim != 3:
            raise ValueError(f"values must be 3-d, got shape {self.values.shape}")
        n = self.values.shape[0]
        if self.values.shape != (n, n, n) or n < 2:
            raise ValueError(f"values must be cubic with N >= 2, got {self.values.shape}")
        if not self.spacing > 0.0:
            raise ValueError(f"spacing must be positive, got {self.spacing}")

    @property
    def resolution(self) -> int:
        return self.values.shape[0]


def cube_lattice_points(resolution: int) -> np.ndarray:
    """All (N^3, 3) lattice positions covering [-1, 1]^3, C-ordered."""
    if resolution < 2:
        raise ValueError(f"resolution must be >= 2, got {resolution}")
    axis = np.linspace(-1.0, 1.0, resolution)
    gx, gy, gz = np.meshgrid(axis, axis, axis, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()])


def grid_from_values(flat_values: np.ndarray, resolution: int) -> ScalarGrid:
    """Package C-ordered samples over [-1, 1]^3 as a ScalarGrid."""
    values = np.asarray(flat_values, dtype=np.float64).reshape(
        resolution, resolution, resolution
    )
    return ScalarGrid(
        values=values,
        origin=np.array([-1.0, -1.0, -1.0]),
        spacing=2.0 / (resolution - 1),
    )


def sample_grid(fn, resolution: int, batch: int = 65536) -> ScalarGrid:
    """Evaluate ``fn(points) -> values`` over the [-1, 1]^3 lattice."""
    pts = cube_lattice_points(resolution)
    out = np.empty(pts.shape[0], dtype=np.float64)
    for lo in range(0, pts.shape[0], batch):
        hi = min(lo + batch, pts.shape[0])
        out[lo:hi] = fn(pts[lo:hi])
    return grid_from_values(out, resolution)
