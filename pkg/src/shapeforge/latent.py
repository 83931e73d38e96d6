"""Per-shape latent codes, interpolation, and genetic search bounds."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class LatentBank:
    """Ordered mapping of shape id -> latent code, all the same dimension."""

    dim: int
    codes: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"latent dim must be >= 1, got {self.dim}")
        self.codes = {
            key: self._coerce(value) for key, value in self.codes.items()
        }

    def _coerce(self, value):
        arr = np.asarray(value, dtype=np.float64).reshape(-1)
        if arr.shape != (self.dim,):
            raise ValueError(f"latent code must have dim {self.dim}, got {arr.shape}")
        return arr

    def set(self, shape_id: str, code) -> None:
        self.codes[shape_id] = self._coerce(code)

    def get(self, shape_id: str) -> np.ndarray:
        return self.codes[shape_id]

    def ids(self):
        return list(self.codes)

    def matrix(self) -> np.ndarray:
        """All codes stacked in insertion order, (n_shapes, dim)."""
        if not self.codes:
            raise ValueError("latent bank is empty")
        return np.stack([self.codes[k] for k in self.codes])

    def __len__(self):
        return len(self.codes)


def interpolate(z_a, z_b, t: float) -> np.ndarray:
    """Linear blend (1-t) z_a + t z_b; t may run outside [0, 1]."""
    z_a = np.asarray(z_a, dtype=np.float64)
    z_b = np.asarray(z_b, dtype=np.float64)
    if z_a.shape != z_b.shape:
        raise ValueError("latent shapes differ")
    return (1.0 - t) * z_a + t * z_b


@dataclass
class SearchBounds:
    """Axis-aligned genome box with strictly positive extent per dimension."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.lower = np.asarray(self.lower, dtype=np.float64).reshape(-1)
        self.upper = np.asarray(self.upper, dtype=np.float64).reshape(-1)
        if self.lower.shape != self.upper.shape:
            raise ValueError("bounds shapes differ")
        if not np.all(self.lower < self.upper):
            raise ValueError("each lower bound must be strictly below its upper bound")

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def contains(self, genome) -> bool:
        genome = np.asarray(genome, dtype=np.float64)
        return bool(np.all(genome >= self.lower) and np.all(genome <= self.upper))

    def clip(self, genome) -> np.ndarray:
        return np.clip(np.asarray(genome, dtype=np.float64), self.lower, self.upper)

    def sample_uniform(self, rng, n: int) -> np.ndarray:
        return rng.uniform(self.lower, self.upper, (n, self.dim))


def derive_bounds(bank: LatentBank, margin: float = 0.2) -> SearchBounds:
    """Axis-aligned hull of the training codes, widened by ``margin`` times
    each dimension's range.  Dimensions with (near) zero range are widened
    by margin times the mean range instead, with a small floor so the box
    never collapses."""
    if margin < 0:
        raise ValueError(f"margin must be >= 0, got {margin}")
    codes = bank.matrix()
    lower = codes.min(axis=0)
    upper = codes.max(axis=0)
    ranges = upper - lower
    degenerate = ranges < 1e-9
    mean_range = float(ranges.mean())
    pad = np.where(degenerate, margin * mean_range, margin * ranges)
    lower = lower - pad
    upper = upper + pad
    still_flat = ~(lower < upper)
    if np.any(still_flat):
        lower = np.where(still_flat, lower - 1e-6, lower)
        upper = np.where(still_flat, upper + 1e-6, upper)
    return SearchBounds(lower, upper)
