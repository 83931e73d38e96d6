"""Projected silhouette measures used by the analytic design objectives."""

from __future__ import annotations

import numpy as np

from .. import kernels
from .mesh import TriMesh

_AXES = {"x": 0, "y": 1, "z": 2}


def _axis_index(axis) -> int:
    if isinstance(axis, str):
        try:
            return _AXES[axis.lower()]
        except KeyError:
            raise ValueError(f"axis must be one of x/y/z, got {axis!r}") from None
    axis = int(axis)
    if axis not in (0, 1, 2):
        raise ValueError(f"axis must be 0, 1, or 2, got {axis}")
    return axis


def silhouette_occupancy(mesh: TriMesh, axis, resolution: int = 256) -> np.ndarray:
    """Boolean pixel-occupancy of the mesh silhouette seen along ``axis``.

    Pixels cover [-1, 1]^2 on the plane orthogonal to the axis; a pixel is
    occupied when its center falls inside some projected face.
    """
    if resolution < 2:
        raise ValueError(f"resolution must be >= 2, got {resolution}")
    ax = _axis_index(axis)
    keep = [i for i in range(3) if i != ax]
    tri2d = mesh.vertices[mesh.faces][:, :, keep]
    return kernels.rasterize_triangles(
        np.ascontiguousarray(tri2d, dtype=np.float64), resolution
    )


def frontal_projected_area(mesh: TriMesh, axis, resolution: int = 256) -> float:
    """Silhouette area along a viewing axis (drag proxy numerator)."""
    occ = silhouette_occupancy(mesh, axis, resolution)
    pixel_area = (2.0 / resolution) ** 2
    return float(np.count_nonzero(occ)) * pixel_area


def silhouette_second_moment(mesh: TriMesh, axis, resolution: int = 256) -> float:
    """Second moment of the silhouette about the projection axis.

    Integral of r^2 over the occupied silhouette, r measured from the axis
    through the origin.  Scales with the fourth power of uniform scaling.
    """
    occ = silhouette_occupancy(mesh, axis, resolution)
    px = 2.0 / resolution
    centers = -1.0 + (np.arange(resolution) + 0.5) * px
    r2 = centers[:, None] ** 2 + centers[None, :] ** 2
    return float(np.sum(r2[occ])) * px * px
