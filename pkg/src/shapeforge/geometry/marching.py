"""Iso-surface extraction on a scalar grid, watertight by construction.

Vertices are keyed by the global lattice edge they sit on, so neighboring
cells reference identical vertex indices and the output surface is closed.
The grid is padded with one layer of large positive values before casing,
which caps any region that would otherwise run off the domain boundary.
"""

from __future__ import annotations

import numpy as np

from .. import kernels
from ..errors import EmptySurfaceError
from .grid import ScalarGrid
from .mesh import TriMesh

# Cube corners in table order (x, y, z offsets), bottom ring then top ring.
_CORNER_OFFSETS = [
    (0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0),
    (0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1),
]


def marching_cubes(grid: ScalarGrid, iso: float = 0.0) -> TriMesh:
    """Extract the iso-surface of ``grid`` as a watertight triangle mesh.

    A lattice corner counts as inside when ``value < iso``; crossed edges
    get one interpolated vertex each.  Raises EmptySurfaceError when every
    sample is on the same side of ``iso``.
    """
    values = grid.values
    inside_any = np.any(values < iso)
    outside_any = np.any(values >= iso)
    if not (inside_any and outside_any):
        raise EmptySurfaceError("scalar field has no iso crossing")

    cap = float(np.abs(values - iso).max()) + abs(iso) + 1.0
    v = np.pad(values, 1, mode="constant", constant_values=iso + cap)
    origin = grid.origin - grid.spacing
    spacing = grid.spacing

    s = v < iso

    # one vertex per sign-flipped lattice edge, by axis, in C order
    cross_x = s[:-1, :, :] != s[1:, :, :]
    cross_y = s[:, :-1, :] != s[:, 1:, :]
    cross_z = s[:, :, :-1] != s[:, :, 1:]

    def interp(cross, axis):
        idx = np.nonzero(cross)
        i, j, k = (a.astype(np.int64) for a in idx)
        shift = [i.copy(), j.copy(), k.copy()]
        shift[axis] += 1
        v1 = v[i, j, k]
        v2 = v[shift[0], shift[1], shift[2]]
        t = (iso - v1) / (v2 - v1)
        coords = np.column_stack([i, j, k]).astype(np.float64)
        coords[:, axis] += t
        return origin[None, :] + spacing * coords

    verts_x = interp(cross_x, 0)
    verts_y = interp(cross_y, 1)
    verts_z = interp(cross_z, 2)
    n_x, n_y = verts_x.shape[0], verts_y.shape[0]

    ex_id = np.full(cross_x.shape, -1, dtype=np.int64)
    ex_id[cross_x] = np.arange(n_x)
    ey_id = np.full(cross_y.shape, -1, dtype=np.int64)
    ey_id[cross_y] = n_x + np.arange(n_y)
    ez_id = np.full(cross_z.shape, -1, dtype=np.int64)
    ez_id[cross_z] = n_x + n_y + np.arange(verts_z.shape[0])

    # per-cell case index from the 8 corner inside-bits
    case = np.zeros(tuple(d - 1 for d in v.shape), dtype=np.int64)
    for bit, (dx, dy, dz) in enumerate(_CORNER_OFFSETS):
        nx, ny, nz = case.shape
        case |= (
            s[dx : dx + nx, dy : dy + ny, dz : dz + nz].astype(np.int64) << bit
        )

    active = (case != 0) & (case != 255)
    ci, cj, ck = (a.astype(np.int64) for a in np.nonzero(active))
    case_ids = case[active]

    # cube-edge -> global-edge-vertex lookup for each active cell
    cell_edge_vid = np.empty((case_ids.shape[0], 12), dtype=np.int64)
    cell_edge_vid[:, 0] = ex_id[ci, cj, ck]
    cell_edge_vid[:, 1] = ey_id[ci + 1, cj, ck]
    cell_edge_vid[:, 2] = ex_id[ci, cj + 1, ck]
    cell_edge_vid[:, 3] = ey_id[ci, cj, ck]
    cell_edge_vid[:, 4] = ex_id[ci, cj, ck + 1]
    cell_edge_vid[:, 5] = ey_id[ci + 1, cj, ck + 1]
    cell_edge_vid[:, 6] = ex_id[ci, cj + 1, ck + 1]
    cell_edge_vid[:, 7] = ey_id[ci, cj, ck + 1]
    cell_edge_vid[:, 8] = ez_id[ci, cj, ck]
    cell_edge_vid[:, 9] = ez_id[ci + 1, cj, ck]
    cell_edge_vid[:, 10] = ez_id[ci + 1, cj + 1, ck]
    cell_edge_vid[:, 11] = ez_id[ci, cj + 1, ck]

    faces = kernels.emit_mc_triangles(
        np.ascontiguousarray(case_ids),
        cell_edge_vid,
        kernels.TRI_TABLE,
        kernels.TRI_COUNTS,
    )
    # table winding is inward for the value<iso convention; flip for
    # positive signed volume
    faces = faces[:, ::-1]

    vertices = np.concatenate([verts_x, verts_y, verts_z], axis=0)
    if faces.shape[0] == 0:
        raise EmptySurfaceError("no triangles generated")
    return TriMesh(vertices, np.ascontiguousarray(faces))
