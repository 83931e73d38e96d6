"""Triangle mesh container, OBJ/STL loading, validation, and measures."""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass

import numpy as np

from ..errors import MeshError, WatertightError

DEGENERATE_AREA_TOL = 1e-12


class TriMesh:
    """Immutable triangle mesh: float64 vertices (n,3), int64 faces (m,3)."""

    def __init__(self, vertices, faces):
        vertices = np.ascontiguousarray(vertices, dtype=np.float64)
        faces = np.ascontiguousarray(faces, dtype=np.int64)
        if vertices.ndim != 2 or vertices.shape[1] != 3:
            raise MeshError(f"vertices must be (n, 3), got {vertices.shape}")
        if faces.ndim != 2 or faces.shape[1] != 3:
            raise MeshError(f"faces must be (m, 3), got {faces.shape}")
        if faces.size and (faces.min() < 0 or faces.max() >= len(vertices)):
            raise MeshError("face index out of range")
        if not np.all(np.isfinite(vertices)):
            raise MeshError("non-finite vertex coordinates")
        vertices.setflags(write=False)
        faces.setflags(write=False)
        self.vertices = vertices
        self.faces = faces
        self._watertight_report = None

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_faces(self):
        return self.faces.shape[0]

    def corners(self):
        """The three (m,3) corner arrays of every face."""
        v, f = self.vertices, self.faces
        return v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]

    def face_areas(self):
        a, b, c = self.corners()
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)

    def bounds(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def __repr__(self):
        return f"TriMesh(vertices={self.n_vertices}, faces={self.n_faces})"


@dataclass
class WatertightReport:
    """Topological health of a mesh's edge structure."""

    is_watertight: bool
    flipped_edge_count: int
    boundary_edge_count: int
    edge_count: int

    def euler_characteristic(self, mesh: TriMesh) -> int:
        return mesh.n_vertices - self.edge_count + mesh.n_faces


def validate_watertight(mesh: TriMesh) -> WatertightReport:
    """Check that every edge is shared by exactly two opposed face windings.

    An undirected edge is *boundary* when used by a single face, *flipped*
    when its two (or more) uses run in the same direction.  The mesh is
    watertight iff both counts are zero.  The report is cached on the mesh.
    """
    if mesh._watertight_report is not None:
        return mesh._watertight_report
    if mesh.n_faces == 0:
        raise MeshError("mesh has no faces")

    f = mesh.faces
    tails = np.concatenate([f[:, 0], f[:, 1], f[:, 2]])
    heads = np.concatenate([f[:, 1], f[:, 2], f[:, 0]])
    lo = np.minimum(tails, heads)
    hi = np.maximum(tails, heads)
    key = lo * np.int64(mesh.n_vertices) + hi
    forward = tails < heads

    order = np.argsort(key, kind="stable")
    key_sorted = key[order]
    fwd_sorted = forward[order]
    uniq, start = np.unique(key_sorted, return_index=True)
    total = np.diff(np.append(start, key_sorted.size))
    fwd_counts = np.add.reduceat(fwd_sorted.astype(np.int64), start)
    bwd_counts = total - fwd_counts

    boundary = int(np.sum(total == 1))
    proper = (total == 2) & (fwd_counts == 1) & (bwd_counts == 1)
    flipped = int(np.sum((total >= 2) & ~proper))

    report = WatertightReport(
        is_watertight=(boundary == 0 and flipped == 0),
        flipped_edge_count=flipped,
        boundary_edge_count=boundary,
        edge_count=int(uniq.size),
    )
    mesh._watertight_report = report
    return report


def require_watertight(mesh: TriMesh) -> None:
    report = validate_watertight(mesh)
    if not report.is_watertight:
        raise WatertightError(
            f"mesh is not watertight: {report.boundary_edge_count} boundary, "
            f"{report.flipped_edge_count} flipped edges"
        )


def mesh_volume(mesh: TriMesh) -> float:
    """Signed volume via the divergence theorem (positive = outward winding)."""
    a, b, c = mesh.corners()
    return float(np.sum(np.einsum("ij,ij->i", a, np.cross(b, c)))) / 6.0


def center_and_normalize(mesh: TriMesh, target_radius: float = 0.9) -> TriMesh:
    """Translate the bounding-box center to the origin and scale the mesh so
    its farthest vertex sits at ``target_radius`` from the origin."""
    if not 0.0 < target_radius <= 1.0:
        raise MeshError(f"target_radius must be in (0, 1], got {target_radius}")
    lo, hi = mesh.bounds()
    centered = mesh.vertices - (lo + hi) / 2.0
    max_norm = float(np.linalg.norm(centered, axis=1).max())
    if max_norm < 1e-12:
        raise MeshError("mesh has zero spatial extent")
    return TriMesh(centered * (target_radius / max_norm), mesh.faces)


def _parse_obj(path: str) -> TriMesh:
    vertices = []
    faces = []
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        for line_no, raw in enumerate(fh, 1):
            parts = raw.split()
            if not parts or parts[0].startswith("#"):
                continue
            tag = parts[0]
            if tag == "v":
                if len(parts) < 4:
                    raise MeshError(f"{path}:{line_no}: malformed vertex line")
                try:
                    vertices.append([float(parts[1]), float(parts[2]), float(parts[3])])
                except ValueError as exc:
                    raise MeshError(f"{path}:{line_no}: bad vertex number") from exc
            elif tag == "f":
                idx = []
                for token in parts[1:]:
                    head = token.split("/")[0]
                    try:
                        i = int(head)
                    except ValueError as exc:
                        raise MeshError(f"{path}:{line_no}: bad face index") from exc
                    if i < 0:
                        i = len(vertices) + 1 + i
                    if i < 1:
                        raise MeshError(f"{path}:{line_no}: face index out of range")
                    idx.append(i - 1)
                if len(idx) == 3:
                    faces.append(idx)
                elif len(idx) == 4:
                    # quads split along the v0-v2 diagonal
                    faces.append([idx[0], idx[1], idx[2]])
                    faces.append([idx[0], idx[2], idx[3]])
                elif len(idx) < 3:
                    raise MeshError(f"{path}:{line_no}: face with < 3 vertices")
                else:
                    raise MeshError(
                        f"{path}:{line_no}: cannot triangulate a {len(idx)}-gon"
                    )
    if not faces:
        raise MeshError(f"{path}: no faces found")
    return TriMesh(np.asarray(vertices), np.asarray(faces))


def _parse_stl_binary(path: str) -> TriMesh:
    with open(path, "rb") as fh:
        header = fh.read(80)
        count_bytes = fh.read(4)
        if len(header) < 80 or len(count_bytes) < 4:
            raise MeshError(f"{path}: truncated STL header")
        (n_tris,) = struct.unpack("<I", count_bytes)
        body = fh.read()
    if len(body) < n_tris * 50:
        raise MeshError(f"{path}: truncated STL body")
    rec = np.frombuffer(body[: n_tris * 50], dtype=np.uint8).reshape(n_tris, 50)
    coords = (
        rec[:, 12:48]
        .copy()
        .view("<f4")
        .reshape(n_tris, 3, 3)
        .astype(np.float64)
    )
    flat = coords.reshape(-1, 3)
    # weld exactly coincident corners so shared edges become shared indices
    uniq, inverse = np.unique(flat, axis=0, return_inverse=True)
    faces = inverse.reshape(-1, 3)
    keep = (
        (faces[:, 0] != faces[:, 1])
        & (faces[:, 1] != faces[:, 2])
        & (faces[:, 0] != faces[:, 2])
    )
    if not np.any(keep):
        raise MeshError(f"{path}: STL contains no usable triangles")
    return TriMesh(uniq, faces[keep])


def load_mesh(path: str) -> TriMesh:
    """Read a mesh from an OBJ (v/f) or binary STL file."""
    if not os.path.exists(path):
        raise MeshError(f"mesh file not found: {path}")
    ext = os.path.splitext(path)[1].lower()
    if ext == ".obj":
        mesh = _parse_obj(path)
    elif ext == ".stl":
        mesh = _parse_stl_binary(path)
    else:
        raise MeshError(f"unsupported mesh format: {path}")
    if mesh.n_faces == 0:
        raise MeshError(f"{path}: empty mesh")
    return mesh


def export_mesh(mesh: TriMesh, path: str) -> None:
    """Write an OBJ file (1-based indices, plain v/f records)."""
    if mesh.n_faces == 0:
        raise MeshError("refusing to export an empty mesh")
    with open(path, "w", encoding="utf-8") as fh:
        for x, y, z in mesh.vertices:
            fh.write(f"v {x:.10g} {y:.10g} {z:.10g}\n")
        for a, b, c in mesh.faces + 1:
            fh.write(f"f {a} {b} {c}\n")
