"""Procedural watertight test shapes: sphere, box, torus, capsule, wheel.

Each family takes scalar parameters or [lo, hi] ranges; ranged values are
drawn deterministically from the dataset seed, so a dataset spec plus seed
always produces the same meshes.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .geometry.grid import sample_grid
from .geometry.marching import marching_cubes
from .geometry.mesh import TriMesh


def icosphere(radius: float = 0.8, subdivisions: int = 3) -> TriMesh:
    """Sphere by repeated icosahedron subdivision, vertices on the sphere."""
    if not radius > 0.0:
        raise ValueError(f"radius must be positive, got {radius}")
    if subdivisions < 0 or subdivisions > 7:
        raise ValueError("subdivisions must be in [0, 7]")
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=np.float64,
    )
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = list(verts / np.linalg.norm(verts[0]))

    for _ in range(subdivisions):
        midpoint = {}

        def midpoint_index(i, j):
            key = (i, j) if i < j else (j, i)
            if key not in midpoint:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                midpoint[key] = len(verts) - 1
            return midpoint[key]

        next_faces = []
        for a, b, c in faces:
            ab = midpoint_index(a, b)
            bc = midpoint_index(b, c)
            ca = midpoint_index(c, a)
            next_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = next_faces

    return TriMesh(np.asarray(verts) * radius, np.asarray(faces))


def box(half_x: float = 0.5, half_y: float = 0.45, half_z: float = 0.4) -> TriMesh:
    hx, hy, hz = float(half_x), float(half_y), float(half_z)
    if min(hx, hy, hz) <= 0.0:
        raise ValueError("box half extents must be positive")
    verts = np.array(
        [
            [-hx, -hy, -hz], [hx, -hy, -hz], [hx, hy, -hz], [-hx, hy, -hz],
            [-hx, -hy, hz], [hx, -hy, hz], [hx, hy, hz], [-hx, hy, hz],
        ]
    )
    faces = np.array(
        [
            [0, 2, 1], [0, 3, 2],  # bottom
            [4, 5, 6], [4, 6, 7],  # top
            [0, 1, 5], [0, 5, 4],  # y-
            [2, 3, 7], [2, 7, 6],  # y+
            [0, 4, 7], [0, 7, 3],  # x-
            [1, 2, 6], [1, 6, 5],  # x+
        ]
    )
    return TriMesh(verts, faces)


def torus(
    major_radius: float = 0.6,
    minor_radius: float = 0.25,
    segments_major: int = 48,
    segments_minor: int = 24,
) -> TriMesh:
    nu, nv = int(segments_major), int(segments_minor)
    if nu < 3 or nv < 3:
        raise ValueError("torus needs at least 3 segments on each loop")
    if not 0.0 < minor_radius < major_radius:
        raise ValueError("torus needs 0 < minor_radius < major_radius")
    theta = 2.0 * np.pi * np.arange(nu) / nu
    phi = 2.0 * np.pi * np.arange(nv) / nv
    ct, st = np.cos(theta)[:, None], np.sin(theta)[:, None]
    cp, sp = np.cos(phi)[None, :], np.sin(phi)[None, :]
    ring = major_radius + minor_radius * cp
    verts = np.stack(
        [ring * ct, ring * st, np.broadcast_to(minor_radius * sp, (nu, nv))],
        axis=2,
    ).reshape(-1, 3)

    i = np.repeat(np.arange(nu), nv)
    j = np.tile(np.arange(nv), nu)
    i1 = (i + 1) % nu
    j1 = (j + 1) % nv
    v00 = i * nv + j
    v10 = i1 * nv + j
    v11 = i1 * nv + j1
    v01 = i * nv + j1
    faces = np.concatenate(
        [np.stack([v00, v10, v11], 1), np.stack([v00, v11, v01], 1)], axis=0
    )
    return TriMesh(verts, faces)


def capsule(
    radius: float = 0.35,
    half_length: float = 0.45,
    rings: int = 12,
    segments: int = 32,
) -> TriMesh:
    n_lat, n_seg = int(rings), int(segments)
    if n_lat < 2 or n_seg < 3:
        raise ValueError("capsule needs rings >= 2 and segments >= 3")
    r, h = float(radius), float(half_length)
    if r <= 0.0 or h <= 0.0:
        raise ValueError("capsule radius and half_length must be positive")
    theta = 2.0 * np.pi * np.arange(n_seg) / n_seg
    ct, st = np.cos(theta), np.sin(theta)

    ring_rz = []
    for k in range(1, n_lat + 1):  # top cap, pole downward to the seam
        alpha = 0.5 * np.pi * k / n_lat
        ring_rz.append((r * np.sin(alpha), h + r * np.cos(alpha)))
    for k in range(n_lat, 0, -1):  # bottom cap, seam down to the pole
        alpha = 0.5 * np.pi * k / n_lat
        ring_rz.append((r * np.sin(alpha), -h - r * np.cos(alpha)))

    verts = [np.array([0.0, 0.0, h + r])]
    for rad, z in ring_rz:
        verts.extend(np.stack([rad * ct, rad * st, np.full(n_seg, z)], axis=1))
    verts.append(np.array([0.0, 0.0, -h - r]))
    verts = np.asarray(verts, dtype=np.float64)

    def ring_start(i):
        return 1 + i * n_seg

    faces = []
    top, bottom = 0, len(verts) - 1
    first, last = ring_start(0), ring_start(len(ring_rz) - 1)
    for j in range(n_seg):
        j1 = (j + 1) % n_seg
        faces.append([top, first + j, first + j1])
        faces.append([bottom, last + j1, last + j])
    for i in range(len(ring_rz) - 1):
        a, b = ring_start(i), ring_start(i + 1)
        for j in range(n_seg):
            j1 = (j + 1) % n_seg
            faces.append([a + j, b + j, b + j1])
            faces.append([a + j, b + j1, a + j1])
    return TriMesh(verts, np.asarray(faces))


def _wheel_sdf(points, spokes, hub_radius, rim_inner, rim_outer, thickness, spoke_halfwidth):
    x, y, z = points[:, 0], points[:, 1], points[:, 2]
    rho = np.hypot(x, y)
    az = np.abs(z)

    def box2(u, v, hu, hv):
        qu = np.abs(u) - hu
        qv = np.abs(v) - hv
        outside = np.hypot(np.maximum(qu, 0.0), np.maximum(qv, 0.0))
        inside = np.minimum(np.maximum(qu, qv), 0.0)
        return outside + inside

    rim_mid = 0.5 * (rim_inner + rim_outer)
    rim_half = 0.5 * (rim_outer - rim_inner)
    d_rim = box2(rho - rim_mid, z, rim_half, thickness)

    d_hub = box2(rho, z, hub_radius, thickness)  # solid cylinder

    # fold the angle into one spoke sector, then treat the spoke as a box
    sector = 2.0 * np.pi / spokes
    theta = np.mod(np.arctan2(y, x), sector) - 0.5 * sector
    sx = rho * np.cos(theta)
    sy = rho * np.sin(theta)
    reach = 0.5 * (rim_inner + rim_outer) * 0.5  # halfway into the rim band
    qx = np.abs(sx - reach) - reach
    qy = np.abs(sy) - spoke_halfwidth
    qz = az - thickness
    outside = np.sqrt(
        np.maximum(qx, 0.0) ** 2 + np.maximum(qy, 0.0) ** 2 + np.maximum(qz, 0.0) ** 2
    )
    inside = np.minimum(np.maximum(qx, np.maximum(qy, qz)), 0.0)
    d_spoke = outside + inside

    return np.minimum(d_rim, np.minimum(d_hub, d_spoke))


def wheel(
    spokes: int = 4,
    hub_radius: float = 0.18,
    rim_inner: float = 0.55,
    rim_outer: float = 0.75,
    thickness: float = 0.12,
    spoke_halfwidth: float = 0.07,
    resolution: int = 64,
) -> TriMesh:
    """Annulus-with-radial-struts solid, extracted from its analytic SDF."""
    spokes = int(spokes)
    if spokes < 2:
        raise ValueError("wheel needs at least 2 spokes")
    if not hub_radius < rim_inner < rim_outer < 1.0:
        raise ValueError("wheel needs hub_radius < rim_inner < rim_outer < 1")
    grid = sample_grid(
        lambda p: _wheel_sdf(
            p, spokes, hub_radius, rim_inner, rim_outer, thickness, spoke_halfwidth
        ),
        int(resolution),
    )
    return marching_cubes(grid)


_FAMILIES = {
    "sphere": (icosphere, {"radius", "subdivisions"}, {"subdivisions"}),
    "box": (box, {"half_x", "half_y", "half_z"}, set()),
    "torus": (
        torus,
        {"major_radius", "minor_radius", "segments_major", "segments_minor"},
        {"segments_major", "segments_minor"},
    ),
    "capsule": (capsule, {"radius", "half_length", "rings", "segments"}, {"rings", "segments"}),
    "wheel": (
        wheel,
        {
            "spokes", "hub_radius", "rim_inner", "rim_outer",
            "thickness", "spoke_halfwidth", "resolution",
        },
        {"spokes", "resolution"},
    ),
}


def generate_procedural_dataset(entries, seed: int):
    """Expand dataset spec entries into [(shape_id, TriMesh), ...].

    Each entry is a mapping with ``kind``, optional ``count`` (default 1),
    and family parameters given either as fixed scalars or [lo, hi] ranges
    sampled with the dataset seed.
    """
    rng = np.random.default_rng(seed)
    shapes = []
    index = 0
    for entry in entries:
        entry = dict(entry)
        kind = entry.pop("kind", None)
        if kind not in _FAMILIES:
            raise ConfigError(
                f"unknown procedural kind {kind!r}; expected one of "
                f"{sorted(_FAMILIES)}"
            )
        count = int(entry.pop("count", 1))
        if count < 1:
            raise ConfigError("procedural count must be >= 1")
        builder, allowed, int_params = _FAMILIES[kind]
        unknown = set(entry) - allowed
        if unknown:
            raise ConfigError(
                f"unknown parameters for {kind}: {sorted(unknown)}"
            )
        for _ in range(count):
            params = {}
            for name, value in entry.items():
                if isinstance(value, (list, tuple)):
                    if len(value) != 2:
                        raise ConfigError(
                            f"{kind}.{name}: ranges must be [lo, hi]"
                        )
                    lo, hi = value
                    if name in int_params:
                        params[name] = int(rng.integers(int(lo), int(hi) + 1))
                    else:
                        params[name] = float(rng.uniform(float(lo), float(hi)))
                else:
                    params[name] = int(value) if name in int_params else float(value)
            shapes.append((f"{index:03d}_{kind}", builder(**params)))
            index += 1
    return shapes
