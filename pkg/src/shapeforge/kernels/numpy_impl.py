"""Vectorized numpy implementations of the hot geometry kernels.

These are the fallback twins of :mod:`shapeforge.kernels.numba_impl`; both
expose the same signatures and are expected to produce identical results.
Point-vs-triangle work is chunked over query points to bound peak memory.
"""

import numpy as np

_TINY = 1e-300


def _chunk_size(n_tris: int) -> int:
    # keep the (chunk, n_tris) temporaries around ~32 MB each
    return max(1, int(4.0e6 / max(n_tris, 1)))


def tri_sqdist_pairs(p, v0, v1, v2):
    """Full (n, m) squared point-triangle distance matrix for one chunk.

    Region-by-region closest-point search on the triangle parameter plane
    (the classic Eberly construction), with every region evaluated and the
    relevant branch selected by masks so the arithmetic matches the scalar
    version bit for bit.
    """
    e0 = v1 - v0  # (m,3)
    e1 = v2 - v0
    a = np.sum(e0 * e0, axis=1)  # (m,)
    b = np.sum(e0 * e1, axis=1)
    c = np.sum(e1 * e1, axis=1)
    dvec = v0[None, :, :] - p[:, None, :]  # (n,m,3)
    d = np.sum(dvec * e0[None, :, :], axis=2)  # (n,m)
    e = np.sum(dvec * e1[None, :, :], axis=2)
    f = np.sum(dvec * dvec, axis=2)

    a = np.maximum(a, _TINY)[None, :]
    c = np.maximum(c, _TINY)[None, :]
    b = b[None, :]
    det = np.maximum(a * c - b * b, _TINY)
    denom_q = np.maximum(a - 2.0 * b + c, _TINY)

    s_num = b * e - c * d
    t_num = b * d - a * e

    with np.errstate(divide="ignore", invalid="ignore"):
        # candidate parameters per region, all evaluated, selected by masks
        s_edge0 = np.minimum(1.0, np.maximum(0.0, -d / a))  # t = 0 edge
        t_edge1 = np.minimum(1.0, np.maximum(0.0, -e / c))  # s = 0 edge

        inv_det = 1.0 / det
        s_in = s_num * inv_det
        t_in = t_num * inv_det

        # region 2 (s<0 corner beyond t=1)
        tmp0 = b + d
        tmp1 = c + e
        s_r2 = np.where(
            tmp1 > tmp0,
            np.minimum(1.0, np.maximum(0.0, (tmp1 - tmp0) / denom_q)),
            0.0,
        )
        t_r2 = np.where(tmp1 > tmp0, 1.0 - s_r2, t_edge1)

        # region 6 (t<0 corner beyond s=1)
        tmp0b = b + e
        tmp1b = a + d
        t_r6 = np.where(
            tmp1b > tmp0b,
            np.minimum(1.0, np.maximum(0.0, (tmp1b - tmp0b) / denom_q)),
            0.0,
        )
        s_r6 = np.where(tmp1b > tmp0b, 1.0 - t_r6, s_edge0)

        # region 1 (diagonal edge s+t=1)
        numer1 = c + e - b - d
        s_r1 = np.where(
            numer1 <= 0.0,
            0.0,
            np.minimum(1.0, np.maximum(0.0, numer1 / denom_q)),
        )
        t_r1 = 1.0 - s_r1

    inside = s_num + t_num <= det
    s_neg = s_num < 0.0
    t_neg = t_num < 0.0

    # interior half: regions 4 (both negative), 3 (s<0), 5 (t<0), 0 (interior)
    reg4_t0 = d < 0.0  # in region 4 the closer edge depends on sign of d
    s = np.where(
        inside,
        np.where(
            s_neg,
            np.where(t_neg, np.where(reg4_t0, s_edge0, 0.0), 0.0),
            np.where(t_neg, s_edge0, s_in),
        ),
        np.where(s_neg, s_r2, np.where(t_neg, s_r6, s_r1)),
    )
    t = np.where(
        inside,
        np.where(
            s_neg,
            np.where(t_neg, np.where(reg4_t0, 0.0, t_edge1), t_edge1),
            np.where(t_neg, 0.0, t_in),
        ),
        np.where(s_neg, t_r2, np.where(t_neg, t_r6, t_r1)),
    )

    sqd = s * (a * s + b * t + 2.0 * d) + t * (b * s + c * t + 2.0 * e) + f
    return np.maximum(sqd, 0.0)


def min_sqdist_to_triangles(points, v0, v1, v2):
    """Minimum squared distance from each point to any triangle.  (n,) array."""
    n = points.shape[0]
    out = np.empty(n, dtype=np.float64)
    step = _chunk_size(v0.shape[0])
    for lo in range(0, n, step):
        hi = min(lo + step, n)
        out[lo:hi] = tri_sqdist_pairs(points[lo:hi], v0, v1, v2).min(axis=1)
    return out


def ray_crossings(points, direction, v0, v1, v2, eps_det=1e-12, eps_bary=1e-9):
    """Count robust ray-triangle crossings per point along one direction.

    Returns an (n, 2) int64 array: column 0 is the crossing count, column 1
    is 1 when every near-hit was decisively inside/outside (counts exact
    for a closed mesh) and 0 when some hit grazed an edge, vertex, or a
    near-parallel triangle and the parity cannot be trusted.
    """
    n = points.shape[0]
    out = np.empty((n, 2), dtype=np.int64)
    e1 = v1 - v0
    e2 = v2 - v0
    pvec = np.cross(direction[None, :], e2)  # (m,3)
    det = np.sum(e1 * pvec, axis=1)  # (m,)

    parallel = np.abs(det) < eps_det
    with np.errstate(divide="ignore", invalid="ignore"):
        inv_det = np.where(parallel, 0.0, 1.0 / np.where(parallel, 1.0, det))

    step = _chunk_size(v0.shape[0])
    for lo in range(0, n, step):
        hi = min(lo + step, n)
        tvec = points[lo:hi, None, :] - v0[None, :, :]  # (c,m,3)
        u = np.sum(tvec * pvec[None, :, :], axis=2) * inv_det[None, :]
        qvec = np.cross(tvec, e1[None, :, :])
        v = np.sum(qvec * direction[None, None, :], axis=2) * inv_det[None, :]
        t = np.sum(e2[None, :, :] * qvec, axis=2) * inv_det[None, :]
        w = 1.0 - u - v

        hit = (u >= 0.0) & (v >= 0.0) & (w >= 0.0) & (t > 0.0) & ~parallel[None, :]
        near_band = (
            (np.abs(u) < eps_bary)
            | (np.abs(v) < eps_bary)
            | (np.abs(w) < eps_bary)
            | (np.abs(t) < eps_bary)
        )
        # a hit (or miss) decided inside the epsilon band is not trustworthy
        candidate = (
            (u >= -eps_bary)
            & (v >= -eps_bary)
            & (w >= -eps_bary)
            & (t > -eps_bary)
        )
        # near-parallel triangles void the whole ray (conservative but cheap)
        marginal = parallel[None, :] | (candidate & near_band)
        out[lo:hi, 0] = np.sum(hit, axis=1)
        out[lo:hi, 1] = (~np.any(marginal, axis=1)).astype(np.int64)
    return out


def winding_numbers(points, v0, v1, v2):
    """Generalized winding number of the surface around each point (n,)."""
    n = points.shape[0]
    out = np.empty(n, dtype=np.float64)
    step = _chunk_size(v0.shape[0])
    for lo in range(0, n, step):
        hi = min(lo + step, n)
        a = v0[None, :, :] - points[lo:hi, None, :]  # (c,m,3)
        b = v1[None, :, :] - points[lo:hi, None, :]
        c = v2[None, :, :] - points[lo:hi, None, :]
        la = np.sqrt(np.sum(a * a, axis=2))
        lb = np.sqrt(np.sum(b * b, axis=2))
        lc = np.sqrt(np.sum(c * c, axis=2))
        num = np.sum(a * np.cross(b, c), axis=2)
        den = (
            la * lb * lc
            + np.sum(a * b, axis=2) * lc
            + np.sum(b * c, axis=2) * la
            + np.sum(c * a, axis=2) * lb
        )
        out[lo:hi] = np.sum(np.arctan2(num, den), axis=1) / (2.0 * np.pi)
    return out


def emit_mc_triangles(case_ids, cell_edge_vid, tri_table, tri_counts):
    """Expand per-cell case ids into a (t, 3) face array of edge-vertex ids."""
    counts = tri_counts[case_ids]
    total = int(counts.sum())
    if total == 0:
        return np.empty((0, 3), dtype=np.int64)
    rows = np.repeat(np.arange(case_ids.shape[0], dtype=np.int64), counts)
    starts = np.cumsum(counts) - counts
    cols = np.arange(total, dtype=np.int64) - np.repeat(starts, counts)
    entries = tri_table[case_ids[rows], cols]
    return cell_edge_vid[rows, entries].reshape(-1, 3)


def rasterize_triangles(tri2d, resolution):
    """Occupancy of pixel centers covered by 2-d triangles on [-1, 1]^2.

    ``tri2d`` is (m, 3, 2); returns a (resolution, resolution) bool array
    indexed [ix, iy] with centers at -1 + (i + 0.5) * (2 / resolution).
    """
    occ = np.zeros((resolution, resolution), dtype=np.bool_)
    px = 2.0 / resolution
    centers = -1.0 + (np.arange(resolution) + 0.5) * px
    for k in range(tri2d.shape[0]):
        x0, y0 = tri2d[k, 0]
        x1, y1 = tri2d[k, 1]
        x2, y2 = tri2d[k, 2]
        area2 = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
        if abs(area2) < 1e-14:
            continue
        sgn = 1.0 if area2 > 0.0 else -1.0
        xmin = min(x0, x1, x2)
        xmax = max(x0, x1, x2)
        ymin = min(y0, y1, y2)
        ymax = max(y0, y1, y2)
        ix0 = max(0, int(np.ceil((xmin + 1.0) / px - 0.5)))
        ix1 = min(resolution - 1, int(np.floor((xmax + 1.0) / px - 0.5)))
        iy0 = max(0, int(np.ceil((ymin + 1.0) / px - 0.5)))
        iy1 = min(resolution - 1, int(np.floor((ymax + 1.0) / px - 0.5)))
        if ix1 < ix0 or iy1 < iy0:
            continue
        cx = centers[ix0 : ix1 + 1][:, None]
        cy = centers[iy0 : iy1 + 1][None, :]
        e0 = (x1 - x0) * (cy - y0) - (y1 - y0) * (cx - x0)
        e1 = (x2 - x1) * (cy - y1) - (y2 - y1) * (cx - x1)
        e2 = (x0 - x2) * (cy - y2) - (y0 - y2) * (cx - x2)
        inside = (sgn * e0 >= 0.0) & (sgn * e1 >= 0.0) & (sgn * e2 >= 0.0)
        occ[ix0 : ix1 + 1, iy0 : iy1 + 1] |= inside
    return occ


def nn_sqdist(queries, refs):
    """Exhaustive nearest-neighbor squared distances, (n,) array."""
    n = queries.shape[0]
    out = np.empty(n, dtype=np.float64)
    step = _chunk_size(refs.shape[0])
    rx, ry, rz = refs[:, 0], refs[:, 1], refs[:, 2]
    for lo in range(0, n, step):
        hi = min(lo + step, n)
        d2 = (queries[lo:hi, 0, None] - rx[None, :]) ** 2
        d2 += (queries[lo:hi, 1, None] - ry[None, :]) ** 2
        d2 += (queries[lo:hi, 2, None] - rz[None, :]) ** 2
        out[lo:hi] = d2.min(axis=1)
    return out


# The grid-accelerated variant exists to speed up large clouds; it must be
# exact, so the fallback simply reuses the exhaustive scan (which is).
nn_sqdist_grid = nn_sqdist
