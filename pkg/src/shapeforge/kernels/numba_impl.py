"""numba-compiled twins of the kernels in :mod:`shapeforge.kernels.numpy_impl`.

Each function keeps the exact arithmetic of its numpy counterpart (same
expression trees, same branch choices) so the two backends agree bit for
bit wherever the numpy version avoids reassociated reductions.
"""

import numpy as np
from numba import njit

_TINY = 1e-300


@njit(cache=True)
def _tri_sqdist_one(px, py, pz, ax, ay, az, bx, by, bz, cx, cy, cz):
    e0x = bx - ax
    e0y = by - ay
    e0z = bz - az
    e1x = cx - ax
    e1y = cy - ay
    e1z = cz - az
    dx = ax - px
    dy = ay - py
    dz = az - pz

    a = e0x * e0x + e0y * e0y + e0z * e0z
    b = e0x * e1x + e0y * e1y + e0z * e1z
    c = e1x * e1x + e1y * e1y + e1z * e1z
    d = dx * e0x + dy * e0y + dz * e0z
    e = dx * e1x + dy * e1y + dz * e1z
    f = dx * dx + dy * dy + dz * dz

    if a < _TINY:
        a = _TINY
    if c < _TINY:
        c = _TINY
    det = a * c - b * b
    if det < _TINY:
        det = _TINY
    denom_q = a - 2.0 * b + c
    if denom_q < _TINY:
        denom_q = _TINY

    s_num = b * e - c * d
    t_num = b * d - a * e

    if s_num + t_num <= det:
        if s_num < 0.0:
            if t_num < 0.0:  # region 4
                if d < 0.0:
                    s = min(1.0, max(0.0, -d / a))
                    t = 0.0
                else:
                    s = 0.0
                    t = min(1.0, max(0.0, -e / c))
            else:  # region 3
                s = 0.0
                t = min(1.0, max(0.0, -e / c))
        elif t_num < 0.0:  # region 5
            s = min(1.0, max(0.0, -d / a))
            t = 0.0
        else:  # region 0
            inv_det = 1.0 / det
            s = s_num * inv_det
            t = t_num * inv_det
    else:
        if s_num < 0.0:  # region 2
            tmp0 = b + d
            tmp1 = c + e
            if tmp1 > tmp0:
                s = min(1.0, max(0.0, (tmp1 - tmp0) / denom_q))
                t = 1.0 - s
            else:
                s = 0.0
                t = min(1.0, max(0.0, -e / c))
        elif t_num < 0.0:  # region 6
            tmp0 = b + e
            tmp1 = a + d
            if tmp1 > tmp0:
                t = min(1.0, max(0.0, (tmp1 - tmp0) / denom_q))
                s = 1.0 - t
            else:
                t = 0.0
                s = min(1.0, max(0.0, -d / a))
        else:  # region 1
            numer1 = c + e - b - d
            if numer1 <= 0.0:
                s = 0.0
            else:
                s = min(1.0, max(0.0, numer1 / denom_q))
            t = 1.0 - s

    sqd = s * (a * s + b * t + 2.0 * d) + t * (b * s + c * t + 2.0 * e) + f
    return max(sqd, 0.0)


@njit(cache=True)
def tri_sqdist_pairs(p, v0, v1, v2):
    n = p.shape[0]
    m = v0.shape[0]
    out = np.empty((n, m), dtype=np.float64)
    for i in range(n):
        for j in range(m):
            out[i, j] = _tri_sqdist_one(
                p[i, 0], p[i, 1], p[i, 2],
                v0[j, 0], v0[j, 1], v0[j, 2],
                v1[j, 0], v1[j, 1], v1[j, 2],
                v2[j, 0], v2[j, 1], v2[j, 2],
            )
    return out


@njit(cache=True)
def min_sqdist_to_triangles(points, v0, v1, v2):
    n = points.shape[0]
    m = v0.shape[0]
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        best = np.inf
        for j in range(m):
            d2 = _tri_sqdist_one(
                points[i, 0], points[i, 1], points[i, 2],
                v0[j, 0], v0[j, 1], v0[j, 2],
                v1[j, 0], v1[j, 1], v1[j, 2],
                v2[j, 0], v2[j, 1], v2[j, 2],
            )
            if d2 < best:
                best = d2
        out[i] = best
    return out


@njit(cache=True)
def ray_crossings(points, direction, v0, v1, v2, eps_det=1e-12, eps_bary=1e-9):
    n = points.shape[0]
    m = v0.shape[0]
    out = np.empty((n, 2), dtype=np.int64)
    dirx = direction[0]
    diry = direction[1]
    dirz = direction[2]

    e1 = v1 - v0
    e2 = v2 - v0
    pvx = np.empty(m, dtype=np.float64)
    pvy = np.empty(m, dtype=np.float64)
    pvz = np.empty(m, dtype=np.float64)
    det = np.empty(m, dtype=np.float64)
    inv_det = np.empty(m, dtype=np.float64)
    parallel = np.empty(m, dtype=np.bool_)
    for j in range(m):
        pvx[j] = diry * e2[j, 2] - dirz * e2[j, 1]
        pvy[j] = dirz * e2[j, 0] - dirx * e2[j, 2]
        pvz[j] = dirx * e2[j, 1] - diry * e2[j, 0]
        det[j] = e1[j, 0] * pvx[j] + e1[j, 1] * pvy[j] + e1[j, 2] * pvz[j]
        parallel[j] = abs(det[j]) < eps_det
        inv_det[j] = 0.0 if parallel[j] else 1.0 / det[j]

    for i in range(n):
        count = 0
        reliable = True
        for j in range(m):
            tx = points[i, 0] - v0[j, 0]
            ty = points[i, 1] - v0[j, 1]
            tz = points[i, 2] - v0[j, 2]
            u = (tx * pvx[j] + ty * pvy[j] + tz * pvz[j]) * inv_det[j]
            qx = ty * e1[j, 2] - tz * e1[j, 1]
            qy = tz * e1[j, 0] - tx * e1[j, 2]
            qz = tx * e1[j, 1] - ty * e1[j, 0]
            v = (qx * dirx + qy * diry + qz * dirz) * inv_det[j]
            t = (e2[j, 0] * qx + e2[j, 1] * qy + e2[j, 2] * qz) * inv_det[j]
            w = 1.0 - u - v

            if not parallel[j] and u >= 0.0 and v >= 0.0 and w >= 0.0 and t > 0.0:
                count += 1
            candidate = (
                u >= -eps_bary and v >= -eps_bary and w >= -eps_bary and t > -eps_bary
            )
            near_band = (
                abs(u) < eps_bary
                or abs(v) < eps_bary
                or abs(w) < eps_bary
                or abs(t) < eps_bary
            )
            if parallel[j] or (candidate and near_band):
                reliable = False
        out[i, 0] = count
        out[i, 1] = 1 if reliable else 0
    return out


@njit(cache=True)
def winding_numbers(points, v0, v1, v2):
    n = points.shape[0]
    m = v0.shape[0]
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        px = points[i, 0]
        py = points[i, 1]
        pz = points[i, 2]
        total = 0.0
        for j in range(m):
            ax = v0[j, 0] - px
            ay = v0[j, 1] - py
            az = v0[j, 2] - pz
            bx = v1[j, 0] - px
            by = v1[j, 1] - py
            bz = v1[j, 2] - pz
            cx = v2[j, 0] - px
            cy = v2[j, 1] - py
            cz = v2[j, 2] - pz
            la = np.sqrt(ax * ax + ay * ay + az * az)
            lb = np.sqrt(bx * bx + by * by + bz * bz)
            lc = np.sqrt(cx * cx + cy * cy + cz * cz)
            crx = by * cz - bz * cy
            cry = bz * cx - bx * cz
            crz = bx * cy - by * cx
            num = ax * crx + ay * cry + az * crz
            den = (
                la * lb * lc
                + (ax * bx + ay * by + az * bz) * lc
                + (bx * cx + by * cy + bz * cz) * la
                + (cx * ax + cy * ay + cz * az) * lb
            )
            total += np.arctan2(num, den)
        out[i] = total / (2.0 * np.pi)
    return out


@njit(cache=True)
def emit_mc_triangles(case_ids, cell_edge_vid, tri_table, tri_counts):
    ac = case_ids.shape[0]
    n_entries = 0
    for i in range(ac):
        n_entries += tri_counts[case_ids[i]]
    faces = np.empty((n_entries // 3, 3), dtype=np.int64)
    f = 0
    for i in range(ac):
        case = case_ids[i]
        cnt = tri_counts[case]
        for j in range(0, cnt, 3):
            faces[f, 0] = cell_edge_vid[i, tri_table[case, j]]
            faces[f, 1] = cell_edge_vid[i, tri_table[case, j + 1]]
            faces[f, 2] = cell_edge_vid[i, tri_table[case, j + 2]]
            f += 1
    return faces


@njit(cache=True)
def rasterize_triangles(tri2d, resolution):
    occ = np.zeros((resolution, resolution), dtype=np.bool_)
    px = 2.0 / resolution
    for k in range(tri2d.shape[0]):
        x0 = tri2d[k, 0, 0]
        y0 = tri2d[k, 0, 1]
        x1 = tri2d[k, 1, 0]
        y1 = tri2d[k, 1, 1]
        x2 = tri2d[k, 2, 0]
        y2 = tri2d[k, 2, 1]
        area2 = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0)
        if abs(area2) < 1e-14:
            continue
        sgn = 1.0 if area2 > 0.0 else -1.0
        xmin = min(x0, min(x1, x2))
        xmax = max(x0, max(x1, x2))
        ymin = min(y0, min(y1, y2))
        ymax = max(y0, max(y1, y2))
        ix0 = max(0, int(np.ceil((xmin + 1.0) / px - 0.5)))
        ix1 = min(resolution - 1, int(np.floor((xmax + 1.0) / px - 0.5)))
        iy0 = max(0, int(np.ceil((ymin + 1.0) / px - 0.5)))
        iy1 = min(resolution - 1, int(np.floor((ymax + 1.0) / px - 0.5)))
        for ix in range(ix0, ix1 + 1):
            cxp = -1.0 + (ix + 0.5) * px
            for iy in range(iy0, iy1 + 1):
                cyp = -1.0 + (iy + 0.5) * px
                e0 = (x1 - x0) * (cyp - y0) - (y1 - y0) * (cxp - x0)
                e1 = (x2 - x1) * (cyp - y1) - (y2 - y1) * (cxp - x1)
                e2 = (x0 - x2) * (cyp - y2) - (y0 - y2) * (cxp - x2)
                if sgn * e0 >= 0.0 and sgn * e1 >= 0.0 and sgn * e2 >= 0.0:
                    occ[ix, iy] = True
    return occ


@njit(cache=True)
def nn_sqdist(queries, refs):
    n = queries.shape[0]
    m = refs.shape[0]
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        qx = queries[i, 0]
        qy = queries[i, 1]
        qz = queries[i, 2]
        best = np.inf
        for j in range(m):
            dx = qx - refs[j, 0]
            dy = qy - refs[j, 1]
            dz = qz - refs[j, 2]
            d2 = (dx * dx + dy * dy) + dz * dz
            if d2 < best:
                best = d2
        out[i] = best
    return out


@njit(cache=True)
def nn_sqdist_grid(queries, refs):
    """Exact nearest-neighbor squared distances via a uniform cell grid.

    Cells are scanned outward in Chebyshev shells; a shell bound certifies
    the minimum so results equal the exhaustive scan exactly.
    """
    n = queries.shape[0]
    m = refs.shape[0]
    out = np.empty(n, dtype=np.float64)
    if m == 0:
        for i in range(n):
            out[i] = np.inf
        return out

    lox = refs[0, 0]
    loy = refs[0, 1]
    loz = refs[0, 2]
    hix = lox
    hiy = loy
    hiz = loz
    for j in range(1, m):
        if refs[j, 0] < lox:
            lox = refs[j, 0]
        elif refs[j, 0] > hix:
            hix = refs[j, 0]
        if refs[j, 1] < loy:
            loy = refs[j, 1]
        elif refs[j, 1] > hiy:
            hiy = refs[j, 1]
        if refs[j, 2] < loz:
            loz = refs[j, 2]
        elif refs[j, 2] > hiz:
            hiz = refs[j, 2]

    target = (m / 2.0) ** (1.0 / 3.0)
    emax = max(hix - lox, max(hiy - loy, hiz - loz))
    h = max(emax / max(target, 1.0), 1e-12)
    nx = min(int((hix - lox) / h) + 1, 1024)
    ny = min(int((hiy - loy) / h) + 1, 1024)
    nz = min(int((hiz - loz) / h) + 1, 1024)

    cell = np.empty(m, dtype=np.int64)
    for j in range(m):
        cxi = int((refs[j, 0] - lox) / h)
        cyi = int((refs[j, 1] - loy) / h)
        czi = int((refs[j, 2] - loz) / h)
        if cxi < 0:
            cxi = 0
        elif cxi >= nx:
            cxi = nx - 1
        if cyi < 0:
            cyi = 0
        elif cyi >= ny:
            cyi = ny - 1
        if czi < 0:
            czi = 0
        elif czi >= nz:
            czi = nz - 1
        cell[j] = (cxi * ny + cyi) * nz + czi

    ncells = nx * ny * nz
    offsets = np.zeros(ncells + 1, dtype=np.int64)
    for j in range(m):
        offsets[cell[j] + 1] += 1
    for cidx in range(ncells):
        offsets[cidx + 1] += offsets[cidx]
    order = np.empty(m, dtype=np.int64)
    fill = offsets[:ncells].copy()
    for j in range(m):
        order[fill[cell[j]]] = j
        fill[cell[j]] += 1

    for i in range(n):
        qx = queries[i, 0]
        qy = queries[i, 1]
        qz = queries[i, 2]
        icx = int(np.floor((qx - lox) / h))
        icy = int(np.floor((qy - loy) / h))
        icz = int(np.floor((qz - loz) / h))
        if icx < 0:
            icx = 0
        elif icx >= nx:
            icx = nx - 1
        if icy < 0:
            icy = 0
        elif icy >= ny:
            icy = ny - 1
        if icz < 0:
            icz = 0
        elif icz >= nz:
            icz = nz - 1
        # distance from the query to its (clamped) home cell box; zero when
        # the query lies inside the reference bounding grid
        bx0 = lox + icx * h
        by0 = loy + icy * h
        bz0 = loz + icz * h
        ox = max(0.0, max(bx0 - qx, qx - (bx0 + h)))
        oy = max(0.0, max(by0 - qy, qy - (by0 + h)))
        oz = max(0.0, max(bz0 - qz, qz - (bz0 + h)))
        d0 = np.sqrt(ox * ox + oy * oy + oz * oz)

        max_r = max(max(icx, nx - 1 - icx), max(icy, ny - 1 - icy))
        max_r = max(max_r, max(icz, nz - 1 - icz))

        best = np.inf
        radius = 0
        while True:
            for cxi in range(icx - radius, icx + radius + 1):
                if cxi < 0 or cxi >= nx:
                    continue
                adx = abs(cxi - icx)
                for cyi in range(icy - radius, icy + radius + 1):
                    if cyi < 0 or cyi >= ny:
                        continue
                    ady = abs(cyi - icy)
                    for czi in range(icz - radius, icz + radius + 1):
                        if czi < 0 or czi >= nz:
                            continue
                        adz = abs(czi - icz)
                        if max(adx, max(ady, adz)) != radius:
                            continue
                        cid = (cxi * ny + cyi) * nz + czi
                        for ii in range(offsets[cid], offsets[cid + 1]):
                            j = order[ii]
                            dx = qx - refs[j, 0]
                            dy = qy - refs[j, 1]
                            dz = qz - refs[j, 2]
                            d2 = (dx * dx + dy * dy) + dz * dz
                            if d2 < best:
                                best = d2
            margin = radius * h - d0
            if margin > 0.0 and best <= margin * margin:
                break
            if radius >= max_r:
                break
            radius += 1
        out[i] = best
    return out
