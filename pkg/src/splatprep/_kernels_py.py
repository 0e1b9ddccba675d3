"""Pure numpy fallback for the compiled kernels in ``_kernels.pyx``.

Both backends implement the same five entry points with identical
floating-point operation order (the extension is compiled with
-ffp-contract=off), so integer-valued and decision-valued outputs are
bit-identical.  ``splat_accumulate`` may differ from the compiled kernel
in the last ulp because numpy's vectorized exp is not guaranteed to be
the libm exp.
"""

import numpy as np

COMPILED = False

_U64 = np.uint64
_GOLDEN = _U64(0x9E3779B97F4A7C15)
_MIX1 = _U64(0xBF58476D1CE4E5B9)
_MIX2 = _U64(0x94D4A08C2E8C54E5)
_U2POW53 = 2.0 ** -53


def hash_uniforms(key, start, count):
    idx = np.arange(start + 1, start + 1 + count, dtype=np.uint64)
    with np.errstate(over="ignore"):
        x = (idx * _GOLDEN) ^ _U64(key)
        x = (x ^ (x >> _U64(30))) * _MIX1
        x = (x ^ (x >> _U64(27))) * _MIX2
        x = x ^ (x >> _U64(31))
    return ((x >> _U64(11)).astype(np.float64) + 0.5) * _U2POW53


def field_update_view(positions, R, t, K, boxes, pmax, zmin, zmax, field):
    """Max-update ``field`` with every box probability whose frustum holds the point.

    positions: (N,3) float32 world points; R,t: world-to-camera; K: intrinsics;
    boxes: (B,4) pixel rectangles [x0,y0,x1,y1); pmax: (B,) probabilities.
    """
    p = positions.astype(np.float64)
    x, y, z = p[:, 0], p[:, 1], p[:, 2]
    cx = R[0, 0] * x + R[0, 1] * y + R[0, 2] * z + t[0]
    cy = R[1, 0] * x + R[1, 1] * y + R[1, 2] * z + t[1]
    cz = R[2, 0] * x + R[2, 1] * y + R[2, 2] * z + t[2]
    zok = (cz >= zmin) & (cz <= zmax)
    with np.errstate(divide="ignore", invalid="ignore"):
        invz = 1.0 / cz
        u = (K[0, 0] * cx + K[0, 1] * cy) * invz + K[0, 2]
        v = (K[1, 0] * cx + K[1, 1] * cy) * invz + K[1, 2]
    for b in range(boxes.shape[0]):
        x0, y0, x1, y1 = boxes[b]
        inside = zok & (u >= x0) & (u < x1) & (v >= y0) & (v < y1)
        if inside.any():
            np.maximum(field, pmax[b], out=field, where=inside)


def splat_accumulate(means, inv2d, opac, colors, depths, bbox,
                     alpha_cutoff, max_m2, row0, row1,
                     out_color, out_trans, out_weight, out_depth):
    """Front-to-back accumulation of pre-sorted 2D Gaussians onto rows [row0,row1).

    means: (K,2) pixel centers; inv2d: (K,3) packed inverse covariance (a,b,c)
    for [[a,b],[b,c]]; bbox: (K,4) half-open pixel ranges x0,x1,y0,y1.
    Pixel centers sit at integer coordinates.
    """
    for k in range(means.shape[0]):
        x0, x1, y0, y1 = bbox[k]
        y0 = max(y0, row0)
        y1 = min(y1, row1)
        if x0 >= x1 or y0 >= y1:
            continue
        mx, my = means[k]
        ia, ib, ic = inv2d[k]
        two_ib = 2.0 * ib
        dx = np.arange(x0, x1, dtype=np.float64) - mx
        dy = (np.arange(y0, y1, dtype=np.float64) - my)[:, None]
        m2 = ia * dx * dx + two_ib * dx * dy + ic * dy * dy
        a = opac[k] * np.exp(-0.5 * m2)
        keep = (m2 <= max_m2) & (a >= alpha_cutoff)
        if not keep.any():
            continue
        a = np.where(keep, a, 0.0)
        tr = out_trans[y0:y1, x0:x1]
        w = a * tr
        out_color[y0:y1, x0:x1, 0] += w * colors[k, 0]
        out_color[y0:y1, x0:x1, 1] += w * colors[k, 1]
        out_color[y0:y1, x0:x1, 2] += w * colors[k, 2]
        out_weight[y0:y1, x0:x1] += w
        out_depth[y0:y1, x0:x1] += w * depths[k]
        tr *= 1.0 - a


def fps_select(points, m, start):
    """Greedy farthest-point indices on (N,3) float64 points.

    Squared Euclidean distances; ties resolved to the lowest index by
    argmax-first semantics.
    """
    n = points.shape[0]
    sel = np.empty(m, dtype=np.int64)
    sel[0] = start
    x, y, z = points[:, 0], points[:, 1], points[:, 2]
    dx = x - x[start]
    dy = y - y[start]
    dz = z - z[start]
    dmin = dx * dx + dy * dy + dz * dz
    for i in range(1, m):
        nxt = int(np.argmax(dmin))
        sel[i] = nxt
        dx = x - x[nxt]
        dy = y - y[nxt]
        dz = z - z[nxt]
        d = dx * dx + dy * dy + dz * dz
        np.minimum(dmin, d, out=dmin)
    return sel
