# cython: language_level=3
"""Compiled hot kernels; see _kernels_py.py for the reference fallback.

Floating-point expressions mirror the fallback's evaluation order so the
two backends agree bitwise on everything except exp() (last-ulp libm
differences are possible in splat_accumulate).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp

cnp.import_array()

COMPILED = True

ctypedef unsigned long long u64

cdef u64 _GOLDEN = 0x9E3779B97F4A7C15ULL
cdef u64 _MIX1 = 0xBF58476D1CE4E5B9ULL
cdef u64 _MIX2 = 0x94D4A08C2E8C54E5ULL
cdef double _U2POW53 = 2.0 ** -53


cdef inline u64 _mix64(u64 x) nogil:
    x = (x ^ (x >> 30)) * _MIX1
    x = (x ^ (x >> 27)) * _MIX2
    return x ^ (x >> 31)


def hash_uniforms(object key, object start, object count):
    cdef u64 k = <u64> (int(key) & 0xFFFFFFFFFFFFFFFF)
    cdef long long s = int(start)
    cdef long long n = int(count)
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef long long i
    cdef u64 h
    with nogil:
        for i in range(n):
            h = _mix64(((<u64> (s + i + 1)) * _GOLDEN) ^ k)
            out[i] = ((<double> (h >> 11)) + 0.5) * _U2POW53
    return out_arr


def field_update_view(const float[:, ::1] positions,
                      const double[:, ::1] R, const double[::1] t,
                      const double[:, ::1] K,
                      const double[:, ::1] boxes, const double[::1] pmax,
                      double zmin, double zmax,
                      double[::1] field):
    cdef Py_ssize_t n = positions.shape[0]
    cdef Py_ssize_t nb = boxes.shape[0]
    cdef Py_ssize_t i, b
    cdef double x, y, z, cx, cy, cz, invz, u, v, p
    cdef double r00 = R[0, 0], r01 = R[0, 1], r02 = R[0, 2], t0 = t[0]
    cdef double r10 = R[1, 0], r11 = R[1, 1], r12 = R[1, 2], t1 = t[1]
    cdef double r20 = R[2, 0], r21 = R[2, 1], r22 = R[2, 2], t2 = t[2]
    cdef double k00 = K[0, 0], k01 = K[0, 1], k02 = K[0, 2]
    cdef double k10 = K[1, 0], k11 = K[1, 1], k12 = K[1, 2]
    with nogil:
        for i in range(n):
            x = <double> positions[i, 0]
            y = <double> positions[i, 1]
            z = <double> positions[i, 2]
            cz = r20 * x + r21 * y + r22 * z + t2
            if cz < zmin or cz > zmax:
                continue
            cx = r00 * x + r01 * y + r02 * z + t0
            cy = r10 * x + r11 * y + r12 * z + t1
            invz = 1.0 / cz
            u = (k00 * cx + k01 * cy) * invz + k02
            v = (k10 * cx + k11 * cy) * invz + k12
            for b in range(nb):
                if u >= boxes[b, 0] and u < boxes[b, 2] and v >= boxes[b, 1] and v < boxes[b, 3]:
                    p = pmax[b]
                    if p > field[i]:
                        field[i] = p


def splat_accumulate(const double[:, ::1] means, const double[:, ::1] inv2d,
                     const double[::1] opac, const double[:, ::1] colors,
                     const double[::1] depths, const long long[:, ::1] bbox,
                     double alpha_cutoff, double max_m2,
                     long long row0, long long row1,
                     double[:, :, ::1] out_color, double[:, ::1] out_trans,
                     double[:, ::1] out_weight, double[:, ::1] out_depth):
    cdef Py_ssize_t nk = means.shape[0]
    cdef Py_ssize_t k
    cdef long long x0, x1, y0, y1, px, py
    cdef double mx, my, ia, ib, ic, two_ib, dx, dy, m2, a, w, tr, op
    cdef double c0, c1, c2, dk
    with nogil:
        for k in range(nk):
            x0 = bbox[k, 0]
            x1 = bbox[k, 1]
            y0 = bbox[k, 2]
            y1 = bbox[k, 3]
            if y0 < row0:
                y0 = row0
            if y1 > row1:
                y1 = row1
            if x0 >= x1 or y0 >= y1:
                continue
            mx = means[k, 0]
            my = means[k, 1]
            ia = inv2d[k, 0]
            ib = inv2d[k, 1]
            ic = inv2d[k, 2]
            two_ib = 2.0 * ib
            op = opac[k]
            c0 = colors[k, 0]
            c1 = colors[k, 1]
            c2 = colors[k, 2]
            dk = depths[k]
            for py in range(y0, y1):
                dy = (<double> py) - my
                for px in range(x0, x1):
                    dx = (<double> px) - mx
                    m2 = ia * dx * dx + two_ib * dx * dy + ic * dy * dy
                    if m2 > max_m2:
                        continue
                    a = op * exp(-0.5 * m2)
                    if a < alpha_cutoff:
                        continue
                    tr = out_trans[py, px]
                    w = a * tr
                    out_color[py, px, 0] += w * c0
                    out_color[py, px, 1] += w * c1
                    out_color[py, px, 2] += w * c2
                    out_weight[py, px] += w
                    out_depth[py, px] += w * dk
                    out_trans[py, px] = tr * (1.0 - a)


def fps_select(const double[:, ::1] points, object m, object start):
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t mm = int(m)
    cdef Py_ssize_t cur = int(start)
    sel_arr = np.empty(mm, dtype=np.int64)
    dmin_arr = np.empty(n, dtype=np.float64)
    cdef long long[::1] sel = sel_arr
    cdef double[::1] dmin = dmin_arr
    cdef Py_ssize_t i, j, best
    cdef double px, py, pz, dx, dy, dz, d, bestval
    sel[0] = cur
    with nogil:
        px = points[cur, 0]
        py = points[cur, 1]
        pz = points[cur, 2]
        for j in range(n):
            dx = points[j, 0] - px
            dy = points[j, 1] - py
            dz = points[j, 2] - pz
            dmin[j] = dx * dx + dy * dy + dz * dz
        for i in range(1, mm):
            best = 0
            bestval = dmin[0]
            for j in range(1, n):
                if dmin[j] > bestval:
                    bestval = dmin[j]
                    best = j
            sel[i] = best
            px = points[best, 0]
            py = points[best, 1]
            pz = points[best, 2]
            for j in range(n):
                dx = points[j, 0] - px
                dy = points[j, 1] - py
                dz = points[j, 2] - pz
                d = dx * dx + dy * dy + dz * dz
                if d < dmin[j]:
                    dmin[j] = d
    return sel_arr
