# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot loops; mirrors ``_pykernels``."""

import numpy as np

from libc.math cimport exp, floor, ceil, INFINITY

cdef double LEVEL_TOL = 1e-9


cdef inline double _clip01(double s) nogil:
    if s < 0.0:
        return 0.0
    if s > 1.0:
        return 1.0
    return s


def simulate_pixels(logf, ts, thresholds, double refractory):
    cdef const double[:, :, ::1] L = np.ascontiguousarray(logf, dtype=np.float64)
    cdef const double[::1] T = np.ascontiguousarray(ts, dtype=np.float64)
    cdef const double[:, ::1] C = np.ascontiguousarray(thresholds, dtype=np.float64)
    cdef Py_ssize_t n_frames = L.shape[0], height = L.shape[1], width = L.shape[2]
    cdef Py_ssize_t x, y, k, count = 0, cap = 1024
    cdef long n, n_start, n_stop, ref
    cdef int pol
    cdef double a, b, fa, fb, c, base, last, s, tc, t0, dt

    xs_arr = np.empty(cap, dtype=np.int64)
    ys_arr = np.empty(cap, dtype=np.int64)
    ts_arr = np.empty(cap, dtype=np.float64)
    ps_arr = np.empty(cap, dtype=np.int8)
    cdef long long[::1] xs = xs_arr
    cdef long long[::1] ys = ys_arr
    cdef double[::1] tout = ts_arr
    cdef signed char[::1] ps = ps_arr

    for y in range(height):
        for x in range(width):
            c = C[y, x]
            base = L[0, y, x]
            ref = 0
            last = -INFINITY
            for k in range(n_frames - 1):
                a = L[k, y, x]
                b = L[k + 1, y, x]
                if a == b:
                    continue
                fa = (a - base) / c
                fb = (b - base) / c
                t0 = T[k]
                dt = T[k + 1] - t0
                if b > a:
                    pol = 1
                    n_start = <long>floor(fa + LEVEL_TOL) + 1
                    n_stop = <long>floor(fb + LEVEL_TOL) + 1
                else:
                    pol = -1
                    n_start = <long>ceil(fa - LEVEL_TOL) - 1
                    n_stop = <long>ceil(fb - LEVEL_TOL) - 1
                n = n_start
                while n != n_stop:
                    if (n - ref) * pol > 0:
                        s = _clip01((n - fa) / (fb - fa))
                        tc = t0 + s * dt
                        if tc - last >= refractory:
                            if count == cap:
                                cap *= 2
                                xs_arr = np.resize(xs_arr, cap)
                                ys_arr = np.resize(ys_arr, cap)
                                ts_arr = np.resize(ts_arr, cap)
                                ps_arr = np.resize(ps_arr, cap)
                                xs = xs_arr
                                ys = ys_arr
                                tout = ts_arr
                                ps = ps_arr
                            xs[count] = x
                            ys[count] = y
                            tout[count] = tc
                            ps[count] = pol
                            count += 1
                            ref = n
                            last = tc
                    n += pol
    return (
        xs_arr[:count].copy(),
        ys_arr[:count].copy(),
        ts_arr[:count].copy(),
        ps_arr[:count].copy(),
    )


def voxel_accumulate(x, y, tstar, p, Py_ssize_t height, Py_ssize_t width, Py_ssize_t bins):
    cdef const long long[::1] X = np.ascontiguousarray(x, dtype=np.int64)
    cdef const long long[::1] Y = np.ascontiguousarray(y, dtype=np.int64)
    cdef const double[::1] TS = np.ascontiguousarray(tstar, dtype=np.float64)
    cdef const signed char[::1] P = np.ascontiguousarray(p, dtype=np.int8)
    out_arr = np.zeros((height, width, bins), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef Py_ssize_t i, lower, n = X.shape[0]
    cdef double frac, pol
    with nogil:
        for i in range(n):
            lower = <Py_ssize_t>floor(TS[i])
            frac = TS[i] - lower
            pol = P[i]
            out[Y[i], X[i], lower] += pol * (1.0 - frac)
            if lower + 1 < bins:
                out[Y[i], X[i], lower + 1] += pol * frac
    return out_arr


def hats_accumulate(x, y, t, p, long cell_size, long rho, double tau, double delta_t,
                    long cells_y, long cells_x):
    cdef const long long[::1] X = np.ascontiguousarray(x, dtype=np.int64)
    cdef const long long[::1] Y = np.ascontiguousarray(y, dtype=np.int64)
    cdef const double[::1] TT = np.ascontiguousarray(t, dtype=np.float64)
    key_arr = ((np.asarray(y, dtype=np.int64) // cell_size) * cells_x
               + np.asarray(x, dtype=np.int64) // cell_size) * 2 + (np.asarray(p) < 0)
    order_arr = np.ascontiguousarray(np.argsort(key_arr, kind="stable"), dtype=np.int64)
    cdef const long long[::1] key = np.ascontiguousarray(key_arr, dtype=np.int64)
    cdef const long long[::1] order = order_arr
    cdef long side = 2 * rho + 1
    out_arr = np.zeros((cells_y * side, cells_x * side, 2), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    hist_arr = np.zeros((side, side), dtype=np.float64)
    cdef double[:, ::1] hist = hist_arr
    cdef Py_ssize_t n = X.shape[0], g0 = 0, g1, i, j, lo, hi, gi, gj, cnt
    cdef long long k, cell, cy, cx, c, du, dv
    cdef double ti
    with nogil:
        while g0 < n:
            k = key[order[g0]]
            g1 = g0
            while g1 < n and key[order[g1]] == k:
                g1 += 1
            hist[:, :] = 0.0
            lo = g0
            hi = g0
            for i in range(g0, g1):
                gi = order[i]
                ti = TT[gi]
                while TT[order[lo]] < ti - delta_t:
                    lo += 1
                if hi < i:
                    hi = i
                while hi + 1 < g1 and TT[order[hi + 1]] <= ti:
                    hi += 1
                for j in range(lo, hi + 1):
                    gj = order[j]
                    du = X[gj] - X[gi]
                    dv = Y[gj] - Y[gi]
                    if -rho <= du <= rho and -rho <= dv <= rho:
                        hist[dv + rho, du + rho] += exp(-(ti - TT[gj]) / tau)
            cnt = g1 - g0
            c = k % 2
            cell = k // 2
            cy = cell // cells_x
            cx = cell % cells_x
            for i in range(side):
                for j in range(side):
                    out[cy * side + i, cx * side + j, c] = hist[i, j] / cnt
            g0 = g1
    return out_arr
