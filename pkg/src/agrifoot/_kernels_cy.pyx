# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-device inventory kernel (see _kernels_py for the reference)."""
import numpy as np

from libc.math cimport ceil, fabs, round as cround, fmax

from agrifoot._exact import GUARD as _PY_GUARD, exact_ceil

BACKEND = "cython"

cdef double GUARD = _PY_GUARD
cdef double DAYS_PER_YEAR = 365.0

# keep in sync with _layout.py
cdef enum:
    FIXED = 0
    CAPACITY = 1
    DEPENDENT = 2
    ROBOTIC = 3

cdef enum:
    BASE_QTY = 0
    CAPACITY_COL = 1
    RATIO = 2
    P_ACTIVE = 3
    P_SLEEP = 4
    P_TRAVEL = 5
    T_ACTIVE = 6
    T_SLEEP = 7
    T_TRAVEL = 8
    PERIODICITY = 9
    PASSES = 10
    SOLAR = 11


cdef inline bint _near(double x):
    return fabs(x - cround(x)) <= GUARD * fmax(1.0, fabs(x))


def evaluate_devices(sizes, kinds, params, parents):
    cdef double[::1] s = np.ascontiguousarray(sizes, dtype=np.float64)
    cdef long[::1] kd = np.ascontiguousarray(kinds, dtype=np.int_)
    cdef double[:, ::1] p = np.ascontiguousarray(params, dtype=np.float64)
    cdef long[::1] par = np.ascontiguousarray(parents, dtype=np.int_)
    cdef Py_ssize_t m = kd.shape[0], n = s.shape[0]
    q_arr = np.zeros((m, n))
    e_arr = np.zeros((m, n))
    d_arr = np.zeros((m, n))
    cdef double[:, ::1] q = q_arr
    cdef double[:, ::1] e = e_arr
    cdef double[:, ::1] days = d_arr
    cdef Py_ssize_t d, i
    cdef long kind, pi
    cdef double x, cap, ratio, U, C, T, qr, t_total, nd, val, per_day, travel

    for d in range(m):
        kind = kd[d]
        per_day = p[d, T_ACTIVE] * p[d, P_ACTIVE] + p[d, T_SLEEP] * p[d, P_SLEEP]
        if kind == FIXED:
            for i in range(n):
                q[d, i] = p[d, BASE_QTY]
        elif kind == CAPACITY:
            cap = p[d, CAPACITY_COL]
            for i in range(n):
                x = s[i] / cap
                q[d, i] = exact_ceil((s[i],), (cap,)) if _near(x) else ceil(x)
        elif kind == DEPENDENT:
            ratio = p[d, RATIO]
            pi = par[d]
            for i in range(n):
                x = ratio * q[pi, i]
                q[d, i] = exact_ceil((ratio, q[pi, i]), ()) if _near(x) else ceil(x)
        elif kind == ROBOTIC:
            U = p[d, PERIODICITY]
            C = p[d, CAPACITY_COL]
            T = p[d, T_ACTIVE]
            travel = p[d, P_TRAVEL] * p[d, T_TRAVEL] - p[d, SOLAR]
            for i in range(n):
                x = s[i] / (U * C * T)
                qr = exact_ceil((s[i],), (U, C, T)) if _near(x) else ceil(x)
                t_total = s[i] / (qr * C)
                x = t_total / T
                nd = exact_ceil((s[i],), (qr, C, T)) if _near(x) else ceil(x)
                val = p[d, PASSES] * qr * (p[d, P_ACTIVE] * t_total + travel * nd)
                q[d, i] = qr
                days[d, i] = nd
                e[d, i] = 0.0 if val < 0.0 else val
            continue
        else:
            raise ValueError(f"unknown device kind code {kind}")
        for i in range(n):
            e[d, i] = q[d, i] * DAYS_PER_YEAR * per_day
    return q_arr, e_arr, d_arr
