"""Numpy implementation of the per-device inventory kernel.

Element-wise operations follow exactly the order used in ``_kernels_cy.pyx``
so both backends produce bitwise-identical arrays.
"""
from __future__ import annotations

import numpy as np

from ._exact import GUARD, exact_ceil
from ._layout import (
    BASE_QTY, CAPACITY, CAPACITY_COL, DAYS_PER_YEAR, DEPENDENT, FIXED, P_ACTIVE,
    P_SLEEP, P_TRAVEL, PASSES, PERIODICITY, RATIO, ROBOTIC, SOLAR, T_ACTIVE,
    T_SLEEP, T_TRAVEL,
)

BACKEND = "numpy"


def _ceil(x, num_of, den_of):
    """Vectorised guarded ceiling; ``num_of(i)``/``den_of(i)`` give exact factors."""
    out = np.ceil(x)
    r = np.round(x)
    near = np.abs(x - r) <= GUARD * np.maximum(1.0, np.abs(x))
    for i in np.flatnonzero(near):
        out[i] = exact_ceil(num_of(i), den_of(i))
    return out


def evaluate_devices(sizes, kinds, params, parents):
    """Per-farm quantities, annual energies (Wh) and robot working days.

    ``sizes`` (n,), ``kinds`` (m,), ``params`` (m, N_PARAMS), ``parents`` (m,)
    with devices in dependency order.  Returns three (m, n) arrays.
    """
    sizes = np.ascontiguousarray(sizes, dtype=float)
    m, n = len(kinds), len(sizes)
    q = np.zeros((m, n))
    energy = np.zeros((m, n))
    days = np.zeros((m, n))
    for d in range(m):
        p = params[d]
        kind = kinds[d]
        if kind == FIXED:
            q[d] = p[BASE_QTY]
        elif kind == CAPACITY:
            cap = p[CAPACITY_COL]
            q[d] = _ceil(sizes / cap, lambda i: (sizes[i],), lambda i: (cap,))
        elif kind == DEPENDENT:
            ratio = p[RATIO]
            parent_q = q[parents[d]]
            q[d] = _ceil(ratio * parent_q, lambda i: (ratio, parent_q[i]), lambda i: ())
        elif kind == ROBOTIC:
            U, C, T = p[PERIODICITY], p[CAPACITY_COL], p[T_ACTIVE]
            qr = _ceil(sizes / (U * C * T), lambda i: (sizes[i],), lambda i: (U, C, T))
            t_total = sizes / (qr * C)
            nd = _ceil(t_total / T, lambda i: (sizes[i],), lambda i: (qr[i], C, T))
            e = p[PASSES] * qr * (p[P_ACTIVE] * t_total + (p[P_TRAVEL] * p[T_TRAVEL] - p[SOLAR]) * nd)
            q[d] = qr
            days[d] = nd
            energy[d] = np.where(e < 0.0, 0.0, e)
            continue
        else:
            raise ValueError(f"unknown device kind code {kind}")
        energy[d] = q[d] * DAYS_PER_YEAR * (p[T_ACTIVE] * p[P_ACTIVE] + p[T_SLEEP] * p[P_SLEEP])
    return q, energy, days
