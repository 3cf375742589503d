"""Numba kernels for the sliced Monte-Carlo distance oracles.

Imported lazily by cwdist so that ordinary library use never pays the
JIT compile cost.  Each kernel writes per-direction partial sums into an
output array; callers combine them in a fixed order, so results are
deterministic regardless of thread scheduling.
"""

import numpy as np
from numba import njit, prange


@njit(parallel=True, fastmath=True, cache=True)
def pair_block_sums(P, coef, nx, out):
    """Per-direction sums of exp(-coef * (p_i - p_j)^2) over index blocks.

    P has one direction per row and one projected point per column; the
    first nx columns belong to sample X, the rest to Y.  For each row d,
    out[d] = (sum over i<j within X, sum over i<j within Y, full X-Y
    cross sum).
    """
    m, ntot = P.shape
    for d in prange(m):
        row = P[d]
        s_xx = 0.0
        for i in range(nx):
            pi = row[i]
            for j in range(i + 1, nx):
                t = pi - row[j]
                s_xx += np.exp(-coef * t * t)
        s_yy = 0.0
        for i in range(nx, ntot):
            pi = row[i]
            for j in range(i + 1, ntot):
                t = pi - row[j]
                s_yy += np.exp(-coef * t * t)
        s_xy = 0.0
        for i in range(nx):
            pi = row[i]
            for j in range(nx, ntot):
                t = pi - row[j]
                s_xy += np.exp(-coef * t * t)
        out[d, 0] = s_xx
        out[d, 1] = s_yy
        out[d, 2] = s_xy


@njit(parallel=True, fastmath=True, cache=True)
def gauss_block_sums(P, coef_pair, coef_cross, out):
    """Per-direction pair sums plus the smoothed-Gaussian cross sums.

    For each row d: out[d, 0] = sum over i<j of exp(-coef_pair*(p_i-p_j)^2),
    out[d, 1] = sum over i of exp(-coef_cross * p_i^2).
    """
    m, n = P.shape
    for d in prange(m):
        row = P[d]
        s_pair = 0.0
        for i in range(n):
            pi = row[i]
            for j in range(i + 1, n):
                t = pi - row[j]
                s_pair += np.exp(-coef_pair * t * t)
        s_cross = 0.0
        for i in range(n):
            pi = row[i]
            s_cross += np.exp(-coef_cross * pi * pi)
        out[d, 0] = s_pair
        out[d, 1] = s_cross
