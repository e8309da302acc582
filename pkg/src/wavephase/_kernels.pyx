# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled stepping loop for the moving-frame simulator (built-in reactions).

Mirrors the NumPy fallback in wavephase.pde exactly: explicit Euler with
centered differences, delayed frame read from the ring buffer with either an
exact integer shift or a fixed 4-point cubic stencil, exponential tail
extrapolation on the left, and the tail/outflow boundary rules.
"""

from libc.math cimport exp, isfinite

import numpy as np


def run_steps(double[:, ::1] ring, double[:, ::1] saved,
              long n_steps, long save_every,
              double dt, double dx, double c, int kind, double p,
              long m, int knot, double[::1] w, long j_exp,
              double[::1] exp_fac, double bl):
    """Advance the ring buffer n_steps; returns (status, step, node).

    ring rows 0..N hold the frames at steps -N..0 on entry; row (step mod
    (N+1)) is the delayed frame for the update step -> step+1 and is
    overwritten with the new frame.  status 1 flags a non-finite value.
    """
    cdef long N = ring.shape[0] - 1
    cdef long n = ring.shape[1]
    cdef long step, j, slot, ks = 0
    cdef double dx2 = dx * dx
    cdef double inv2dx = 1.0 / (2.0 * dx)
    cdef double vj, dj, fj, lap, adv, val
    cdef double w0 = w[0], w1 = w[1], w2 = w[2], w3 = w[3]
    cdef double[::1] v = np.array(ring[N], dtype=float)
    cdef double[::1] d = np.empty(n)
    cdef double[::1] vn = np.empty(n)
    cdef double[::1] tmp

    for step in range(n_steps):
        slot = step % (N + 1)
        # delayed field at x - ch
        if knot:
            for j in range(m, n):
                d[j] = ring[slot, j - m]
            for j in range(m):
                d[j] = ring[slot, 0] * exp_fac[j]
        else:
            for j in range(j_exp, n):
                d[j] = (w0 * ring[slot, j - m - 2] + w1 * ring[slot, j - m - 1]
                        + w2 * ring[slot, j - m] + w3 * ring[slot, j - m + 1])
            for j in range(j_exp):
                d[j] = ring[slot, 0] * exp_fac[j]
        for j in range(1, n - 1):
            vj = v[j]
            dj = d[j]
            if kind == 0:
                fj = -vj + p * dj * exp(-dj)
            else:
                fj = vj * (1.0 - dj)
            lap = (v[j - 1] - 2.0 * vj + v[j + 1]) / dx2
            adv = (v[j + 1] - v[j - 1]) * inv2dx
            val = vj + dt * (lap - c * adv + fj)
            if not isfinite(val):
                return 1, step + 1, j
            vn[j] = val
        vn[0] = bl * vn[1]
        vn[n - 1] = vn[n - 2]
        for j in range(n):
            ring[slot, j] = vn[j]
        tmp = v
        v = vn
        vn = tmp
        if (step + 1) % save_every == 0 and ks < saved.shape[0]:
            for j in range(n):
                saved[ks, j] = v[j]
            ks += 1
    return 0, n_steps, 0
