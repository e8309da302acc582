"""Stability-domain computations for the convergence inequality.

The inequality lambda^2 - c lambda - D - gamma + L2 e^{-lambda ch} e^{-gamma h} < 0
must hold for some admissible (lambda, gamma) for the weighted-norm argument
to close.  For the product-form reaction with L2 = e^{ch}, D = -1 and the
gamma -> 0- limit this reduces to

    D(h, c):  lambda^2 - c lambda + 1 + e^{-lambda ch + ch} < 0  for some lambda,

an open region whose lower boundary is the strictly decreasing curve
c = c_sharp(h) defined implicitly by

    -2 + sqrt(c^4 h^2 - 4 c^2 h^2 + 4)
       - c^2 h^2 exp(ch (1 - c/2 + 1/(ch) - sqrt(c^2/4 + 1/(c^2 h^2) - 1))) = 0,

with c_sharp(0) = 2 sqrt(2) and c_sharp(+inf) = 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

TWO_SQRT2 = 2.0 * math.sqrt(2.0)
GAMMA_FLOOR = -10.0  # the expression is monotone in gamma; no point searching lower


@dataclass(frozen=True)
class FeasibilityResult:
    feasible: bool
    lam: float
    gamma: float
    margin: float  # attained value of the left side; feasible iff < 0


def _in1_expr(lam, gamma, c, h, L2, D):
    return lam**2 - c * lam - D - gamma + L2 * np.exp(-lam * c * h) * np.exp(-gamma * h)


def feasible_pair(c, h, L2, D, lambda_range, d_rate):
    """Search for (lambda, gamma) making the convergence inequality negative.

    64 x 64 grid over lambda_range x (max(d_rate, -10), 0), refined by three
    rounds of local shrinking around the best cell.  Use d_rate = -inf when
    only gamma < 0 is required.
    """
    lo, hi = lambda_range
    if not hi > lo:
        raise ValueError("empty lambda range")
    g_lo = max(d_rate, GAMMA_FLOOR)
    g_hi = 0.0
    best = (math.inf, 0.5 * (lo + hi), 0.5 * (g_lo + g_hi))
    l0, l1, gl0, gl1 = lo, hi, g_lo, g_hi
    for _ in range(4):  # initial grid + 3 refinements
        lams = np.linspace(l0, l1, 66)[1:-1]
        gams = np.linspace(gl0, gl1, 66)[1:-1]
        L, G = np.meshgrid(lams, gams, indexing="ij")
        vals = _in1_expr(L, G, c, h, L2, D)
        i, j = np.unravel_index(np.argmin(vals), vals.shape)
        if vals[i, j] < best[0]:
            best = (float(vals[i, j]), float(L[i, j]), float(G[i, j]))
        dl = (l1 - l0) / 16.0
        dg = (gl1 - gl0) / 16.0
        l0 = max(lo, best[1] - dl)
        l1 = min(hi, best[1] + dl)
        gl0 = max(g_lo, best[2] - dg)
        gl1 = min(g_hi, best[2] + dg)
    margin, lam, gamma = best
    return FeasibilityResult(feasible=bool(margin < 0), lam=lam, gamma=gamma,
                             margin=margin)


def _c_sharp_expr(c, h):
    inner = c * c / 4.0 + 1.0 / (c * c * h * h) - 1.0
    if inner < 0:
        # c below the admissible bracket for this h; report the sign that
        # keeps the bisection moving right
        return -1.0
    return (-2.0 + math.sqrt(c**4 * h * h - 4 * c * c * h * h + 4.0)
            - c * c * h * h
            * math.exp(c * h * (1.0 - c / 2.0 + 1.0 / (c * h) - math.sqrt(inner))))


def c_sharp(h):
    """The critical speed curve; strictly decreasing from 2 sqrt(2) to 2."""
    if h < 0:
        raise ValueError("h must be >= 0")
    if h == 0:
        return TWO_SQRT2
    return brentq(_c_sharp_expr, 2.0 + 1e-9, TWO_SQRT2, xtol=1e-12, rtol=8e-16)


def in_domain(h, c):
    """Membership test via 1-D minimization of lambda^2 - c lambda + 1 + e^{(1-lambda)ch}.

    Golden-section over lambda in (0, c); agrees with c > c_sharp(h) away
    from the boundary curve (the region is an open epigraph).
    """
    if h < 0 or c <= 0:
        raise ValueError("need h >= 0 and c > 0")

    def g(lam):
        return lam * lam - c * lam + 1.0 + math.exp((1.0 - lam) * c * h)

    a, b = 1e-9, c
    gr = (math.sqrt(5.0) - 1.0) / 2.0
    c1 = b - gr * (b - a)
    c2 = a + gr * (b - a)
    f1, f2 = g(c1), g(c2)
    for _ in range(200):
        if f1 < f2:
            b, c2, f2 = c2, c1, f1
            c1 = b - gr * (b - a)
            f1 = g(c1)
        else:
            a, c1, f1 = c1, c2, f2
            c2 = a + gr * (b - a)
            f2 = g(c2)
        if b - a < 1e-12:
            break
    return bool(g(0.5 * (a + b)) < 0)


def emit_curve(h_lo, h_hi, n):
    """(n + 1) uniformly spaced samples of (h, c_sharp(h)); c is decreasing."""
    if h_lo < 0 or h_hi < h_lo:
        raise ValueError("need 0 <= h_lo <= h_hi")
    hs = np.linspace(h_lo, h_hi, n + 1) if n > 0 else np.array([h_lo])
    return [(float(h), c_sharp(float(h))) for h in hs]
