"""Characteristic roots of the wave-tail and phase equations.

Two quasi-polynomial families are handled:

* chi0(z) = z^2 - c z + f1(0,0) + f2(0,0) e^{-z c h}, whose two simple
  positive real roots 0 < lambda1 < lambda2 set the front's tail decay, and
  whose tangency in (c, lambda) defines the minimal wave speed;
* chi(z)  = z + q - q e^{-z h} with q > 0, the characteristic function of
  the scalar amplitude equation A'(t) = q (A(t-h) - A(t)).  Its only root
  with non-negative real part is z = 0; every horizontal strip
  (pi + 2 pi k)/h < Im z < (2 pi + 2 pi k)/h contains exactly one complex
  root z_{k+1}, and Re z_1 > Re z_2 > ... decreases strictly.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

RESIDUAL_TOL = 1e-12
CRITICAL_GAP = 1e-6


class SubcriticalSpeedError(ValueError):
    """c is below the minimal wave speed: chi0 has no positive real root."""


class CriticalSpeedError(ValueError):
    """chi0 has a (near) double positive root; the tail expansion degenerates."""


class RootLocalizationError(RuntimeError):
    """A strip rectangle failed its argument-principle certificate."""


def chi0(model, c, z):
    """The tail characteristic function z^2 - cz + f1(0,0) + f2(0,0) e^{-zch}."""
    z = np.asarray(z, dtype=complex) if np.iscomplexobj(z) else np.asarray(z, dtype=float)
    return z * z - c * z + model.f1_00 + model.f2_00 * np.exp(-z * c * model.h)


def _chi0_min(model, c):
    """Minimum of chi0 over lambda > 0 and its argmin.

    chi0 is strictly convex in lambda when f2(0,0) >= 0, so the minimum is
    found by bisecting the derivative.
    """
    f2, h = model.f2_00, model.h

    def d(lam):
        return 2 * lam - c - f2 * c * h * math.exp(-lam * c * h)

    lo, hi = 0.0, c + f2 * max(c * h, 1.0) + 10.0
    if d(lo) >= 0:
        lam = 0.0
    else:
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if d(mid) < 0:
                lo = mid
            else:
                hi = mid
        lam = 0.5 * (lo + hi)
    return float(chi0(model, c, lam).real), lam


def real_roots(model, c):
    """The two positive real roots (lambda1, lambda2) of chi0, residual < 1e-12.

    Raises SubcriticalSpeedError when chi0 > 0 on (0, inf) and
    CriticalSpeedError when the roots are closer than 1e-6 (the asymptotics
    downstream require simple, well-separated roots).
    """
    if c <= 0:
        raise ValueError("wave speed c must be positive")
    mval, lam_min = _chi0_min(model, c)
    if mval > -1e-14:
        if mval < 1e-10:
            raise CriticalSpeedError(
                f"critical speed: chi0 has a double root near lambda = {lam_min:.6g}"
            )
        raise SubcriticalSpeedError(
            f"subcritical speed c = {c:.6g}: chi0 stays positive (min {mval:.3g})"
        )

    def g(lam):
        return float(chi0(model, c, lam).real)

    hi = c + abs(model.f1_00) + model.f2_00 + 1.0
    lam1 = brentq(g, 1e-300, lam_min, xtol=1e-14, rtol=8e-16)
    lam2 = brentq(g, lam_min, hi, xtol=1e-14, rtol=8e-16)

    # one Newton polish each; roots feed exponentials over long horizons
    for _ in range(3):
        for which in (0, 1):
            lam = lam1 if which == 0 else lam2
            dg = 2 * lam - c - model.f2_00 * c * model.h * math.exp(-lam * c * model.h)
            if dg != 0:
                lam = lam - g(lam) / dg
                if which == 0:
                    lam1 = lam
                else:
                    lam2 = lam
    if lam2 - lam1 < CRITICAL_GAP:
        raise CriticalSpeedError(
            f"critical speed: lambda2 - lambda1 = {lam2 - lam1:.3g} < {CRITICAL_GAP}"
        )
    if max(abs(g(lam1)), abs(g(lam2))) > RESIDUAL_TOL:
        raise RuntimeError("real root polish failed to reach residual tolerance")
    return lam1, lam2


def minimal_speed(model, c_hi0=1.0, tol=1e-12):
    """Infimum of speeds c for which chi0 has a positive real root.

    Nested bisection: the inner problem is the convex minimum of chi0 over
    lambda, the outer bisection is on its sign as a function of c.
    """
    if model.f1_00 + model.f2_00 <= 0:
        raise ValueError("minimal speed needs f1(0,0) + f2(0,0) > 0 (monostable tail)")
    c_lo, c_hi = 1e-12, c_hi0
    it = 0
    while _chi0_min(model, c_hi)[0] > 0:
        c_lo, c_hi = c_hi, 2 * c_hi
        it += 1
        if it > 60:
            raise RuntimeError("minimal_speed: no supercritical speed below 2^60")
    for _ in range(200):
        c = 0.5 * (c_lo + c_hi)
        if _chi0_min(model, c)[0] > 0:
            c_lo = c
        else:
            c_hi = c
        if c_hi - c_lo < tol:
            break
    return 0.5 * (c_lo + c_hi)


def phase_q(model, c, lambda1):
    """q = f2(0,0) e^{-lambda1 c h} / lambda1, the normalized coupling of the
    amplitude equation; zero exactly when f2(0,0) = 0."""
    return model.f2_00 * math.exp(-lambda1 * c * model.h) / lambda1


def chi_phase(q, h, z):
    """chi(z) = z + q - q e^{-zh} for the amplitude equation."""
    return z + q - q * np.exp(-np.asarray(z, dtype=complex) * h)


def _winding(f, x0, x1, y0, y1, n0=256, max_depth=12):
    """Winding number of f around the (counterclockwise) rectangle boundary.

    Argument increments are accumulated on an adaptively refined boundary
    sampling; a segment whose phase jump exceeds pi/2 is bisected.
    """
    corners = [
        (complex(x0, y0), complex(x1, y0)),
        (complex(x1, y0), complex(x1, y1)),
        (complex(x1, y1), complex(x0, y1)),
        (complex(x0, y1), complex(x0, y0)),
    ]
    total = 0.0
    for za, zb in corners:
        ts = np.linspace(0.0, 1.0, n0 + 1)
        zs = za + (zb - za) * ts
        w = f(zs)
        if np.min(np.abs(w)) < 1e-300:
            raise RootLocalizationError("zero of chi on the rectangle boundary")
        args = np.angle(w)
        d = np.diff(args)
        d = (d + np.pi) % (2 * np.pi) - np.pi
        depth = 0
        while np.any(np.abs(d) > 0.5 * np.pi):
            depth += 1
            if depth > max_depth:
                raise RootLocalizationError(
                    "winding count did not resolve on rectangle "
                    f"[{x0}, {x1}] x [{y0}, {y1}]"
                )
            ts = np.linspace(0.0, 1.0, (len(ts) - 1) * 2 + 1)
            zs = za + (zb - za) * ts
            w = f(zs)
            args = np.angle(w)
            d = np.diff(args)
            d = (d + np.pi) % (2 * np.pi) - np.pi
        total += d.sum()
    return total / (2 * np.pi)


def _strip_rect(q, h, k):
    """Certificate rectangle for strip k (1-based): [re_lo, 0] x strip.

    The left edge follows from |z + q| = q e^{-Re z h}: a root with
    Re z = x satisfies q e^{-xh} <= |x| + q + y_max, which fails once
    -x h >> log of the strip height, so re_lo below needs no root.
    """
    y_lo = (math.pi + 2 * math.pi * (k - 1)) / h
    y_hi = (2 * math.pi + 2 * math.pi * (k - 1)) / h
    m = max(2.0, 4 * math.pi * (k + 1))
    re_lo = -(1.0 / h) * math.log(m / (q * h)) if q * h < m else -1.0 / h
    re_lo = min(re_lo, -1.0 / h)
    # widen until the certificate bound q e^{-xh} > |x| + q + y_hi fails to
    # admit roots left of re_lo
    while q * math.exp(-re_lo * h) < abs(re_lo) + q + y_hi:
        re_lo *= 2.0
        if re_lo < -1e6:
            raise RootLocalizationError("could not bound the strip rectangle")
    return re_lo, 0.0, y_lo, y_hi


def _newton_in_strip(q, h, z, y_lo, y_hi, tol):
    for _ in range(100):
        ez = cmath.exp(-z * h)
        val = z + q - q * ez
        if abs(val) < tol:
            return z, abs(val)
        dz = 1 + q * h * ez
        step = val / dz
        # keep iterates inside the strip; damp large excursions
        while abs(step) > 0.5 * (y_hi - y_lo) * max(1.0, 1.0 / h):
            step /= 2
        z = z - step
        if not (y_lo < z.imag < y_hi) or z.real > 0:
            return None, math.inf
    ez = cmath.exp(-z * h)
    val = z + q - q * ez
    return (z, abs(val)) if abs(val) < tol else (None, abs(val))


def _quadrisect(q, h, x0, x1, y0, y1):
    """Shrink a winding-1 rectangle by repeated bisection of its long side."""

    def f(zs):
        return chi_phase(q, h, zs)

    for _ in range(200):
        if max(x1 - x0, y1 - y0) < 1e-8:
            return complex(0.5 * (x0 + x1), 0.5 * (y0 + y1))
        if x1 - x0 > y1 - y0:
            xm = 0.5 * (x0 + x1)
            if abs(_winding(f, x0, xm, y0, y1) - 1) < 0.2:
                x1 = xm
            else:
                x0 = xm
        else:
            ym = 0.5 * (y0 + y1)
            if abs(_winding(f, x0, x1, y0, ym) - 1) < 0.2:
                y1 = ym
            else:
                y0 = ym
    raise RootLocalizationError("quadrisection failed to shrink the rectangle")


def quasi_roots(q, h, K, certify=True):
    """Roots z_1..z_K of z + q - q e^{-zh}, one per horizontal strip.

    The root in strip k is polished by a damped complex Newton iteration to
    residual < 1e-12 and, when ``certify`` is set, verified unique by an
    argument-principle winding count of 1 on the strip rectangle.  The real
    root z = 0 is excluded by construction (the strips have Im z > 0).
    """
    if q <= 0 or h <= 0 or K < 1:
        raise ValueError("quasi_roots requires q > 0, h > 0, K >= 1")
    # residual tolerance cannot beat the evaluation noise of chi itself
    tol = max(RESIDUAL_TOL, 64 * np.finfo(float).eps * q)
    roots = []
    for k in range(1, K + 1):
        re_lo, re_hi, y_lo, y_hi = _strip_rect(q, h, k)
        z0 = complex(-1.0 / h, 0.5 * (y_lo + y_hi))
        z, res = _newton_in_strip(q, h, z0, y_lo, y_hi, tol)
        if z is None:
            # fall back to argument-principle quadrisection, then re-polish
            z = _quadrisect(q, h, re_lo, re_hi, y_lo, y_hi)
            z, res = _newton_in_strip(q, h, z, y_lo, y_hi, tol)
            if z is None:
                raise RootLocalizationError(
                    f"no root found in strip {k} rectangle "
                    f"[{re_lo}, 0] x [{y_lo}, {y_hi}] (residual {res:.2e})"
                )
        if certify:
            rect_lo = min(re_lo, z.real - 1.0)

            def f(zs):
                return chi_phase(q, h, zs)

            wind = _winding(f, rect_lo, 0.0, y_lo, y_hi)
            if abs(wind - 1) > 0.2:
                raise RootLocalizationError(
                    f"winding count {wind:.3f} != 1 on strip {k} rectangle "
                    f"[{rect_lo}, 0] x [{y_lo}, {y_hi}]"
                )
        roots.append(z)
    return roots


def decay_rate(q, h):
    """Re z_1: the sharp asymptotic decay exponent of the amplitude equation.

    Strictly negative for all q, h > 0 (the only root of chi with
    non-negative real part is z = 0).  Callers needing a bound C e^{dt}
    pair this exponent with a fitted constant.
    """
    return quasi_roots(q, h, 1)[0].real


@dataclass(frozen=True)
class RootSet:
    """Real tail roots plus the complex spectrum of the amplitude equation.

    ``q`` is the normalized coupling f2(0,0) e^{-lambda1 c h} / lambda1; the
    amplitude equation itself evolves with rate lambda1 * q (see
    :func:`wavephase.dde.solve_phase`), and ``complex_roots``/``d_rate``
    refer to that rate.  Entries of complex_roots are (strip index, root).
    """

    lambda1: float
    lambda2: float
    sigma_gap: float
    q: float
    complex_roots: tuple
    d_rate: float


def analyze(model, c, K=3):
    """RootSet for a model at speed c (complex part only when f2(0,0) > 0)."""
    lam1, lam2 = real_roots(model, c)
    q = phase_q(model, c, lam1)
    if q > 0 and model.h > 0:
        zs = quasi_roots(lam1 * q, model.h, K)
        complex_roots = tuple((k + 1, z) for k, z in enumerate(zs))
        d = zs[0].real
    else:
        complex_roots = ()
        d = -math.inf
    return RootSet(
        lambda1=lam1, lambda2=lam2, sigma_gap=lam2 - lam1,
        q=q, complex_roots=complex_roots, d_rate=d,
    )
