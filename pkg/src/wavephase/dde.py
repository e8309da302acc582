"""The scalar amplitude equation A'(t) = q (A(t-h) - A(t)) and its closed forms.

A(t) = e^{lambda1 alpha(t)} is the amplitude of the e^{lambda1 x} tail mode of
a modulated front, alpha(t) the corresponding phase.  Integrating the
equation on [0, inf) gives the limit

    A_inf = (A(0) + q int_{-h}^0 A0) / (1 + q h),

the asymptotic shift a* = ln(A_inf)/lambda1, and the Laplace transform gives
the leading transient A(t) - A_inf ~ 2 Re(A1 e^{z1 t}) with z1 the strip-1
root of z + q - q e^{-zh}.

When the equation is driven by a wave tail with coupling f2(0,0) e^{-l1 ch},
pass rate = lambda1 * phase_q as q here; all formulas are in terms of the
equation's own rate coefficient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .charroots import quasi_roots

QUAD_SAMPLES = 1024  # intervals for composite Simpson on [-h, 0]


@dataclass(frozen=True)
class PhaseInitial:
    """Initial segment on [-h, 0], in amplitude (A0) or phase (alpha0) form.

    A0(s) = e^{lambda1 alpha0(s)} must be positive; A0(0) = 0 is admitted as
    a boundary case of the amplitude form (the phase form would need
    alpha0(0) = -inf and is rejected there).
    """

    h: float
    A0: Callable
    alpha0: Optional[Callable] = None
    lambda1: Optional[float] = None
    n_samples: int = QUAD_SAMPLES

    @classmethod
    def from_amplitude(cls, A0, h, n_samples=QUAD_SAMPLES):
        init = cls(h=float(h), A0=A0, n_samples=n_samples)
        init._validate()
        return init

    @classmethod
    def from_alpha(cls, alpha0, lambda1, h, n_samples=QUAD_SAMPLES):
        lam = float(lambda1)

        def A0(s, _a=alpha0, _l=lam):
            return np.exp(_l * np.asarray(_a(s), dtype=float))

        init = cls(h=float(h), A0=A0, alpha0=alpha0, lambda1=lam, n_samples=n_samples)
        init._validate()
        return init

    def _validate(self):
        if self.h <= 0:
            raise ValueError("PhaseInitial requires h > 0")
        s = np.linspace(-self.h, 0.0, self.n_samples + 1)
        a = np.asarray(self.A0(s), dtype=float)
        if not np.all(np.isfinite(a)):
            raise ValueError("A0 must be finite on [-h, 0]")
        if np.any(a < 0) or not np.any(a > 0):
            raise ValueError("A0 must be nonnegative with positive mass on [-h, 0]")

    def samples(self):
        """Uniform Simpson sampling (s, A0(s)) with an even interval count."""
        s = np.linspace(-self.h, 0.0, self.n_samples + 1)
        return s, np.asarray(self.A0(s), dtype=float)

    def integral(self, weight=None):
        """Composite-Simpson integral of A0 (optionally times weight(s))."""
        s, a = self.samples()
        if weight is not None:
            a = a * weight(s)
        w = np.ones(len(s))
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        return (self.h / self.n_samples) / 3.0 * np.sum(w * a)


@dataclass(frozen=True)
class PhaseSeries:
    """Solution A(t) of the amplitude equation on [-h, T], knots spaced dt."""

    t: np.ndarray
    A: np.ndarray
    q: float
    h: float
    dt: float

    def alpha(self, lambda1):
        """Phase ln A / lambda1 (nan where A <= 0)."""
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(self.A > 0, np.log(np.maximum(self.A, 1e-300)), np.nan)
        return out / lambda1


def solve_phase(q, h, init, T, dt):
    """Integrate A'(t) = q (A(t-h) - A(t)) on [0, T] by the method of steps.

    Classical RK4 per sub-step; the delayed value is read exactly at knots
    (dt divides h) and by cubic Hermite interpolation at stage midpoints.
    On the first delay interval the initial function is sampled directly, so
    no interpolation error enters there.  Positivity of A0 is preserved up
    to roundoff (A0(0) = 0 boundary cases are admitted).
    """
    if q < 0:
        raise ValueError("q must be >= 0")
    if T < 0:
        raise ValueError("T must be >= 0")
    n_hist = h / dt
    if abs(n_hist - round(n_hist)) > 1e-9 or round(n_hist) < 1:
        raise ValueError(f"dt = {dt} does not divide h = {h}")
    N = int(round(n_hist))
    dt = h / N
    n_steps = int(round(T / dt))

    A = np.empty(N + n_steps + 1)
    dA = np.empty_like(A)  # derivatives at computed knots, for Hermite reads
    s_hist = -h + dt * np.arange(N + 1)
    A[: N + 1] = np.asarray(init.A0(s_hist), dtype=float)

    A0f = init.A0

    def delayed(tq):
        # A(tq) for tq in [-h, T); knots exact, midpoints Hermite
        if tq <= 1e-14:
            return float(A0f(tq))
        idx = (tq + h) / dt
        k = int(round(idx))
        if abs(idx - k) < 1e-9:
            return A[k]
        k = int(math.floor(idx))
        return 0.5 * (A[k] + A[k + 1]) + dt * (dA[k] - dA[k + 1]) / 8.0

    for n in range(n_steps):
        t = n * dt
        i = N + n
        a = A[i]
        k1 = q * (delayed(t - h) - a)
        dA[i] = k1
        k2 = q * (delayed(t + 0.5 * dt - h) - (a + 0.5 * dt * k1))
        k3 = q * (delayed(t + 0.5 * dt - h) - (a + 0.5 * dt * k2))
        k4 = q * (delayed(t + dt - h) - (a + dt * k3))
        A[i + 1] = a + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0
    dA[N + n_steps] = q * (delayed(T - h) - A[N + n_steps]) if n_steps else 0.0

    t = -h + dt * np.arange(N + n_steps + 1)
    return PhaseSeries(t=t, A=A, q=q, h=h, dt=dt)


def a_infinity(q, h, init):
    """Closed-form limit (A0(0) + q int A0) / (1 + q h)."""
    return (float(init.A0(0.0)) + q * init.integral()) / (1.0 + q * h)


def asymptotic_shift(lambda1, A_inf):
    """a* = ln(A_inf) / lambda1."""
    if A_inf <= 0:
        raise ValueError("A_inf must be positive")
    if lambda1 <= 0:
        raise ValueError("lambda1 must be positive")
    return math.log(A_inf) / lambda1


def traveled_distance(lambda1, q, h, init):
    """Net displacement between initial and limiting positions.

    delta = (1/lambda1) ln[(1 + q int A0 / A0(0)) / (1 + q h)]; zero exactly
    when A0(0) equals the mean of A0 over [-h, 0].  Undefined for
    A0(0) <= 0.
    """
    a00 = float(init.A0(0.0))
    if a00 <= 0:
        raise ValueError("traveled_distance requires A0(0) > 0")
    return math.log((1.0 + q * init.integral() / a00) / (1.0 + q * h)) / lambda1


def leading_coefficient(q, h, init, z1):
    """Laplace coefficient A1 of the leading transient 2 Re(A1 e^{z1 t}).

    A1 (1 + h (z1 + q)) = A0(0) + q e^{-z1 h} int_{-h}^0 e^{-z1 s} A0(s) ds.
    The denominator is chi'(z1) and cannot vanish at a simple root.
    """
    z1 = complex(z1)
    denom = 1.0 + h * (z1 + q)
    if abs(denom) < 1e-12:
        raise ValueError("chi'(z1) vanishes; z1 is not a simple root")
    s, a = init.samples()
    g = np.exp(-z1 * s) * a
    w = np.ones(len(s), dtype=complex)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    integral = (h / init.n_samples) / 3.0 * np.sum(w * g)
    return (float(init.A0(0.0)) + q * np.exp(-z1 * h) * integral) / denom


def check_exponential_bound(series, A_inf, d_rate):
    """Smallest C with |A(t) - A_inf| <= C e^{d_rate t} on t >= 0, plus a flag.

    The flag is true when the fitted decay of the per-window envelope of
    |A - A_inf| is no slower than d_rate - 0.05 (windows of length h absorb
    the oscillation's zero crossings).  A ~= A_inf returns (0, True).
    """
    mask = series.t >= -1e-12
    t = series.t[mask]
    dev = np.abs(series.A[mask] - A_inf)
    scale = max(1.0, float(np.max(np.abs(series.A))))
    if np.max(dev) < 1e-12 * scale:
        return 0.0, True
    C = float(np.max(dev * np.exp(-d_rate * t)))

    n_win = int(math.floor((t[-1] - t[0]) / series.h))
    mids, envs = [], []
    for k in range(n_win):
        lo, hi = t[0] + k * series.h, t[0] + (k + 1) * series.h
        sel = (t >= lo) & (t < hi)
        if np.any(sel):
            env = np.max(dev[sel])
            if env > 1e-13 * scale:
                mids.append(0.5 * (lo + hi))
                envs.append(env)
    if len(envs) < 3:
        return C, True
    slope = np.polyfit(mids, np.log(envs), 1)[0]
    return C, bool(slope >= d_rate - 0.05)


@dataclass(frozen=True)
class PhasePrediction:
    """Everything the amplitude equation determines about the limiting phase."""

    A_inf: float
    a_star: float
    delta_a: float  # nan when A0(0) = 0
    A1: complex
    z1: complex
    d_rate: float


def predict(q, h, init, lambda1):
    """PhasePrediction from the closed forms (q is the equation's own rate).

    delta_a is nan for the admitted A0(0) = 0 boundary case; the transient
    data (A1, z1, d_rate) degenerate to zero/-inf when q = 0.
    """
    A_inf = a_infinity(q, h, init)
    a_star = asymptotic_shift(lambda1, A_inf)
    a00 = float(init.A0(0.0))
    delta = traveled_distance(lambda1, q, h, init) if a00 > 0 else math.nan
    if q > 0:
        z1 = quasi_roots(q, h, 1)[0]
        A1 = leading_coefficient(q, h, init, z1)
        d = z1.real
    else:
        z1 = complex(0.0)
        A1 = complex(0.0)
        d = -math.inf
    return PhasePrediction(A_inf=A_inf, a_star=a_star, delta_a=delta,
                           A1=A1, z1=z1, d_rate=d)
