"""Moving-frame simulation v_t = v_xx - c v_x + f(v(t,x), v(t-h, x-ch)).

The frame travels with the front, so a fixed window suffices; the delayed
argument picks up the constant spatial shift ch, handled by 4-point cubic
interpolation with a fixed fractional offset (exact when ch/dx is integer,
hence exact in the h = 0 limit).  Time stepping is explicit first order with
2nd-order centered space differences under dt <= cfl_safety dx^2; the delayed
time t - h always lands on a stored frame because dt divides h.

Boundary policy: the left node follows the exponential tail rule
v(x_min) = e^{-lambda1 dx} v(x_min + dx) (a hard zero would be amplified by
the e^{-lambda x} weights used downstream); the right node copies its
neighbor.  Delayed arguments reaching below x_min are extrapolated by the
same tail rule.

The hot stepping loop has a compiled backend (wavephase._kernels, built from
Cython) for the two built-in reactions, and a vectorized NumPy fallback used
for custom reactions or when the extension is unavailable.  Set
WAVEPHASE_BACKEND=numpy or =compiled to force a choice.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import GridFunction, GridSpec, HistoryField

try:
    from . import _kernels
except ImportError:  # pure-Python install
    _kernels = None


class SimulationBlowupError(RuntimeError):
    def __init__(self, t, node, x):
        super().__init__(f"non-finite value at t = {t:.6g}, node {node} (x = {x:.6g})")
        self.t = t
        self.node = node
        self.x = x


@dataclass(frozen=True)
class Perturbation:
    """Additive initial perturbation bounded by K e^{rate x}, supported on
    x <= x_cutoff (the right side of the front needs only boundedness)."""

    K: float
    rate: float
    modulation: Optional[Callable] = None  # |modulation| <= 1; default 1
    x_cutoff: float = 0.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        mod = 1.0 if self.modulation is None else self.modulation(x)
        return np.where(x <= self.x_cutoff, self.K * np.exp(self.rate * x) * mod, 0.0)


@dataclass(frozen=True)
class SimConfig:
    model: object
    c: float
    grid: GridSpec
    profile: object
    alpha0: Callable
    perturbation: Optional[Perturbation] = None
    lambda_weight: Optional[float] = None

    def __post_init__(self):
        if abs(self.grid.h - self.model.h) > 1e-12 * max(1.0, self.model.h):
            raise ValueError("grid.h must equal the model delay")
        if self.lambda_weight is not None and self.lambda_weight <= self.profile.lambda1:
            raise ValueError("lambda_weight must exceed lambda1")


@dataclass(frozen=True)
class SimTrace:
    """Decimated frames plus the full trailing history window of length h."""

    times: np.ndarray
    frames: np.ndarray
    grid: GridSpec
    final_history: HistoryField
    meta: dict = field(default_factory=dict)

    def frame(self, k):
        return GridFunction(self.grid, self.frames[k])


def build_initial(config):
    """HistoryField on [-h, 0]: v0(s, x) = phi(x + alpha0(s)) + perturbation.

    The profile must cover [x_min + min alpha0 - ch, x_max + max alpha0]
    (delayed reads also shift by -ch); insufficient coverage raises a range
    error via the profile interpolator.
    """
    g = config.grid
    x = g.x
    n_hist = g.n_hist
    times = -g.h + g.dt * np.arange(n_hist + 1) if g.h > 0 else np.array([0.0])
    pert = config.perturbation
    frames = np.empty((len(times), g.n_nodes))
    for k, s in enumerate(times):
        shift = float(config.alpha0(s))
        frames[k] = config.profile.eval(x + shift)
        if pert is not None:
            frames[k] += pert(x)
    return HistoryField(times, frames, g)


def boundary_policy(values, dx, lambda1):
    """Apply the tail/outflow boundary rules in place and return the frame.

    Left: v[0] = e^{-lambda1 dx} v[1], exact for a pure e^{lambda1 x} tail
    and accurate to the profile's own remainder otherwise.  Right:
    zero gradient.
    """
    values[0] = math.exp(-lambda1 * dx) * values[1]
    values[-1] = values[-2]
    return values


def _delay_read(grid, c, h):
    """Constant interpolation data for reading v(., x - ch) on the grid.

    Returns (m, knot, w, jE) where the stencil for interior node j is
    F[j-m] when knot else sum w[i] F[j-m-2+i], and nodes j < jE use the
    exponential tail extrapolation from F[0].
    """
    S = c * h / grid.dx
    m = int(math.floor(S + 1e-12))
    theta = S - m
    if theta < 1e-12 or theta > 1 - 1e-12:
        m = int(round(S))
        return m, True, np.zeros(4), max(m, 0)
    t = 1.0 - theta  # local coordinate in the 4-point stencil
    w = np.array([
        -t * (t - 1) * (t - 2) / 6.0,
        (t * t - 1) * (t - 2) / 2.0,
        -t * (t + 1) * (t - 2) / 2.0,
        t * (t * t - 1) / 6.0,
    ])
    return m, False, w, m + 2


def backend_available():
    return _kernels is not None


def _pick_backend(requested, model):
    env = os.environ.get("WAVEPHASE_BACKEND", "")
    if env in ("numpy", "compiled"):
        requested = env
    if requested == "numpy":
        return "numpy"
    kind = {"nicholson": 0, "kpp_fisher": 1}.get(model.name, -1)
    if requested == "compiled":
        if _kernels is None:
            raise RuntimeError("compiled backend requested but not built")
        if kind < 0:
            raise RuntimeError("compiled backend supports the built-in models only")
        return "compiled"
    return "compiled" if (_kernels is not None and kind >= 0) else "numpy"


def _run_numpy(ring, n_steps, save_every, saved, dt, dx, c, f, m, knot, w, jE,
               exp_fac, bl, t0=0.0):
    nh = ring.shape[0] - 1
    n = ring.shape[1]
    d = np.empty(n)
    v = ring[nh % (nh + 1) if nh else 0]
    v = ring[nh]  # frame at absolute step 0 sits in the last row initially
    ks = 0
    for step in range(n_steps):
        slot = step % (nh + 1)
        Fd = ring[slot]  # frame at t - h (same slot is overwritten below)
        if knot:
            if m > 0:
                d[m:] = Fd[: n - m]
                d[:m] = Fd[0] * exp_fac
            else:
                d[:] = Fd
        else:
            d[jE:] = (w[0] * Fd[jE - m - 2: n - m - 2]
                      + w[1] * Fd[jE - m - 1: n - m - 1]
                      + w[2] * Fd[jE - m: n - m]
                      + w[3] * Fd[jE - m + 1: n - m + 1])
            d[:jE] = Fd[0] * exp_fac
        vn = np.empty(n)
        vn[1:-1] = v[1:-1] + dt * (
            (v[:-2] - 2 * v[1:-1] + v[2:]) / dx**2
            - c * (v[2:] - v[:-2]) / (2 * dx)
            + f(v[1:-1], d[1:-1])
        )
        vn[0] = bl * vn[1]
        vn[-1] = vn[-2]
        if (step % 25 == 24 or step == n_steps - 1) and not np.all(np.isfinite(vn)):
            node = int(np.argmin(np.isfinite(vn)))
            raise SimulationBlowupError(t0 + (step + 1) * dt, node, 0.0)
        ring[slot] = vn
        v = vn
        if (step + 1) % save_every == 0 and ks < saved.shape[0]:
            saved[ks] = vn
            ks += 1
    return ks


def simulate(config, init, T=None, backend="auto", save_every=None):
    """Run the moving-frame equation from a history field; returns SimTrace.

    ``init`` must cover [-h, 0] on the configured grid with spacing dt.
    Frames are archived every ``save_every`` steps (default: about 600 over
    the run); the full trailing window of length h is returned as a
    HistoryField for continuation or inspection.
    """
    g = config.grid
    model = config.model
    if T is None:
        T = g.T
    n = g.n_nodes
    N = g.n_hist
    dt, dx, c = g.dt, g.dx, config.c
    lam1 = config.profile.lambda1

    if len(init.times) != N + 1:
        raise ValueError(f"history must hold {N + 1} frames at spacing dt")
    n_steps = int(round(T / dt))
    if save_every is None:
        save_every = max(1, n_steps // 600)
    n_saves = n_steps // save_every

    m, knot, w, jE = _delay_read(g, c, g.h)
    if jE >= n - 1:
        raise ValueError("ch spans the whole domain; enlarge the grid")
    if knot:
        exp_fac = np.exp(lam1 * dx * (np.arange(m) - m)) if m > 0 else np.zeros(0)
    else:
        S = c * g.h / dx
        exp_fac = np.exp(lam1 * dx * (np.arange(jE) - S))
    bl = math.exp(-lam1 * dx)

    # ring rows 0..N hold steps -N..0; slot(a) = (a + N) mod (N + 1)
    ring = np.array(init.frames, dtype=float, order="C", copy=True)
    saved = np.empty((n_saves, n))

    which = _pick_backend(backend, model)
    if which == "compiled":
        kind = {"nicholson": 0, "kpp_fisher": 1}[model.name]
        p = float(model.params.get("p", 0.0))
        status, bstep, bnode = _kernels.run_steps(
            ring, saved, n_steps, save_every, dt, dx, c, kind, p,
            m, 1 if knot else 0, np.ascontiguousarray(w), jE,
            np.ascontiguousarray(exp_fac), bl,
        )
        if status != 0:
            raise SimulationBlowupError(bstep * dt, bnode, g.x_min + bnode * dx)
    else:
        def f(u, v):
            return model.f(u, v)

        _run_numpy(ring, n_steps, save_every, saved, dt, dx, c, f,
                   m, knot, w, jE, exp_fac, bl)

    times = dt * save_every * np.arange(1, n_saves + 1)
    # trailing window [T - h, T] from the ring
    hist_t = T - g.h + dt * np.arange(N + 1) if g.h > 0 else np.array([T])
    order = [(n_steps - N + k + N) % (N + 1) for k in range(N + 1)]
    final_hist = HistoryField(hist_t, ring[order], g)
    meta = {
        "scheme": "explicit Euler / centered 2nd-order space",
        "backend": which,
        "dt": dt, "dx": dx, "cfl": dt / dx**2,
        "n_steps": n_steps, "save_every": save_every,
    }
    return SimTrace(times=times, frames=saved, grid=g,
                    final_history=final_hist, meta=meta)
