"""Model catalog, grids, and the delayed-history container.

The reaction term is f(u, v) where u is the instantaneous value and v the
delayed one.  Built-in models:

* ``nicholson``:   f(u, v) = -u + p v e^{-v},  p > 1
* ``kpp_fisher``:  f(u, v) = u (1 - v)

Both have the zero state as an unstable equilibrium (f(0,0) = 0) and a
positive stable state ``u_plus`` (ln p, resp. 1).  Associated constants:
L2 bounds |f(w, v1) - f(w, v2)| <= L2 |v1 - v2| on the solution range, and
D = inf (f(w1, v) - f(w2, v)) / (w2 - w1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

MODEL_NAMES = ("nicholson", "kpp_fisher", "custom")


@dataclass(frozen=True)
class ModelSpec:
    """A reaction term together with its linearization data and bounds.

    f1_00 and f2_00 are the partial derivatives of f at (0, 0); L2, D, M1,
    M2, M3 are the Lipschitz/monotonicity/range constants (M3 may be inf).
    ``kappa``/``g`` are set for product-form reactions f(u,v) = g(u)(kappa-v).
    """

    name: str
    f: Callable
    f1_00: float
    f2_00: float
    L2: float
    D: float
    M1: float
    M2: float
    M3: float
    h: float
    u_plus: float
    params: dict = field(default_factory=dict)
    kappa: Optional[float] = None
    g: Optional[Callable] = None
    df: Optional[Callable] = None  # (u, v) -> (f1, f2); finite differences if None

    def __post_init__(self):
        if self.h < 0:
            raise ValueError("delay h must be >= 0")
        if not (self.L2 >= self.f2_00 >= 0):
            raise ValueError("need L2 >= f2(0,0) >= 0")
        if not (self.M2 <= 0 <= self.M1 <= self.M3):
            raise ValueError("need M2 <= 0 <= M1 <= M3")


def make_model(name, **params):
    """Build a ModelSpec preset by name.

    nicholson requires p > 1; kpp_fisher accepts an optional wave speed c
    used to fill the non-monotone-regime constants L2 = M1 = e^{ch} (without
    c the monotone-regime constants L2 = M1 = 1 are stored).  custom requires
    f and all constants explicitly.
    """
    if name not in MODEL_NAMES:
        raise ValueError(f"unknown model {name!r}; expected one of {MODEL_NAMES}")
    h = float(params.get("h", 0.0))
    if h < 0:
        raise ValueError("delay h must be >= 0")

    if name == "nicholson":
        p = float(params.get("p", math.nan))
        if not p > 1:
            raise ValueError("nicholson requires p > 1")

        def f(u, v, _p=p):
            return -u + _p * v * np.exp(-v)

        def df(u, v, _p=p):
            return -np.ones_like(np.asarray(u, dtype=float)), _p * (1 - v) * np.exp(-v)

        return ModelSpec(
            name=name, f=f, f1_00=-1.0, f2_00=p, L2=p, D=1.0,
            M1=p / math.e, M2=0.0, M3=math.inf, h=h,
            u_plus=math.log(p), params={"p": p, "h": h}, df=df,
        )

    if name == "kpp_fisher":
        c = params.get("c")
        L2 = M1 = float(np.exp(c * h)) if c is not None else 1.0

        def f(u, v):
            return u * (1 - v)

        def df(u, v):
            return 1 - v, -np.asarray(u, dtype=float)

        def g(u):
            return u

        return ModelSpec(
            name=name, f=f, f1_00=1.0, f2_00=0.0, L2=L2, D=-1.0,
            M1=M1, M2=0.0, M3=math.inf, h=h,
            u_plus=1.0, params={"h": h, "c": c}, kappa=1.0, g=g, df=df,
        )

    required = ("f", "f1_00", "f2_00", "L2", "D", "M1", "M2", "M3")
    missing = [k for k in required if k not in params]
    if missing:
        raise ValueError(f"custom model requires explicit {missing}")
    return ModelSpec(
        name="custom", f=params["f"],
        f1_00=float(params["f1_00"]), f2_00=float(params["f2_00"]),
        L2=float(params["L2"]), D=float(params["D"]),
        M1=float(params["M1"]), M2=float(params["M2"]), M3=float(params["M3"]),
        h=h, u_plus=float(params.get("u_plus", 1.0)),
        params=dict(params), kappa=params.get("kappa"), g=params.get("g"),
        df=params.get("df"),
    )


def eval_f(model, u, v):
    """Evaluate the reaction term f(u, v); total on finite inputs."""
    return model.f(u, v)


def eval_partials(model, u, v, step=1e-7):
    """Partial derivatives (f1, f2) of the reaction at (u, v).

    Uses the model's analytic derivatives when available, otherwise central
    finite differences with the given step.
    """
    if model.df is not None:
        return model.df(u, v)
    f1 = (model.f(u + step, v) - model.f(u - step, v)) / (2 * step)
    f2 = (model.f(u, v + step) - model.f(u, v - step)) / (2 * step)
    return f1, f2


# ---------------------------------------------------------------------------
# grids


@dataclass(frozen=True)
class GridSpec:
    """Uniform moving-frame space-time grid.

    dt must divide the delay h exactly (h = n_hist * dt) so the delayed time
    t - h always lands on a stored snapshot, and must satisfy the explicit
    stability bound dt <= cfl_safety * dx**2 with cfl_safety <= 0.25.
    """

    x_min: float
    x_max: float
    dx: float
    dt: float
    T: float
    h: float
    cfl_safety: float = 0.25

    def __post_init__(self):
        if not self.x_max > self.x_min:
            raise ValueError("x_max must exceed x_min")
        if self.dx <= 0 or self.dt <= 0:
            raise ValueError("dx and dt must be positive")
        if self.T < 0:
            raise ValueError("T must be >= 0")
        if self.cfl_safety > 0.25:
            raise ValueError("cfl_safety must be <= 0.25")
        if self.dt > self.cfl_safety * self.dx**2 * (1 + 1e-12):
            raise ValueError(
                f"dt = {self.dt} violates dt <= cfl_safety*dx^2 = "
                f"{self.cfl_safety * self.dx ** 2}"
            )
        if self.h > 0:
            n = self.h / self.dt
            if abs(n - round(n)) > 1e-9 or round(n) < 1:
                raise ValueError(f"dt = {self.dt} does not divide h = {self.h}")

    @property
    def n_nodes(self):
        return int(round((self.x_max - self.x_min) / self.dx)) + 1

    @property
    def n_hist(self):
        """Number of steps spanning one delay (0 when h == 0)."""
        return int(round(self.h / self.dt)) if self.h > 0 else 0

    @property
    def x(self):
        return self.x_min + self.dx * np.arange(self.n_nodes)


def make_grid(x_min, x_max, dx, h, T, cfl_safety=0.25):
    """GridSpec with the largest dt that divides h and obeys the CFL bound."""
    dt_cap = cfl_safety * dx**2
    if h > 0:
        n = max(1, math.ceil(h / dt_cap))
        dt = h / n
    else:
        dt = dt_cap
    return GridSpec(x_min, x_max, dx, dt, T, h, cfl_safety)


@dataclass(frozen=True)
class GridFunction:
    """Values of a scalar field on the nodes of a GridSpec."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.n_nodes,):
            raise ValueError(
                f"values shape {v.shape} does not match node count {self.grid.n_nodes}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("GridFunction values must be finite")
        object.__setattr__(self, "values", v)


# ---------------------------------------------------------------------------
# cubic interpolation on uniform grids

_NOT_A_KNOT_TOL = 1e-12


def interp_cubic(x0, dx, values, xq):
    """4-point Lagrange interpolation of uniformly sampled values.

    Exact at the knots and exact for cubic polynomials.  Near the ends the
    stencil is clamped inside the data (one-sided interpolation).  Querying
    outside [x0, x0 + (n-1) dx] raises.
    """
    values = np.asarray(values)
    xq = np.asarray(xq, dtype=float)
    n = len(values)
    p = (xq - x0) / dx
    if np.any(p < -1e-9) or np.any(p > n - 1 + 1e-9):
        bad = xq[(p < -1e-9) | (p > n - 1 + 1e-9)]
        raise ValueError(
            f"query {np.min(bad)}..{np.max(bad)} outside data range "
            f"[{x0}, {x0 + (n - 1) * dx}]"
        )
    i = np.clip(np.floor(p).astype(int) - 1, 0, n - 4)
    t = p - i
    w0 = -(t - 1) * (t - 2) * (t - 3) / 6.0
    w1 = t * (t - 2) * (t - 3) / 2.0
    w2 = -t * (t - 1) * (t - 3) / 2.0
    w3 = t * (t - 1) * (t - 2) / 6.0
    return w0 * values[i] + w1 * values[i + 1] + w2 * values[i + 2] + w3 * values[i + 3]


class HistoryField:
    """Time-stamped stack of spatial snapshots over one delay window.

    Snapshot times are uniformly spaced by dt and strictly increasing.
    Evaluation is exact in time (the queried time must be a stored knot) and
    cubic in space.  Single-writer: the time stepper appends; concurrent
    reads between steps are safe because rows are never mutated in place.
    """

    def __init__(self, times, frames, grid):
        times = np.asarray(times, dtype=float)
        frames = np.asarray(frames, dtype=float)
        if frames.ndim != 2 or frames.shape[0] != len(times):
            raise ValueError("frames must be (len(times), n_nodes)")
        if frames.shape[1] != grid.n_nodes:
            raise ValueError("frame width does not match grid")
        if len(times) > 1:
            dts = np.diff(times)
            if np.any(dts <= 0):
                raise ValueError("snapshot times must be strictly increasing")
            if np.max(np.abs(dts - dts[0])) > 1e-9 * max(1.0, abs(dts[0])):
                raise ValueError("snapshot times must be uniformly spaced")
        if not np.all(np.isfinite(frames)):
            raise ValueError("history frames must be finite")
        self.times = times
        self.frames = frames
        self.grid = grid

    @property
    def t_start(self):
        return self.times[0]

    @property
    def t_end(self):
        return self.times[-1]

    def frame_at(self, t):
        """The stored snapshot at time t (must hit a knot)."""
        if len(self.times) == 1:
            idx = 0.0
        else:
            idx = (t - self.times[0]) / (self.times[1] - self.times[0])
        k = int(round(idx))
        if k < 0 or k >= len(self.times) or abs(idx - k) > 1e-6:
            raise ValueError(f"time {t} is not a stored snapshot")
        return self.frames[k]

    def eval(self, t, x):
        """Value at (t, x): exact snapshot in time, cubic in space."""
        frame = self.frame_at(t)
        return interp_cubic(self.grid.x_min, self.grid.dx, frame, x)
