"""Traveling-wave profiles phi'' - c phi' + f(phi(.), phi(. - ch)) = 0.

The profile connects 0 (at -inf) to the positive state and is normalized by
its tail: phi(xi) ~ e^{lambda1 xi} as xi -> -inf, with coefficient exactly 1.

The discretized equation is solved globally by a damped Newton iteration on
a grid of half the output spacing, with 4th-order interior stencils.  One
boundary condition is imposed per side: phi(xi_min) = e^{lambda1 xi_min}
(fixing amplitude and translation) and phi(xi_max) = u_plus.  Delayed
arguments below xi_min use the tail closure e^{lambda1 (xi - ch)}; its
relative error is O(e^{sigma xi_min}) and dictates how deep the left end
must sit.

Forward shooting from the tail is not used: the pure-exponential seed is
inconsistent with the wave's second-order tail term, and that inconsistency
carries a lambda2-mode component growing like e^{lambda2 xi}, which reaches
O(1) before the front regardless of the seed depth.  A two-point solve has
no such amplification; its conditioning is set by the front itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

from .charroots import real_roots
from .core import eval_partials, interp_cubic

SEED_DEPTH_TOL = 1e-4  # e^{(lambda2-lambda1) xi_min} must fall below this


class ProfileError(RuntimeError):
    pass


@dataclass(frozen=True)
class WaveProfile:
    """A discretized wavefront with tail-normalization metadata."""

    xi_min: float
    dxi: float
    phi: np.ndarray
    dphi: np.ndarray
    c: float
    h: float
    lambda1: float
    lambda2: float
    xi0: float  # seed point: phi(xi0) = e^{lambda1 xi0} exactly
    residual_max: float
    tail_sigma_est: float
    u_plus: float

    @property
    def xi_max(self):
        return self.xi_min + self.dxi * (len(self.phi) - 1)

    @property
    def xi(self):
        return self.xi_min + self.dxi * np.arange(len(self.phi))

    def eval(self, x):
        """phi at arbitrary points (cubic); raises outside the grid."""
        try:
            return interp_cubic(self.xi_min, self.dxi, self.phi, x)
        except ValueError as e:
            raise ValueError(f"profile coverage insufficient: {e}") from e

    def eval_dphi(self, x):
        try:
            return interp_cubic(self.xi_min, self.dxi, self.dphi, x)
        except ValueError as e:
            raise ValueError(f"profile coverage insufficient: {e}") from e


def _adjust_dxi(dxi, ch):
    """Largest step <= dxi that divides ch exactly (unchanged when ch = 0)."""
    if ch <= 0:
        return dxi, 0
    n = max(1, math.ceil(ch / dxi - 1e-12))
    return ch / n, n


def _ode_rhs(model, phi, vd):
    return model.f(phi, vd)


def _newton_solve(model, c, lam1, xi, dx, nd, u_plus, phi0, max_iter=60):
    """Damped Newton on the discrete two-point problem; returns phi."""
    n = len(xi)
    seed_below = np.exp(lam1 * (xi - nd * dx))  # delayed closure below xi_min
    idx4 = np.arange(2, n - 2)
    phi = phi0.copy()
    phi[0] = math.exp(lam1 * xi[0])
    phi[-1] = u_plus
    # residual floor: second differences of O(1) values cannot beat this
    floor = 64 * np.finfo(float).eps / dx**2

    def delayed(ph):
        j = np.arange(n) - nd
        if nd == 0:
            return ph.copy()
        return np.where(j >= 0, ph[np.clip(j, 0, n - 1)], seed_below)

    def residual(ph):
        vd = delayed(ph)
        F = np.empty(n)
        F[0] = ph[0] - math.exp(lam1 * xi[0])
        F[-1] = ph[-1] - u_plus
        for j in (1, n - 2):  # 2nd order next to the boundaries
            d2 = (ph[j - 1] - 2 * ph[j] + ph[j + 1]) / dx**2
            d1 = (ph[j + 1] - ph[j - 1]) / (2 * dx)
            F[j] = d2 - c * d1 + model.f(ph[j], vd[j])
        d2 = (-ph[idx4 - 2] + 16 * ph[idx4 - 1] - 30 * ph[idx4]
              + 16 * ph[idx4 + 1] - ph[idx4 + 2]) / (12 * dx**2)
        d1 = (ph[idx4 - 2] - 8 * ph[idx4 - 1] + 8 * ph[idx4 + 1]
              - ph[idx4 + 2]) / (12 * dx)
        F[idx4] = d2 - c * d1 + model.f(ph[idx4], vd[idx4])
        return F, vd

    def jacobian(ph, vd):
        rows, cols, vals = [], [], []

        def add(r, cc, v):
            rows.append(np.atleast_1d(r).astype(int))
            cols.append(np.atleast_1d(cc).astype(int))
            vals.append(np.atleast_1d(v).astype(float))

        add(0, 0, 1.0)
        add(n - 1, n - 1, 1.0)
        for j in (1, n - 2):
            f1, f2 = eval_partials(model, ph[j], vd[j])
            add(j, j - 1, 1 / dx**2 + c / (2 * dx))
            add(j, j, -2 / dx**2 + float(f1))
            add(j, j + 1, 1 / dx**2 - c / (2 * dx))
            jd = j - nd
            if nd > 0 and jd >= 0:
                add(j, jd, float(f2))
            elif nd == 0:
                add(j, j, float(f2))
        f1, f2 = eval_partials(model, ph[idx4], vd[idx4])
        f1 = np.broadcast_to(np.asarray(f1, dtype=float), idx4.shape)
        f2 = np.broadcast_to(np.asarray(f2, dtype=float), idx4.shape)
        for off, coef in ((-2, -1 / (12 * dx**2) - c / (12 * dx)),
                          (-1, 16 / (12 * dx**2) + 8 * c / (12 * dx)),
                          (1, 16 / (12 * dx**2) - 8 * c / (12 * dx)),
                          (2, -1 / (12 * dx**2) + c / (12 * dx))):
            add(idx4, idx4 + off, np.full(len(idx4), coef))
        diag = np.full(len(idx4), -30 / (12 * dx**2)) + f1
        if nd == 0:
            diag = diag + f2
        add(idx4, idx4, diag)
        if nd > 0:
            jd = idx4 - nd
            m = jd >= 0
            add(idx4[m], jd[m], f2[m])
        return sparse.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(n, n),
        ).tocsc()

    F, vd = residual(phi)
    nrm = float(np.max(np.abs(F)))
    for _ in range(max_iter):
        if nrm < floor:
            break
        delta = spsolve(jacobian(phi, vd), -F)
        if not np.all(np.isfinite(delta)):
            raise ProfileError("Newton step failed (singular Jacobian)")
        step = 1.0
        for _ in range(30):
            trial = phi + step * delta
            Ft, vdt = residual(trial)
            nt = float(np.max(np.abs(Ft)))
            if nt < nrm:
                phi, F, vd, nrm = trial, Ft, vdt, nt
                break
            step /= 2
        else:
            break  # no further progress; nrm is the attained floor
        if float(np.max(np.abs(delta))) < 1e-14 * max(1.0, float(np.max(np.abs(phi)))):
            break
    if nrm > 1e-7:
        raise ProfileError(
            f"profile solve did not converge (residual {nrm:.3g}); "
            "try a deeper xi_min or a finer grid"
        )
    return phi


def compute_profile(model, c, xi_min, xi_max, dxi):
    """Compute the tail-normalized front on [xi_min, xi_max].

    dxi is adjusted downward so that it divides ch exactly (delayed reads hit
    knots); the equation is solved on a grid of spacing dxi/2 and decimated.
    xi_min must be deep enough that e^{(lambda2 - lambda1) xi_min} < 1e-4,
    otherwise the tail closure pollutes the front.
    """
    lam1, lam2 = real_roots(model, c)
    ch = c * model.h
    if xi_min >= xi_max:
        raise ValueError("xi_min must be below xi_max")
    if math.exp((lam2 - lam1) * xi_min) > SEED_DEPTH_TOL:
        raise ValueError(
            f"xi_min = {xi_min} too shallow: need xi_min <= "
            f"{math.log(SEED_DEPTH_TOL) / (lam2 - lam1):.3g}"
        )
    dxi, nd = _adjust_dxi(dxi, ch)
    n_out = int(math.floor((xi_max - xi_min) / dxi + 1e-9)) + 1
    xi_out = xi_min + dxi * np.arange(n_out)

    dxf = 0.5 * dxi
    ndf = 2 * nd
    nf = 2 * (n_out - 1) + 1
    xif = xi_min + dxf * np.arange(nf)

    u_plus = model.u_plus
    E = np.exp(lam1 * xif) / max(u_plus, 1e-12)
    guess = u_plus * E / (1.0 + E)

    phif = _newton_solve(model, c, lam1, xif, dxf, ndf, u_plus, guess)

    phi = phif[::2]
    if np.any(~np.isfinite(phi)) or np.max(np.abs(phi)) > 10 * max(model.M1, u_plus, 1.0):
        raise ProfileError("profile blow-up; seed too shallow or speed too close "
                           "to critical")
    # 4th-order first derivative on the fine grid, decimated with the values
    dphif = np.empty(nf)
    dphif[2:-2] = (phif[:-4] - 8 * phif[1:-3] + 8 * phif[3:-1] - phif[4:]) / (12 * dxf)
    dphif[0] = lam1 * phif[0]
    dphif[1] = (phif[2] - phif[0]) / (2 * dxf)
    dphif[-2] = (phif[-1] - phif[-3]) / (2 * dxf)
    dphif[-1] = (phif[-1] - phif[-2]) / dxf
    dphi = dphif[::2]

    prof = WaveProfile(
        xi_min=xi_min, dxi=dxi, phi=phi, dphi=dphi, c=c, h=model.h,
        lambda1=lam1, lambda2=lam2, xi0=xi_min,
        residual_max=math.nan, tail_sigma_est=math.nan, u_plus=u_plus,
    )
    res = profile_residual(prof, model)
    sig, _ = tail_remainder(prof)
    object.__setattr__(prof, "residual_max", res)
    object.__setattr__(prof, "tail_sigma_est", sig)
    return prof


def profile_residual(profile, model):
    """Max 4th-order finite-difference residual of the wave equation.

    Re-evaluates phi'' - c phi' + f(phi, phi(. - ch)) on the stored (output)
    grid with centered 5-point stencils; delayed values hit knots exactly
    since dxi divides ch, and fall back to the tail closure below xi_min.
    """
    ph = profile.phi
    n = len(ph)
    dx = profile.dxi
    xi = profile.xi
    nd = int(round(profile.c * profile.h / dx)) if profile.h > 0 else 0
    idx = np.arange(2, n - 2)
    d2 = (-ph[idx - 2] + 16 * ph[idx - 1] - 30 * ph[idx]
          + 16 * ph[idx + 1] - ph[idx + 2]) / (12 * dx**2)
    d1 = (ph[idx - 2] - 8 * ph[idx - 1] + 8 * ph[idx + 1] - ph[idx + 2]) / (12 * dx)
    j = idx - nd
    if nd > 0:
        vd = np.where(j >= 0, ph[np.clip(j, 0, n - 1)],
                      np.exp(profile.lambda1 * (xi[idx] - nd * dx)))
    else:
        vd = ph[idx]
    return float(np.max(np.abs(d2 - profile.c * d1 + model.f(ph[idx], vd))))


def tail_remainder(profile):
    """Decay exponent of the tail remainder B(xi) = phi - e^{lambda1 xi}.

    Log-linear fit on the left third of the grid, restricted to points where
    |B| is above the numerical floor.  Returns (sigma_est, bounded) where
    sigma_est is the fitted exponent minus lambda1 and bounded means the
    remainder decays at least 0.1 (lambda2 - lambda1) faster than the tail.
    If B sits below the floor everywhere, (lambda2 - lambda1, True) is
    returned by convention.
    """
    xi = profile.xi
    B = profile.phi - np.exp(profile.lambda1 * xi)
    third = len(xi) // 3
    xi3, B3 = xi[:third], np.abs(B[:third])
    floor = 1e-12 * max(1.0, float(np.max(np.abs(profile.phi))))
    mask = B3 > floor
    if np.count_nonzero(mask) < 8:
        return profile.lambda2 - profile.lambda1, True
    slope = np.polyfit(xi3[mask], np.log(B3[mask]), 1)[0]
    sigma = float(slope) - profile.lambda1
    margin = 0.1 * (profile.lambda2 - profile.lambda1)
    return sigma, bool(slope >= profile.lambda1 + margin)
