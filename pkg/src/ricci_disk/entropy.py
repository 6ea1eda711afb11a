"""Modified Perelman entropy of a disk with boundary, and its infimum.

For a potential ``f`` and scale ``tau``

    W = (4 pi tau)^-1 int [tau (R + |grad f|^2) + f - 2] e^-f dmu
        + (4 pi)^-1 int_bdry 2 H e^-f dsigma.

Everything here is evaluated in the variable ``Phi = exp(-f/2)``, where the
gradient energy ``int |grad f|^2 e^-f dmu = 4 int |grad Phi|^2 dmu`` is
conformally invariant and discretized edge by edge.  The discrete functional
is then exactly invariant under ``(g, tau) -> (c g, c tau)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded
from scipy.special import xlogy

from .geometry import (
    FOUR_PI,
    TWO_PI,
    ConformalState,
    annulus_volume,
    area_weights,
    arclength,
    boundary_length,
    ddx,
    geodesic_curvature,
    laplacian0,
    scalar_curvature,
)

PHI_FLOOR = 1e-14


@dataclass(frozen=True)
class EntropyBreakdown:
    bulk: float
    boundary: float
    total: float
    tau: float


@dataclass(frozen=True, eq=False)
class MuResult:
    mu: float
    phi: np.ndarray
    iterations: int
    constraint_residual: float
    grad_norm: float
    converged: bool


@dataclass(frozen=True)
class CutoffBound:
    value: float
    c: float
    vol_ratio: float
    boundary_bound: float


class _Functional:
    """The entropy as a function of nodal ``Phi`` on a fixed metric and scale."""

    def __init__(self, state: ConformalState, tau: float):
        if not tau > 0:
            raise ValueError(f"tau must be positive, got {tau}")
        bg = state.bg
        self.tau = tau
        self.m = area_weights(state)
        self.R = scalar_curvature(state)
        self.H = geodesic_curvature(state)
        self.L = boundary_length(state)
        # edge weights of int |grad Phi|^2 dmu = 2 pi int (w0/phi0) Phi_x^2 dx
        self.k = TWO_PI * bg.a_half / bg.grid.h
        self.scale = 1.0 / (FOUR_PI * tau)

    def stiffness(self, phi):
        d = np.diff(phi)
        return float(np.dot(self.k, d * d))

    def stiffness_apply(self, phi):
        flux = self.k * np.diff(phi)
        out = np.zeros_like(phi)
        out[:-1] -= flux
        out[1:] += flux
        return out

    def parts(self, phi):
        p2 = phi * phi
        m, tau = self.m, self.tau
        bulk = self.scale * (
            tau * np.dot(m, self.R * p2)
            + 4.0 * tau * self.stiffness(phi)
            - np.dot(m, xlogy(p2, p2))
            - 2.0 * np.dot(m, p2)
        )
        boundary = 2.0 * self.H * self.L * p2[-1] / FOUR_PI
        return float(bulk), float(boundary)

    def value(self, phi):
        b, s = self.parts(phi)
        return b + s

    def gradient(self, phi):
        m, tau = self.m, self.tau
        logp2 = np.log(np.maximum(phi * phi, 1e-300))
        g = self.scale * (
            2.0 * tau * m * self.R * phi
            + 8.0 * tau * self.stiffness_apply(phi)
            - m * (2.0 * phi * logp2 + 2.0 * phi)
            - 4.0 * m * phi
        )
        g[-1] += 4.0 * self.H * self.L * phi[-1] / FOUR_PI
        return g

    def constraint(self, phi):
        return self.scale * float(np.dot(self.m, phi * phi))

    def constraint_gradient(self, phi):
        return 2.0 * self.scale * self.m * phi

    def preconditioner_bands(self):
        """Banded form of ``(8 tau S + 2 M) / (4 pi tau)``, symmetric positive definite."""
        N = self.m.size
        ab = np.zeros((3, N))
        diag = 2.0 * self.m.copy()
        diag[:-1] += 8.0 * self.tau * self.k
        diag[1:] += 8.0 * self.tau * self.k
        ab[1] = self.scale * diag
        ab[0, 1:] = -self.scale * 8.0 * self.tau * self.k
        ab[2, :-1] = -self.scale * 8.0 * self.tau * self.k
        return ab

    def normalize(self, phi):
        return phi / math.sqrt(self.constraint(phi))


def w_infinity(state: ConformalState, pot) -> EntropyBreakdown:
    """Entropy of the potential ``pot.f`` at scale ``pot.tau`` on ``state``."""
    if not pot.tau > 0:
        raise ValueError(f"tau must be positive, got {pot.tau}")
    fn = _Functional(state, pot.tau)
    bulk, boundary = fn.parts(np.exp(-0.5 * pot.f))
    return EntropyBreakdown(bulk, boundary, bulk + boundary, pot.tau)


def entropy_of_phi(state: ConformalState, tau: float, phi: np.ndarray, normalize: bool = True) -> float:
    """The entropy of a nodal ``Phi``, rescaled onto the constraint first by default."""
    fn = _Functional(state, tau)
    phi = np.asarray(phi, dtype=float)
    return fn.value(fn.normalize(phi) if normalize else phi)


def _hessian_eigenvalues(state: ConformalState, f: np.ndarray):
    """Eigenvalues ``(f_ss, (w_s/w) f_s)`` of the Hessian of a radial ``f``."""
    bg = state.bg
    h = bg.grid.h
    u = state.u
    fx = ddx(f, h)
    dw0 = np.gradient(bg.w0, bg.grid.x, edge_order=2)
    lap = np.exp(-u) * laplacian0(bg, f)
    angular = np.empty_like(f)
    angular[1:] = np.exp(-u[1:]) * (dw0[1:] / bg.w0[1:] + 0.5 * ddx(u, h)[1:]) * fx[1:] / bg.phi0[1:] ** 2
    angular[0] = 0.5 * lap[0]
    return lap - angular, angular


def soliton_tensor_norm2(state: ConformalState, pot) -> np.ndarray:
    """Pointwise ``|Rc + Hess f - g / (2 tau)|^2``."""
    R = scalar_curvature(state)
    radial, angular = _hessian_eigenvalues(state, pot.f)
    shift = 0.5 * R - 0.5 / pot.tau
    return (shift + radial) ** 2 + (shift + angular) ** 2


def monotonicity_integrand(state: ConformalState, pot, squared: bool = True) -> float:
    """``(4 pi)^-1 int 2 |Rc + Hess f - g/(2 tau)|^2 e^-f dmu``.

    With ``squared=False`` the unsquared tensor norm is integrated instead,
    for comparison only.
    """
    q = soliton_tensor_norm2(state, pot)
    if not squared:
        q = np.sqrt(q)
    return float(np.dot(area_weights(state), 2.0 * q * np.exp(-pot.f))) / FOUR_PI


def boundary_flux_term(state: ConformalState, pot) -> float:
    """Boundary contribution to ``dW/dt`` missing from the bulk integrand.

    Writing the entropy as ``int v dmu`` with Perelman's density ``v``, its
    time derivative is the bulk integrand minus ``int_bdry dv/dN dsigma``.
    Under ``f_N = H`` and the boundary evolution of ``R`` this flux reduces,
    for radial ``f``, to ``H (3 - f - tau (H^2 + R)) e^-f / (4 pi tau)`` per
    unit length.  It vanishes when ``H = 0``.
    """
    R = scalar_curvature(state)
    H = geodesic_curvature(state)
    L = boundary_length(state)
    tau = pot.tau
    fb = pot.f[-1]
    return -H * (3.0 - fb - tau * (H * H + R[-1])) * math.exp(-fb) * L / (FOUR_PI * tau)


def mu_infinity(state: ConformalState, tau: float, tol: float = 1e-7, max_iter: int = 10_000,
                phi0=None) -> MuResult:
    """Minimize the entropy over radial ``Phi > 0`` with unit normalization.

    Preconditioned projected gradient descent: the gradient is taken in the
    metric ``(8 tau S + 2 M)/(4 pi tau)``, projected onto the tangent space of
    the constraint, and each trial point is pulled back onto the constraint
    by rescaling.  Step lengths come from Armijo backtracking.  The
    stationarity measure is ``sqrt(-slope)``, whose roundoff floor is about
    ``sqrt(eps) |W|``; the iteration stops early once steps make no progress.
    """
    fn = _Functional(state, tau)
    P = fn.preconditioner_bands()
    if phi0 is None:
        A = float(np.sum(fn.m))
        phi = np.full(fn.m.size, math.sqrt(FOUR_PI * tau / A))
    else:
        phi = fn.normalize(np.maximum(np.asarray(phi0, dtype=float), PHI_FLOOR))
    W = fn.value(phi)
    gnorm = math.inf
    alpha = 1.0
    it = 0
    for it in range(1, max_iter + 1):
        g = fn.gradient(phi)
        c = fn.constraint_gradient(phi)
        Pg = solve_banded((1, 1), P, g, check_finite=False)
        Pc = solve_banded((1, 1), P, c, check_finite=False)
        lam = float(np.dot(c, Pg) / np.dot(c, Pc))
        d = -(Pg - lam * Pc)
        slope = float(np.dot(g - lam * c, d))
        gnorm = math.sqrt(max(-slope, 0.0))
        if gnorm <= tol:
            break
        alpha = min(1.0, 2.0 * alpha)
        while True:
            trial = fn.normalize(np.maximum(phi + alpha * d, PHI_FLOOR))
            Wt = fn.value(trial)
            if Wt <= W + 1e-4 * alpha * slope or alpha < 1e-12:
                break
            alpha *= 0.5
        if Wt >= W:
            break
        phi, W = trial, Wt
    return MuResult(
        mu=W,
        phi=phi,
        iterations=it,
        constraint_residual=abs(fn.constraint(phi) - 1.0),
        grad_norm=gnorm,
        converged=gnorm <= tol,
    )


def cutoff_profile(z: np.ndarray) -> np.ndarray:
    """1 on ``[0, 1/2]``, quintic smoothstep down to 0 on ``[1/2, 1]``, 0 beyond."""
    y = np.clip(2.0 * np.asarray(z, dtype=float) - 1.0, 0.0, 1.0)
    return 1.0 - y**3 * (10.0 - 15.0 * y + 6.0 * y * y)


def cutoff_entropy_bound(state: ConformalState, center_s: float, r: float, tau: float = None
                         ) -> CutoffBound:
    """Entropy of the normalized annulus cutoff ``e^{-c/2} phi(|s - center|/r)``.

    An upper bound for the infimum at scale ``tau`` (default ``r^2``).
    """
    if not r > 0:
        raise ValueError("cutoff radius must be positive")
    tau = r * r if tau is None else tau
    s = arclength(state)
    shape = cutoff_profile(np.abs(s - center_s) / r)
    if not np.any(shape > 0):
        raise ValueError(f"cutoff annulus around s = {center_s} with r = {r} misses the grid")
    fn = _Functional(state, tau)
    mass = fn.constraint(shape)
    c = math.log(mass)
    phi = shape / math.sqrt(mass)
    vol = annulus_volume(state, center_s, r, s=s)
    touches = shape[-1] > 0
    return CutoffBound(
        value=fn.value(phi),
        c=c,
        vol_ratio=vol / (r * r),
        boundary_bound=abs(fn.H) * fn.L if touches else 0.0,
    )
