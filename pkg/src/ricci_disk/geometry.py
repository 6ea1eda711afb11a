"""Rotationally symmetric metrics on the closed disk.

A background metric is ``g0 = phi0(x)^2 dx^2 + w0(x)^2 dtheta^2`` on the
computational interval ``x in [0, 1]``; the pole sits at ``x = 0`` and the
boundary circle at ``x = 1``.  Every flowing metric is conformal to it,
``g = exp(u) g0``, so a state is the single radial array ``u``.

Sign conventions: the geodesic curvature ``H`` of the boundary is taken with
respect to the inward normal (a flat disk of radius ``a`` has ``H = 1/a``),
and ``N`` denotes the outward normal.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

TWO_PI = 2.0 * np.pi
FOUR_PI = 4.0 * np.pi

# One-sided stencils at x = 1, coefficients for v[n], v[n-1], ...
_D1_3PT = np.array([3.0, -4.0, 1.0]) / 2.0
_D1_4PT = np.array([11.0, -18.0, 9.0, -2.0]) / 6.0
_D2_4PT = np.array([2.0, -5.0, 4.0, -1.0])
_D2_5PT = np.array([35.0, -104.0, 114.0, -56.0, 11.0]) / 12.0


def _derivative_weights(offsets, order=1):
    """Finite-difference weights at 0 for nodes at integer ``offsets`` (units of h)."""
    offsets = np.asarray(offsets, dtype=float)
    k = len(offsets)
    V = np.vander(offsets, k, increasing=True).T
    rhs = np.zeros(k)
    rhs[order] = float(np.prod(np.arange(1, order + 1)))
    return np.linalg.solve(V, rhs)


# derivative at x_n from interior nodes n-1 .. n-4 (cubic extrapolation)
_D1_INTERIOR = _derivative_weights([-1, -2, -3, -4])


@dataclass(frozen=True)
class RadialGrid:
    """Uniform grid ``x_j = j/n`` on ``[0, 1]``."""

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 16:
            raise ValueError(f"grid needs an integer n >= 16, got {self.n!r}")

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.n + 1) / self.n

    def trapezoid_weights(self) -> np.ndarray:
        c = np.full(self.n + 1, self.h)
        c[0] = c[-1] = 0.5 * self.h
        return c


def _numeric_background_curvature(grid, phi0, w0):
    """Scalar curvature and boundary geodesic curvature of ``g0`` from sampled profiles.

    Used for backgrounds without closed-form derivatives (e.g. loaded from a
    checkpoint that carries no model description).  ``w0`` is reflected oddly
    and ``phi0`` evenly across the pole, so centered differences stay second
    order after division by ``w0``.
    """
    h = grid.h
    w = np.concatenate([-w0[2:0:-1], w0])
    p = np.concatenate([phi0[2:0:-1], phi0])
    wx = np.empty_like(w0)
    wxx = np.empty_like(w0)
    px = np.empty_like(w0)
    wx[:-1] = (w[3:] - w[1:-2]) / (2 * h)
    wxx[:-1] = (w[3:] - 2 * w[2:-1] + w[1:-2]) / h**2
    px[:-1] = (p[3:] - p[1:-2]) / (2 * h)
    wx[-1] = np.dot(_D1_3PT, w0[-1:-4:-1]) / h
    px[-1] = np.dot(_D1_3PT, phi0[-1:-4:-1]) / h
    wxx[-1] = np.dot(_D2_4PT, w0[-1:-5:-1]) / h**2
    # d/ds = (1/phi0) d/dx
    wss = (wxx - wx * px / phi0) / phi0**2
    K = np.empty_like(w0)
    K[1:] = -wss[1:] / w0[1:]
    # pole: the Gauss curvature is even, extrapolate quadratically
    K[0] = (4.0 * K[1] - K[2]) / 3.0
    H0 = float(wx[-1] / (phi0[-1] * w0[-1]))
    return 2.0 * K, H0


@dataclass(frozen=True, eq=False)
class BackgroundMetric:
    """The initial metric ``g0 = phi0^2 dx^2 + w0^2 dtheta^2``.

    ``R0`` and ``H0`` may be supplied in closed form by the model constructors;
    otherwise they are derived from the sampled profiles.
    """

    grid: RadialGrid
    phi0: np.ndarray
    w0: np.ndarray
    R0: np.ndarray = None
    H0: float = None
    model: dict = None
    # Derived arrays used by the stencils; filled in __post_init__.
    a_half: np.ndarray = field(init=False, repr=False)
    lap_coef_n: float = field(init=False, repr=False)
    lap_lo: np.ndarray = field(init=False, repr=False)
    lap_up: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        n = self.grid.n
        phi0 = np.ascontiguousarray(self.phi0, dtype=float)
        w0 = np.ascontiguousarray(self.w0, dtype=float)
        if phi0.shape != (n + 1,) or w0.shape != (n + 1,):
            raise ValueError("profile arrays must have length n + 1")
        if np.any(phi0 <= 0) or not np.all(np.isfinite(phi0)):
            raise ValueError("phi0 must be positive and finite")
        if abs(w0[0]) > 1e-14 or np.any(w0[1:] <= 0):
            raise ValueError("w0 must vanish at the pole and be positive elsewhere")
        slope = (w0[1] - w0[0]) / self.grid.h / phi0[0]
        if abs(slope - 1.0) > 0.05:
            raise ValueError(f"pole is not smooth: dw0/ds(0) ~ {slope:.4f}, expected 1")
        object.__setattr__(self, "phi0", phi0)
        object.__setattr__(self, "w0", w0)
        if self.R0 is None or self.H0 is None:
            R0, H0 = _numeric_background_curvature(self.grid, phi0, w0)
            if self.R0 is None:
                object.__setattr__(self, "R0", R0)
            if self.H0 is None:
                object.__setattr__(self, "H0", H0)
        object.__setattr__(self, "R0", np.ascontiguousarray(self.R0, dtype=float))
        object.__setattr__(self, "H0", float(self.H0))

        a = w0 / phi0
        a_half = 0.5 * (a[1:] + a[:-1])
        object.__setattr__(self, "a_half", a_half)
        # tridiagonal coefficients of laplacian0 on rows 0 .. n-1
        h2 = self.grid.h ** 2
        lo = np.zeros(n)
        up = np.empty(n)
        denom = h2 * phi0[1:n] * w0[1:n]
        lo[1:] = a_half[:-1] / denom
        up[1:] = a_half[1:] / denom
        up[0] = 4.0 / (h2 * phi0[0] ** 2)
        object.__setattr__(self, "lap_lo", lo)
        object.__setattr__(self, "lap_up", up)
        # (w0/phi0)_x / (phi0 w0) at x = 1, one-sided third order
        da = np.dot(_D1_4PT, a[-1:-5:-1]) / self.grid.h
        object.__setattr__(self, "lap_coef_n", float(da / (phi0[-1] * w0[-1])))

    @property
    def n(self) -> int:
        return self.grid.n


@dataclass(frozen=True, eq=False)
class ConformalState:
    """The metric ``exp(u) g0`` at time ``t``."""

    bg: BackgroundMetric
    u: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        if u.shape != (self.bg.n + 1,):
            raise ValueError(f"u has shape {u.shape}, expected ({self.bg.n + 1},)")
        bad = np.flatnonzero(~np.isfinite(u))
        if bad.size:
            raise ValueError(f"non-finite conformal factor at node {bad[0]}")
        object.__setattr__(self, "u", u)

    def with_u(self, u, t=None) -> "ConformalState":
        return ConformalState(self.bg, u, self.t if t is None else t)


@dataclass(frozen=True)
class GeometricSummary:
    A: float
    L: float
    Rmax: float
    Rmin: float
    H: float
    gb_residual: float


# ---------------------------------------------------------------------------
# stencils


def laplacian0(bg: BackgroundMetric, v: np.ndarray) -> np.ndarray:
    """Radial Laplacian of ``g0`` applied to ``v``.

    Interior nodes use the conservative form with midpoint-averaged
    ``w0/phi0``; the pole uses the limit ``2 v_xx / phi0^2`` of the even
    extension; the boundary node uses third-order one-sided differences.
    """
    h = bg.grid.h
    phi0, w0, a = bg.phi0, bg.w0, bg.a_half
    out = np.empty_like(v)
    flux = a * np.diff(v)
    out[1:-1] = (flux[1:] - flux[:-1]) / (h * h * phi0[1:-1] * w0[1:-1])
    out[0] = 4.0 * (v[1] - v[0]) / (h * h * phi0[0] ** 2)
    vxx = np.dot(_D2_5PT, v[-1:-6:-1]) / (h * h)
    vx = np.dot(_D1_4PT, v[-1:-5:-1]) / h
    out[-1] = vxx / phi0[-1] ** 2 + bg.lap_coef_n * vx
    return out


def ddx_boundary(v: np.ndarray, h: float) -> float:
    """Second-order one-sided ``dv/dx`` at ``x = 1``."""
    return float(_D1_3PT[0] * v[-1] + _D1_3PT[1] * v[-2] + _D1_3PT[2] * v[-3]) / h


def ddx(v: np.ndarray, h: float) -> np.ndarray:
    """``dv/dx`` for an even-at-the-pole field: zero at x = 0, centered inside."""
    out = np.empty_like(v)
    out[0] = 0.0
    out[1:-1] = (v[2:] - v[:-2]) / (2.0 * h)
    out[-1] = ddx_boundary(v, h)
    return out


def ddx_interior_extrapolated(v: np.ndarray, h: float) -> float:
    """``dv/dx`` at ``x = 1`` from nodes ``n-1 .. n-4`` only.

    Keeps the smooth leading-order error of centered-stencil data, so the
    result converges at second order when ``v`` itself came from centered
    differences.
    """
    return float(np.dot(_D1_INTERIOR, v[-2:-6:-1])) / h


# ---------------------------------------------------------------------------
# geometric quantities


def scalar_curvature(state: ConformalState) -> np.ndarray:
    """``R = exp(-u) (R0 - Lap0 u)`` at every node."""
    bg = state.bg
    return np.exp(-state.u) * (bg.R0 - laplacian0(bg, state.u))


def geodesic_curvature(state: ConformalState) -> float:
    """Geodesic curvature of the boundary circle (inward normal)."""
    bg = state.bg
    un = ddx_boundary(state.u, bg.grid.h) / bg.phi0[-1]
    return float(np.exp(-0.5 * state.u[-1]) * (bg.H0 + 0.5 * un))


def area_weights(state: ConformalState) -> np.ndarray:
    """Trapezoid weights of ``dmu = 2 pi exp(u) phi0 w0 dx``."""
    bg = state.bg
    return TWO_PI * np.exp(state.u) * bg.phi0 * bg.w0 * bg.grid.trapezoid_weights()


def boundary_length(state: ConformalState) -> float:
    return float(TWO_PI * state.bg.w0[-1] * np.exp(0.5 * state.u[-1]))


def arclength(state: ConformalState) -> np.ndarray:
    """Distance from the pole, ``s_j = int_0^{x_j} exp(u/2) phi0 dx``."""
    bg = state.bg
    d = np.exp(0.5 * state.u) * bg.phi0
    s = np.zeros_like(d)
    s[1:] = np.cumsum(0.5 * bg.grid.h * (d[1:] + d[:-1]))
    return s


def warping(state: ConformalState) -> np.ndarray:
    """Circumference radius ``w = exp(u/2) w0`` of the metric ``g``."""
    return np.exp(0.5 * state.u) * state.bg.w0


def measures(state: ConformalState):
    """Return ``(A, L, s)``: area, boundary length and pole distance."""
    A = float(np.sum(area_weights(state)))
    return A, boundary_length(state), arclength(state)


def gauss_bonnet_residual(state: ConformalState, R=None, H=None) -> float:
    """``(int R dmu + 2 int H dsigma - 4 pi) / (4 pi)`` for the disk."""
    if R is None:
        R = scalar_curvature(state)
    if H is None:
        H = geodesic_curvature(state)
    total = float(np.dot(area_weights(state), R)) + 2.0 * H * boundary_length(state)
    return (total - FOUR_PI) / FOUR_PI


def summarize(state: ConformalState) -> GeometricSummary:
    R = scalar_curvature(state)
    H = geodesic_curvature(state)
    A = float(np.sum(area_weights(state)))
    L = boundary_length(state)
    return GeometricSummary(
        A=A,
        L=L,
        Rmax=float(R.max()),
        Rmin=float(R.min()),
        H=H,
        gb_residual=gauss_bonnet_residual(state, R, H),
    )


def cumulative_area(state: ConformalState) -> np.ndarray:
    """Area of the geodesic disk ``{s <= s_j}`` at every node (trapezoid)."""
    bg = state.bg
    rho = TWO_PI * np.exp(state.u) * bg.phi0 * bg.w0
    V = np.zeros_like(rho)
    V[1:] = np.cumsum(0.5 * bg.grid.h * (rho[1:] + rho[:-1]))
    return V


def annulus_volume(state: ConformalState, center_s: float, r: float, s=None, V=None) -> float:
    """Area of ``{p : |s(p) - center_s| <= r}`` clipped to the disk."""
    if s is None:
        s = arclength(state)
    if V is None:
        V = cumulative_area(state)
    lo = min(max(center_s - r, 0.0), s[-1])
    hi = min(max(center_s + r, 0.0), s[-1])
    F = PchipInterpolator(s, V)
    return float(F(hi) - F(lo))
