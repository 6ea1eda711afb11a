"""Ricci flow on the disk with prescribed boundary geodesic curvature.

In conformal form ``g = exp(u) g0`` the flow ``dg/dt = -R g`` becomes the
scalar equation

    d(exp(u))/dt = Lap0 u - R0,

with the nonlinear Robin condition ``exp(-u/2) (H0 + u_N0 / 2) = psi(t)``
at the boundary circle.  Each step solves that equation by implicit Euler
(Newton on the banded system, boundary row included) and combines one full
step with two half steps by Richardson extrapolation, which makes the
integrator second order in time.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded

from . import entropy
from .geometry import (
    FOUR_PI,
    BackgroundMetric,
    ConformalState,
    RadialGrid,
    area_weights,
    arclength,
    boundary_length,
    ddx,
    ddx_boundary,
    ddx_interior_extrapolated,
    gauss_bonnet_residual,
    geodesic_curvature,
    laplacian0,
    scalar_curvature,
)

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1
CSV_HEADER = "t,dt,area,length,r_max,r_min,h_boundary,gb_residual,w_inf,norm_drift,bc_r_residual"
STOP_REASONS = ("curvature_stop", "time_stop", "dt_floor")


class StepRejected(RuntimeError):
    """The nonlinear solve of a step did not converge."""


class TauExhausted(RuntimeError):
    """The backward time ``tau`` would reach zero within the step."""


# ---------------------------------------------------------------------------
# boundary curvature schedules


@dataclass(frozen=True)
class Constant:
    psi: float = 0.0

    def __call__(self, t):
        return self.psi

    def derivative(self, t):
        return 0.0


@dataclass(frozen=True)
class Linear:
    psi0: float = 0.0
    slope: float = 0.0

    def __call__(self, t):
        return self.psi0 + self.slope * t

    def derivative(self, t):
        return self.slope


@dataclass(frozen=True)
class Sinusoid:
    psi0: float = 0.0
    amp: float = 0.0
    omega: float = 1.0

    def __call__(self, t):
        return self.psi0 + self.amp * math.sin(self.omega * t)

    def derivative(self, t):
        return self.amp * self.omega * math.cos(self.omega * t)


@dataclass(frozen=True, eq=False)
class Table:
    """Cubic-spline interpolation of tabulated ``(t_k, psi_k)``."""

    t: tuple
    psi: tuple
    _spline: CubicSpline = field(init=False, repr=False)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        psi = np.asarray(self.psi, dtype=float)
        if t.ndim != 1 or t.shape != psi.shape or t.size < 4:
            raise ValueError("table schedule needs matching t and psi with at least 4 entries")
        if np.any(np.diff(t) <= 0):
            raise ValueError("table schedule times must be strictly increasing")
        object.__setattr__(self, "t", tuple(t.tolist()))
        object.__setattr__(self, "psi", tuple(psi.tolist()))
        object.__setattr__(self, "_spline", CubicSpline(t, psi))

    def __call__(self, t):
        return float(self._spline(t))

    def derivative(self, t):
        return float(self._spline(t, 1))


SCHEDULE_TYPES = {"constant": Constant, "linear": Linear, "sinusoid": Sinusoid, "table": Table}


def schedule_to_dict(sched) -> dict:
    for name, cls in SCHEDULE_TYPES.items():
        if isinstance(sched, cls):
            if isinstance(sched, Table):
                return {"kind": name, "t": list(sched.t), "psi": list(sched.psi)}
            return {"kind": name, **asdict(sched)}
    raise TypeError(f"not a schedule: {sched!r}")


def schedule_from_dict(d: dict):
    d = dict(d)
    kind = d.pop("kind", "constant")
    if kind not in SCHEDULE_TYPES:
        raise ValueError(f"unknown schedule kind {kind!r}; choose from {sorted(SCHEDULE_TYPES)}")
    if kind == "table":
        return Table(tuple(d["t"]), tuple(d["psi"]))
    cls = SCHEDULE_TYPES[kind]
    unknown = set(d) - set(cls.__dataclass_fields__)
    if unknown:
        raise ValueError(f"unknown parameters for {kind} schedule: {sorted(unknown)}")
    return cls(**{k: float(v) for k, v in d.items()})


# ---------------------------------------------------------------------------
# state and configuration types


@dataclass(frozen=True, eq=False)
class PotentialState:
    """Potential ``f`` on the grid and backward time ``tau``."""

    f: np.ndarray
    tau: float

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        object.__setattr__(self, "f", np.asarray(self.f, dtype=float))


@dataclass
class FlowConfig:
    n: int = 512
    cfl: float = 0.2
    dt_min: float = 1e-12
    R_stop: float = None  # default 1e4 * R_max(0)
    t_max: float = math.inf
    tau0: float = None
    couple_f: bool = False
    output_every: int = 10
    checkpoint_path: str = None
    keep_trajectory: bool = False

    def validate(self):
        if int(self.n) != self.n or self.n < 16:
            raise ValueError("n must be an integer >= 16")
        if not 0.0 < self.cfl < 1.0:
            raise ValueError("cfl must lie in (0, 1)")
        if not self.dt_min > 0:
            raise ValueError("dt_min must be positive")
        if self.R_stop is not None and not self.R_stop > 0:
            raise ValueError("R_stop must be positive")
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")
        if self.tau0 is not None and not self.tau0 > 0:
            raise ValueError("tau0 must be positive")
        if int(self.output_every) != self.output_every or self.output_every < 1:
            raise ValueError("output_every must be a positive integer")


COLUMNS = CSV_HEADER.split(",")


class TimeSeries:
    """Per-step diagnostics; one row per recorded time."""

    def __init__(self, rows=None):
        self.rows = list(rows or [])

    def append(self, **row):
        if self.rows and not row["t"] > self.rows[-1]["t"]:
            raise ValueError("time series rows must have strictly increasing t")
        self.rows.append({c: row.get(c) for c in COLUMNS})

    def __len__(self):
        return len(self.rows)

    def column(self, name) -> np.ndarray:
        return np.array([np.nan if r[name] is None else r[name] for r in self.rows], dtype=float)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(CSV_HEADER + "\n")
            for r in self.rows:
                fh.write(",".join("" if r[c] is None else repr(float(r[c])) for c in COLUMNS) + "\n")

    @classmethod
    def from_csv(cls, path):
        with open(path) as fh:
            header = fh.readline().strip()
            if header != CSV_HEADER:
                raise ValueError(f"unexpected time series header: {header!r}")
            rows = []
            for line in fh:
                cells = line.rstrip("\n").split(",")
                rows.append({c: (float(v) if v != "" else None) for c, v in zip(COLUMNS, cells)})
        return cls(rows)


@dataclass
class RunResult:
    series: TimeSeries
    checkpoints: list  # (level k, ConformalState, PotentialState or None)
    stop_reason: str
    final_state: ConformalState
    final_potential: PotentialState = None
    trajectory: list = None
    steps: int = 0
    potentials: list = None  # aligned with trajectory when coupled


# ---------------------------------------------------------------------------
# implicit Euler solve


def _assemble(bg, u, u_old, dt, psi_new):
    """Residual and banded Jacobian of one implicit Euler step (l=2, u=1 bands)."""
    n = bg.n
    h = bg.grid.h
    lo, up = bg.lap_lo, bg.lap_up
    e_old = np.exp(-u_old[:n])
    lap = laplacian0(bg, u)[:n]
    F = np.empty(n + 1)
    F[:n] = np.expm1(u[:n] - u_old[:n]) - dt * e_old * (lap - bg.R0[:n])

    ab = np.zeros((4, n + 1))
    c = dt * e_old
    ab[1, :n] = np.exp(u[:n] - u_old[:n]) + c * (lo + up)
    ab[0, 1:] = -c * up
    ab[2, : n - 1] = -c[1:] * lo[1:]

    # Robin row: exp(-u_n/2) (H0 + D / (2 phi_n)) - psi
    phin = bg.phi0[-1]
    D = ddx_boundary(u, h)
    g = math.exp(-0.5 * u[-1])
    F[n] = g * (bg.H0 + 0.5 * D / phin) - psi_new
    k = 0.5 * g / (phin * h)
    ab[1, n] = -0.5 * F[n] - 0.5 * psi_new + 1.5 * k
    ab[2, n - 1] = -2.0 * k
    ab[3, n - 2] = 0.5 * k
    return F, ab


def _implicit_euler(bg, u_old, dt, psi_new, u_guess=None, tol=1e-12, max_iter=10):
    u = np.array(u_old if u_guess is None else u_guess, dtype=float)
    for _ in range(max_iter):
        F, ab = _assemble(bg, u, u_old, dt, psi_new)
        delta = solve_banded((2, 1), ab, -F, check_finite=False)
        u += delta
        if not np.all(np.isfinite(u)):
            break
        if np.max(np.abs(delta)) <= tol * (1.0 + np.max(np.abs(u))):
            return u
    raise StepRejected("Newton iteration for the implicit step did not converge")


def _enforce_robin(bg, u, psi, tol=1e-14, max_iter=20):
    """Re-solve the boundary node alone so that the Robin condition holds."""
    h = bg.grid.h
    phin = bg.phi0[-1]
    rest = (-4.0 * u[-2] + u[-3]) / (2.0 * h)
    x = u[-1]
    for _ in range(max_iter):
        D = 1.5 * x / h + rest
        g = math.exp(-0.5 * x)
        G = g * (bg.H0 + 0.5 * D / phin) - psi
        dG = -0.5 * g * (bg.H0 + 0.5 * D / phin) + g * 0.75 / (h * phin)
        step = G / dG
        x -= step
        if abs(step) <= tol * (1.0 + abs(x)):
            break
    u[-1] = x
    return u


def step(state: ConformalState, sched, dt: float) -> ConformalState:
    """Advance the conformal factor by ``dt``."""
    bg, t = state.bg, state.t
    u0 = state.u
    full = _implicit_euler(bg, u0, dt, sched(t + dt))
    half = _implicit_euler(bg, u0, 0.5 * dt, sched(t + 0.5 * dt), u_guess=0.5 * (u0 + full))
    half = _implicit_euler(bg, half, 0.5 * dt, sched(t + dt), u_guess=full)
    u = 2.0 * half - full
    _enforce_robin(bg, u, sched(t + dt))
    return ConformalState(bg, u, t + dt)


# ---------------------------------------------------------------------------
# potential


def initial_potential(state: ConformalState, sched, tau0: float) -> PotentialState:
    """Quadratic potential with the prescribed normal derivative, normalized.

    ``f = psi s^2 / (2 s_b) + c0`` has ``f_s = psi`` at the boundary and zero
    slope at the pole; ``c0`` makes ``(4 pi tau0)^-1 int exp(-f) dmu = 1``.
    """
    if not tau0 > 0:
        raise ValueError("tau0 must be positive")
    return _normalized_quadratic(state, sched(state.t), tau0)


def _normalized_quadratic(state, psi, tau):
    s = arclength(state)
    shape = psi * s * s / (2.0 * s[-1])
    mass = float(np.dot(area_weights(state), np.exp(-shape)))
    c0 = math.log(mass / (FOUR_PI * tau))
    return PotentialState(shape + c0, tau)


def normalization(state: ConformalState, pot: PotentialState) -> float:
    """``(4 pi tau)^-1 int exp(-f) dmu``."""
    return float(np.dot(area_weights(state), np.exp(-pot.f))) / (FOUR_PI * pot.tau)


def potential_bc_residual(state: ConformalState, pot: PotentialState, psi: float) -> float:
    bg = state.bg
    fN = math.exp(-0.5 * state.u[-1]) * ddx_boundary(pot.f, bg.grid.h) / bg.phi0[-1]
    return abs(fN - psi)


def _potential_row_matrix(bg, u, dt, diag_extra, sign):
    """Banded matrix ``(1 + diag_extra) I + sign * dt * exp(-u) Lap0`` on rows < n."""
    n = bg.n
    c = sign * dt * np.exp(-u[:n])
    ab = np.zeros((4, n + 1))
    ab[1, :n] = 1.0 + diag_extra - c * (bg.lap_lo + bg.lap_up)
    ab[0, 1:] = c * bg.lap_up
    ab[2, : n - 1] = c[1:] * bg.lap_lo[1:]
    return ab


def step_coupled(state, pot, sched, dt):
    """Advance the metric and the potential ``f`` forward in ``t`` by ``dt``.

    ``f_t = -R - Lap f + |grad f|^2 + 1/tau`` with ``f_N = psi`` and
    ``tau_t = -1``.  The Laplacian term is implicit, the rest explicit.  This
    is a backward heat equation when run forward in ``t``; it is provided
    for short-time diagnostics only (see ``solve_potential_backward``).
    """
    if not pot.tau - dt > 0:
        raise TauExhausted(f"tau = {pot.tau} cannot absorb a step of {dt}")
    new = step(state, sched, dt)
    bg = new.bg
    n, h = bg.n, bg.grid.h
    u = new.u
    R = scalar_curvature(new)
    tau = pot.tau - dt
    fx = ddx(pot.f, h)
    grad2 = np.exp(-u) * (fx / bg.phi0) ** 2
    rhs = np.empty(n + 1)
    rhs[:n] = pot.f[:n] + dt * (-R[:n] + grad2[:n] + 1.0 / tau)
    ab = _potential_row_matrix(bg, u, dt, 0.0, +1.0)
    psi = sched(new.t)
    k = math.exp(-0.5 * u[-1]) / (2.0 * h * bg.phi0[-1])
    ab[1, n] = 3.0 * k
    ab[2, n - 1] = -4.0 * k
    ab[3, n - 2] = k
    rhs[n] = psi
    f = solve_banded((2, 1), ab, rhs, check_finite=False)
    if not np.all(np.isfinite(f)):
        raise StepRejected("potential solve produced non-finite values")
    return new, PotentialState(f, tau)


def _conjugate_heat_step(bg, u, R, q_next, dt, tau, psi):
    """One implicit Euler step of ``q_sigma = Lap q - R q + q / tau`` (sigma = -t).

    ``q = exp(-f)``; the Robin row is ``q_N + psi q = 0``.
    """
    n, h = bg.n, bg.grid.h
    ab = _potential_row_matrix(bg, u, dt, dt * (R[:n] - 1.0 / tau), -1.0)
    k = math.exp(-0.5 * u[-1]) / (2.0 * h * bg.phi0[-1])
    ab[1, n] = 3.0 * k + psi
    ab[2, n - 1] = -4.0 * k
    ab[3, n - 2] = k
    rhs = np.empty(n + 1)
    rhs[:n] = q_next[:n]
    rhs[n] = 0.0
    return solve_banded((2, 1), ab, rhs, check_finite=False)


def _robin_potential_node(bg, u, q, psi):
    h = bg.grid.h
    k = math.exp(-0.5 * u[-1]) / (2.0 * h * bg.phi0[-1])
    q[-1] = k * (4.0 * q[-2] - q[-3]) / (3.0 * k + psi)
    return q


def solve_potential_backward(trajectory, sched, tau0, terminal=None):
    """Integrate the potential equation from the last snapshot back to the first.

    ``trajectory`` is the list of metric snapshots of a run (increasing ``t``).
    The terminal potential defaults to the normalized quadratic profile with
    the prescribed boundary slope.  Integrating toward decreasing ``t`` makes
    ``exp(-f)`` solve a forward heat equation with a linear Robin condition,
    which is well posed.  Returns one ``PotentialState`` per snapshot.
    """
    last = trajectory[-1]
    tau_end = tau0 - last.t
    if not tau_end > 0:
        raise TauExhausted(f"tau0 = {tau0} is not past the final time {last.t}")
    pot = terminal if terminal is not None else _normalized_quadratic(last, sched(last.t), tau_end)
    q = np.exp(-pot.f)
    out = [None] * len(trajectory)
    out[-1] = PotentialState(pot.f, tau_end)
    R_cache = [None] * len(trajectory)

    def curvature(i):
        if R_cache[i] is None:
            R_cache[i] = scalar_curvature(trajectory[i])
        return R_cache[i]

    for i in range(len(trajectory) - 1, 0, -1):
        a, b = trajectory[i - 1], trajectory[i]
        bg = a.bg
        dt = b.t - a.t
        t_mid = a.t + 0.5 * dt
        u_mid = 0.5 * (a.u + b.u)
        R_mid = scalar_curvature(ConformalState(bg, u_mid, t_mid))
        full = _conjugate_heat_step(bg, a.u, curvature(i - 1), q, dt, tau0 - a.t, sched(a.t))
        half = _conjugate_heat_step(bg, u_mid, R_mid, q, 0.5 * dt, tau0 - t_mid, sched(t_mid))
        half = _conjugate_heat_step(bg, a.u, curvature(i - 1), half, 0.5 * dt, tau0 - a.t, sched(a.t))
        q = _robin_potential_node(bg, a.u, 2.0 * half - full, sched(a.t))
        if np.any(q <= 0) or not np.all(np.isfinite(q)):
            raise StepRejected(f"conjugate heat solution lost positivity at t = {a.t}")
        out[i - 1] = PotentialState(-np.log(q), tau0 - a.t)
    return out


# ---------------------------------------------------------------------------
# boundary identity


def boundary_R_identity_residual(state: ConformalState, dpsi: float, R=None) -> float:
    """``|dR/dN - (H R - 2 psi')|`` at the boundary circle."""
    bg = state.bg
    if R is None:
        R = scalar_curvature(state)
    dRdN = math.exp(-0.5 * state.u[-1]) * ddx_interior_extrapolated(R, bg.grid.h) / bg.phi0[-1]
    H = geodesic_curvature(state)
    return abs(dRdN - (H * R[-1] - 2.0 * dpsi))


def boundary_R_identity_series(states, sched=None):
    """Residuals along consecutive snapshots.

    With a schedule, ``psi'`` comes from it in closed form; without one, the
    boundary curvature of the snapshots is differenced (centered inside,
    one-sided at the ends), which needs at least three snapshots.
    """
    if sched is not None:
        return np.array([boundary_R_identity_residual(s, sched.derivative(s.t)) for s in states])
    if len(states) < 3:
        raise ValueError("need at least three snapshots to difference H")
    t = np.array([s.t for s in states])
    H = np.array([geodesic_curvature(s) for s in states])
    dH = np.gradient(H, t, edge_order=2)
    return np.array([boundary_R_identity_residual(s, d) for s, d in zip(states, dH)])


# ---------------------------------------------------------------------------
# driver


def stable_dt(state: ConformalState, R: np.ndarray, cfl: float) -> float:
    """``cfl * min(h * min(exp(u) phi0^2), 1 / max|R|)``."""
    bg = state.bg
    diffusion = bg.grid.h * float(np.min(np.exp(state.u) * bg.phi0**2))
    Rabs = float(np.max(np.abs(R)))
    curvature = 1.0 / Rabs if Rabs > 0 else math.inf
    return cfl * min(diffusion, curvature)


def run(bg: BackgroundMetric, sched, config: FlowConfig, u0=None) -> RunResult:
    """Integrate from ``g0`` (or ``exp(u0) g0``) until a stop condition fires.

    With ``config.couple_f`` the potential is obtained afterwards by
    ``solve_potential_backward`` over the stored trajectory (normalized at
    the final time) and the entropy columns of the series are filled in.
    """
    config.validate()
    if config.n != bg.n:
        raise ValueError(f"config.n = {config.n} does not match the background grid n = {bg.n}")
    state = ConformalState(bg, np.zeros(bg.n + 1) if u0 is None else u0, 0.0)
    R = scalar_curvature(state)
    Rmax0 = float(np.max(np.abs(R)))
    R_stop = config.R_stop
    if R_stop is None:
        R_stop = 1e4 * Rmax0 if Rmax0 > 0 else math.inf
    t_max = config.t_max
    if config.couple_f:
        if config.tau0 is None:
            raise ValueError("couple_f requires tau0")
        t_max = min(t_max, config.tau0 * (1.0 - 1e-6))
    if math.isinf(R_stop) and math.isinf(t_max):
        raise ValueError("run has no stop condition: curvature is zero and t_max is infinite")

    series = TimeSeries()
    checkpoints = [(0, state)]
    keep = config.keep_trajectory or config.couple_f
    trajectory = [state] if keep else None
    recorded = [state]
    level = 1
    next_level = 2.0 * Rmax0 if Rmax0 > 0 else math.inf

    def record(st, R, dt):
        H = geodesic_curvature(st)
        series.append(
            t=st.t,
            dt=dt,
            area=float(np.sum(area_weights(st))),
            length=boundary_length(st),
            r_max=float(R.max()),
            r_min=float(R.min()),
            h_boundary=H,
            gb_residual=gauss_bonnet_residual(st, R, H),
            bc_r_residual=boundary_R_identity_residual(st, sched.derivative(st.t), R),
        )

    record(state, R, 0.0)
    steps = 0
    stop = None
    dt = dt_try = stable_dt(state, R, config.cfl)
    while stop is None:
        dt = min(stable_dt(state, R, config.cfl), dt_try, t_max - state.t)
        while True:
            if dt < config.dt_min:
                stop = "dt_floor"
                break
            try:
                new = step(state, sched, dt)
                break
            except (StepRejected, ValueError, FloatingPointError) as exc:
                log.debug("step of %.3e at t = %.6g rejected: %s", dt, state.t, exc)
                dt *= 0.5
        if stop is not None:
            break
        steps += 1
        dt_try = 2.0 * dt
        state = new
        R = scalar_curvature(state)
        if keep:
            trajectory.append(state)
        Rmax = float(np.max(np.abs(R)))
        crossed = False
        while Rmax >= next_level:
            crossed = True
            checkpoints.append((level, state))
            level += 1
            next_level *= 2.0
        if Rmax >= R_stop:
            stop = "curvature_stop"
        elif state.t >= t_max * (1 - 1e-14):
            stop = "time_stop"
        if stop is not None or crossed or steps % config.output_every == 0:
            record(state, R, dt)
            recorded.append(state)
    if series.rows[-1]["t"] < state.t:
        record(state, R, dt)
        recorded.append(state)
    log.info("run stopped (%s) at t = %.8g after %d steps, R_max = %.4g", stop, state.t, steps, R.max())

    pots = {}
    final_pot = None
    if config.couple_f:
        solved = solve_potential_backward(trajectory, sched, config.tau0)
        pots = {id(st): p for st, p in zip(trajectory, solved)}
        final_pot = solved[-1]
        for row, st in zip(series.rows, recorded):
            p = pots[id(st)]
            row["w_inf"] = entropy.w_infinity(st, p).total
            row["norm_drift"] = normalization(st, p) - 1.0
    checkpoints = [(k, st, pots.get(id(st))) for k, st in checkpoints]
    if config.checkpoint_path:
        for k, st, p in checkpoints:
            write_checkpoint(f"{config.checkpoint_path}.level{k:02d}.json", st, p, sched, config)
        write_checkpoint(config.checkpoint_path, state, final_pot, sched, config)
    if not config.keep_trajectory:
        return RunResult(series, checkpoints, stop, state, final_pot, None, steps)
    return RunResult(series, checkpoints, stop, state, final_pot, trajectory, steps,
                     solved if config.couple_f else None)


# ---------------------------------------------------------------------------
# checkpoints


def checkpoint_dict(state, pot, sched, config) -> dict:
    cfg = asdict(config) if isinstance(config, FlowConfig) else dict(config or {})
    cfg = {k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in cfg.items()}
    if state.bg.model is not None:
        cfg["model"] = state.bg.model
    return {
        "version": CHECKPOINT_VERSION,
        "t": state.t,
        "tau": None if pot is None else pot.tau,
        "n": state.bg.n,
        "phi0": state.bg.phi0.tolist(),
        "w0": state.bg.w0.tolist(),
        "u": state.u.tolist(),
        "f": None if pot is None else pot.f.tolist(),
        "schedule": schedule_to_dict(sched),
        "config": cfg,
    }


def write_checkpoint(path, state, pot, sched, config):
    with open(path, "w") as fh:
        json.dump(checkpoint_dict(state, pot, sched, config), fh)


def read_checkpoint(path):
    """Return ``(state, potential or None, schedule, config dict)``."""
    with open(path) as fh:
        d = json.load(fh)
    if d.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {d.get('version')!r}")
    grid = RadialGrid(int(d["n"]))
    cfg = d.get("config") or {}
    model = cfg.get("model")
    if model is not None:
        from .models import build, spec_from_dict

        bg = build(spec_from_dict(model), grid)
        if not (np.array_equal(bg.w0, d["w0"]) and np.array_equal(bg.phi0, d["phi0"])):
            bg = BackgroundMetric(grid, np.array(d["phi0"]), np.array(d["w0"]))
    else:
        bg = BackgroundMetric(grid, np.array(d["phi0"]), np.array(d["w0"]))
    state = ConformalState(bg, np.array(d["u"]), float(d["t"]))
    pot = None
    if d.get("f") is not None:
        pot = PotentialState(np.array(d["f"]), float(d["tau"]))
    return state, pot, schedule_from_dict(d["schedule"]), cfg
