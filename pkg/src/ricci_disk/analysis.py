"""Post-processing of flow runs: blow-up rescaling, volume ratios, normalized flow."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .geometry import (
    FOUR_PI,
    ConformalState,
    annulus_volume,
    arclength,
    cumulative_area,
    scalar_curvature,
    warping,
)

INDETERMINATE = "indeterminate"


# ---------------------------------------------------------------------------
# blow-up rescaling


@dataclass(frozen=True, eq=False)
class BlowupLevel:
    level: int
    t: float
    lam: float
    s: np.ndarray
    w: np.ndarray
    R: np.ndarray
    ratio: float
    hemisphere_dev: float = None
    hemisphere_K: float = None
    cigar_dev: float = None
    cigar_c: float = None

    @property
    def classification(self) -> str:
        if self.hemisphere_dev is None:
            return INDETERMINATE
        return "hemisphere" if self.hemisphere_dev < self.cigar_dev else "cigar"


@dataclass
class BlowupRecord:
    levels: list = field(default_factory=list)

    @property
    def ratios(self) -> np.ndarray:
        return np.array([lv.ratio for lv in self.levels])

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([lv.lam for lv in self.levels])


def rescale_state(state: ConformalState, lam: float) -> ConformalState:
    """The metric ``lam * g`` (time is left as is)."""
    if not lam > 0:
        raise ValueError("rescaling factor must be positive")
    return state.with_u(state.u + math.log(lam))


def _template_distance(s, w, profile, lo, hi):
    """Smallest sup-norm distance between ``w`` and ``profile(s, p)`` for p in [lo, hi]."""
    dist = lambda p: float(np.max(np.abs(w - profile(s, p))))
    if hi <= lo:
        return dist(hi), hi
    grid = np.linspace(lo, hi, 65)
    vals = [dist(p) for p in grid]
    k = int(np.argmin(vals))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    res = minimize_scalar(dist, bounds=(a, b), method="bounded", options={"xatol": 1e-10})
    if res.fun < vals[k]:
        return float(res.fun), float(res.x)
    return float(vals[k]), float(grid[k])


def _sphere(s, K):
    k = math.sqrt(K)
    return np.sin(k * s) / k


def _cigar(s, c):
    return np.tanh(c * s) / c


def compare_profiles(s, w, R):
    """Distances of a rescaled profile to round and cigar templates.

    Templates are matched on the region where ``R >= 1/2``.  Round caps with
    Gauss curvature ``K`` in ``[R_min/2, 1/2]`` and cigars ``tanh(c s)/c``
    with tip Gauss curvature ``2 c^2`` in the same range are admissible.
    Returns ``None`` for everything when ``R_min <= 0``.
    """
    Rmin = float(np.min(R))
    if Rmin <= 0:
        return None, None, None, None
    mask = R >= 0.5
    s, w = s[mask], w[mask]
    K_lo, K_hi = min(Rmin / 2, 0.5), 0.5
    hd, K = _template_distance(s, w, _sphere, K_lo, K_hi)
    cd, c = _template_distance(s, w, _cigar, math.sqrt(K_lo / 2), math.sqrt(K_hi / 2))
    return hd, K, cd, c


def rescale_level(state: ConformalState, level: int = 0) -> BlowupLevel:
    R = scalar_curvature(state)
    lam = float(np.max(np.abs(R)))
    scaled = rescale_state(state, lam)
    s = arclength(scaled)
    w = warping(scaled)
    Rs = scalar_curvature(scaled)
    ratio = float(R.max() / R.min()) if R.min() > 0 else math.inf
    hd, K, cd, c = compare_profiles(s, w, Rs)
    return BlowupLevel(level, state.t, lam, s, w, Rs, ratio, hd, K, cd, c)


def blowup_rescale(checkpoints, min_levels: int = 3) -> BlowupRecord:
    """Rescale every dyadic checkpoint by its maximal curvature.

    ``checkpoints`` holds ``(level, state, ...)`` tuples as produced by
    ``flow.run``.
    """
    if len(checkpoints) < min_levels:
        raise ValueError(
            f"blow-up analysis needs at least {min_levels} curvature levels, got {len(checkpoints)}"
        )
    levels = [rescale_level(ck[1], ck[0]) for ck in checkpoints]
    lam = np.array([lv.lam for lv in levels])
    if np.any(np.diff(lam) <= 0):
        raise ValueError("checkpoint curvature scales are not strictly increasing")
    return BlowupRecord(levels)


def decreasing_tail_start(values, tol: float = 1e-6) -> int:
    """Index where the longest non-increasing tail (up to ``tol``) begins."""
    v = np.asarray(values, dtype=float)
    k = v.size - 1
    while k > 0 and v[k] <= v[k - 1] + tol:
        k -= 1
    return k


def eventually_decreasing(values, tol: float = 1e-6, min_tail: int = 3) -> bool:
    """True when a non-increasing tail covers at least half of the values and ``min_tail`` entries."""
    v = np.asarray(values, dtype=float)
    tail = v.size - decreasing_tail_start(v, tol)
    return bool(tail >= max(min_tail, v.size / 2))


# ---------------------------------------------------------------------------
# volume ratios


@dataclass(frozen=True, eq=False)
class KappaReport:
    r: float
    kappa: float  # None when no center is admissible
    admissible_centers: np.ndarray
    ratios: np.ndarray

    @property
    def empty(self) -> bool:
        return self.admissible_centers.size == 0


def kappa_noncollapse(state: ConformalState, r: float, centers=None) -> KappaReport:
    """Minimal annulus volume ratio ``Vol(A(x, r)) / r^2`` over admissible centers.

    The annulus is ``{|s - s(x)| <= r}`` clipped to the disk.  A center is
    admissible when ``|R|/2 <= r^-2`` on its annulus (``|Rm| = |R|/2`` in
    two dimensions).  Annuli contain the corresponding balls, so this ratio
    bounds the ball ratio from above.
    """
    if not r > 0:
        raise ValueError("r must be positive")
    s = arclength(state)
    V = cumulative_area(state)
    absK = 0.5 * np.abs(scalar_curvature(state))
    centers = s if centers is None else np.asarray(centers, dtype=float)
    keep, ratios = [], []
    for c in centers:
        lo = np.searchsorted(s, c - r, side="left")
        hi = np.searchsorted(s, c + r, side="right")
        # nodes inside the annulus plus the nearest enclosing ones
        lo, hi = max(lo - 1, 0), min(hi + 1, s.size)
        if absK[lo:hi].max() <= r**-2:
            keep.append(c)
            ratios.append(annulus_volume(state, c, r, s=s, V=V) / (r * r))
    ratios = np.array(ratios)
    kappa = float(ratios.min()) if ratios.size else None
    return KappaReport(r, kappa, np.array(keep), ratios)


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


# ---------------------------------------------------------------------------
# normalized flow and the singular time


@dataclass(frozen=True, eq=False)
class NormalizedSeries:
    t: np.ndarray
    t_tilde: np.ndarray
    phi: np.ndarray
    r_max: np.ndarray
    r_min: np.ndarray
    h: np.ndarray
    r_mean: np.ndarray
    area: np.ndarray
    lambda_area: np.ndarray

    @property
    def spread(self) -> np.ndarray:
        """``(R_max - R_min) / R_mean``."""
        return (self.r_max - self.r_min) / np.abs(self.r_mean)

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("t_tilde,r_max,r_min,h\n")
            for row in zip(self.t_tilde, self.r_max, self.r_min, self.h):
                fh.write(",".join(repr(float(v)) for v in row) + "\n")


def normalized_flow(series) -> NormalizedSeries:
    """Area-preserving normalization ``phi A = A(0)`` with time ``int phi dt``."""
    t = series.column("t")
    A = series.column("area")
    if np.any(A <= 0):
        raise ValueError("normalization needs positive areas")
    phi = A[0] / A
    tt = np.concatenate([[0.0], np.cumsum(0.5 * (phi[1:] + phi[:-1]) * np.diff(t))])
    rmax, rmin = series.column("r_max"), series.column("r_min")
    lam = np.maximum(np.abs(rmax), np.abs(rmin))
    H, L = series.column("h_boundary"), series.column("length")
    # area average of R from Gauss-Bonnet
    mean = (FOUR_PI - 2.0 * H * L) / A
    return NormalizedSeries(
        t=t,
        t_tilde=tt,
        phi=phi,
        r_max=rmax / phi,
        r_min=rmin / phi,
        h=H / np.sqrt(phi),
        r_mean=mean / phi,
        area=phi * A,
        lambda_area=lam * A,
    )


@dataclass(frozen=True)
class SingularTimeEstimate:
    T: float
    residual: float
    low_confidence: bool
    points: int


def singular_time_estimate(t, r_max=None) -> SingularTimeEstimate:
    """Extrapolate ``1/R_max`` linearly to zero over the last decade of growth.

    ``t`` may also be a time series, in which case ``r_max`` is read from it.
    """
    if r_max is None:
        t, r_max = t.column("t"), t.column("r_max")
    t = np.asarray(t, dtype=float)
    r_max = np.asarray(r_max, dtype=float)
    if t.size < 5:
        return SingularTimeEstimate(math.inf, math.nan, True, int(t.size))
    top = r_max[-1]
    sel = np.nonzero(r_max >= top / 10.0)[0]
    start = sel[0] if sel.size else t.size - 5
    start = min(start, t.size - 5)
    tt, rr = t[start:], r_max[start:]
    grows = bool(np.all(np.diff(rr) > 0)) and top > 1.5 * r_max[0]
    b, a = np.polyfit(tt, 1.0 / rr, 1)
    resid = float(np.sqrt(np.mean((a + b * tt - 1.0 / rr) ** 2)))
    if not b < 0:
        return SingularTimeEstimate(math.inf, resid, True, int(tt.size))
    return SingularTimeEstimate(float(-a / b), resid, not grows, int(tt.size))
