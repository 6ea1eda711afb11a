"""Canonical background metrics and the exact shrinking-cap solution.

All profiles are written in arclength ``s`` from the pole and mapped
affinely onto the computational interval, ``s = s_end * x``, so ``phi0`` is
the constant ``s_end``.  Curvatures are supplied in closed form.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .geometry import BackgroundMetric, RadialGrid


@dataclass(frozen=True)
class FlatDisk:
    a: float = 1.0

    def validate(self):
        if not self.a > 0:
            raise ValueError("FlatDisk radius a must be positive")


@dataclass(frozen=True)
class SphericalCap:
    K: float = 1.0
    alpha: float = math.pi / 2

    def validate(self):
        if not self.K > 0:
            raise ValueError("SphericalCap curvature K must be positive")
        if not 0.0 < self.alpha < math.pi:
            raise ValueError(f"SphericalCap alpha must lie in (0, pi), got {self.alpha}")


@dataclass(frozen=True)
class TruncatedCigar:
    c: float = 1.0
    s_max: float = 3.0

    def validate(self):
        if not self.c > 0:
            raise ValueError("TruncatedCigar scale c must be positive")
        if not self.s_max > 0:
            raise ValueError("TruncatedCigar s_max must be positive")


@dataclass(frozen=True)
class PerturbedCap:
    K: float = 1.0
    alpha: float = math.pi / 2
    eps: float = 0.05
    m: int = 2
    delta_b: float = 0.1

    def validate(self):
        SphericalCap(self.K, self.alpha).validate()
        if int(self.m) != self.m or self.m < 1:
            raise ValueError("PerturbedCap mode m must be an integer >= 1")


MODEL_TYPES = {
    "flat_disk": FlatDisk,
    "spherical_cap": SphericalCap,
    "truncated_cigar": TruncatedCigar,
    "perturbed_cap": PerturbedCap,
}

# short names accepted in configs
ALIASES = {
    "flat": ("flat_disk", {}),
    "hemisphere": ("spherical_cap", {"alpha": math.pi / 2}),
    "cap": ("spherical_cap", {}),
    "cigar": ("truncated_cigar", {}),
    "perturbed_hemisphere": ("perturbed_cap", {"alpha": math.pi / 2}),
}


def model_name(spec) -> str:
    for name, cls in MODEL_TYPES.items():
        if isinstance(spec, cls):
            return name
    raise TypeError(f"not a model spec: {spec!r}")


def spec_to_dict(spec) -> dict:
    return {"model": model_name(spec), **asdict(spec)}


def spec_from_dict(d: dict):
    d = dict(d)
    name = d.pop("model")
    if name in ALIASES:
        name, defaults = ALIASES[name]
        d = {**defaults, **d}
    if name not in MODEL_TYPES:
        raise ValueError(f"unknown model {name!r}; choose from {sorted(MODEL_TYPES)}")
    cls = MODEL_TYPES[name]
    fields = cls.__dataclass_fields__
    unknown = set(d) - set(fields)
    if unknown:
        raise ValueError(f"unknown parameters for {name}: {sorted(unknown)}")
    kwargs = {k: (int(v) if fields[k].type in ("int", int) else float(v)) for k, v in d.items()}
    spec = cls(**kwargs)
    spec.validate()
    return spec


def parameter_schema():
    """One record per model: name and parameters with defaults."""
    out = []
    for name, cls in MODEL_TYPES.items():
        params = {}
        for fname, f in cls.__dataclass_fields__.items():
            params[fname] = {"type": "int" if f.type in ("int", int) else "float", "default": f.default}
        out.append({"model": name, "parameters": params})
    return out


# ---------------------------------------------------------------------------
# profiles w(s), w'(s), w''(s) and the pole limit of -w''/w


def _cap_profile(K, s):
    k = math.sqrt(K)
    return np.sin(k * s) / k, np.cos(k * s), -k * np.sin(k * s)


def _perturbation(spec, s_end, s):
    """Windowed sinusoid ``sin(m pi s/S) (s/S)^2 (1 - s/S + delta_b)`` and derivatives."""
    a = spec.m * math.pi / s_end
    sn, cs = np.sin(a * s), np.cos(a * s)
    z = s / s_end
    q = z * z * (1.0 - z + spec.delta_b)
    dq = (2.0 * z * (1.0 + spec.delta_b) - 3.0 * z * z) / s_end
    d2q = (2.0 * (1.0 + spec.delta_b) - 6.0 * z) / s_end**2
    p = sn * q
    dp = a * cs * q + sn * dq
    d2p = -a * a * sn * q + 2.0 * a * cs * dq + sn * d2q
    # third derivative at s = 0 fixes the pole curvature
    d3p0 = 3.0 * a * 2.0 * (1.0 + spec.delta_b) / s_end**2
    return p, dp, d2p, d3p0


def _profile(spec, s):
    """Return ``(w, w_s, w_ss, K_pole)``; ``K_pole`` is the Gauss curvature limit at s = 0."""
    if isinstance(spec, FlatDisk):
        return s.copy(), np.ones_like(s), np.zeros_like(s), 0.0
    if isinstance(spec, SphericalCap):
        w, ws, wss = _cap_profile(spec.K, s)
        return w, ws, wss, spec.K
    if isinstance(spec, TruncatedCigar):
        c = spec.c
        th = np.tanh(c * s)
        sech2 = 1.0 - th * th
        return th / c, sech2, -2.0 * c * sech2 * th, 2.0 * c * c
    if isinstance(spec, PerturbedCap):
        k = math.sqrt(spec.K)
        s_end = spec.alpha / k
        w, ws, wss = _cap_profile(spec.K, s)
        p, dp, d2p, d3p0 = _perturbation(spec, s_end, s)
        e = spec.eps / k
        return w + e * p, ws + e * dp, wss + e * d2p, spec.K - e * d3p0
    raise TypeError(f"not a model spec: {spec!r}")


def arclength_extent(spec) -> float:
    if isinstance(spec, FlatDisk):
        return spec.a
    if isinstance(spec, (SphericalCap, PerturbedCap)):
        return spec.alpha / math.sqrt(spec.K)
    if isinstance(spec, TruncatedCigar):
        return spec.s_max
    raise TypeError(f"not a model spec: {spec!r}")


def build(spec, grid: RadialGrid) -> BackgroundMetric:
    """Sample the model on ``grid`` with closed-form ``R0`` and ``H0``."""
    spec.validate()
    s_end = arclength_extent(spec)
    s = s_end * grid.x
    w, ws, wss, K_pole = _profile(spec, s)
    if np.any(w[1:] <= 0):
        raise ValueError("model profile is not positive away from the pole; reduce eps")
    K = np.empty_like(s)
    K[1:] = -wss[1:] / w[1:]
    K[0] = K_pole
    w[0] = 0.0
    phi0 = np.full_like(s, s_end)
    return BackgroundMetric(
        grid, phi0, w, R0=2.0 * K, H0=float(ws[-1] / w[-1]), model=spec_to_dict(spec)
    )


# ---------------------------------------------------------------------------
# exact solution


@dataclass(frozen=True)
class ShrinkingCap:
    u: float
    R: float
    H: float
    A: float
    T: float


def exact_shrinking_cap(K0: float, alpha: float, t: float) -> ShrinkingCap:
    """Homothetic solution ``g(t) = (1 - 2 K0 t) g_cap`` of constant curvature ``2 K0``."""
    T = 1.0 / (2.0 * K0)
    if t >= T:
        raise ValueError(f"t = {t} is past the singular time T = {T}")
    rho2 = 1.0 - 2.0 * K0 * t
    A0 = 2.0 * math.pi * (1.0 - math.cos(alpha)) / K0
    return ShrinkingCap(
        u=math.log(rho2),
        R=2.0 * K0 / rho2,
        H=math.sqrt(K0) / math.tan(alpha) / math.sqrt(rho2),
        A=rho2 * A0,
        T=T,
    )
