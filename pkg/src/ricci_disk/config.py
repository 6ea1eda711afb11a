"""INI-style run configuration.

Sections and keys (all optional except ``[model] name``)::

    [model]
    name = hemisphere          ; flat, hemisphere, cap, cigar, perturbed_hemisphere,
                               ; flat_disk, spherical_cap, truncated_cigar, perturbed_cap
    K = 1.0                    ; plus alpha, a, c, s_max, eps, m, delta_b as applicable

    [schedule]
    kind = constant            ; constant, linear, sinusoid, table
    psi = 0.0                  ; table: comma separated t and psi lists

    [solver]
    n = 512
    cfl = 0.2
    dt_min = 1e-12
    r_stop = 1e3               ; default 1e4 * R_max(0)
    t_max = 0.4
    tau0 = 0.55                ; default from a coarse pre-run
    couple_f = false
    output_every = 10

    [output]
    directory = out
    figures = true
"""

from __future__ import annotations

import configparser
import hashlib
import json
import math

from . import models
from .flow import FlowConfig, schedule_from_dict, schedule_to_dict

SECTIONS = ("model", "schedule", "solver", "output")
SOLVER_KEYS = {
    "n": int,
    "cfl": float,
    "dt_min": float,
    "r_stop": float,
    "t_max": float,
    "tau0": float,
    "couple_f": bool,
    "output_every": int,
}


class ConfigError(ValueError):
    """Invalid configuration; ``problems`` lists every issue found."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.problems))


def _number(text):
    return float(text.strip())


def _parse_bool(text):
    v = text.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def parse(text: str):
    """Parse configuration text into ``(spec, schedule, FlowConfig, output)``."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str  # model parameters are case sensitive (K vs k)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"unreadable config: {exc}"]) from None
    problems = []
    for sec in cp.sections():
        if sec not in SECTIONS:
            problems.append(f"unknown section [{sec}]")

    spec = None
    if not cp.has_section("model") or "name" not in cp["model"]:
        problems.append("[model] name is required")
    else:
        d = {"model": cp["model"]["name"].strip()}
        try:
            for k, v in cp["model"].items():
                if k != "name":
                    d[k] = _number(v)
            spec = models.spec_from_dict(d)
        except (ValueError, TypeError) as exc:
            problems.append(f"[model] {exc}")

    sched = None
    sd = dict(cp["schedule"]) if cp.has_section("schedule") else {}
    try:
        kind = sd.pop("kind", "constant").strip()
        if kind == "table":
            missing = [k for k in ("t", "psi") if k not in sd]
            if missing:
                raise ValueError(f"table schedule needs {missing}")
            t = [_number(x) for x in sd.pop("t").split(",")]
            psi = [_number(x) for x in sd.pop("psi").split(",")]
            if sd:
                raise ValueError(f"unknown table keys {sorted(sd)}")
            sched = schedule_from_dict({"kind": kind, "t": t, "psi": psi})
        else:
            sched = schedule_from_dict({"kind": kind, **{k: _number(v) for k, v in sd.items()}})
    except (ValueError, TypeError) as exc:
        problems.append(f"[schedule] {exc}")

    kw = {}
    if cp.has_section("solver"):
        for k, v in cp["solver"].items():
            k = k.lower()
            if k not in SOLVER_KEYS:
                problems.append(f"[solver] unknown key {k!r}")
                continue
            try:
                typ = SOLVER_KEYS[k]
                kw[k] = _parse_bool(v) if typ is bool else int(v.strip()) if typ is int else _number(v)
            except ValueError as exc:
                problems.append(f"[solver] {k}: {exc}")
    if "r_stop" in kw:
        kw["R_stop"] = kw.pop("r_stop")
    cfg = FlowConfig(**kw)
    try:
        cfg.validate()
    except ValueError as exc:
        problems.append(f"[solver] {exc}")

    out = {"directory": "out", "figures": True}
    if cp.has_section("output"):
        for k, v in cp["output"].items():
            if k == "directory":
                out[k] = v.strip()
            elif k == "figures":
                try:
                    out[k] = _parse_bool(v)
                except ValueError as exc:
                    problems.append(f"[output] figures: {exc}")
            else:
                problems.append(f"[output] unknown key {k!r}")
    if problems:
        raise ConfigError(problems)
    return spec, sched, cfg, out


def load_config(path):
    """Read and validate a config file; returns ``(spec, schedule, FlowConfig)``."""
    return read_config(path)[:3]


def read_config(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc}"]) from None
    return parse(text)


def solver_dict(cfg: FlowConfig) -> dict:
    d = {k: getattr(cfg, k) for k in ("n", "cfl", "dt_min", "R_stop", "t_max", "tau0", "couple_f", "output_every")}
    # JSON has no infinity
    return {k: (None if isinstance(v, float) and math.isinf(v) else v) for k, v in d.items()}


def materialize(spec, sched, cfg: FlowConfig) -> dict:
    return {
        "model": models.spec_to_dict(spec),
        "schedule": schedule_to_dict(sched),
        "solver": solver_dict(cfg),
    }


def config_hash(materialized: dict) -> str:
    blob = json.dumps(materialized, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()
