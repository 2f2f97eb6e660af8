"""Run configuration: JSON loading, schema checks and object builders.

A config is a JSON object whose top-level blocks are optional and
command-specific::

    {
      "potential": {"kind": "perturbed_kink", "amplitude": 0.05, "shift": 3.0, "L": 20, "h": 0.01},
      "solitons":  {"angles_deg": [60, 90], "norming_abs": [1.0, 2.0]},
      "grid":      {"x_min": -40, "x_max": 10, "n": 501},
      "times":     [10, 20, 40],
      "sim":       {"L": 110, "center": -90, "N": 4401, "t_end": 16, "snapshots": [4, 8, 16]},
      "compare":   {...}
    }

Every error is raised as :class:`ConfigurationError` with the offending key
path in the message.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .direct_scattering import PotentialSample
from .errors import ConfigurationError
from .mkdv_sim import SimConfig
from .soliton_engine import SolitonConfig

POTENTIAL_KINDS = ("kink", "perturbed_kink", "background", "table", "random_bumps")
SOURCES = ("exact", "predict", "simulate")


def load_config(path) -> dict:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {p}: {exc}") from exc
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{p}: invalid JSON ({exc})") from exc
    if not isinstance(cfg, dict):
        raise ConfigurationError(f"{p}: top level must be an object")
    return cfg


def _block(cfg, key, required=True):
    val = cfg.get(key)
    if val is None:
        if required:
            raise ConfigurationError(f"missing block '{key}'")
        return None
    if not isinstance(val, dict):
        raise ConfigurationError(f"'{key}' must be an object")
    return val


def _num(block, key, where, default=None, positive=False, integer=False):
    if key not in block:
        if default is None:
            raise ConfigurationError(f"{where}.{key} is required")
        return default
    v = block[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigurationError(f"{where}.{key} must be a number, got {v!r}")
    if not math.isfinite(v):
        raise ConfigurationError(f"{where}.{key} must be finite")
    if positive and v <= 0:
        raise ConfigurationError(f"{where}.{key} must be positive")
    if integer:
        if int(v) != v:
            raise ConfigurationError(f"{where}.{key} must be an integer")
        return int(v)
    return float(v)


def _num_list(block, key, where, required=True):
    if key not in block:
        if required:
            raise ConfigurationError(f"{where}.{key} is required")
        return None
    v = block[key]
    if not isinstance(v, list) or not v:
        raise ConfigurationError(f"{where}.{key} must be a non-empty list")
    out = []
    for i, e in enumerate(v):
        if isinstance(e, bool) or not isinstance(e, (int, float)) or not math.isfinite(e):
            raise ConfigurationError(f"{where}.{key}[{i}] must be a finite number")
        out.append(float(e))
    return out


def _check_keys(block, allowed, where):
    extra = sorted(set(block) - set(allowed))
    if extra:
        raise ConfigurationError(f"{where}: unknown keys {extra}; allowed {sorted(allowed)}")


def build_potential(cfg: dict, seed: int = 0) -> PotentialSample:
    """``potential`` block -> :class:`PotentialSample`.

    ``random_bumps`` adds ``count`` sech^2 bumps with amplitudes uniform in
    ``[-amplitude, amplitude]`` and centres uniform in ``[-spread, spread]``,
    drawn from a generator seeded with ``seed``.
    """
    b = _block(cfg, "potential")
    where = "potential"
    kind = b.get("kind")
    if kind not in POTENTIAL_KINDS:
        raise ConfigurationError(f"potential.kind must be one of {POTENTIAL_KINDS}, got {kind!r}")
    common = {"kind", "L", "h"}
    L = _num(b, "L", where, 20.0, positive=True)
    h = _num(b, "h", where, 0.01, positive=True)
    if kind == "kink":
        _check_keys(b, common | {"center"}, where)
        return PotentialSample.kink(_num(b, "center", where, 0.0), L=L, h=h)
    if kind == "perturbed_kink":
        _check_keys(b, common | {"amplitude", "shift"}, where)
        return PotentialSample.perturbed_kink(_num(b, "amplitude", where), _num(b, "shift", where, 0.0), L=L, h=h)
    if kind == "background":
        _check_keys(b, common | {"sign"}, where)
        sign = _num(b, "sign", where, 1.0)
        if sign not in (1.0, -1.0):
            raise ConfigurationError("potential.sign must be +1 or -1")
        return PotentialSample.background(L=L, h=h, sign=sign)
    if kind == "table":
        _check_keys(b, {"kind", "path"}, where)
        if not isinstance(b.get("path"), str):
            raise ConfigurationError("potential.path must be a string")
        return PotentialSample.from_table(b["path"])
    _check_keys(b, common | {"amplitude", "count", "spread"}, where)
    amp = _num(b, "amplitude", where)
    count = _num(b, "count", where, 3, integer=True)
    spread = _num(b, "spread", where, 4.0, positive=True)
    if count < 1:
        raise ConfigurationError("potential.count must be >= 1")
    rng = np.random.default_rng(seed)
    amps = rng.uniform(-amp, amp, count)
    centres = rng.uniform(-spread, spread, count)

    def f(x):
        x = np.asarray(x, dtype=float)
        out = np.tanh(x)
        for a, c in zip(amps, centres):
            out = out + a / np.cosh(x - c) ** 2
        return out

    return PotentialSample.from_function(f, L=L, h=h, label=f"random_bumps(seed={seed})")


def build_solitons(cfg: dict) -> SolitonConfig:
    """``solitons`` block: ``angles_deg`` (or ``angles``) with ``norming_abs`` or ``shifts``."""
    b = _block(cfg, "solitons")
    where = "solitons"
    _check_keys(b, {"angles_deg", "angles", "norming_abs", "shifts"}, where)
    if ("angles_deg" in b) == ("angles" in b):
        raise ConfigurationError("solitons: give exactly one of angles_deg, angles")
    deg = "angles_deg" in b
    ang = _num_list(b, "angles_deg" if deg else "angles", where)
    ang_rad = np.deg2rad(ang) if deg else np.asarray(ang)
    if ("norming_abs" in b) == ("shifts" in b):
        raise ConfigurationError("solitons: give exactly one of norming_abs, shifts")
    if "norming_abs" in b:
        mags = _num_list(b, "norming_abs", where)
        if len(mags) != len(ang):
            raise ConfigurationError("solitons: angles and norming_abs differ in length")
        if any(m <= 0 for m in mags):
            raise ConfigurationError("solitons.norming_abs must be positive")
        return SolitonConfig.from_polar(ang_rad, mags)
    shifts = _num_list(b, "shifts", where)
    if len(shifts) != len(ang):
        raise ConfigurationError("solitons: angles and shifts differ in length")
    zs = [1j if abs(a - np.pi / 2) < 1e-12 else np.exp(1j * a) for a in ang_rad]
    return SolitonConfig.from_shifts(zs, shifts)


def build_grid(cfg: dict) -> np.ndarray:
    b = _block(cfg, "grid")
    where = "grid"
    _check_keys(b, {"x_min", "x_max", "n"}, where)
    lo, hi = _num(b, "x_min", where), _num(b, "x_max", where)
    n = _num(b, "n", where, integer=True)
    if hi <= lo or n < 2:
        raise ConfigurationError("grid needs x_min < x_max and n >= 2")
    return np.linspace(lo, hi, n)


def build_times(cfg: dict, key: str = "times") -> list[float]:
    v = cfg.get(key)
    if v is None:
        raise ConfigurationError(f"missing '{key}'")
    return _num_list({key: v}, key, "config")


_SIM_KEYS = {
    "L", "N", "t_end", "dt", "scheme", "snapshots", "center", "boundary",
    "stability_factor", "sponge_width", "sponge_strength", "check_cores",
}


def build_sim(cfg: dict) -> SimConfig:
    b = _block(cfg, "sim")
    _check_keys(b, _SIM_KEYS, "sim")
    kw = dict(b)
    for key in ("snapshots", "boundary"):
        if key in kw:
            kw[key] = tuple(_num_list(b, key, "sim"))
    try:
        return SimConfig(**kw)
    except TypeError as exc:
        raise ConfigurationError(f"sim: {exc}") from exc


def initial_data(cfg: dict, seed: int = 0):
    """Initial condition for ``simulate``: a ``potential`` block or exact solitons at ``t = 0``."""
    from .soliton_engine import exact_nsoliton

    if "potential" in cfg:
        return build_potential(cfg, seed)
    if "solitons" in cfg:
        sc = build_solitons(cfg)
        return lambda x: exact_nsoliton(sc, x, 0.0)
    raise ConfigurationError("simulate needs a 'potential' or a 'solitons' block")
