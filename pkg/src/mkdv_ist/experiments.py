"""Field sources and window comparisons shared by the CLI and the acceptance tests.

A *source* produces ``q(x, t)`` on request:

``exact``
    reflectionless field from a ``solitons`` block;
``predict``
    long-time superposition ``-1 + sum (sol_j + 1)``, either from a
    ``solitons`` block (no radiation) or from the scattering data of a
    ``potential`` block (radiation enters the offsets);
``simulate``
    finite-difference evolution from a ``potential`` or ``solitons`` block,
    run once up to the largest requested time.

A window is the ray sector ``xi_min * t <= x <= xi_max * t + pad``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import config as cfgmod
from .direct_scattering import compute_scattering_data
from .errors import ConfigurationError, DomainError
from .mkdv_sim import SimConfig, evolve
from .soliton_engine import SolitonConfig, asymptotic_superposition, exact_nsoliton
from .spectral_data import TraceInputs


@dataclass(frozen=True)
class Window:
    xi_min: float
    xi_max: float
    pad: float = 0.0
    dx: float = 0.05

    def __post_init__(self):
        if not self.xi_min < self.xi_max:
            raise ConfigurationError("window needs xi_min < xi_max")
        if self.dx <= 0:
            raise ConfigurationError("window.dx must be positive")

    def bounds(self, t: float):
        return self.xi_min * t, self.xi_max * t + self.pad

    def points(self, t: float) -> np.ndarray:
        lo, hi = self.bounds(t)
        n = max(2, int(np.floor((hi - lo) / self.dx)) + 1)
        return lo + self.dx * np.arange(n)

    @classmethod
    def from_block(cls, b: dict):
        if not isinstance(b, dict):
            raise ConfigurationError("compare.window must be an object")
        cfgmod._check_keys(b, {"xi_min", "xi_max", "pad", "dx"}, "compare.window")
        return cls(
            cfgmod._num(b, "xi_min", "compare.window"),
            cfgmod._num(b, "xi_max", "compare.window"),
            cfgmod._num(b, "pad", "compare.window", 0.0),
            cfgmod._num(b, "dx", "compare.window", 0.05, positive=True),
        )


class Source:
    """``q(x, t)`` from one of the three pipelines."""

    kind = ""
    grid = None  # fixed grid for sources that cannot be evaluated anywhere

    def __call__(self, x, t):  # pragma: no cover - interface
        raise NotImplementedError

    def describe(self) -> dict:
        return {"kind": self.kind}


class ExactSource(Source):
    kind = "exact"

    def __init__(self, sc: SolitonConfig):
        self.sc = sc

    def __call__(self, x, t):
        return exact_nsoliton(self.sc, x, t)


class PredictSource(Source):
    kind = "predict"

    def __init__(self, sc: SolitonConfig, inputs: TraceInputs | None = None):
        self.sc = sc
        self.inputs = inputs

    def __call__(self, x, t):
        return asymptotic_superposition(self.sc, x, t, self.inputs, region_check=False)

    @classmethod
    def from_potential(cls, pot):
        sd = compute_scattering_data(pot)
        if not sd.zeros:
            raise DomainError("the potential has no discrete spectrum; nothing to predict")
        sc = SolitonConfig(tuple(sd.zeros), tuple(sd.norming))
        return cls(sc, TraceInputs.from_potential(pot, sd.zeros)), sd


class SimulateSource(Source):
    kind = "simulate"

    def __init__(self, q0, sim: SimConfig, times):
        snaps_t = tuple(sorted(set(float(t) for t in times) | set(sim.snapshots)))
        cfg = SimConfig(**{**sim.to_dict(), "snapshots": snaps_t, "boundary": sim.boundary})
        self.sim = cfg
        self.snapshots = evolve(q0, cfg)
        self.by_t = {s.t: s for s in self.snapshots}
        self.grid = cfg.x_grid

    def snapshot(self, t):
        for tt, s in self.by_t.items():
            if abs(tt - t) < 1e-9:
                return s
        raise ConfigurationError(f"no snapshot at t={t}")

    def __call__(self, x, t):
        s = self.snapshot(t)
        xs = np.asarray(x, dtype=float)
        idx = np.searchsorted(s.x, xs)
        idx = np.clip(idx, 0, s.x.size - 1)
        if np.all(np.abs(s.x[idx] - xs) < 1e-9):
            return s.q[idx]
        return np.interp(xs, s.x, s.q)


def make_source(block: dict, cfg: dict, seed: int, times) -> Source:
    """Build a source from ``{"source": kind}`` plus the top-level blocks of ``cfg``.

    ``block`` may carry its own ``potential``/``solitons``/``sim`` blocks, which
    override the top-level ones.
    """
    if not isinstance(block, dict) or block.get("source") not in cfgmod.SOURCES:
        raise ConfigurationError(f"source must be an object with 'source' in {cfgmod.SOURCES}")
    merged = {**cfg, **{k: v for k, v in block.items() if k != "source"}}
    kind = block["source"]
    if kind == "exact":
        return ExactSource(cfgmod.build_solitons(merged))
    if kind == "predict":
        if "solitons" in block or ("solitons" in merged and "potential" not in block):
            return PredictSource(cfgmod.build_solitons(merged))
        src, _ = PredictSource.from_potential(cfgmod.build_potential(merged, seed))
        return src
    return SimulateSource(cfgmod.initial_data(merged, seed), cfgmod.build_sim(merged), times)


@dataclass(frozen=True)
class ComparisonRow:
    t: float
    linf: float
    l2: float
    npts: int
    x_lo: float
    x_hi: float


def compare_sources(ref: Source, cand: Source, times, window: Window) -> list[ComparisonRow]:
    rows = []
    for t in times:
        lo, hi = window.bounds(t)
        grid = ref.grid if ref.grid is not None else cand.grid
        if grid is not None:
            x = grid[(grid >= lo) & (grid <= hi)]
            if x.size < 2:
                raise ConfigurationError(f"window [{lo:.3g}, {hi:.3g}] at t={t} does not overlap the simulation grid")
            h = float(x[1] - x[0])
        else:
            x = window.points(t)
            h = window.dx
        e = np.asarray(ref(x, t)) - np.asarray(cand(x, t))
        rows.append(
            ComparisonRow(float(t), float(np.max(np.abs(e))), float(np.sqrt(h * np.sum(e * e))), int(x.size), float(x[0]), float(x[-1]))
        )
    return rows


def loglog_slope(rows) -> float:
    t = np.array([r.t for r in rows])
    e = np.array([r.linf for r in rows])
    if t.size < 2 or np.any(e <= 0) or np.any(t <= 0):
        return float("nan")
    return float(np.polyfit(np.log(t), np.log(e), 1)[0])


def is_monotone_decreasing(rows) -> bool:
    e = [r.linf for r in rows]
    return all(b < a for a, b in zip(e, e[1:]))
