"""Command line entry point ``mkdv-ist``.

Every subcommand reads a JSON config (``--config``), writes plain columnar
tables with a single ``#`` header line into ``--out`` and finishes with
``manifest.json`` (command, config echo, seed, backend, outputs, summary).
Exit codes: 0 ok, 2 configuration error, 3 numerical failure, 4 acceptance
failure.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__, backend_name
from . import config as cfgmod
from .errors import ConfigurationError, DomainError, NumericalError, PoleError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_ACCEPTANCE = 0, 2, 3, 4


class AcceptanceFailure(Exception):
    """Raised by ``compare``/``selftest`` after the outputs are written."""


# ---------------------------------------------------------------- output helpers


def _fmt(v) -> str:
    if isinstance(v, (str, np.str_)):
        return str(v)
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v) + 0.0:.16e}"


class Run:
    """Output directory bookkeeping for one command."""

    def __init__(self, command: str, cfg: dict, out: Path, seed: int, threads: int | None):
        self.command = command
        self.cfg = cfg
        self.out = Path(out)
        self.seed = seed
        self.threads = threads
        self.outputs: list[str] = []
        self.summary: dict = {}
        self.out.mkdir(parents=True, exist_ok=True)

    def table(self, name: str, header, rows):
        path = self.out / name
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            fh.write("# " + " ".join(header) + "\n")
            for row in rows:
                fh.write(" ".join(_fmt(v) for v in row) + "\n")
        self.outputs.append(name)

    def manifest(self, status: str, error: str | None = None):
        man = {
            "command": self.command,
            "config": self.cfg,
            "seed": self.seed,
            "threads": self.threads,
            "version": __version__,
            "backend": backend_name(),
            "status": status,
            "outputs": self.outputs,
            "summary": self.summary,
        }
        if error:
            man["error"] = error
        (self.out / "manifest.json").write_text(json.dumps(man, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serialisable: {type(o)}")


def _cx(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


# ---------------------------------------------------------------- commands


def cmd_scatter(run: Run):
    """Reflection coefficient, discrete spectrum and symmetry report of a potential."""
    from .direct_scattering import compute_scattering_data, scattering_coefficients, scattering_matrix

    pot = cfgmod.build_potential(run.cfg, run.seed)
    opts = run.cfg.get("scatter", {}) or {}
    cfgmod._check_keys(opts, {"n_half", "n_scan", "n_checks"}, "scatter")
    n_half = cfgmod._num(opts, "n_half", "scatter", 513, integer=True)
    n_scan = cfgmod._num(opts, "n_scan", "scatter", 2048, integer=True)
    n_checks = cfgmod._num(opts, "n_checks", "scatter", 50, integer=True)
    if pot.label == "constant":
        # q equal to one background value everywhere: both Jost matrices carry
        # the same normalisation, so S = I exactly.
        z = np.concatenate([-np.geomspace(50, 0.02, n_half // 2), np.geomspace(0.02, 50, n_half // 2)])
        run.table("reflection.txt", ["z", "re_r", "im_r", "abs_r"], [(s, 0.0, 0.0, 0.0) for s in z])
        run.table("spectrum.txt", ["k", "re_z", "im_z", "re_c", "im_c", "abs_c"], [])
        run.table("symmetry.txt", ["check", "value", "tolerance", "pass"], [("max_abs_r", 0.0, 1e-5, True)])
        run.summary = {"zeros": [], "max_abs_r": 0.0, "degenerate_background": True}
        return
    sd = compute_scattering_data(pot, n_half=n_half, n_scan=n_scan)
    run.table(
        "reflection.txt",
        ["z", "re_r", "im_r", "abs_r"],
        [(z.real, r.real, r.imag, abs(r)) for z, r in zip(sd.r_z, sd.r_values)],
    )
    run.table(
        "spectrum.txt",
        ["k", "re_z", "im_z", "re_c", "im_c", "abs_c"],
        [(k, z.real, z.imag, c.real, c.imag, abs(c)) for k, (z, c) in enumerate(sd.discrete)],
    )
    zs = np.linspace(0.1, 5.0, n_checks)
    zs = zs[np.abs(zs - 1.0) > 1e-3]
    a, b = scattering_coefficients(zs, pot)
    unit = float(np.max(np.abs(np.abs(a) ** 2 - np.abs(b) ** 2 - 1.0)))
    s2 = np.array([[0, -1j], [1j, 0]])
    sym1 = sym2 = 0.0
    for z in zs[:: max(1, zs.size // 10)]:
        S = scattering_matrix(z, pot)
        sym1 = max(sym1, float(np.max(np.abs(S - np.conj(scattering_matrix(-z, pot))))))
        sym2 = max(sym2, float(np.max(np.abs(S + s2 @ scattering_matrix(1.0 / z, pot) @ s2))))
    chk = sd.check()
    rows = [
        ("unitarity", unit, 1e-6, unit < 1e-6),
        ("S_conjugation", sym1, 1e-6, sym1 < 1e-6),
        ("S_inversion", sym2, 1e-6, sym2 < 1e-6),
        ("max_abs_r", chk["max_abs_r"], 1.0, chk["r_below_one"]),
    ]
    rows += [(f"phase_law_{k}", v, 1e-6, v < 1e-6) for k, v in enumerate(chk["phase_residuals"])]
    run.table("symmetry.txt", ["check", "value", "tolerance", "pass"], rows)
    run.summary = {
        "zeros": [_cx(z) for z in sd.zeros],
        "norming": [_cx(c) for c in sd.norming],
        "max_abs_r": chk["max_abs_r"],
        "unitarity_error": unit,
        "a_plus": _cx(sd.a_plus),
        "a_minus": _cx(sd.a_minus),
        "decay_margin": sd.decay_margin,
    }


def _spectral(run: Run, pot):
    from .direct_scattering import compute_scattering_data
    from .spectral_data import TraceInputs

    sd = compute_scattering_data(pot)
    return sd, TraceInputs.from_potential(pot, sd.zeros)


def cmd_spectrum(run: Run):
    """Modified norming constants, phase shifts and the partition for one ray."""
    from .spectral_data import asymptotic_spectral_data

    pot = cfgmod.build_potential(run.cfg, run.seed)
    xi = cfgmod._num(run.cfg, "xi", "config", -4.0)
    sd, inp = _spectral(run, pot)
    if not sd.zeros:
        raise DomainError("no discrete spectrum found; nothing to tabulate")
    asd = asymptotic_spectral_data(sd.zeros, sd.norming, inp, xi=xi)
    run.table(
        "spectrum.txt",
        ["k", "re_z", "im_z", "abs_c", "abs_c_tilde", "x_shift", "velocity", "set"],
        [(k, r.z.real, r.z.imag, abs(r.c), abs(r.c_tilde), r.x_shift, r.velocity, r.label) for k, r in enumerate(asd.records)],
    )
    run.summary = {
        "xi": xi,
        "xi0": asd.partition.xi0,
        "delta": list(asd.partition.delta),
        "nabla": list(asd.partition.nabla),
        "T_infinity": asd.T_inf,
        "radiation_l1": inp.l1_norm(),
    }


def _solitons_for_prediction(run: Run):
    from .soliton_engine import SolitonConfig

    if "solitons" in run.cfg:
        return cfgmod.build_solitons(run.cfg), None
    pot = cfgmod.build_potential(run.cfg, run.seed)
    sd, inp = _spectral(run, pot)
    if not sd.zeros:
        raise DomainError("no discrete spectrum found; nothing to predict")
    return SolitonConfig(tuple(sd.zeros), tuple(sd.norming)), inp


def cmd_predict(run: Run):
    """Long-time soliton superposition on a grid; points outside -6 < x/t < -2 are flagged."""
    from .soliton_engine import asymptotic_superposition, soliton_velocity
    from .spectral_data import phase_shift_xj

    sc, inp = _solitons_for_prediction(run)
    x = cfgmod.build_grid(run.cfg)
    times = cfgmod.build_times(run.cfg)
    if any(t <= 0 for t in times):
        raise DomainError("prediction times must be positive")
    opts = run.cfg.get("predict", {}) or {}
    cfgmod._check_keys(opts, {"xi_margin"}, "predict")
    margin = cfgmod._num(opts, "xi_margin", "predict", 0.0)
    rows, flagged = [], 0
    for t in times:
        xi = x / t
        inside = (xi > -6.0 + margin) & (xi < -2.0 - margin)
        q = np.full_like(x, np.nan)
        if np.any(inside):
            q[inside] = asymptotic_superposition(sc, x[inside], t, inp, region_check=False)
        flagged += int(np.sum(~inside))
        rows.extend((t, xx, qq, ok) for xx, qq, ok in zip(x, q, inside))
    run.table("predict.txt", ["t", "x", "q", "in_region"], rows)
    shifts = [
        (j, z.real, z.imag, soliton_velocity(z), phase_shift_xj(j, sc.zs, sc.cs, inp)) for j, z in enumerate(sc.zs)
    ]
    run.table("shifts.txt", ["j", "re_z", "im_z", "velocity", "x_shift"], shifts)
    run.summary = {"points_outside_region": flagged, "solitons": len(sc.zs), "with_radiation": inp is not None}


def cmd_exact(run: Run):
    """Reflectionless N-soliton field on a grid."""
    from .soliton_engine import exact_nsoliton

    sc = cfgmod.build_solitons(run.cfg)
    x = cfgmod.build_grid(run.cfg)
    times = cfgmod.build_times(run.cfg)
    rows = []
    for t in times:
        rows.extend((t, xx, qq) for xx, qq in zip(x, exact_nsoliton(sc, x, t)))
    run.table("exact.txt", ["t", "x", "q"], rows)
    run.summary = {"solitons": sc.n, "zs": [_cx(z) for z in sc.zs]}


def cmd_simulate(run: Run):
    """Finite-difference evolution with snapshots, diagnostics and soliton tracks."""
    from .mkdv_sim import evolve, extract_soliton_tracks

    sim = cfgmod.build_sim(run.cfg)
    q0 = cfgmod.initial_data(run.cfg, run.seed)
    try:
        snaps = evolve(q0, sim)
    except NumericalError as exc:
        last = exc.diagnostics.get("last_snapshot")
        if last is not None:
            run.table("last_good.txt", ["x", "q"], zip(last.x, last.q))
            run.summary = {"last_good_t": last.t}
        raise
    for k, s in enumerate(snaps):
        run.table(f"snapshot_{k:03d}.txt", ["x", "q"], zip(s.x, s.q))
    run.table(
        "diagnostics.txt",
        ["t", "boundary_drift", "mass_like", "residual_norm"],
        [(s.t, s.diagnostics["boundary_drift"], s.diagnostics["mass_like"], s.diagnostics["residual_norm"]) for s in snaps],
    )
    tracks = extract_soliton_tracks(snaps, include_kink=True)
    rows = []
    for k, tr in enumerate(tracks):
        kind = "kink" if k == len(tracks) - 1 else "bump"
        rows.extend((k, kind, t, xp, qp) for t, xp, qp in tr)
    run.table("tracks.txt", ["track", "kind", "t", "x", "q"], rows)
    run.summary = {
        "snapshots": [s.t for s in snaps],
        "max_boundary_drift": max(s.diagnostics["boundary_drift"] for s in snaps),
        "dt": sim.dt,
        "dx": sim.dx,
        "scheme": sim.scheme,
    }


def cmd_compare(run: Run):
    """Window errors between two field sources with optional pass/fail requirements."""
    from .experiments import Window, compare_sources, is_monotone_decreasing, loglog_slope, make_source

    b = cfgmod._block(run.cfg, "compare")
    cfgmod._check_keys(b, {"reference", "candidate", "times", "window", "require"}, "compare")
    times = cfgmod._num_list(b, "times", "compare")
    if any(t <= 0 for t in times):
        raise DomainError("comparison times must be positive")
    if "window" not in b:
        raise ConfigurationError("compare.window is required")
    window = Window.from_block(b["window"])
    for key in ("reference", "candidate"):
        if key not in b:
            raise ConfigurationError(f"compare.{key} is required")
    ref = make_source(b["reference"], run.cfg, run.seed, times)
    cand = make_source(b["candidate"], run.cfg, run.seed, times)
    rows = compare_sources(ref, cand, times, window)
    run.table(
        "errors.txt",
        ["t", "linf", "l2", "npts", "x_lo", "x_hi"],
        [(r.t, r.linf, r.l2, r.npts, r.x_lo, r.x_hi) for r in rows],
    )
    req = b.get("require", {}) or {}
    cfgmod._check_keys(req, {"monotone", "max_slope", "max_linf"}, "compare.require")
    slope = loglog_slope(rows)
    mono = is_monotone_decreasing(rows)
    verdicts = {}
    if req.get("monotone", False):
        verdicts["monotone"] = mono
    if "max_slope" in req:
        verdicts["max_slope"] = bool(np.isfinite(slope) and slope <= float(req["max_slope"]))
    if "max_linf" in req:
        verdicts["max_linf"] = all(r.linf <= float(req["max_linf"]) for r in rows)
    passed = all(verdicts.values())
    run.summary = {
        "slope": slope,
        "monotone": mono,
        "checks": verdicts,
        "passed": passed,
        "reference": ref.kind,
        "candidate": cand.kind,
    }
    if not passed:
        raise AcceptanceFailure(f"comparison failed: {verdicts}")


def cmd_selftest(run: Run):
    """Run the invariant suite."""
    from .selftest import run_selftest

    opts = run.cfg.get("selftest", {}) or {}
    cfgmod._check_keys(opts, {"modules"}, "selftest")
    only = opts.get("modules")
    if only is not None and (not isinstance(only, list) or not all(isinstance(m, str) for m in only)):
        raise ConfigurationError("selftest.modules must be a list of module names")

    def progress(r):
        click.echo(f"{'PASS' if r.passed else 'FAIL'}  {r.module:18s} {r.name}  [{r.detail}]", err=True)

    results = run_selftest(seed=run.seed, only=set(only) if only else None, progress=progress)
    run.table(
        "selftest.txt",
        ["module", "check", "pass", "value", "threshold", "seconds"],
        [(r.module, f"c{k:02d}", r.passed, r.value, r.threshold, r.seconds) for k, r in enumerate(results)],
    )
    failed = [r for r in results if not r.passed]
    run.summary = {
        "checks": [{"id": f"c{k:02d}", "module": r.module, "name": r.name, "pass": r.passed, "detail": r.detail} for k, r in enumerate(results)],
        "failed": len(failed),
    }
    if failed:
        raise AcceptanceFailure(f"{len(failed)} invariant check(s) failed")


COMMANDS = {
    "scatter": cmd_scatter,
    "spectrum": cmd_spectrum,
    "predict": cmd_predict,
    "exact": cmd_exact,
    "simulate": cmd_simulate,
    "compare": cmd_compare,
    "selftest": cmd_selftest,
}


def _set_threads(threads):
    if threads is None:
        return
    if threads < 1:
        raise ConfigurationError("--threads must be >= 1")
    try:
        import numba

        numba.set_num_threads(min(threads, numba.config.NUMBA_NUM_THREADS))
    except ImportError:  # pragma: no cover - numba is a hard dependency
        pass


def run_command(command: str, cfg: dict, out, seed: int = 0, threads: int | None = None) -> int:
    """Run one subcommand in-process and return its exit code."""
    if command not in COMMANDS:
        raise ConfigurationError(f"unknown command {command!r}")
    run = Run(command, cfg, Path(out), seed, threads)
    try:
        _set_threads(threads)
        if not 0 <= seed < 2**64:
            raise ConfigurationError("--seed must be an unsigned 64-bit integer")
        COMMANDS[command](run)
    except AcceptanceFailure as exc:
        run.manifest("acceptance_failure", str(exc))
        return EXIT_ACCEPTANCE
    except (ConfigurationError, DomainError) as exc:
        run.manifest("config_error", str(exc))
        return EXIT_CONFIG
    except (NumericalError, PoleError, np.linalg.LinAlgError, FloatingPointError) as exc:
        run.manifest("numerical_failure", str(exc))
        return EXIT_NUMERICAL
    run.manifest("ok")
    return EXIT_OK


def _common(fn):
    fn = click.option("--threads", type=int, default=None, help="Worker threads for compiled kernels.")(fn)
    fn = click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=0, show_default=True, help="Seed for random perturbations.")(fn)
    fn = click.option("--out", "out", type=click.Path(file_okay=False), required=True, help="Output directory.")(fn)
    return fn


def _make(name: str, needs_config: bool = True):
    @click.pass_context
    def command(ctx, config, out, seed, threads):
        if config is None:
            cfg = {}
        else:
            try:
                cfg = cfgmod.load_config(config)
            except ConfigurationError as exc:
                Run(name, {}, Path(out), seed, threads).manifest("config_error", str(exc))
                click.echo(f"error: {exc}", err=True)
                ctx.exit(EXIT_CONFIG)
        code = run_command(name, cfg, out, seed=seed, threads=threads)
        if code != EXIT_OK:
            man = json.loads((Path(out) / "manifest.json").read_text())
            click.echo(f"error: {man.get('error', man['status'])}", err=True)
        else:
            click.echo(f"{name}: wrote {out}", err=True)
        ctx.exit(code)

    command.__name__ = f"{name}_cmd"
    command.__doc__ = (COMMANDS[name].__doc__ or "").strip() or None
    command = click.option(
        "--config", "config", type=click.Path(dir_okay=False), required=needs_config, default=None, help="JSON run configuration."
    )(_common(command))
    return click.command(name)(command)


@click.group()
@click.version_option(__version__, prog_name="mkdv-ist")
def main():
    """Scattering, soliton and simulation pipeline for defocusing mKdV on a step background."""


for _name in COMMANDS:
    main.add_command(_make(_name, needs_config=_name != "selftest"))

if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
