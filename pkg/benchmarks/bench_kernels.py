"""Compare the numba and numpy paths of the hot kernels.

Both implementations are importable side by side, so the kernel timings run
in one process.  ``--end-to-end`` also times a scattering run and a short
simulation in two fresh interpreters, one with MKDV_IST_DISABLE_NUMBA=1.

    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --repeat 7 --end-to-end
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from mkdv_ist import kernels as kn
from mkdv_ist.direct_scattering import PotentialSample, background_columns
from mkdv_ist.soliton_engine import SolitonConfig

END_TO_END = r"""
import time
import numpy as np
from mkdv_ist.direct_scattering import PotentialSample, find_discrete_spectrum, reflection_grid
from mkdv_ist.mkdv_sim import SimConfig, evolve
from mkdv_ist._accel import backend_name
pot = PotentialSample.perturbed_kink(0.1, 0.0)
cfg = SimConfig(L=50, N=2048, t_end=2.0)
for label, job in [("scatter", lambda: (find_discrete_spectrum(pot), reflection_grid(pot))),
                   ("simulate", lambda: evolve(np.tanh, cfg))]:
    job()
    t0 = time.perf_counter()
    job()
    print(f"{backend_name()} {label} {time.perf_counter() - t0:.4f}")
"""


def _cases():
    pot = PotentialSample.perturbed_kink(0.1, 0.0)
    zs = np.exp(1j * np.linspace(0.05, np.pi - 0.05, 512))
    c1, _ = background_columns(zs, "plus")
    v0 = np.ascontiguousarray(c1)
    lm, zt = 0.5 * (zs + 1 / zs), 0.5 * (zs - 1 / zs)
    jost = (pot._qa, pot._qb, pot.h, lm, zt, v0, 1.0, pot.n_cells, pot.mid_index)

    x = np.linspace(-50, 50, 4096)
    q = np.tanh(x)
    stencil = (q, x[1] - x[0], -1.0, 1.0)

    cfg = SolitonConfig.from_polar([np.pi / 6, np.pi / 3, np.pi / 2], [1.0, 1.0, 2.0])
    z, logc = cfg.arrays()
    field = (z, logc, cfg.kink_index, np.linspace(-40, 20, 2000), 2.0)

    yield "jost propagation (512 z)", kn.propagate_numba, kn.propagate_numpy, jost
    yield "third derivative (4096)", kn.diff3_numba, kn.diff3_numpy, stencil
    yield "mkdv rhs (4096)", kn.mkdv_rhs_numba, kn.mkdv_rhs_numpy, stencil
    yield "3-soliton field (2000 x)", kn.nsoliton_field_numba, kn.nsoliton_field_numpy, field


def _best(fn, args, repeat):
    fn(*args)  # compile / warm caches
    n, _ = timeit.Timer(lambda: fn(*args)).autorange()
    return min(timeit.repeat(lambda: fn(*args), number=n, repeat=repeat)) / n


def kernel_table(repeat):
    print(f"{'kernel':28s} {'numba [ms]':>11s} {'numpy [ms]':>11s} {'speedup':>8s}")
    for name, fast, slow, args in _cases():
        a, b = _best(fast, args, repeat), _best(slow, args, repeat)
        print(f"{name:28s} {1e3 * a:11.3f} {1e3 * b:11.3f} {b / a:8.1f}")


def end_to_end():
    print("\nend to end (second call, seconds)")
    for flag in ("0", "1"):
        env = {**os.environ, "MKDV_IST_DISABLE_NUMBA": flag}
        out = subprocess.run([sys.executable, "-c", END_TO_END], env=env, capture_output=True, text=True, check=True)
        print(out.stdout.rstrip())


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--end-to-end", action="store_true")
    args = ap.parse_args()
    kernel_table(args.repeat)
    if args.end_to_end:
        end_to_end()


if __name__ == "__main__":
    main()
