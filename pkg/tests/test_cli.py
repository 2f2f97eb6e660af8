import json

import numpy as np
import pytest
from click.testing import CliRunner

from mkdv_ist import __version__
from mkdv_ist.cli import main, run_command

SOLITONS = {"angles_deg": [60, 90], "norming_abs": [1.0, 2.0]}


def _write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def _invoke(args):
    return CliRunner().invoke(main, args, catch_exceptions=False)


def _cell(s):
    try:
        return float(s)
    except ValueError:
        return s


def _table(path):
    """Header names and the body; the body is float unless a column holds text."""
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("# ")
    head = lines[0][2:].split()
    rows = [[_cell(c) for c in ln.split()] for ln in lines[1:]]
    assert all(len(r) == len(head) for r in rows)
    if any(isinstance(c, str) for r in rows for c in r):
        return head, np.array(rows, dtype=object).reshape(len(rows), len(head))
    return head, np.array(rows, dtype=float).reshape(len(rows), len(head))


def _manifest(out):
    return json.loads((out / "manifest.json").read_text())


def test_version():
    res = _invoke(["--version"])
    assert __version__ in res.output


def test_scatter_kink(tmp_path):
    out = tmp_path / "o"
    cfg = _write(tmp_path, {"potential": {"kind": "kink"}})
    res = _invoke(["scatter", "--config", cfg, "--out", str(out)])
    assert res.exit_code == 0
    head, found = _table(out / "spectrum.txt")
    assert head == ["k", "re_z", "im_z", "re_c", "im_c", "abs_c"]
    assert found.shape[0] == 1
    assert found[0, 1:5] == pytest.approx([0.0, 1.0, 0.0, -2.0], abs=1e-6)
    _, sym = _table(out / "symmetry.txt")
    assert np.all(sym[:, -1] == 1.0)
    man = _manifest(out)
    assert man["status"] == "ok" and man["command"] == "scatter"
    assert set(man["outputs"]) == {"reflection.txt", "spectrum.txt", "symmetry.txt"}


def test_scatter_background(tmp_path):
    out = tmp_path / "o"
    cfg = _write(tmp_path, {"potential": {"kind": "background"}})
    assert _invoke(["scatter", "--config", cfg, "--out", str(out)]).exit_code == 0
    _, refl = _table(out / "reflection.txt")
    assert np.all(refl[:, 1:] == 0.0)
    _, found = _table(out / "spectrum.txt")
    assert found.shape[0] == 0


@pytest.mark.parametrize(
    "cfg",
    [
        {"potential": {"kind": "spline"}},
        {"potential": {"kind": "kink", "colour": 1}},
        {"potential": {"kind": "kink", "L": -3}},
        {},
    ],
)
def test_bad_config_exit_code(tmp_path, cfg):
    out = tmp_path / "o"
    res = _invoke(["scatter", "--config", _write(tmp_path, cfg), "--out", str(out)])
    assert res.exit_code == 2
    assert _manifest(out)["status"] == "config_error"


def test_unreadable_config(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    out = tmp_path / "o"
    assert _invoke(["scatter", "--config", str(p), "--out", str(out)]).exit_code == 2
    assert _manifest(out)["status"] == "config_error"


def test_predict_rejects_nonpositive_time(tmp_path):
    cfg = {"solitons": SOLITONS, "grid": {"x_min": -40, "x_max": 0, "n": 11}, "times": [0.0]}
    assert run_command("predict", cfg, tmp_path / "o") == 2


def test_predict_marks_region(tmp_path):
    cfg = {"solitons": SOLITONS, "grid": {"x_min": -70, "x_max": 0, "n": 71}, "times": [10.0]}
    out = tmp_path / "o"
    assert run_command("predict", cfg, out) == 0
    head, data = _table(out / "predict.txt")
    assert head == ["t", "x", "q", "in_region"]
    inside = data[:, 3] == 1
    assert np.all(np.isnan(data[~inside, 2]))
    assert np.all(np.isfinite(data[inside, 2]))
    xi = data[:, 1] / data[:, 0]
    assert np.all((xi[inside] > -6) & (xi[inside] < -2))
    _, shifts = _table(out / "shifts.txt")
    assert sorted(shifts[:, 3]) == pytest.approx([-3.0, -2.0])


def test_exact_matches_library(tmp_path):
    from mkdv_ist.config import build_solitons
    from mkdv_ist.soliton_engine import exact_nsoliton

    cfg = {"solitons": SOLITONS, "grid": {"x_min": -10, "x_max": 10, "n": 21}, "times": [0.0, 1.0]}
    out = tmp_path / "o"
    assert run_command("exact", cfg, out) == 0
    _, data = _table(out / "exact.txt")
    sc = build_solitons(cfg)
    for t in (0.0, 1.0):
        rows = data[data[:, 0] == t]
        assert rows[:, 2] == pytest.approx(exact_nsoliton(sc, rows[:, 1], t), abs=1e-15)


def test_identical_sources_compare_to_zero(tmp_path):
    cfg = {
        "solitons": SOLITONS,
        "compare": {
            "reference": {"source": "exact"},
            "candidate": {"source": "exact"},
            "times": [1.0, 2.0],
            "window": {"xi_min": -5, "xi_max": -1},
            "require": {"max_linf": 0.0},
        },
    }
    out = tmp_path / "o"
    assert run_command("compare", cfg, out) == 0
    _, err = _table(out / "errors.txt")
    assert np.all(err[:, 1:3] == 0.0)


def test_failed_requirement_exit_code(tmp_path):
    cfg = {
        "solitons": SOLITONS,
        "compare": {
            "reference": {"source": "exact"},
            "candidate": {"source": "predict"},
            "times": [1.0, 2.0],
            "window": {"xi_min": -5.5, "xi_max": -2.5},
            "require": {"max_linf": 1e-12},
        },
    }
    out = tmp_path / "o"
    assert run_command("compare", cfg, out) == 4
    man = _manifest(out)
    assert man["status"] == "acceptance_failure"
    assert man["summary"]["checks"] == {"max_linf": False}


def test_window_outside_simulation_grid(tmp_path):
    cfg = {
        "potential": {"kind": "kink"},
        "sim": {"L": 40, "N": 512, "t_end": 2, "center": -10},
        "compare": {
            "reference": {"source": "simulate"},
            "candidate": {"source": "predict"},
            "times": [2.0],
            "window": {"xi_min": 100, "xi_max": 200},
        },
    }
    assert run_command("compare", cfg, tmp_path / "o") == 2


def test_simulate_outputs(tmp_path):
    cfg = {"solitons": SOLITONS, "sim": {"L": 50, "N": 1024, "center": -10, "t_end": 2, "snapshots": [1, 2]}}
    out = tmp_path / "o"
    assert run_command("simulate", cfg, out) == 0
    names = _manifest(out)["outputs"]
    assert "snapshot_000.txt" in names and "snapshot_001.txt" in names
    head, diag = _table(out / "diagnostics.txt")
    assert "residual_norm" in head and diag.shape[0] == 2
    head, tracks = _table(out / "tracks.txt")
    assert head == ["track", "kind", "t", "x", "q"]


def test_simulate_blow_up_exit_code(tmp_path):
    cfg = {
        "potential": {"kind": "random_bumps", "amplitude": 30, "count": 2, "spread": 1},
        "sim": {"L": 20, "N": 256, "t_end": 5, "dt": 0.5, "check_cores": False},
    }
    out = tmp_path / "o"
    with np.errstate(all="ignore"):
        assert run_command("simulate", cfg, out, seed=3) == 3
    assert _manifest(out)["status"] == "numerical_failure"
    assert (out / "last_good.txt").exists()


def test_outputs_are_deterministic(tmp_path):
    cfg = {"potential": {"kind": "random_bumps", "amplitude": 0.1, "count": 2}}
    a, b = tmp_path / "a", tmp_path / "b"
    assert run_command("spectrum", cfg, a, seed=11) == 0
    assert run_command("spectrum", cfg, b, seed=11) == 0
    for name in ("spectrum.txt", "manifest.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_seed_changes_random_potential(tmp_path):
    cfg = {"potential": {"kind": "random_bumps", "amplitude": 0.1, "count": 2}}
    run_command("scatter", cfg, tmp_path / "a", seed=1)
    run_command("scatter", cfg, tmp_path / "b", seed=2)
    assert (tmp_path / "a" / "reflection.txt").read_bytes() != (tmp_path / "b" / "reflection.txt").read_bytes()


def test_manifest_reruns(tmp_path):
    cfg = {"solitons": SOLITONS, "grid": {"x_min": -5, "x_max": 5, "n": 11}, "times": [1.0]}
    first = tmp_path / "first"
    assert run_command("exact", cfg, first, seed=5) == 0
    man = _manifest(first)
    again = tmp_path / "again"
    assert run_command(man["command"], man["config"], again, seed=man["seed"]) == 0
    assert (first / "exact.txt").read_bytes() == (again / "exact.txt").read_bytes()


def test_selftest_subset(tmp_path):
    cfg = _write(tmp_path, {"selftest": {"modules": ["uniformization"]}})
    out = tmp_path / "o"
    res = _invoke(["selftest", "--config", cfg, "--out", str(out)])
    assert res.exit_code == 0
    head, _ = _table(out / "selftest.txt")
    assert head == ["module", "check", "pass", "value", "threshold", "seconds"]
    assert _manifest(out)["summary"]["failed"] == 0


def test_threads_option(tmp_path):
    cfg = {"solitons": SOLITONS, "grid": {"x_min": -5, "x_max": 5, "n": 11}, "times": [1.0]}
    assert run_command("exact", cfg, tmp_path / "a", threads=1) == 0
    assert run_command("exact", cfg, tmp_path / "b", threads=0) == 2


def test_missing_out_is_usage_error(tmp_path):
    res = CliRunner().invoke(main, ["exact", "--config", _write(tmp_path, {})])
    assert res.exit_code != 0


CONFIG_DIR = __import__("pathlib").Path(__file__).resolve().parents[1] / "configs"


@pytest.mark.parametrize(
    "name, command",
    [("kink_scatter", "scatter"), ("kink_scatter", "spectrum"), ("pair_predict", "predict"), ("pair_predict", "exact")],
)
def test_shipped_configs_run(tmp_path, name, command):
    res = _invoke([command, "--config", str(CONFIG_DIR / f"{name}.json"), "--out", str(tmp_path / "o")])
    assert res.exit_code == 0
