import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mkdv_ist import mkdv_sim as ms
from mkdv_ist.errors import ConfigurationError, NumericalError
from mkdv_ist.soliton_engine import SolitonConfig, exact_nsoliton

PAIR = SolitonConfig.from_polar([np.pi / 3, np.pi / 2], [1.0, 2.0])


@pytest.fixture(scope="module")
def tanh_run():
    cfg = ms.SimConfig(L=50, N=2048, t_end=5, snapshots=(0, 1, 2, 3, 4, 5))
    return ms.evolve(np.tanh, cfg)


@pytest.fixture(scope="module")
def pair_run():
    cfg = ms.SimConfig(L=50, N=2048, center=-10, t_end=5, snapshots=(0, 1, 2, 3, 4, 5))
    return ms.evolve(lambda x: exact_nsoliton(PAIR, x, 0.0), cfg)


def test_constant_state_is_steady():
    cfg = ms.SimConfig(L=20, N=256, t_end=1.0, boundary=(1.0, 1.0))
    (snap,) = ms.evolve(lambda x: np.ones_like(x), cfg)
    assert np.max(np.abs(snap.q - 1.0)) < 1e-13
    assert snap.boundary_drift < 1e-13


def test_kink_travels_at_speed_two(tanh_run):
    s = tanh_run[-1]
    err = np.sqrt(s.x[1] - s.x[0]) * np.linalg.norm(s.q - np.tanh(s.x + 10.0))
    assert err < 1e-3
    assert s.boundary_drift < 1e-6


def test_two_soliton_against_exact(pair_run):
    s = pair_run[-1]
    assert np.max(np.abs(s.q - exact_nsoliton(PAIR, s.x, 5.0))) < 5e-3


def test_snapshot_diagnostics(pair_run):
    m0 = pair_run[0].diagnostics["mass_like"]
    for s in pair_run:
        assert set(s.diagnostics) == {"boundary_drift", "mass_like", "residual_norm"}
        assert s.diagnostics["residual_norm"] < 1e-2
        # int (q^2 - 1) dx is a conserved density
        assert s.diagnostics["mass_like"] == pytest.approx(m0, abs=1e-5)


def test_pde_residual_of_constant():
    x = np.linspace(-10, 10, 257)
    snaps = [ms.FieldSnapshot(t, x, np.ones_like(x)) for t in (0.0, 0.1, 0.2)]
    assert ms.pde_residual(snaps) == pytest.approx(0.0, abs=1e-12)


def test_pde_residual_of_tanh_refines():
    res = []
    hs = [0.1, 0.05, 0.025]
    for h in hs:
        x = np.arange(-15, 15 + h / 2, h)
        snaps = [ms.FieldSnapshot(t, x, np.tanh(x + 2 * t)) for t in (-h, 0.0, h)]
        res.append(ms.pde_residual(snaps))
    slope = np.polyfit(np.log(hs), np.log(res), 1)[0]
    assert slope >= 1.9


def test_pde_residual_flags_noise(rng):
    x = np.linspace(-15, 15, 601)
    snaps = [ms.FieldSnapshot(t, x, np.tanh(x) + 0.01 * rng.standard_normal(x.size)) for t in (0.0, 0.01, 0.02)]
    assert ms.pde_residual(snaps) > 1.0


def test_pde_residual_input_checks():
    x = np.linspace(-10, 10, 101)
    y = np.linspace(-10, 10, 103)
    q = np.tanh(x)
    with pytest.raises(ConfigurationError):
        ms.pde_residual([ms.FieldSnapshot(0, x, q), ms.FieldSnapshot(1, y, np.tanh(y)), ms.FieldSnapshot(2, x, q)])
    with pytest.raises(ConfigurationError):
        ms.pde_residual([ms.FieldSnapshot(t, x, q) for t in (0, 1, 3)])
    with pytest.raises(ConfigurationError):
        ms.pde_residual([ms.FieldSnapshot(0, x, q)] * 2)


def test_tracks_and_velocities(pair_run):
    tracks = ms.extract_soliton_tracks(pair_run, include_kink=True)
    assert len(tracks) == 2
    bump, kink = tracks
    assert bump[-1][1] < kink[-1][1]
    v_bump, _ = ms.fit_velocity([p for p in bump if p[0] >= 2])
    v_kink, _ = ms.fit_velocity([p for p in kink if p[0] >= 3])
    assert v_bump == pytest.approx(-3.0, abs=0.05)
    assert v_kink == pytest.approx(-2.0, abs=0.05)


def test_pure_kink_track(tanh_run):
    (track,) = ms.extract_soliton_tracks(tanh_run, include_kink=True)
    v, b = ms.fit_velocity(track)
    assert v == pytest.approx(-2.0, abs=1e-3)
    assert b == pytest.approx(0.0, abs=1e-2)
    assert ms.extract_soliton_tracks(tanh_run) == []


def test_fit_velocity_needs_two_points():
    with pytest.raises(ConfigurationError):
        ms.fit_velocity([(0.0, 1.0, 0.5)])


def test_rk4_refuses_large_step():
    with pytest.raises(ConfigurationError):
        ms.SimConfig(L=10, N=256, t_end=1, scheme="rk4", dt=1e-2)


def test_rk4_agrees_with_imex():
    kw = dict(L=15, N=256, t_end=0.05, center=-2, boundary=(-1.0, 1.0), check_cores=False)
    f = lambda x: exact_nsoliton(PAIR, x, 0.0)  # noqa: E731
    a = ms.evolve(f, ms.SimConfig(scheme="rk4", **kw))[-1]
    b = ms.evolve(f, ms.SimConfig(scheme="imex", dt=1e-3, **kw))[-1]
    assert np.max(np.abs(a.q - b.q)) < 1e-5


def test_mismatched_ends_rejected():
    cfg = ms.SimConfig(L=5, N=256, t_end=1)
    with pytest.raises(ConfigurationError):
        ms.evolve(np.tanh, cfg)


def test_core_too_close_to_wall_rejected():
    cfg = ms.SimConfig(L=30, N=512, t_end=5)
    with pytest.raises(ConfigurationError):
        ms.evolve(np.tanh, cfg)


def test_blow_up_reports_last_good_state():
    cfg = ms.SimConfig(L=20, N=256, t_end=5, dt=0.5, check_cores=False)
    x = cfg.x_grid
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        with pytest.raises(NumericalError) as info:
            ms.evolve(np.tanh(x) + 30 * np.exp(-x * x), cfg)
    last = info.value.diagnostics["last_snapshot"]
    assert np.all(np.isfinite(last.q))


@pytest.mark.parametrize(
    "kw",
    [dict(N=100), dict(L=-1), dict(t_end=0), dict(scheme="euler"), dict(snapshots=(7.0,)), dict(sponge_width=60), dict(dt=-1.0)],
)
def test_config_rejects(kw):
    base = dict(L=50, N=512, t_end=5)
    with pytest.raises(ConfigurationError):
        ms.SimConfig(**{**base, **kw})


def test_scheme_suffix_accepted():
    assert ms.SimConfig(scheme="imex-fd").scheme == "imex"


@given(st.floats(-2.0, 2.0), st.floats(-2.0, 2.0), st.floats(0.02, 0.2))
def test_d3_stencil_exact_on_cubics(c3, c2, h):
    n = 40
    x = h * np.arange(n)
    D = ms.d3_matrix(n, h)
    got = (D @ (c3 * x**3 + c2 * x**2))[4:-4]
    assert np.allclose(got, 6 * c3, atol=1e-7 / h**3)


def test_d3_matrix_is_skew():
    D = ms.d3_matrix(50, 0.1).toarray()
    assert np.allclose(D, -D.T)
