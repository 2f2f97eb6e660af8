import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mkdv_ist import soliton_engine as se
from mkdv_ist.errors import ConfigurationError, DomainError, PoleError
from mkdv_ist.selftest import exact_residual
from mkdv_ist.spectral_data import TraceInputs

TWO = se.SolitonConfig.from_polar([np.pi / 3, np.pi / 2], [1.0, 2.0])
THREE = se.SolitonConfig.from_polar([np.pi / 6, np.pi / 3, np.pi / 2], [1.0, 0.5, 2.0])

angles = st.floats(0.1, np.pi / 2 - 0.05)


def test_empty_config_is_background():
    cfg = se.SolitonConfig((), ())
    assert np.all(se.exact_nsoliton(cfg, np.linspace(-5, 5, 11), 1.0) == -1.0)
    assert se.exact_nsoliton(cfg, 0.3, 0.0) == -1.0


def test_kink_alone_is_tanh():
    cfg = se.SolitonConfig.from_polar([np.pi / 2], [2.0])
    x = np.linspace(-10, 10, 201)
    for t in (0.0, 0.7, 3.0):
        assert np.allclose(se.exact_nsoliton(cfg, x, t), np.tanh(x + 2 * t), atol=1e-12)


@given(angles, st.floats(-3.0, 3.0), st.floats(0.0, 2.0))
def test_single_bump_matches_closed_form(w, shift, t):
    cfg = se.SolitonConfig.from_shifts([np.exp(1j * w)], [shift])
    x = np.linspace(-30, 10, 81)
    got = se.exact_nsoliton(cfg, x, t)
    ref = se.one_soliton(np.exp(1j * w), x, t, shift)
    assert np.max(np.abs(got - ref)) < 1e-10


@pytest.mark.parametrize("cfg", [TWO, THREE])
def test_exact_field_limits(cfg):
    for t in (0.0, 2.0):
        X = 40 + 6 * t
        q = se.exact_nsoliton(cfg, np.array([-X, X]), t)
        assert q[0] == pytest.approx(-1.0, abs=1e-8)
        assert q[1] == pytest.approx(1.0, abs=1e-8)


def test_pde_residual_converges():
    hs = np.array([0.1, 0.05, 0.025])
    res = np.array([exact_residual(TWO, h, h) for h in hs])
    slope = np.polyfit(np.log(hs), np.log(res), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.2)


def test_far_from_origin_stays_finite():
    q = se.exact_nsoliton(TWO, np.array([-500.0, 0.0, 500.0]), 60.0)
    assert np.all(np.isfinite(q)) and np.all(np.abs(q) <= 1 + 1e-9)


@pytest.mark.parametrize("z, v", [(1j, -2.0), (np.exp(1j * np.pi / 3), -3.0), (np.exp(1j * np.pi / 4), -4.0), (np.exp(1j * np.pi / 6), -5.0)])
def test_velocities(z, v):
    assert se.soliton_velocity(z) == pytest.approx(v)


def test_velocity_needs_unit_circle():
    with pytest.raises(DomainError):
        se.soliton_velocity(0.5j)


def test_config_validation():
    z = np.exp(1j * np.pi / 3)
    with pytest.raises(ConfigurationError):
        se.SolitonConfig((z,), (z,))
    with pytest.raises(ConfigurationError):
        se.SolitonConfig((2j,), (-4j,))
    with pytest.raises(ConfigurationError):
        se.SolitonConfig((z, z), (-z, -2 * z))
    with pytest.raises(ConfigurationError):
        se.SolitonConfig((z,), ())


def test_m_recovers_q():
    x, t = 0.4, 0.3
    z = 1e6j
    m = se.nsoliton_m(THREE, z, x, t)
    assert (1j * z * m[1, 0]).real == pytest.approx(se.exact_nsoliton(THREE, x, t), abs=1e-5)


def test_m_pole_guard():
    with pytest.raises(PoleError):
        se.nsoliton_m(TWO, 1j, 0.0, 0.0)
    with pytest.raises(PoleError):
        se.nsoliton_m(TWO, 0.0, 0.0, 0.0)


@given(angles, st.floats(-8.0, 8.0), st.sampled_from(["nabla", "delta"]))
def test_single_pole_model_matches_profile(w, phi, branch):
    z = np.exp(1j * w)
    st_ = se.m_lambda_state(z, phi, branch)
    assert st_.coupling_residual() < 1e-10
    x = phi / (2 * np.sin(w))
    assert se.sol_from_state(st_) == pytest.approx(float(se.one_soliton(z, x, 0.0)), abs=1e-10)


@given(st.floats(-8.0, 8.0))
def test_kink_model_matches_tanh(phi):
    st_ = se.m_lambda_state(1j, phi, "sigma1")
    assert se.sol_from_state(st_) == pytest.approx(np.tanh(phi / 2), abs=1e-10)


def test_empty_model():
    st_ = se.m_lambda_state(1j, None, "nabla")
    assert se.sol_from_state(st_) == -1.0
    assert np.allclose(se.m_lambda(2.0, st_), np.eye(2) + se.SIGMA2 / 2.0)


def test_branch_mismatch():
    with pytest.raises(ConfigurationError):
        se.m_lambda_state(np.exp(0.5j), 0.0, "sigma1")
    with pytest.raises(ConfigurationError):
        se.m_lambda_state(1j, 0.0, "delta")
    with pytest.raises(ConfigurationError):
        se.one_soliton(np.exp(0.5j), 0.0, 0.0, branch="sigma1")


def test_one_soliton_is_bump_on_minus_one():
    z = np.exp(1j * np.pi / 3)
    x = np.linspace(-40, 40, 2001)
    q = se.one_soliton(z, x, 0.0)
    assert q[0] == pytest.approx(-1.0, abs=1e-10) and q[-1] == pytest.approx(-1.0, abs=1e-10)
    assert q.max() > -1.0
    assert np.all(np.isfinite(se.one_soliton(z, np.array([-1e4, 1e4]), 0.0)))


def test_alternate_closed_forms_do_not_match_the_residue_solution():
    w = np.pi / 3
    phi = np.linspace(-3, 3, 13)
    alt = se.alternate_sol(w, phi, "nabla")
    actual = np.array([se.sol_from_state(se.m_lambda_state(np.exp(1j * w), p, "nabla")) for p in phi])
    assert np.max(np.abs(alt - actual)) > 0.1


def test_superposition_without_solitons_region_guard():
    cfg = se.SolitonConfig((), ())
    assert np.all(se.asymptotic_superposition(cfg, np.array([-40.0, -30.0]), 10.0) == -1.0)
    with pytest.raises(DomainError):
        se.asymptotic_superposition(TWO, np.array([0.0]), 10.0)
    with pytest.raises(DomainError):
        se.asymptotic_superposition(TWO, np.array([-30.0]), 0.0)


def test_reflection_shifts_the_prediction():
    inp = TraceInputs.from_reflection([1j], lambda s: 0.3 * (2 * s / (1 + s * s)) ** 2)
    cfg = se.SolitonConfig.from_polar([np.pi / 2], [2.0])
    x = np.linspace(-30, -21, 41)
    plain = se.asymptotic_superposition(cfg, x, 10.0)
    shifted = se.asymptotic_superposition(cfg, x, 10.0, inp)
    assert np.max(np.abs(plain - shifted)) > 1e-6


@given(angles)
def test_peak_offset_locates_maximum(w):
    z = np.exp(1j * w)
    d = se.peak_offset(z)
    x = d + np.array([-1e-3, 0.0, 1e-3])
    q = se.one_soliton(z, x, 0.0)
    assert q[1] >= q[0] and q[1] >= q[2]
    assert se.peak_offset(1j) == 0.0
