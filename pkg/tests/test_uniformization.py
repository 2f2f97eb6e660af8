import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mkdv_ist import uniformization as un
from mkdv_ist.errors import ConfigurationError, DomainError

moduli = st.floats(0.1, 10.0)
angles = st.floats(0.0, 2 * np.pi)
xis = st.floats(-20.0, 20.0)


def _z(r, w):
    return r * np.exp(1j * w)


@pytest.mark.parametrize(
    "z, lam, zeta",
    [(1.0, 1.0, 0.0), (1j, 0.0, 1j), (2.0, 1.25, 0.75)],
)
def test_lam_zeta_values(z, lam, zeta):
    assert un.lam(z) == pytest.approx(lam, abs=1e-15)
    assert un.zeta(z) == pytest.approx(zeta, abs=1e-15)


def test_zero_is_rejected():
    with pytest.raises(DomainError):
        un.lam(0.0)
    with pytest.raises(DomainError):
        un.theta(0.0, un.PhaseParams(-4.0))


@given(moduli, angles)
def test_curve_identity(r, w):
    z = _z(r, w)
    lm, zt = un.lam(z), un.zeta(z)
    assert abs(lm**2 - zt**2 - 1) <= 1e-12 * (abs(lm) ** 2 + abs(zt) ** 2)


@given(moduli, angles, xis, st.floats(0.1, 10.0))
def test_theta_symmetries(r, w, xi, t):
    z, p = _z(r, w), un.PhaseParams(xi, t)
    th = un.theta(z, p)
    scale = max(1.0, abs(th))
    assert abs(un.theta(1 / z, p) + th) <= 1e-10 * scale
    assert abs(un.theta(-np.conj(z), p) + np.conj(th)) <= 1e-10 * scale


def test_theta_examples():
    p = un.PhaseParams(-4.0)
    assert un.theta(1j, p) == pytest.approx(-2j)
    assert un.theta(1.0, un.PhaseParams(3.7)) == 0


def test_theta_matches_integral_of_derivative():
    # integrate theta' along the unit circle from 1 to e^{i pi/4}
    p = un.PhaseParams(-4.0)
    w, wt = np.polynomial.legendre.leggauss(40)
    a, b = 0.0, np.pi / 4
    om = 0.5 * (b - a) * w + 0.5 * (a + b)
    z = np.exp(1j * om)
    integral = np.sum(0.5 * (b - a) * wt * un.theta_prime(z, p) * 1j * z)
    assert integral == pytest.approx(un.theta(np.exp(1j * np.pi / 4), p), abs=1e-13)


@given(moduli, angles, xis)
def test_theta_prime_forms_agree(r, w, xi):
    z, p = _z(r, w), un.PhaseParams(xi)
    a, b = un.theta_prime(z, p), un.theta_prime_factored(z, p)
    assert abs(a - b) <= 1e-12 * max(1.0, abs(a))


@given(moduli, angles, xis)
def test_theta_prime_is_the_derivative(r, w, xi):
    z, p = _z(r, w), un.PhaseParams(xi)
    h = 1e-6 * abs(z)
    fd = (un.theta(z + h, p) - un.theta(z - h, p)) / (2 * h)
    assert abs(fd - un.theta_prime(z, p)) <= 1e-5 * max(1.0, abs(fd))


def test_no_real_phase_points_at_minus_four():
    roots = un.phase_point_roots(-4.0)
    nontrivial = roots[np.abs(roots**2 + 1) > 1e-8]
    assert np.all(np.abs(nontrivial.imag) > 1e-6)


@pytest.mark.parametrize(
    "xi, expected",
    [
        (-4.0, un.PhaseClassification.NoRealPhasePoints),
        (-10.0, un.PhaseClassification.FourRealAxisPoints),
        (0.0, un.PhaseClassification.ImaginaryAxisPoints),
    ],
)
def test_classification_examples(xi, expected):
    assert un.classify_phase_points(xi) is expected


@pytest.mark.parametrize("xi", [-6.0, -2.0])
def test_classification_thresholds_rejected(xi):
    with pytest.raises(DomainError):
        un.classify_phase_points(xi)


def _count_real(xi):
    roots = un.phase_point_roots(xi)
    nontrivial = roots[np.abs(roots**2 + 1) > 1e-6]
    return int(np.sum(np.abs(nontrivial.imag) < 1e-7))


@given(st.floats(-40.0, -6.01))
def test_four_real_roots_below_minus_six(xi):
    assert _count_real(xi) == 4
    assert un.classify_phase_points(xi) is un.PhaseClassification.FourRealAxisPoints


@given(st.floats(-5.99, 5.99))
def test_roots_on_unit_circle_between(xi):
    roots = un.phase_point_roots(xi)
    nontrivial = roots[np.abs(roots**2 + 1) > 1e-6]
    assert np.allclose(np.abs(nontrivial), 1.0, atol=1e-7)
    assert un.classify_phase_points(xi, extended_range=True) is un.PhaseClassification.NoRealPhasePoints


@given(st.floats(6.01, 40.0))
def test_imaginary_roots_above_six(xi):
    roots = un.phase_point_roots(xi)
    assert np.all(np.abs(roots.real) < 1e-7)
    assert un.classify_phase_points(xi, extended_range=True) is un.PhaseClassification.ImaginaryAxisPoints


@pytest.mark.parametrize(
    "w, xi, t, expected",
    [(np.pi / 2, -4.0, 1.0, 4.0), (0.0, -4.0, 1.0, 0.0), (np.pi / 4, -4.0, 2.0, 0.0)],
)
def test_re_2itheta_examples(w, xi, t, expected):
    assert un.re_2itheta_on_circle(w, un.PhaseParams(xi, t)) == pytest.approx(expected, abs=1e-14)


@given(st.floats(0.0, np.pi), xis, st.floats(0.1, 10.0))
def test_re_2itheta_matches_theta(w, xi, t):
    p = un.PhaseParams(xi, t)
    direct = (2j * t * un.theta(np.exp(1j * w), p)).real
    assert un.re_2itheta_on_circle(w, p) == pytest.approx(direct, abs=1e-10 * max(1.0, abs(direct)))


def test_xi0_values():
    assert un.xi0(-4.0) == pytest.approx(np.sqrt(0.5), abs=1e-15)
    assert un.xi0(-2.0001) == pytest.approx(0.005, abs=1e-6)
    assert un.xi0(-6 + 1e-4) == pytest.approx(0.99999, abs=1e-5)
    for bad in (-2.0, -6.0, 0.0):
        with pytest.raises(DomainError):
            un.xi0(bad)


def test_partition_examples():
    part = un.partition_spectrum([1j], -4.0, rho=0.1)
    assert part.nabla == (0,) and part.delta == () and part.lam == ()
    part = un.partition_spectrum([np.exp(1j * np.pi / 4)], -4.0, rho=0.1)
    assert part.lam == (0,)
    part = un.partition_spectrum([np.exp(1j * np.pi / 6), np.exp(1j * np.pi / 3)], -4.0)
    assert part.delta == (0,) and part.nabla == (1,)


def test_partition_rejects_large_rho():
    zs = [np.exp(1j * 0.5), np.exp(1j * 0.6)]
    with pytest.raises(ConfigurationError):
        un.partition_spectrum(zs, -4.0, rho=1.0)


@given(st.lists(st.floats(0.05, np.pi / 2), min_size=1, max_size=6, unique=True), st.floats(-5.99, -2.01))
def test_partition_is_a_cover(angles, xi):
    ang = np.sort(angles)
    if np.any(np.diff(ang) < 1e-3):
        return
    zs = np.exp(1j * ang)
    part = un.partition_spectrum(zs, xi)
    assert sorted(part.delta + part.nabla) == list(range(zs.size))
    assert not set(part.delta) & set(part.nabla)
    assert len(part.lam) <= 1
    for k in part.delta:
        assert zs[k].real > part.xi0


def test_decay_bound_examples():
    p = un.PhaseParams(-4.0, 1.0)
    lhs, rhs = un.phase_decay_bound_check(1.5, p)
    assert lhs == pytest.approx(0.0, abs=1e-14) and rhs == pytest.approx(0.0, abs=1e-14)
    p = un.PhaseParams(-4.0, 10.0)
    for z in (1.01 * np.exp(0.01j), 0.99 * np.exp(0.01j)):
        lhs, rhs = un.phase_decay_bound_check(z, p)
        assert lhs <= rhs


@given(st.floats(0.2, 5.0), st.floats(0.0, 1.0), st.floats(-5.9, -2.1), st.booleans(), st.booleans())
def test_decay_bound_in_sectors(r, frac, xi, lower, left):
    ang = un.sector_half_angle(xi)
    w = frac * ang
    if left:
        w = np.pi - w
    if lower:
        w = -w
    lhs, rhs = un.phase_decay_bound_check(r * np.exp(1j * w), un.PhaseParams(xi, 3.0))
    assert lhs <= rhs + 1e-9 * max(1.0, abs(rhs))


def test_outside_sector_rejected():
    with pytest.raises(DomainError):
        un.phase_decay_bound_check(1j, un.PhaseParams(-4.0))
