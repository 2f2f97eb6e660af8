"""Quantities built from ``log(1 - |r|^2)`` and the discrete spectrum.

Every integral over the real line has the form ``int L(s) g(s) ds`` with
``L = log(1 - |r|^2)``.  Because ``|r(-s)| = |r(s)| = |r(1/s)|`` it folds onto
``(0, 1]``::

    int_R L g ds = int_0^1 L(u) [g(u) + g(-u) + (g(1/u) + g(-1/u)) / u^2] du

which is integrated with composite Gauss-Legendre panels graded
geometrically towards ``u = 1`` (where ``L`` may have a logarithmic
singularity).  No tail model for ``r`` is needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .direct_scattering import PotentialSample, log_one_minus_r2
from .errors import DomainError, NumericalError, PoleError
from .uniformization import partition_spectrum

__all__ = [
    "TraceInputs",
    "SolitonRecord",
    "AsymptoticSpectralData",
    "cauchy_integral",
    "trace_formula_a",
    "blaschke_factor",
    "T_function",
    "T_boundary",
    "T_infinity",
    "T_expansion_coefficient",
    "modified_connection",
    "connection_exponent",
    "delta_product_log",
    "phase_shift_xj",
    "asymptotic_spectral_data",
]

MIN_IMAG = 1e-6
NEAR_AXIS = 0.1


def graded_panels(n_grade: int = 30, ratio: float = 0.5) -> np.ndarray:
    """Breakpoints ``0, 1/4, 1/2, 3/4, ...`` accumulating geometrically at 1."""
    tail = 1.0 - 0.5 * ratio ** np.arange(n_grade + 1)
    return np.concatenate([[0.0, 0.25], tail, [1.0]])


def folded_rule(n_gl: int = 16, n_grade: int = 30):
    """Nodes and weights on ``(0, 1)``."""
    xg, wg = np.polynomial.legendre.leggauss(n_gl)
    br = graded_panels(n_grade)
    a, b = br[:-1], br[1:]
    nodes = (0.5 * (b - a))[:, None] * xg[None, :] + (0.5 * (a + b))[:, None]
    weights = (0.5 * (b - a))[:, None] * wg[None, :]
    return nodes.ravel(), weights.ravel()


@dataclass
class TraceInputs:
    """Discrete spectrum plus a quadrature-ready sampling of ``L = log(1 - |r|^2)``.

    ``L_func`` evaluates ``L`` at arbitrary real points; it is kept for the
    singularity subtraction used close to the real axis.  Use the
    constructors rather than the raw initializer.
    """

    zeros: np.ndarray
    L_func: Callable
    n_gl: int = 16
    n_grade: int = 30
    nodes: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)
    L_nodes: np.ndarray = field(init=False, repr=False)
    reflectionless: bool = False

    def __post_init__(self):
        self.zeros = np.atleast_1d(np.asarray(self.zeros, dtype=complex))
        u, w = folded_rule(self.n_gl, self.n_grade)
        self.nodes, self.weights = u, w
        if self.reflectionless:
            self.L_nodes = np.zeros_like(u)
        else:
            self.L_nodes = np.asarray(self.L_func(u), dtype=float)
        if not np.all(np.isfinite(self.L_nodes)):
            raise NumericalError("log(1-|r|^2) is not finite at a quadrature node")
        if np.any(self.L_nodes > 1e-12):
            raise NumericalError("|r| > 1 found on the real line", {"max_L": float(self.L_nodes.max())})

    @classmethod
    def from_potential(cls, pot: PotentialSample, zeros, **kw):
        return cls(zeros, lambda s: log_one_minus_r2(s, pot), **kw)

    @classmethod
    def without_reflection(cls, zeros, **kw):
        return cls(zeros, lambda s: np.zeros_like(np.asarray(s, dtype=float)), reflectionless=True, **kw)

    @classmethod
    def from_reflection(cls, zeros, r_abs: Callable, **kw):
        """``r_abs(s)`` gives ``|r(s)|``; it must respect ``|r(-s)| = |r(1/s)| = |r(s)|``."""
        return cls(zeros, lambda s: np.log1p(-np.abs(r_abs(np.asarray(s, dtype=float))) ** 2), **kw)

    def l1_norm(self) -> float:
        """``int_R |L| ds`` (finite for admissible data)."""
        u = self.nodes
        return float(np.sum(self.weights * np.abs(self.L_nodes) * 2.0 * (1.0 + u**-2)))

    def unfolded(self):
        """The same rule written on the real line: points ``+-u, +-1/u``."""
        u, w, L = self.nodes, self.weights, self.L_nodes
        s = np.concatenate([u, -u, 1.0 / u, -1.0 / u])
        W = np.concatenate([w, w, w / u**2, w / u**2])
        return s, W, np.concatenate([L, L, L, L])

    def integrate(self, g: Callable) -> complex:
        """``int_R L(s) g(s) ds`` for a function ``g`` vectorised over real arrays."""
        if self.reflectionless:
            return 0.0
        s, W, L = self.unfolded()
        return complex(np.sum(W * L * g(s)))


def cauchy_integral(z, inputs: TraceInputs, allow_axis: bool = False) -> complex:
    """``int_R L(s) / (s - z) ds`` for ``z`` off the real line.

    For ``|Im z| < 0.1`` the near-singular part is removed by subtracting
    ``L(Re z) / (1 + (s - Re z)^2)``, whose Cauchy transform is known in
    closed form.
    """
    z = complex(z)
    if inputs.reflectionless:
        return 0.0j
    if abs(z.imag) < MIN_IMAG and not allow_axis:
        raise DomainError(f"Im z = {z.imag:.2e} is too close to the real line; use T_boundary")
    s, W, L = inputs.unfolded()
    if abs(z.imag) >= NEAR_AXIS:
        return complex(np.sum(W * L / (s - z)))
    x0 = z.real
    if abs(abs(x0) - 1.0) < 1e-8 or x0 == 0.0:
        raise DomainError("boundary evaluation at s = 0, +-1 is not supported")
    L0 = float(inputs.L_func(np.array([x0]))[0])
    chi = 1.0 / (1.0 + (s - x0) ** 2)
    rest = np.sum(W * (L - L0 * chi) / (s - z))
    if z.imag > 0 or (z.imag == 0 and allow_axis is True):
        known = np.pi / (x0 - 1j - z)
    else:
        known = np.pi / (x0 + 1j - z)
    return complex(rest + L0 * known)


def blaschke_factor(z, z_n) -> complex:
    """Trace-formula factor of one zero; reduces to ``(z - i)/(z + i)`` for ``z_n = i``."""
    if abs(z_n - 1j) < 1e-12:
        return (z - 1j) / (z + 1j)
    return (z - z_n) * (z + np.conj(z_n)) / ((z - np.conj(z_n)) * (z + z_n))


def trace_formula_a(z, inputs: TraceInputs) -> complex:
    """``a(z)`` rebuilt from its zeros and ``|r|`` on the real line."""
    z = complex(z)
    if z.imag <= 0:
        raise DomainError("trace formula is evaluated in the upper half plane")
    prod = 1.0 + 0j
    for zn in inputs.zeros:
        prod *= blaschke_factor(z, zn)
    return complex(prod * np.exp(-cauchy_integral(z, inputs) / (2j * np.pi)))


def _delta(inputs, xi, rho=None):
    if inputs.zeros.size == 0:
        return ()
    return partition_spectrum(inputs.zeros, xi, rho).delta


def _T_product_log(z, inputs, delta):
    acc = 0.0j
    for k in delta:
        zk = inputs.zeros[k]
        num = (z - zk) * (z + np.conj(zk))
        den = (z * zk - 1.0) * (z * np.conj(zk) + 1.0)
        if abs(den) < 1e-14:
            raise PoleError(f"T has a pole at z={z}")
        if abs(num) == 0.0:
            return -np.inf + 0j
        acc += np.log(num) - np.log(den)
    return acc


def T_function(z, xi: float, inputs: TraceInputs, rho: float | None = None) -> complex:
    """Partial transmission ``T(z; xi)``, meromorphic off the real line.

    The ``1/(2s)`` part of the kernel integrates to zero by the symmetry of
    ``|r|``, so only the Cauchy integral appears.
    """
    z = complex(z)
    delta = _delta(inputs, xi, rho)
    lp = _T_product_log(z, inputs, delta)
    if np.isneginf(lp.real):
        return 0j
    return complex(-np.exp(lp - cauchy_integral(z, inputs) / (2j * np.pi)))


def T_boundary(x: float, xi: float, inputs: TraceInputs, side: str = "+", rho=None) -> complex:
    """Boundary value ``T_+(x)`` (from above) or ``T_-(x)`` (from below) on the real line.

    With the subtracted kernel the limit is taken exactly:
    ``C_+-(x) = PV int (L - L(x) chi)/(s - x) ds +- i pi L(x)``.
    """
    x = float(x)
    if x == 0.0 or abs(abs(x) - 1.0) < 1e-8:
        raise DomainError("boundary values are not taken at 0 or +-1")
    delta = _delta(inputs, xi, rho)
    lp = _T_product_log(complex(x), inputs, delta)
    if inputs.reflectionless:
        C = 0j
    else:
        s, W, L = inputs.unfolded()
        L0 = float(inputs.L_func(np.array([x]))[0])
        chi = 1.0 / (1.0 + (s - x) ** 2)
        C = complex(np.sum(W * (L - L0 * chi) / (s - x)))
        C += (1j if side == "+" else -1j) * np.pi * L0
    return complex(-np.exp(lp - C / (2j * np.pi)))


def T_infinity(xi: float, inputs: TraceInputs, rho=None) -> float:
    """Limit of ``T`` at infinity; every factor of the product tends to 1, so the value is ``-1``."""
    _delta(inputs, xi, rho)
    return -1.0


def T_expansion_coefficient(xi: float, inputs: TraceInputs, rho=None):
    """``lim z (T(z)/T(inf) - 1)``: closed form and a numerical estimate along ``z = i R``.

    Returns ``(closed_form, numerical)``; the closed form is
    ``-sum_{k in delta} 4 i Im z_k + (1/(2 pi i)) int L ds``.
    """
    delta = _delta(inputs, xi, rho)
    intL = inputs.integrate(lambda s: np.ones_like(s))
    closed = -sum(4j * inputs.zeros[k].imag for k in delta) + intL / (2j * np.pi)
    Tinf = T_infinity(xi, inputs, rho)
    est = []
    for R in (1e3, 2e3):
        z = 1j * R
        est.append(z * (T_function(z, xi, inputs, rho) / Tinf - 1.0))
    num = 2 * est[1] - est[0]
    return complex(closed), complex(num)


def connection_exponent(z_j, inputs: TraceInputs) -> complex:
    """``-(1/(i pi)) int L (1/(s - z_j) - 1/(2s)) ds``; real for ``|z_j| = 1``."""
    return complex(-cauchy_integral(z_j, inputs) / (1j * np.pi))


def modified_connection(c_j, z_j, inputs: TraceInputs) -> complex:
    """``c_j`` multiplied by the real factor ``exp(connection_exponent)``."""
    z_j = complex(z_j)
    if abs(abs(z_j) - 1.0) > 1e-8 or z_j.imag <= 0:
        raise DomainError("z_j must lie on the upper unit semicircle")
    e = connection_exponent(z_j, inputs)
    return complex(c_j) * np.exp(e.real)


def _is_kink(z):
    return abs(complex(z) - 1j) < 1e-12


def delta_product_log(j: int, zeros) -> float:
    """``log prod_k |f_jk|^2`` over the solitons faster than ``j`` (``Re z_k > Re z_j``)."""
    zs = np.asarray(zeros, dtype=complex)
    zj = zs[j]
    acc = 0.0
    for k, zk in enumerate(zs):
        if k == j or zk.real <= zj.real + 1e-12:
            continue
        f = (zj - zk) * (zj + np.conj(zk)) / ((zj * zk - 1.0) * (zj * np.conj(zk) + 1.0))
        acc += 2.0 * np.log(abs(f))
    return float(acc)


def phase_shift_xj(j: int, zeros, norming, inputs: TraceInputs | None = None) -> float:
    """Asymptotic center offset of soliton ``j``.

    ``x_j = (log(|c_j| / Im z_j) + log prod |f_jk|^2 - (Im z_j/pi) int L/|s - z_j|^2 ds) / (2 Im z_j)``
    with the product over the faster solitons.  A soliton at ``z = i`` carries a
    double pole, and its norming constant enters with a factor 1/2.
    The soliton profile is centred at ``x = -(4 Re(z_j)^2 + 2) t - x_j``.
    """
    zs = np.asarray(zeros, dtype=complex)
    zj = zs[j]
    cj = complex(np.asarray(norming)[j])
    if cj == 0:
        raise DomainError("norming constant must be nonzero")
    im = zj.imag
    mag = abs(cj) / (2.0 if _is_kink(zj) else 1.0)
    val = np.log(mag / im) + delta_product_log(j, zs)
    if inputs is not None and not inputs.reflectionless:
        val += connection_exponent(zj, inputs).real
    return float(val / (2.0 * im))


@dataclass(frozen=True)
class SolitonRecord:
    z: complex
    c: complex
    c_tilde: complex
    x_shift: float
    label: str

    @property
    def velocity(self) -> float:
        return -(4.0 * self.z.real**2 + 2.0)


@dataclass(frozen=True)
class AsymptoticSpectralData:
    records: tuple
    xi: float
    partition: object
    T_inf: float

    def table_rows(self):
        for r in self.records:
            yield (r.z.real, r.z.imag, abs(r.c), abs(r.c_tilde), r.x_shift, r.label)


def asymptotic_spectral_data(zeros, norming, inputs: TraceInputs, xi: float = -4.0, rho=None):
    """Per-soliton ``c~_j`` and ``x_j`` together with the partition for the ray ``xi``."""
    zs = np.atleast_1d(np.asarray(zeros, dtype=complex))
    cs = np.atleast_1d(np.asarray(norming, dtype=complex))
    part = partition_spectrum(zs, xi, rho)
    recs = []
    for j, (z, c) in enumerate(zip(zs, cs)):
        ct = modified_connection(c, z, inputs)
        xj = phase_shift_xj(j, zs, cs, inputs)
        recs.append(SolitonRecord(complex(z), complex(c), ct, xj, part.label(j)))
    return AsymptoticSpectralData(tuple(recs), float(xi), part, T_infinity(xi, inputs, rho))
