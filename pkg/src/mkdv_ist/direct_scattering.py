"""Direct scattering for the Lax operator with step background.

The Jost columns are propagated as ``mu = psi exp(-+ i zeta x)`` with a
4th-order Magnus integrator on the sample grid (see :mod:`mkdv_ist.kernels`).
Columns analytic in the upper half plane (``mu1+``, ``mu2-``) are integrated
in their stable directions: from ``+L`` leftwards and from ``-L`` rightwards.
Scattering data come from determinants of the columns at the grid midpoint.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import simpson, trapezoid
from scipy.interpolate import CubicSpline

from . import kernels
from .errors import ConfigurationError, DomainError, NumericalError, PoleError

__all__ = [
    "PotentialSample",
    "JostPair",
    "ScatteringData",
    "background_columns",
    "jost_columns",
    "scattering_coefficients",
    "scattering_matrix",
    "reflection",
    "reflection_grid",
    "log_one_minus_r2",
    "find_discrete_spectrum",
    "a_prime",
    "connection_coefficients",
    "norming_integral",
    "norming_from_integral",
    "pole_residues",
    "compute_scattering_data",
]

_GAUSS = 0.5 - np.sqrt(3.0) / 6.0
_POLE_STEP = 1e-7
_POLE_ZERO = 1e-6


@dataclass(frozen=True)
class PotentialSample:
    """Real potential sampled on a uniform grid, tending to -1 on the left and +1 on the right.

    Parameters
    ----------
    x_grid, q_values : array_like
        Uniform, strictly increasing grid (at least 3 points) and samples of q.
    q_func : callable, optional
        Exact potential.  When supplied it is used at the Gauss points of each
        cell; otherwise a cubic spline through the samples is.
    decay_threshold : float
        Largest admissible ``decay_margin`` before scattering is attempted.
    """

    x_grid: np.ndarray
    q_values: np.ndarray
    q_func: Callable | None = None
    decay_threshold: float = 1e-6
    label: str = "sampled"
    left_bv: float = field(default=-1.0, init=False)
    right_bv: float = field(default=1.0, init=False)

    def __post_init__(self):
        x = np.asarray(self.x_grid, dtype=float)
        qv = np.asarray(self.q_values)
        if np.iscomplexobj(qv):
            if np.any(np.abs(np.imag(qv)) > 0):
                raise ConfigurationError("potential must be real-valued")
            qv = np.real(qv)
        qv = np.asarray(qv, dtype=float)
        if x.ndim != 1 or x.size < 3 or qv.shape != x.shape:
            raise ConfigurationError("x_grid and q_values must be 1-D of equal length >= 3")
        dx = np.diff(x)
        if np.any(dx <= 0):
            raise ConfigurationError("x_grid must be strictly increasing")
        h = (x[-1] - x[0]) / (x.size - 1)
        if np.max(np.abs(dx - h)) > 1e-9 * max(1.0, abs(h)):
            raise ConfigurationError("x_grid must be uniformly spaced")
        if not np.all(np.isfinite(qv)):
            raise ConfigurationError("q_values must be finite")
        x.setflags(write=False)
        qv.setflags(write=False)
        object.__setattr__(self, "x_grid", x)
        object.__setattr__(self, "q_values", qv)
        m = max(1, int(np.ceil(0.05 * x.size)))
        margin = max(np.max(np.abs(qv[:m] + 1.0)), np.max(np.abs(qv[-m:] - 1.0)))
        object.__setattr__(self, "_h", float(h))
        object.__setattr__(self, "_margin", float(margin))
        xa = x[:-1] + _GAUSS * h
        xb = x[:-1] + (1.0 - _GAUSS) * h
        if self.q_func is not None:
            qa = np.asarray(self.q_func(xa), dtype=float)
            qb = np.asarray(self.q_func(xb), dtype=float)
        else:
            spl = CubicSpline(x, qv)
            qa, qb = spl(xa), spl(xb)
        object.__setattr__(self, "_qa", np.ascontiguousarray(qa))
        object.__setattr__(self, "_qb", np.ascontiguousarray(qb))

    # -- constructors ---------------------------------------------------
    @classmethod
    def from_function(cls, func, L: float = 20.0, h: float = 0.01, label="function", **kw):
        n = int(round(2 * L / h)) + 1
        x = np.linspace(-L, L, n)
        return cls(x, func(x), q_func=func, label=label, **kw)

    @classmethod
    def kink(cls, center: float = 0.0, L: float = 20.0, h: float = 0.01, **kw):
        """``tanh(x - center)``."""
        return cls.from_function(lambda x: np.tanh(x - center), L, h, label="kink", **kw)

    @classmethod
    def perturbed_kink(cls, amplitude: float, shift: float = 0.0, L: float = 20.0, h: float = 0.01, **kw):
        """``tanh(x) + amplitude * sech^2(x - shift)``."""

        def f(x):
            return np.tanh(x) + amplitude / np.cosh(x - shift) ** 2

        return cls.from_function(f, L, h, label="perturbed_kink", **kw)

    @classmethod
    def background(cls, L: float = 20.0, h: float = 0.01, sign: float = 1.0, **kw):
        """Constant ``sign`` on the whole line (only meaningful for one side)."""
        return cls.from_function(lambda x: sign * np.ones_like(x), L, h, label="constant", **kw)

    @classmethod
    def from_table(cls, path, **kw):
        data = np.loadtxt(path, comments="#")
        if data.ndim != 2 or data.shape[1] < 2:
            raise ConfigurationError(f"{path}: expected two columns (x, q)")
        return cls(data[:, 0], data[:, 1], label=str(path), **kw)

    # -- derived --------------------------------------------------------
    @property
    def h(self) -> float:
        return self._h

    @property
    def decay_margin(self) -> float:
        return self._margin

    @property
    def n_cells(self) -> int:
        return self.x_grid.size - 1

    @property
    def mid_index(self) -> int:
        return self.n_cells // 2

    def q(self, x):
        if self.q_func is not None:
            return self.q_func(np.asarray(x, dtype=float))
        return np.interp(x, self.x_grid, self.q_values)

    def check_decay(self, threshold: float | None = None):
        thr = self.decay_threshold if threshold is None else threshold
        if self.decay_margin > thr:
            raise ConfigurationError(
                f"potential has not reached its background values at the grid ends "
                f"(decay margin {self.decay_margin:.3g} > {thr:.3g}); enlarge the domain"
            )

    def integral_q2_minus_1(self) -> float:
        return float(simpson(self.q_values**2 - 1.0, x=self.x_grid))


def _z_array(z):
    zz = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(zz == 0):
        raise DomainError("z = 0 is not admissible")
    return zz


def background_columns(z, side: str):
    """Columns of ``Y_+- = I -+ sigma_2 / z`` as arrays of shape (nz, 2)."""
    zz = _z_array(z)
    s = -1.0 if side == "plus" else 1.0
    # Y = I + s sigma_2 / z with sigma_2 = [[0, -i], [i, 0]]
    col1 = np.stack([np.ones_like(zz), s * 1j / zz], axis=1)
    col2 = np.stack([-s * 1j / zz, np.ones_like(zz)], axis=1)
    return col1, col2


def _propagate(pot: PotentialSample, zz, col: int, side: str, n_to: int):
    lm = 0.5 * (zz + 1.0 / zz)
    zt = 0.5 * (zz - 1.0 / zz)
    c1, c2 = background_columns(zz, side)
    v0 = np.ascontiguousarray(c1 if col == 1 else c2)
    p = 1.0 if col == 1 else -1.0
    n_from = pot.n_cells if side == "plus" else 0
    out = kernels.propagate(pot._qa, pot._qb, pot.h, lm, zt, v0, p, n_from, n_to)
    if not np.all(np.isfinite(out)):
        raise NumericalError("Jost propagation overflowed", {"side": side, "column": col})
    return out


@dataclass
class JostPair:
    """Jost columns ``mu`` at a fixed ``z`` on the sample grid (``None`` where not analytic)."""

    z: complex
    x: np.ndarray
    mu1_plus: np.ndarray | None
    mu2_plus: np.ndarray | None
    mu1_minus: np.ndarray | None
    mu2_minus: np.ndarray | None

    def psi(self, col: int, side: str):
        mu = getattr(self, f"mu{col}_{side}")
        if mu is None:
            raise DomainError(f"psi{col}{'+' if side == 'plus' else '-'} is not defined at z={self.z}")
        zt = 0.5 * (self.z - 1.0 / self.z)
        sgn = 1.0 if col == 1 else -1.0
        return mu * np.exp(sgn * 1j * zt * self.x)[:, None]

    def det(self, side: str):
        """``det psi^{side}`` at every grid point."""
        p1, p2 = self.psi(1, side), self.psi(2, side)
        return p1[:, 0] * p2[:, 1] - p1[:, 1] * p2[:, 0]


def jost_columns(z: complex, pot: PotentialSample, side: str | None = None) -> JostPair:
    """Jost columns over the whole grid.

    For real ``z`` all four columns are returned.  In the upper half plane only
    ``mu1+`` and ``mu2-`` exist, in the lower only ``mu2+`` and ``mu1-``.
    ``side`` restricts the computation to one side.
    """
    z = complex(z)
    if z == 0:
        raise DomainError("z = 0 is not admissible")
    pot.check_decay()
    lm = 0.5 * (z + 1.0 / z)
    zt = 0.5 * (z - 1.0 / z)
    real = abs(z.imag) <= 1e-14
    want = {
        "mu1_plus": real or z.imag > 0,
        "mu2_minus": real or z.imag > 0,
        "mu2_plus": real or z.imag < 0,
        "mu1_minus": real or z.imag < 0,
    }
    res = {}
    for name, ok in want.items():
        col = int(name[2])
        sd = name.split("_")[1]
        if not ok or (side is not None and sd != side):
            res[name] = None
            continue
        c1, c2 = background_columns(z, sd)
        v0 = np.ascontiguousarray((c1 if col == 1 else c2)[0])
        p = 1.0 if col == 1 else -1.0
        prof = kernels.profile(pot._qa, pot._qb, pot.h, lm, zt, v0, p, sd == "minus")
        if not np.all(np.isfinite(prof)):
            raise NumericalError("Jost profile overflowed", {"z": z, "column": name})
        res[name] = prof
    return JostPair(z=z, x=pot.x_grid, **res)


def _dets(zz, pot: PotentialSample, need_b: bool):
    n_m = pot.mid_index
    m1p = _propagate(pot, zz, 1, "plus", n_m)
    m2m = _propagate(pot, zz, 2, "minus", n_m)
    da = m1p[:, 0] * m2m[:, 1] - m1p[:, 1] * m2m[:, 0]
    if not need_b:
        return da, None
    m1m = _propagate(pot, zz, 1, "minus", n_m)
    zt = 0.5 * (zz - 1.0 / zz)
    xm = pot.x_grid[n_m]
    db = (m1m[:, 0] * m1p[:, 1] - m1m[:, 1] * m1p[:, 0]) * np.exp(2j * zt * xm)
    return da, db


def _check_pole(zz):
    if np.any(np.abs(zz * zz - 1.0) < 1e-14):
        raise PoleError("a and b have poles at z = +-1; use pole_residues for the limit data")


def scattering_coefficients(z, pot: PotentialSample):
    """``a(z)`` and ``b(z)`` from Jost determinants.

    ``b`` is returned only for real ``z`` (``None`` otherwise).  Accepts a scalar
    or an array of sample points.
    """
    pot.check_decay()
    zz = _z_array(z)
    _check_pole(zz)
    real = np.all(np.abs(zz.imag) <= 1e-14)
    if np.any(zz.imag < -1e-14):
        raise DomainError("a is analytic only in the closed upper half plane")
    da, db = _dets(zz, pot, need_b=bool(real))
    norm = 1.0 - zz**-2
    a = da / norm
    b = db / norm if db is not None else None
    if np.ndim(z) == 0:
        return complex(a[0]), (complex(b[0]) if b is not None else None)
    return a, b


def scattering_matrix(z: float, pot: PotentialSample) -> np.ndarray:
    """``S`` with ``psi^-(z) = psi^+(z) S(z)`` at a real ``z``."""
    z = complex(z)
    if abs(z.imag) > 1e-14:
        raise DomainError("scattering matrix needs real z")
    _check_pole(np.array([z]))
    jp = jost_columns(z, pot)
    n = pot.mid_index
    Pp = np.column_stack([jp.psi(1, "plus")[n], jp.psi(2, "plus")[n]])
    Pm = np.column_stack([jp.psi(1, "minus")[n], jp.psi(2, "minus")[n]])
    return np.linalg.solve(Pp, Pm)


def reflection(z, pot: PotentialSample, z_min: float = 0.02):
    """``r = b / a`` on the real line (scalar or array).

    The ratio of determinants is formed directly, so no division by
    ``1 - z^-2`` occurs.  Points with ``|z| < z_min`` use ``r(1/z) = -conj(r(z))``.
    At ``z = +-1`` the returned value is the limit from ``|z| > 1`` (taken at
    ``|z| = 1 + 1e-7``), or 0 when ``a`` has no pole there.
    """
    pot.check_decay()
    zz = np.atleast_1d(np.asarray(z, dtype=float)).astype(complex)
    if np.any(zz == 0):
        raise DomainError("r is not defined at z = 0")
    small = np.abs(zz) < z_min
    work = np.where(small, 1.0 / zz, zz)
    at_pole = np.abs(np.abs(work) - 1.0) < 1e-13
    work = np.where(at_pole, work * (1.0 + _POLE_STEP), work)
    da, db = _dets(work, pot, need_b=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = db / da
    if not np.all(np.isfinite(r)):
        raise NumericalError("a vanished on the real line", {"z": work[~np.isfinite(r)].real.tolist()})
    # Without a pole of a at +-1 (reflectionless data) both determinants vanish
    # there and their ratio is noise; the limit of r is then 0.
    if np.any(at_pole):
        d1, _ = _dets(np.sign(work[at_pole].real).astype(complex), pot, need_b=False)
        r[at_pole] = np.where(np.abs(d1) < _POLE_ZERO, 0.0, r[at_pole])
    r = np.where(small, -np.conj(r), r)
    return complex(r[0]) if np.ndim(z) == 0 else r


def reflection_grid(pot: PotentialSample, n_half: int = 513, z_min: float = 0.02, z_max: float = 50.0):
    """Symmetric sample grid of ``r`` on the real line.

    Half of the points per half-line cover ``[1, z_max]`` (linear near 1,
    geometric further out); the other half are their reciprocals.  Values at
    ``|z| < 1`` and ``z < 0`` are filled by the symmetries of ``r``.
    """
    n_out = n_half // 2 + 1
    n_lin = n_out // 2
    lin = np.linspace(1.0, 4.0, n_lin, endpoint=False)
    geo = np.geomspace(4.0, z_max, n_out - n_lin)
    s_out = np.concatenate([lin, geo])[1:]
    s_out = np.concatenate([[1.0], s_out])
    r_out = reflection(s_out, pot, z_min=z_min)
    s_in = 1.0 / s_out[1:][::-1]
    r_in = -np.conj(r_out[1:][::-1])
    keep = s_in >= z_min
    s_pos = np.concatenate([s_in[keep], s_out])
    r_pos = np.concatenate([r_in[keep], r_out])
    z = np.concatenate([-s_pos[::-1], s_pos])
    r = np.concatenate([np.conj(r_pos[::-1]), r_pos])
    return z, r


def log_one_minus_r2(s, pot: PotentialSample, z_min: float = 0.02):
    """``log(1 - |r(s)|^2)`` for real ``s`` evaluated without cancellation.

    Where ``|r|^2 > 0.9`` the equivalent ``-2 log|a|`` is used.
    """
    ss = np.atleast_1d(np.asarray(s, dtype=float))
    r = reflection(ss, pot, z_min=z_min)
    r2 = np.abs(r) ** 2
    out = np.log1p(-np.minimum(r2, 0.9))
    bad = r2 > 0.9
    if np.any(bad):
        zb = ss[bad].astype(complex)
        zb = np.where(np.abs(zb) < z_min, 1.0 / zb, zb)
        a, _ = scattering_coefficients(zb, pot)
        out[bad] = -2.0 * np.log(np.abs(a))
    return out


# ---------------------------------------------------------------------------
# Discrete spectrum
# ---------------------------------------------------------------------------


def _a_scalar(z, pot):
    da, _ = _dets(np.array([complex(z)]), pot, need_b=False)
    return complex(da[0] / (1.0 - complex(z) ** -2))


def a_prime(z_k: complex, pot: PotentialSample, step: float = 1e-4) -> complex:
    """Complex derivative of ``a`` by a 4th-order central difference along the circle tangent."""
    z = complex(z_k)
    dz = step * 1j * z
    pts = np.array([z - 2 * dz, z - dz, z + dz, z + 2 * dz])
    da, _ = _dets(pts, pot, need_b=False)
    av = da / (1.0 - pts**-2)
    return complex((av[0] - 8 * av[1] + 8 * av[2] - av[3]) / (12 * dz))


def find_discrete_spectrum(
    pot: PotentialSample,
    n_scan: int = 2048,
    tol: float = 1e-10,
    simplicity_tol: float = 1e-6,
    max_iter: int = 50,
):
    """Zeros of ``a`` on the quarter arc ``{|z| = 1, Re z >= 0, Im z > 0}``.

    ``a`` is scanned on ``n_scan`` points of the upper semicircle (the zeros are
    symmetric under ``z -> -conj(z)``, so scanning past ``pi/2`` brackets a zero
    sitting at ``z = i``).  Local minima of ``|a (1 - z^-2)|`` seed a complex
    Newton iteration; converged points off the unit circle are rejected.
    Returned zeros are sorted by increasing argument.
    """
    pot.check_decay()
    eps = np.pi / (4 * n_scan)
    om = np.linspace(eps, np.pi - eps, n_scan)
    zc = np.exp(1j * om)
    da, _ = _dets(zc, pot, need_b=False)
    mag = np.abs(da)
    scale = float(np.max(mag))
    if scale == 0.0 or not np.isfinite(scale):
        raise NumericalError("degenerate Wronskian scan", {"scale": scale})
    cands = []
    for i in range(1, n_scan - 1):
        if mag[i] <= mag[i - 1] and mag[i] <= mag[i + 1] and om[i] <= np.pi / 2 + 2 * (om[1] - om[0]):
            cands.append(zc[i])
    roots = []
    for z0 in cands:
        z = complex(z0)
        ok = False
        for _ in range(max_iter):
            f = _a_scalar(z, pot)
            fp = a_prime(z, pot, step=1e-5)
            if fp == 0:
                break
            dz = f / fp
            z -= dz
            if z.imag <= 0:
                break
            if abs(dz) < tol:
                ok = True
                break
        if not ok or abs(abs(z) - 1.0) > 1e-6:
            continue
        z = z / abs(z)
        if z.real < 0:
            z = -np.conj(z)
        if abs(z.real) < 1e-9:
            z = 1j
        if abs(_a_scalar(z, pot)) > 1e-6 * max(1.0, scale):
            continue
        if any(abs(z - r) < 1e-7 for r in roots):
            continue
        d = a_prime(z, pot)
        if abs(d) <= simplicity_tol:
            raise NumericalError("zero of a is not simple", {"z": z, "|a'|": abs(d)})
        roots.append(z)
    return sorted(roots, key=lambda w: np.angle(w))


def _gamma(z_k, pot):
    n = pot.mid_index
    zz = np.array([complex(z_k)])
    m1p = _propagate(pot, zz, 1, "plus", n)[0]
    m2m = _propagate(pot, zz, 2, "minus", n)[0]
    zt = 0.5 * (z_k - 1.0 / z_k)
    xm = pot.x_grid[n]
    g = np.vdot(m2m, m1p) / np.vdot(m2m, m2m)
    return complex(g * np.exp(2j * zt * xm))


def norming_integral(z_k: complex, pot: PotentialSample) -> float:
    """``int |psi_2^-(x; z_k)|^2 dx`` of the bound state normalised at ``-inf``.

    Left of the grid midpoint ``psi_2^-`` comes from its own (stable)
    propagation, right of it from ``psi_1^+ / gamma``.  The exponential tails
    beyond the grid are added in closed form.
    """
    z = complex(z_k)
    jp = jost_columns(z, pot)
    n = pot.mid_index
    g = _gamma(z, pot)
    right = np.sum(np.abs(jp.psi(1, "plus")) ** 2, axis=1) / abs(g) ** 2
    left = np.sum(np.abs(jp.psi(2, "minus")) ** 2, axis=1)
    dens = np.where(np.arange(pot.x_grid.size) >= n, right, left)
    kappa = abs((0.5 * (z - 1.0 / z)).imag)
    tails = (dens[0] + dens[-1]) / (2.0 * kappa)
    return float(trapezoid(dens, pot.x_grid) + tails)


def norming_from_integral(z_k: complex, pot: PotentialSample) -> complex:
    """Alternate form ``c_k = -2 z_k / int |psi_2^-|^2 dx`` of the norming constant."""
    return -2.0 * complex(z_k) / norming_integral(z_k, pot)


def connection_coefficients(z_k: complex, pot: PotentialSample, simplicity_tol: float = 1e-6):
    """``(gamma_k, c_k)`` with ``psi_1^+(z_k) = gamma_k psi_2^-(z_k)`` and ``c_k = gamma_k / a'(z_k)``.

    ``gamma_k`` is real for a real potential; it is returned as a complex number
    so callers can inspect the imaginary residue.
    """
    z = complex(z_k)
    if abs(abs(z) - 1.0) > 1e-6 or z.imag <= 0:
        raise DomainError("z_k must lie on the upper unit semicircle")
    d = a_prime(z, pot)
    if abs(d) <= simplicity_tol:
        raise NumericalError("zero of a is not simple", {"z": z, "|a'|": abs(d)})
    g = _gamma(z, pot)
    return g, g / d


def pole_residues(pot: PotentialSample):
    """``a_+-= det[psi_1^+, psi_2^-](+-1) / 2``; nonzero values mean ``a`` has a pole at ``+-1``."""
    da, _ = _dets(np.array([1.0 + 0j, -1.0 + 0j]), pot, need_b=False)
    return complex(0.5 * da[0]), complex(0.5 * da[1])


@dataclass
class ScatteringData:
    """Sampled scattering data of one potential."""

    r_z: np.ndarray
    r_values: np.ndarray
    a_z: np.ndarray
    a_values: np.ndarray
    zeros: list
    norming: list
    gammas: list
    a_plus: complex
    a_minus: complex
    decay_margin: float

    @property
    def discrete(self):
        return list(zip(self.zeros, self.norming))

    def check(self, tol: float = 1e-6) -> dict:
        """Invariant checks: ``|r| < 1`` off ``+-1`` and the phase of each ``c_k``."""
        off = np.abs(np.abs(self.r_z) - 1.0) > 1e-9
        rmax = float(np.max(np.abs(self.r_values[off]))) if np.any(off) else 0.0
        phase = [abs(c + z * abs(c)) / max(abs(c), 1e-300) for z, c in self.discrete]
        return {"max_abs_r": rmax, "r_below_one": rmax < 1.0, "phase_residuals": phase}


def compute_scattering_data(pot: PotentialSample, n_half: int = 513, a_points=None, n_scan: int = 2048):
    """Reflection grid, ``a`` on a sample set in the upper half plane and the discrete data."""
    pot.check_decay()
    rz, rv = reflection_grid(pot, n_half=n_half)
    if a_points is None:
        ang = np.linspace(0.15, np.pi - 0.15, 5)
        a_points = np.concatenate([r * np.exp(1j * ang) for r in (0.5, 2.0)])
    a_points = np.asarray(a_points, dtype=complex)
    av, _ = scattering_coefficients(a_points, pot)
    zeros = find_discrete_spectrum(pot, n_scan=n_scan)
    gam, cs = [], []
    for zk in zeros:
        g, c = connection_coefficients(zk, pot)
        gam.append(g)
        cs.append(c)
    ap, am = pole_residues(pot)
    return ScatteringData(rz, rv, a_points, np.atleast_1d(av), zeros, cs, gam, ap, am, pot.decay_margin)
