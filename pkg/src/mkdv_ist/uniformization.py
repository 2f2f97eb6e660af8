"""Uniformization variable, phase function and spectrum partition.

The spectral parameter of the Lax operator with background ``q -> +-1`` is
written through ``z`` with ``lam = (z + 1/z)/2`` and ``zeta = (z - 1/z)/2``.
All phase evaluations stay in the z-plane; the substitution ``s = z + 1/z`` is
used only by :func:`phase_point_roots`, the independent root oracle.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError

__all__ = [
    "PhaseParams",
    "PhaseClassification",
    "SpectrumPartition",
    "lam",
    "zeta",
    "theta",
    "theta_prime",
    "theta_prime_factored",
    "phase_point_roots",
    "classify_phase_points",
    "re_2itheta_on_circle",
    "xi0",
    "separation_bound",
    "default_rho",
    "partition_spectrum",
    "sector_half_angle",
    "phase_decay_bound_check",
]

#: Thresholds between the phase-point regimes.
XI_LOWER = -6.0
XI_UPPER = -2.0
#: Upper edge of the phase-point-free range when the extended flag is used.
XI_EXTENDED_UPPER = 6.0

THRESHOLD_TOL = 1e-12


def _nonzero(z):
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise DomainError("uniformization variable z must be nonzero")
    return z


def _out(value, like):
    return value if np.ndim(like) else complex(value)


def lam(z):
    """``(z + 1/z) / 2``."""
    zz = _nonzero(z)
    return _out(0.5 * (zz + 1.0 / zz), z)


def zeta(z):
    """``(z - 1/z) / 2``."""
    zz = _nonzero(z)
    return _out(0.5 * (zz - 1.0 / zz), z)


@dataclass(frozen=True)
class PhaseParams:
    """Ray ``xi = x/t`` and time ``t > 0``."""

    xi: float
    t: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.t) or self.t <= 0:
            raise DomainError(f"time must be positive, got t={self.t}")
        if not np.isfinite(self.xi):
            raise DomainError("xi must be finite")

    @classmethod
    def from_xt(cls, x: float, t: float) -> "PhaseParams":
        if t <= 0:
            raise DomainError(f"time must be positive, got t={t}")
        return cls(xi=x / t, t=t)

    @property
    def x(self) -> float:
        return self.xi * self.t


def theta(z, p: PhaseParams):
    """Phase ``zeta(z) * (xi + 4 lam(z)^2 + 2)``; the oscillatory factor is ``exp(i t theta)``."""
    zz = _nonzero(z)
    lm = 0.5 * (zz + 1.0 / zz)
    zt = 0.5 * (zz - 1.0 / zz)
    return _out(zt * (p.xi + 4.0 * lm**2 + 2.0), z)


def theta_prime(z, p: PhaseParams):
    """Derivative of :func:`theta` with respect to ``z``."""
    zz = _nonzero(z)
    xi = p.xi
    val = 1.5 * zz**2 + (xi + 3.0) / (2.0 * zz**2) + 1.5 / zz**4 + 0.5 * (xi + 3.0)
    return _out(val, z)


def theta_prime_factored(z, p: PhaseParams):
    """Same derivative grouped as ``(3(z^2 + z^-4) + (xi+3)(z^-2 + 1)) / 2``."""
    zz = _nonzero(z)
    val = 0.5 * (3.0 * (zz**2 + zz**-4) + (p.xi + 3.0) * (zz**-2 + 1.0))
    return _out(val, z)


def phase_point_roots(xi: float) -> np.ndarray:
    """All six roots of ``theta'`` via the polynomial ``2 z^6 theta'(z)``.

    ``2 z^6 theta'(z) = 3 z^6 + (xi+3) z^4 + (xi+3) z^2 + 3`` is solved with a
    companion-matrix eigenvalue routine; this is the oracle the classifier is
    checked against.
    """
    coeffs = [3.0, 0.0, xi + 3.0, 0.0, xi + 3.0, 0.0, 3.0]
    return np.roots(coeffs)


class PhaseClassification(enum.Enum):
    NoRealPhasePoints = "no_real_phase_points"
    FourRealAxisPoints = "four_real_axis_points"
    ImaginaryAxisPoints = "imaginary_axis_points"


def classify_phase_points(xi: float, extended_range: bool = False) -> PhaseClassification:
    """Regime of the stationary points of ``theta`` for the ray ``xi``.

    By default the solitonic range is ``-6 < xi < -2``.  With
    ``extended_range=True`` every ray in ``(-6, 6)`` is reported as free of real
    phase points and only ``xi > 6`` (where the four non-trivial roots are
    purely imaginary) is :attr:`PhaseClassification.ImaginaryAxisPoints`.
    """
    if not np.isfinite(xi):
        raise DomainError("xi must be finite")
    thresholds = (XI_LOWER, XI_EXTENDED_UPPER) if extended_range else (XI_LOWER, XI_UPPER)
    for edge in thresholds:
        if abs(xi - edge) <= THRESHOLD_TOL:
            raise DomainError(f"xi={xi} sits on the degenerate threshold {edge}")
    if xi < XI_LOWER:
        return PhaseClassification.FourRealAxisPoints
    if xi < thresholds[1]:
        return PhaseClassification.NoRealPhasePoints
    return PhaseClassification.ImaginaryAxisPoints


def re_2itheta_on_circle(omega, p: PhaseParams):
    """``Re(2 i t theta(e^{i omega}))`` in closed form."""
    omega = np.asarray(omega, dtype=float)
    val = -2.0 * p.t * np.sin(omega) * (p.xi + 2.0 + 4.0 * np.cos(omega) ** 2)
    return val if val.ndim else float(val)


def xi0(xi: float) -> float:
    """Critical real part ``sqrt(-(xi+2)/4)`` splitting decaying and growing residues."""
    if not (XI_LOWER < xi < XI_UPPER):
        raise DomainError(f"xi0 is defined for -6 < xi < -2, got {xi}")
    return float(np.sqrt(-(xi + 2.0) / 4.0))


def _as_spectrum(spectrum) -> np.ndarray:
    zs = np.atleast_1d(np.asarray(spectrum, dtype=complex))
    if zs.size:
        if np.any(np.abs(np.abs(zs) - 1.0) > 1e-8):
            raise ConfigurationError("discrete spectrum must lie on the unit circle")
        if np.any(zs.real < -1e-12) or np.any(zs.imag <= 0):
            raise ConfigurationError("discrete spectrum must satisfy Re z >= 0, Im z > 0")
    return zs


def separation_bound(spectrum) -> float:
    """Upper bound on the partition radius from the pole geometry.

    Half of the minimum of the pairwise real-part gaps over the points
    ``{z_k, -conj(z_k)}`` and of their imaginary parts.  A point on the
    imaginary axis is its own reflection and contributes once.
    """
    zs = _as_spectrum(spectrum)
    if zs.size == 0:
        return np.inf
    pts = np.concatenate([zs, -np.conj(zs)])
    keep = []
    for p in pts:
        if all(abs(p - q) > 1e-10 for q in keep):
            keep.append(p)
    pts = np.array(keep)
    gaps = [np.min(pts.imag)]
    re = np.sort(pts.real)
    if re.size > 1:
        gaps.append(np.min(np.diff(re)))
    return 0.5 * float(min(gaps))


def default_rho(spectrum) -> float:
    return 0.45 * separation_bound(spectrum)


@dataclass(frozen=True)
class SpectrumPartition:
    """Index split of the discrete spectrum for a given ray."""

    xi: float
    xi0: float
    rho: float
    delta: tuple = ()
    nabla: tuple = ()
    lam: tuple = ()
    threshold_hits: tuple = field(default=())

    @property
    def j0(self) -> int:
        """Index of the soliton in the critical strip, ``-1`` if none."""
        return self.lam[0] if self.lam else -1

    def label(self, k: int) -> str:
        tag = "delta" if k in self.delta else "nabla"
        return tag + ("*" if k in self.lam else "")


def partition_spectrum(spectrum, xi: float, rho: float | None = None) -> SpectrumPartition:
    """Split soliton indices by ``Re z_k`` against ``xi0(xi)``.

    ``delta`` collects ``Re z_k > xi0``, ``nabla`` the rest, and ``lam`` the (at
    most one) index with ``|Re z_k - xi0| < rho``.  Real parts within ``1e-12``
    of the threshold go to ``nabla`` and are always placed in ``lam``.
    """
    zs = _as_spectrum(spectrum)
    x0 = xi0(xi)
    bound = separation_bound(zs)
    if rho is None:
        rho = 0.45 * bound if np.isfinite(bound) else 0.1
    if not (rho > 0):
        raise ConfigurationError("partition radius must be positive")
    if np.isfinite(bound) and rho >= bound:
        raise ConfigurationError(f"rho={rho} violates the separation bound {bound}")
    delta, nabla, lam_set, hits = [], [], [], []
    for k, zk in enumerate(zs):
        gap = zk.real - x0
        if abs(gap) <= THRESHOLD_TOL:
            nabla.append(k)
            hits.append(k)
            lam_set.append(k)
            continue
        (delta if gap > 0 else nabla).append(k)
        if abs(gap) < rho:
            lam_set.append(k)
    if len(lam_set) > 1:
        raise ConfigurationError(f"more than one soliton in the critical strip: {lam_set}")
    return SpectrumPartition(
        xi=float(xi),
        xi0=x0,
        rho=float(rho),
        delta=tuple(delta),
        nabla=tuple(nabla),
        lam=tuple(lam_set),
        threshold_hits=tuple(hits),
    )


def sector_half_angle(xi: float, theta0: float | None = None) -> float:
    """Opening angle of the lens sectors next to the real axis.

    Inside ``|arg z| < angle`` (and its reflection about the imaginary axis)
    the bracket of ``Re(2 i theta)`` stays large enough for the decay bound.
    """
    if not (XI_LOWER < xi < XI_UPPER):
        raise DomainError("sector defined for -6 < xi < -2")
    arg = (-4.0 - 3.0 * xi - abs(xi + 4.0)) / 12.0
    ang = 0.5 * float(np.arccos(np.clip(arg, -1.0, 1.0)))
    return ang if theta0 is None else min(theta0, ang)


def phase_decay_bound_check(z: complex, p: PhaseParams, theta0: float | None = None):
    """Return ``(lhs, rhs)`` of the sector decay estimate so that ``lhs <= rhs``.

    Upper sectors: ``lhs = Re(2 i t theta)``, ``rhs = -F(|z|)^2 t |sin w| (2-|xi+4|)/6``
    with ``F(s) = s + 1/s``.  Lower sectors hold the mirrored inequality and the
    pair is returned swapped and negated accordingly.
    """
    z = complex(z)
    if z == 0:
        raise DomainError("z must be nonzero")
    ang = sector_half_angle(p.xi, theta0)
    w = float(np.angle(z))
    upper = (0.0 <= w <= ang) or (np.pi - ang <= w <= np.pi)
    lower = (-ang <= w <= 0.0) or (-np.pi <= w <= -np.pi + ang)
    if not (upper or lower):
        raise DomainError(f"arg z = {w:.4g} outside the lens sectors (half-angle {ang:.4g})")
    r = abs(z)
    F = r + 1.0 / r
    val = (2j * p.t * theta(z, p)).real
    bound = F**2 * p.t * abs(np.sin(w)) * (2.0 - abs(p.xi + 4.0)) / 6.0
    if upper:
        return float(val), float(-bound)
    return float(bound), float(val)
