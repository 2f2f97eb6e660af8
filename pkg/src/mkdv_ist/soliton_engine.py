"""Reflectionless solutions: exact N-solitons, single-pole models and the asymptotic predictor.

Norming constants follow ``c_k = -z_k |c_k|``, the phase delivered by direct
scattering of regular data (``tanh(x)`` has ``z = i``, ``c = -2i``).  With the
opposite sign the residue problem produces singular profiles.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigurationError, DomainError, NumericalError, PoleError
from .spectral_data import TraceInputs, phase_shift_xj

__all__ = [
    "SolitonConfig",
    "Branch",
    "MLambdaState",
    "soliton_velocity",
    "exact_nsoliton",
    "residue_vectors",
    "nsoliton_m",
    "m_lambda_state",
    "m_lambda",
    "sol_from_state",
    "one_soliton",
    "alternate_sol",
    "peak_offset",
    "asymptotic_superposition",
]

SIGMA1 = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
KINK_TOL = 1e-10


def _is_kink(z) -> bool:
    return abs(complex(z).real) < KINK_TOL


def soliton_velocity(z) -> float:
    """``-(4 Re(z)^2 + 2)``, always in ``[-6, -2]`` on the unit circle."""
    z = complex(z)
    if abs(abs(z) - 1.0) > 1e-8:
        raise DomainError("soliton parameter must lie on the unit circle")
    return -(4.0 * z.real**2 + 2.0)


@dataclass(frozen=True)
class SolitonConfig:
    """Discrete data ``{(z_j, c_j)}`` of a reflectionless potential on the step background."""

    zs: tuple
    cs: tuple

    def __post_init__(self):
        zs = [complex(z) for z in self.zs]
        cs = [complex(c) for c in self.cs]
        if len(zs) != len(cs):
            raise ConfigurationError("need one norming constant per soliton")
        clean = []
        for z, c in zip(zs, cs):
            if abs(abs(z) - 1.0) > 1e-10 or z.imag <= 0 or z.real < -KINK_TOL:
                raise ConfigurationError(f"z={z} must lie on the unit circle with Re z >= 0, Im z > 0")
            if _is_kink(z):
                z = 1j
            if c == 0 or abs(c + z * abs(c)) > 1e-10 * abs(c):
                raise ConfigurationError(f"norming constant {c} violates c = -z|c| for z={z}")
            clean.append(z)
        for i in range(len(clean)):
            for j in range(i):
                if abs(clean[i] - clean[j]) < 1e-10:
                    raise ConfigurationError("soliton parameters must be distinct")
        object.__setattr__(self, "zs", tuple(clean))
        object.__setattr__(self, "cs", tuple(cs))

    @classmethod
    def from_polar(cls, angles, magnitudes, degrees: bool = False):
        """Solitons from ``arg z_j`` and ``|c_j|``; the phase of ``c_j`` is implied."""
        ang = np.deg2rad(angles) if degrees else np.asarray(angles, dtype=float)
        ang = np.atleast_1d(ang)
        mags = np.atleast_1d(np.asarray(magnitudes, dtype=float))
        zs = [1j if abs(a - np.pi / 2) < 1e-12 else np.exp(1j * a) for a in ang]
        return cls(tuple(zs), tuple(-z * m for z, m in zip(zs, mags)))

    @classmethod
    def from_shifts(cls, zs, shifts):
        """Solitons whose isolated profiles are centred at ``x = -shift`` at ``t = 0``."""
        zs = [1j if _is_kink(z) else complex(z) for z in np.atleast_1d(zs)]
        mags = []
        for z, d in zip(zs, np.atleast_1d(shifts)):
            m = z.imag * np.exp(2.0 * z.imag * d)
            mags.append(2.0 * m if z == 1j else m)
        return cls(tuple(zs), tuple(-z * m for z, m in zip(zs, mags)))

    @property
    def n(self) -> int:
        return len(self.zs)

    @property
    def kink_index(self) -> int:
        for k, z in enumerate(self.zs):
            if z == 1j:
                return k
        return -1

    def arrays(self):
        zs = np.array(self.zs, dtype=complex)
        logc = np.log(np.array(self.cs, dtype=complex)) if self.n else np.zeros(0, complex)
        return zs, logc


def exact_nsoliton(cfg: SolitonConfig, x, t: float):
    """``q(x, t)`` of the reflectionless potential with data ``cfg``.

    The residue system is rescaled per pole, so large ``|x|`` and ``t`` stay
    well conditioned.  Without solitons the background ``-1`` is returned.
    """
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if cfg.n == 0:
        out = -np.ones_like(xs)
    else:
        zs, logc = cfg.arrays()
        try:
            out = kernels.nsoliton_field(zs, logc, cfg.kink_index, np.ascontiguousarray(xs), float(t))
        except Exception as exc:  # singular system
            M, _ = _system(cfg, float(xs[0]), t)
            raise NumericalError(
                "degenerate soliton configuration", {"cond": float(np.linalg.cond(M)), "error": str(exc)}
            ) from exc
        if not np.all(np.isfinite(out)):
            raise NumericalError("non-finite soliton field", {"t": t})
    return float(out[0]) if np.ndim(x) == 0 else out


def _system(cfg, x, t):
    zs, logc0 = cfg.arrays()
    lm = 0.5 * (zs + 1.0 / zs)
    zt = 0.5 * (zs - 1.0 / zs)
    logc = logc0 - 2j * zt * (x + (4.0 * lm**2 + 2.0) * t)
    M, rhs, off = kernels.assemble_numpy(zs, logc, cfg.kink_index)
    return M, (rhs, off)


def residue_vectors(cfg: SolitonConfig, x: float, t: float):
    """Residues of the first column of ``m``: ``A_k`` at each ``z_k`` (total residue at ``z = i``)."""
    M, (rhs, off) = _system(cfg, x, t)
    sol = np.linalg.solve(M, rhs)
    out = []
    for j in range(cfg.n):
        o = off[j]
        if j == cfg.kink_index:
            out.append(1j * sol[o] * np.array([1.0, -1.0]))
        else:
            out.append(np.array([sol[o] + 1j * sol[o + 1], sol[o + 2] + 1j * sol[o + 3]]))
    return out


def nsoliton_m(cfg: SolitonConfig, z, x: float, t: float) -> np.ndarray:
    """The matrix ``m(z; x, t)`` assembled from the solved residues."""
    z = complex(z)
    if z == 0:
        raise PoleError("m has a pole at z = 0")
    A = residue_vectors(cfg, x, t)
    m = np.eye(2, dtype=complex) + SIGMA2 / z
    for k, zk in enumerate(cfg.zs):
        a = A[k]
        if k == cfg.kink_index:
            if abs(z - 1j) < 1e-14 or abs(z + 1j) < 1e-14:
                raise PoleError(f"z={z} is a pole")
            m[:, 0] += a / (z - 1j)
            m[:, 1] += SIGMA1 @ np.conj(a) / (z + 1j)
            continue
        for p in (zk, -np.conj(zk), np.conj(zk), -zk):
            if abs(z - p) < 1e-14:
                raise PoleError(f"z={z} is a pole")
        m[:, 0] += a / (z - zk) - np.conj(a) / (z + np.conj(zk))
        m[:, 1] += SIGMA1 @ np.conj(a) / (z - np.conj(zk)) - SIGMA1 @ a / (z + zk)
    return m


# ---------------------------------------------------------------------------
# Single-pole model m^Lambda
# ---------------------------------------------------------------------------


class Branch(enum.Enum):
    Empty = "empty"
    NablaGeneric = "nabla"
    KinkSigma1 = "sigma1"
    Delta = "delta"


@dataclass(frozen=True)
class MLambdaState:
    """Coefficients of the single-soliton model.

    ``alpha``/``beta`` are the residue entries in the rational structure of
    :func:`m_lambda`; ``varphi = 2 Im z (x + (4 Re(z)^2 + 2) t + x_j)`` is the
    real phase and ``theta_j = arg z``.
    """

    branch: Branch
    alpha: complex = 0j
    beta: complex = 0j
    varphi: float = 0.0
    theta_j: float = 0.0

    @property
    def z(self) -> complex:
        return complex(np.exp(1j * self.theta_j)) if self.branch != Branch.KinkSigma1 else 1j

    def coupling_residual(self) -> float:
        """Distance from the alpha/beta relation of the branch.

        ``alpha = -i z beta*`` on the nabla/kink branches and
        ``alpha = -i z* beta*`` on the delta branch.
        """
        z = self.z
        if self.branch in (Branch.NablaGeneric, Branch.KinkSigma1):
            return abs(self.alpha + 1j * z * np.conj(self.beta))
        if self.branch == Branch.Delta:
            return abs(self.alpha + 1j * np.conj(z) * np.conj(self.beta))
        return 0.0


def _delta_solve(z0, K):
    """Column-2 residue ``P`` at ``z0`` with ``P = K m_1(z0)``."""
    base = K * np.array([1.0, 1j / z0])
    Cm = np.eye(2) + K * SIGMA1 / (2.0 * z0)
    Dm = -K * SIGMA1 / (z0 - np.conj(z0))
    M = np.zeros((4, 4))
    for r in range(2):
        for c in range(2):
            va = Cm[r, c] + Dm[r, c]
            vb = 1j * (Cm[r, c] - Dm[r, c])
            M[2 * r, 2 * c], M[2 * r, 2 * c + 1] = va.real, vb.real
            M[2 * r + 1, 2 * c], M[2 * r + 1, 2 * c + 1] = va.imag, vb.imag
    rhs = np.array([base[0].real, base[0].imag, base[1].real, base[1].imag])
    s = np.linalg.solve(M, rhs)
    return np.array([s[0] + 1j * s[1], s[2] + 1j * s[3]])


def m_lambda_state(z_j0, varphi: float | None, branch: str | Branch) -> MLambdaState:
    """Solve the single-pole problem for the given branch and phase.

    ``varphi=None`` (or ``branch="empty"``) gives the empty state.
    """
    br = Branch(branch) if not isinstance(branch, Branch) else branch
    if br == Branch.Empty or varphi is None:
        return MLambdaState(Branch.Empty)
    z0 = complex(z_j0)
    if abs(abs(z0) - 1.0) > 1e-10 or z0.imag <= 0:
        raise DomainError("z_j0 must lie on the upper unit semicircle")
    kink = _is_kink(z0)
    if br == Branch.KinkSigma1 and not kink:
        raise ConfigurationError("sigma1 branch requires z_j0 = i")
    if br != Branch.KinkSigma1 and kink:
        raise ConfigurationError("z_j0 = i belongs to the sigma1 branch")
    om = float(np.angle(z0))
    s = np.sin(om)
    phi = float(varphi)
    if br == Branch.Delta:
        K = z0 * (4.0 * s / np.cos(om) ** 2) * np.exp(-phi)
        P = _delta_solve(z0, K)
        alpha, beta = np.conj(P[1]), np.conj(P[0])
        return MLambdaState(br, complex(alpha), complex(beta), phi, om)
    if kink:
        logc = np.array([np.log(2.0) + phi - 0.5j * np.pi])
        M, rhs, _ = kernels.assemble_numpy(np.array([1j]), logc, 0)
        v = np.linalg.solve(M, rhs)[0]
        return MLambdaState(br, 0.5j * v, -0.5j * v, phi, np.pi / 2)
    logc = np.array([np.log(-z0 * s) + phi])
    M, rhs, _ = kernels.assemble_numpy(np.array([z0]), logc, -1)
    v = np.linalg.solve(M, rhs)
    return MLambdaState(br, complex(v[0] + 1j * v[1]), complex(v[2] + 1j * v[3]), phi, om)


def m_lambda(z, state: MLambdaState) -> np.ndarray:
    """Rational matrix ``I + sigma_2/z + (single-pole terms)`` for the state."""
    z = complex(z)
    if z == 0:
        raise PoleError("pole at z = 0")
    m = np.eye(2, dtype=complex) + SIGMA2 / z
    if state.branch == Branch.Empty:
        return m
    z0 = state.z
    a, b = state.alpha, state.beta
    ac, bc = np.conj(a), np.conj(b)
    if state.branch == Branch.Delta:
        for p in (np.conj(z0), -z0, z0, -np.conj(z0)):
            if abs(z - p) < 1e-14:
                raise PoleError(f"z={z} is a pole")
        m += np.array(
            [
                [a / (z - np.conj(z0)) - ac / (z + z0), bc / (z - z0) - b / (z + np.conj(z0))],
                [b / (z - np.conj(z0)) - bc / (z + z0), ac / (z - z0) - a / (z + np.conj(z0))],
            ]
        )
        return m
    for p in (z0, -np.conj(z0), np.conj(z0), -z0):
        if abs(z - p) < 1e-14:
            raise PoleError(f"z={z} is a pole")
    m += np.array(
        [
            [a / (z - z0) - ac / (z + np.conj(z0)), bc / (z - np.conj(z0)) - b / (z + z0)],
            [b / (z - z0) - bc / (z + np.conj(z0)), ac / (z - np.conj(z0)) - a / (z + z0)],
        ]
    )
    return m


def sol_from_state(state: MLambdaState) -> float:
    """``lim i z m_21 = -1 + i (beta - conj(beta))``."""
    if state.branch == Branch.Empty:
        return -1.0
    return float((-1.0 + 1j * (state.beta - np.conj(state.beta))).real)


def one_soliton(z_j, x, t, x_j: float = 0.0, branch: str = "nabla"):
    """Single soliton ``-1 + 2 sin^2 w / (1 + e^{-phi} + (cos^2 w / 4) e^{phi})``.

    ``w = arg z_j`` and ``phi = 2 sin w (x + (4 cos^2 w + 2) t + x_j)``.  The
    profile is the same on every branch; for ``z_j = i`` it is the kink
    ``tanh(x + 2t + x_j)``.  ``branch`` is validated against ``z_j``.
    """
    z = complex(z_j)
    if abs(abs(z) - 1.0) > 1e-8 or z.imag <= 0:
        raise DomainError("z_j must lie on the upper unit semicircle")
    kink = _is_kink(z)
    if branch == "sigma1" and not kink:
        raise ConfigurationError("sigma1 branch requires z_j = i")
    if branch in ("nabla", "delta") and kink:
        branch = "sigma1"
    if branch not in ("nabla", "delta", "sigma1"):
        raise ConfigurationError(f"unknown branch {branch!r}")
    xx = np.asarray(x, dtype=float)
    if kink:
        return np.tanh(xx + 2.0 * t + x_j)
    w = np.angle(z)
    s, c = np.sin(w), np.cos(w)
    phi = 2.0 * s * (xx + (4.0 * c * c + 2.0) * t + x_j)
    # stable in both tails
    e_neg = np.exp(-np.abs(phi))
    den = np.where(phi >= 0, e_neg + e_neg * e_neg + 0.25 * c * c, e_neg + 1.0 + 0.25 * c * c * e_neg * e_neg)
    num = 2.0 * s * s * e_neg
    return -1.0 + num / den


def peak_offset(z_j) -> float:
    """Position of the maximum of :func:`one_soliton` relative to its centre ``phi = 0``.

    The denominator ``1 + e^{-phi} + (cos^2 w / 4) e^{phi}`` is smallest at
    ``phi = log(2 / cos w)``; the kink has no peak and its steepest point sits
    at the centre, so ``0`` is returned for ``z_j = i``.
    """
    z = complex(z_j)
    if abs(abs(z) - 1.0) > 1e-8 or z.imag <= 0:
        raise DomainError("z_j must lie on the upper unit semicircle")
    if _is_kink(z):
        return 0.0
    w = np.angle(z)
    return float(np.log(2.0 / np.cos(w)) / (2.0 * np.sin(w)))


def alternate_sol(theta_j: float, varphi, branch: str):
    """Three alternative closed forms of the single-pole profile (diagnostic only).

    These do not reproduce the residue-problem solution; they are kept so the
    discrepancy can be measured.
    """
    ph = np.asarray(varphi, dtype=float)
    th, tn, se = theta_j, np.tanh(ph), 1.0 / np.cosh(ph)
    den = (0.5 * (1 - tn) * np.cos(th) - se / np.cos(th)) ** 2 + np.tan(th) ** 2 * se**2 if branch != "sigma1" else None
    if branch == "nabla":
        return -1.0 - 2.0 * np.sin(th) ** 2 * se * (1 + tn) / den
    if branch == "delta":
        return -1.0 + 2.0 * np.sin(th) ** 2 * se * (1 - tn) / den
    if branch == "sigma1":
        return -1.0 - (1 + tn) / (se - 2.0 * (1 + tn))
    raise ConfigurationError(f"unknown branch {branch!r}")


def asymptotic_superposition(
    cfg: SolitonConfig,
    x,
    t: float,
    inputs: TraceInputs | None = None,
    region_check: bool = True,
):
    """Long-time predictor ``-1 + sum_j (sol_j + 1)``.

    Each soliton is shifted by its asymptotic offset ``x_j``; with ``inputs``
    carrying a nonzero reflection coefficient the offsets include the
    radiation correction.  ``region_check`` rejects points with ``x/t``
    outside ``(-6, -2)``.
    """
    if t <= 0:
        raise DomainError("the predictor needs t > 0")
    xs = np.asarray(x, dtype=float)
    if region_check:
        xi = xs / t
        if np.any((xi <= -6.0) | (xi >= -2.0)):
            raise DomainError("x/t outside the solitonic region (-6, -2)")
    out = -np.ones_like(xs)
    for j, z in enumerate(cfg.zs):
        xj = phase_shift_xj(j, cfg.zs, cfg.cs, inputs)
        br = "sigma1" if z == 1j else "nabla"
        out = out + one_soliton(z, xs, t, xj, br) + 1.0
    return out
