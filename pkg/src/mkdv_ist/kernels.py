"""Hot inner loops.

Each kernel has two implementations with identical results up to roundoff:
a loop form compiled by numba and a numpy form vectorised over the batch
axis.  The public dispatchers at the bottom pick one according to
:mod:`mkdv_ist._accel`; the ``*_numba`` / ``*_numpy`` names stay importable so
tests and the benchmark can compare the two paths directly.
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import USE_NUMBA, njit

SQRT3_6 = math.sqrt(3.0) / 6.0

# 6th-order central stencils, offsets -3..3 and -4..4.
D1_COEF = np.array([-1.0 / 60, 3.0 / 20, -3.0 / 4, 0.0, 3.0 / 4, -3.0 / 20, 1.0 / 60])
D3_COEF = np.array(
    [-7.0 / 240, 3.0 / 10, -169.0 / 120, 61.0 / 30, 0.0, -61.0 / 30, 169.0 / 120, -3.0 / 10, 7.0 / 240]
)


# ---------------------------------------------------------------------------
# Jost columns: 4th-order Magnus integrator on a uniform grid.
#
# Cell n spans [x_n, x_n + h]; qa, qb are the potential at its two Gauss
# points.  The one-step propagator is exp(Omega) with
#   Omega = i lam h s3 + h (qa+qb)/2 s1 - sqrt(3)/6 h^2 lam (qa-qb) s2,
# evaluated in closed form (Omega^2 is scalar).  The background oscillation
# exp(+-i zeta x) is divided out at every step so the stored vectors are the
# bounded functions mu, not psi.
# ---------------------------------------------------------------------------


@njit(cache=True)
def _step_matrix(lmb, qa, qb, h, sgn):
    al = 1j * lmb * h
    be = 0.5 * h * (qa + qb)
    ga = -SQRT3_6 * h * h * lmb * (qa - qb)
    s2 = al * al + be * be + ga * ga
    s = np.sqrt(s2 + 0j)
    if abs(s) < 1e-4:
        ch = 1.0 + s2 / 2.0 + s2 * s2 / 24.0
        sc = 1.0 + s2 / 6.0 + s2 * s2 / 120.0
    else:
        ch = np.cosh(s)
        sc = np.sinh(s) / s
    sc = sgn * sc
    e11 = ch + sc * al
    e12 = sc * (be - 1j * ga)
    e21 = sc * (be + 1j * ga)
    e22 = ch - sc * al
    return e11, e12, e21, e22


@njit(cache=True)
def propagate_numba(qa, qb, h, lmb, zt, v0, p, n_from, n_to):
    nz = lmb.shape[0]
    out = np.empty((nz, 2), dtype=np.complex128)
    for k in range(nz):
        v1 = v0[k, 0]
        v2 = v0[k, 1]
        if n_to >= n_from:
            ph = np.exp(-1j * zt[k] * h * p)
            for n in range(n_from, n_to):
                e11, e12, e21, e22 = _step_matrix(lmb[k], qa[n], qb[n], h, 1.0)
                w1 = (e11 * v1 + e12 * v2) * ph
                w2 = (e21 * v1 + e22 * v2) * ph
                v1 = w1
                v2 = w2
        else:
            ph = np.exp(1j * zt[k] * h * p)
            for n in range(n_from - 1, n_to - 1, -1):
                e11, e12, e21, e22 = _step_matrix(lmb[k], qa[n], qb[n], h, -1.0)
                w1 = (e11 * v1 + e12 * v2) * ph
                w2 = (e21 * v1 + e22 * v2) * ph
                v1 = w1
                v2 = w2
        out[k, 0] = v1
        out[k, 1] = v2
    return out


def _step_matrix_vec(lmb, qa, qb, h, sgn):
    al = 1j * lmb * h
    be = 0.5 * h * (qa + qb)
    ga = -SQRT3_6 * h * h * lmb * (qa - qb)
    s2 = al * al + be * be + ga * ga
    s = np.sqrt(s2 + 0j)
    small = np.abs(s) < 1e-4
    s_safe = np.where(small, 1.0, s)
    ch = np.where(small, 1.0 + s2 / 2.0 + s2 * s2 / 24.0, np.cosh(s))
    sc = np.where(small, 1.0 + s2 / 6.0 + s2 * s2 / 120.0, np.sinh(s_safe) / s_safe)
    sc = sgn * sc
    return ch + sc * al, sc * (be - 1j * ga), sc * (be + 1j * ga), ch - sc * al


def propagate_numpy(qa, qb, h, lmb, zt, v0, p, n_from, n_to):
    v1 = np.array(v0[:, 0], dtype=complex)
    v2 = np.array(v0[:, 1], dtype=complex)
    if n_to >= n_from:
        ph = np.exp(-1j * zt * h * p)
        cells, sgn = range(n_from, n_to), 1.0
    else:
        ph = np.exp(1j * zt * h * p)
        cells, sgn = range(n_from - 1, n_to - 1, -1), -1.0
    for n in cells:
        e11, e12, e21, e22 = _step_matrix_vec(lmb, qa[n], qb[n], h, sgn)
        v1, v2 = (e11 * v1 + e12 * v2) * ph, (e21 * v1 + e22 * v2) * ph
    return np.stack([v1, v2], axis=1)


@njit(cache=True)
def profile_numba(qa, qb, h, lmb, zt, v0, p, forward):
    """Column at every node for a single z, starting from the first (forward) or last node."""
    ncell = qa.shape[0]
    out = np.empty((ncell + 1, 2), dtype=np.complex128)
    v1 = v0[0]
    v2 = v0[1]
    if forward:
        ph = np.exp(-1j * zt * h * p)
        out[0, 0] = v1
        out[0, 1] = v2
        for n in range(ncell):
            e11, e12, e21, e22 = _step_matrix(lmb, qa[n], qb[n], h, 1.0)
            w1 = (e11 * v1 + e12 * v2) * ph
            w2 = (e21 * v1 + e22 * v2) * ph
            v1 = w1
            v2 = w2
            out[n + 1, 0] = v1
            out[n + 1, 1] = v2
    else:
        ph = np.exp(1j * zt * h * p)
        out[ncell, 0] = v1
        out[ncell, 1] = v2
        for n in range(ncell - 1, -1, -1):
            e11, e12, e21, e22 = _step_matrix(lmb, qa[n], qb[n], h, -1.0)
            w1 = (e11 * v1 + e12 * v2) * ph
            w2 = (e21 * v1 + e22 * v2) * ph
            v1 = w1
            v2 = w2
            out[n, 0] = v1
            out[n, 1] = v2
    return out


def profile_numpy(qa, qb, h, lmb, zt, v0, p, forward):
    ncell = qa.shape[0]
    out = np.empty((ncell + 1, 2), dtype=complex)
    v = np.asarray(v0, dtype=complex).reshape(1, 2)
    lm = np.array([lmb], dtype=complex)
    zz = np.array([zt], dtype=complex)
    idx = range(ncell) if forward else range(ncell - 1, -1, -1)
    out[0 if forward else ncell] = v[0]
    for n in idx:
        if forward:
            v = propagate_numpy(qa, qb, h, lm, zz, v, p, n, n + 1)
            out[n + 1] = v[0]
        else:
            v = propagate_numpy(qa, qb, h, lm, zz, v, p, n + 1, n)
            out[n] = v[0]
    return out


# ---------------------------------------------------------------------------
# Finite differences with clamped ghost extension.
# ---------------------------------------------------------------------------


@njit(cache=True)
def _ghost(q, i, left, right):
    n = q.shape[0]
    if i < 0:
        return left
    if i >= n:
        return right
    return q[i]


@njit(cache=True)
def diff1_numba(q, h, left, right):
    n = q.shape[0]
    out = np.empty(n)
    for i in range(n):
        acc = 0.0
        for m in range(7):
            c = D1_COEF[m]
            if c != 0.0:
                acc += c * _ghost(q, i + m - 3, left, right)
        out[i] = acc / h
    return out


@njit(cache=True)
def diff3_numba(q, h, left, right):
    n = q.shape[0]
    out = np.empty(n)
    h3 = h * h * h
    for i in range(n):
        acc = 0.0
        for m in range(9):
            c = D3_COEF[m]
            if c != 0.0:
                acc += c * _ghost(q, i + m - 4, left, right)
        out[i] = acc / h3
    return out


def _padded(q, width, left, right):
    return np.concatenate([np.full(width, left), q, np.full(width, right)])


def diff1_numpy(q, h, left, right):
    qp = _padded(q, 3, left, right)
    n = q.shape[0]
    out = np.zeros(n)
    for m, c in enumerate(D1_COEF):
        if c != 0.0:
            out += c * qp[m : m + n]
    return out / h


def diff3_numpy(q, h, left, right):
    qp = _padded(q, 4, left, right)
    n = q.shape[0]
    out = np.zeros(n)
    for m, c in enumerate(D3_COEF):
        if c != 0.0:
            out += c * qp[m : m + n]
    return out / h**3


@njit(cache=True)
def mkdv_rhs_numba(q, h, left, right):
    """``-q_xxx + 6 q^2 q_x``."""
    d1 = diff1_numba(q, h, left, right)
    d3 = diff3_numba(q, h, left, right)
    out = np.empty_like(q)
    for i in range(q.shape[0]):
        out[i] = -d3[i] + 6.0 * q[i] * q[i] * d1[i]
    return out


def mkdv_rhs_numpy(q, h, left, right):
    return -diff3_numpy(q, h, left, right) + 6.0 * q * q * diff1_numpy(q, h, left, right)


@njit(cache=True)
def nonlinear_numba(q, h, left, right):
    d1 = diff1_numba(q, h, left, right)
    out = np.empty_like(q)
    for i in range(q.shape[0]):
        out[i] = 6.0 * q[i] * q[i] * d1[i]
    return out


def nonlinear_numpy(q, h, left, right):
    return 6.0 * q * q * diff1_numpy(q, h, left, right)


# ---------------------------------------------------------------------------
# Reflectionless residue system.
#
# Unknowns: residue vector A_k of the first column of m at z_k (generic
# poles, 4 reals each) and, for a pole at z = i (at most one), the real v in
# its total residue i v (1, -1).  The remaining poles follow from the two conjugation symmetries.
# Row block k is divided by c_k(x,t) when |c_k(x,t)| > 1 so entries stay O(1).
# ---------------------------------------------------------------------------


@njit(cache=True)
def _assemble(zs, logc, deg, M, rhs):
    n = zs.shape[0]
    # column offsets
    off = np.empty(n, dtype=np.int64)
    pos = 0
    for j in range(n):
        off[j] = pos
        pos += 1 if j == deg else 4
    for i in range(M.shape[0]):
        rhs[i] = 0.0
        for j in range(M.shape[1]):
            M[i, j] = 0.0
    for k in range(n):
        lc = logc[k]
        if k == deg:
            # c = -i kappa with kappa > 0 real
            kap_log = lc.real
            if kap_log <= 0.0:
                w = 1.0
                g = math.exp(kap_log)
            else:
                w = math.exp(-kap_log)
                g = 1.0
            r0 = off[k]
            # u = v (1, -1); the equations are projected on (1, -1) / 2
            M[r0, r0] += w + 0.5 * g
            rhs[r0] = g
            zk = 1j
            for j in range(n):
                if j == deg:
                    continue
                zj = zs[j]
                cp = -g / (zk + zj)  # coefficient of s1 A_j
                dp = g / (zk - np.conj(zj))  # coefficient of s1 conj(A_j)
                va = cp + dp
                vb = 1j * (cp - dp)
                c0 = off[j]
                # s1 swaps components: row 0 uses component 1, row 1 uses component 0
                for r in range(2):
                    comp = 1 - r
                    sg = 0.5 if r == 0 else -0.5
                    M[r0, c0 + 2 * comp] += sg * va.real
                    M[r0, c0 + 2 * comp + 1] += sg * vb.real
        else:
            zk = zs[k]
            if lc.real <= 0.0:
                w = 1.0 + 0j
                g = np.exp(lc)
            else:
                w = np.exp(-lc)
                g = 1.0 + 0j
            r0 = off[k]
            b0 = g * (-1j / zk)
            b1 = g
            rhs[r0] = b0.real
            rhs[r0 + 1] = b0.imag
            rhs[r0 + 2] = b1.real
            rhs[r0 + 3] = b1.imag
            for j in range(n):
                c0 = off[j]
                if j == deg:
                    e = 1j * g / (zk + 1j)  # coefficient of s1 u
                    for r in range(2):
                        sg = 1.0 if r == 1 else -1.0  # u_{1-r} = +-v
                        M[r0 + 2 * r, c0] += sg * e.real
                        M[r0 + 2 * r + 1, c0] += sg * e.imag
                    continue
                zj = zs[j]
                cc = g / (zk + zj)
                dd = -g / (zk - np.conj(zj))
                va = cc + dd
                vb = 1j * (cc - dd)
                for r in range(2):
                    comp = 1 - r
                    M[r0 + 2 * r, c0 + 2 * comp] += va.real
                    M[r0 + 2 * r, c0 + 2 * comp + 1] += vb.real
                    M[r0 + 2 * r + 1, c0 + 2 * comp] += va.imag
                    M[r0 + 2 * r + 1, c0 + 2 * comp + 1] += vb.imag
                if j == k:
                    M[r0, c0] += w.real
                    M[r0, c0 + 1] += -w.imag
                    M[r0 + 1, c0] += w.imag
                    M[r0 + 1, c0 + 1] += w.real
                    M[r0 + 2, c0 + 2] += w.real
                    M[r0 + 2, c0 + 3] += -w.imag
                    M[r0 + 3, c0 + 2] += w.imag
                    M[r0 + 3, c0 + 3] += w.real
    return off


@njit(cache=True)
def _q_from_solution(sol, off, n, deg):
    q = -1.0
    for j in range(n):
        if j == deg:
            q += sol[off[j]]
        else:
            q -= 2.0 * sol[off[j] + 3]
    return q


@njit(cache=True)
def _local_logc(zs, logc0, x, t):
    n = zs.shape[0]
    out = np.empty(n, dtype=np.complex128)
    for k in range(n):
        z = zs[k]
        lm = 0.5 * (z + 1.0 / z)
        zt = 0.5 * (z - 1.0 / z)
        out[k] = logc0[k] - 2j * zt * (x + (4.0 * lm * lm + 2.0) * t)
    return out


@njit(cache=True)
def nsoliton_field_numba(zs, logc0, deg, xs, t):
    n = zs.shape[0]
    dim = 4 * n - (3 if deg >= 0 else 0)
    M = np.empty((dim, dim))
    rhs = np.empty(dim)
    out = np.empty(xs.shape[0])
    for i in range(xs.shape[0]):
        logc = _local_logc(zs, logc0, xs[i], t)
        off = _assemble(zs, logc, deg, M, rhs)
        sol = np.linalg.solve(M, rhs)
        out[i] = _q_from_solution(sol, off, n, deg)
    return out


def assemble_numpy(zs, logc, deg):
    """Single-point assembly (pure python path of :func:`_assemble`)."""
    n = len(zs)
    dim = 4 * n - (3 if deg >= 0 else 0)
    M = np.zeros((dim, dim))
    rhs = np.zeros(dim)
    off = _assemble.py_func(zs, logc, deg, M, rhs) if hasattr(_assemble, "py_func") else _assemble(
        zs, logc, deg, M, rhs
    )
    return M, rhs, off


def nsoliton_field_numpy(zs, logc0, deg, xs, t):
    """Batched assembly and solve over all evaluation points at once."""
    zs = np.asarray(zs, dtype=complex)
    n = zs.shape[0]
    xs = np.asarray(xs, dtype=float)
    npts = xs.shape[0]
    lm = 0.5 * (zs + 1.0 / zs)
    zt = 0.5 * (zs - 1.0 / zs)
    logc = logc0[None, :] - 2j * zt[None, :] * (xs[:, None] + (4.0 * lm**2 + 2.0)[None, :] * t)
    off = np.zeros(n, dtype=int)
    pos = 0
    for j in range(n):
        off[j] = pos
        pos += 1 if j == deg else 4
    dim = pos
    M = np.zeros((npts, dim, dim))
    rhs = np.zeros((npts, dim))
    for k in range(n):
        r0 = off[k]
        lc = logc[:, k]
        big = lc.real > 0
        if k == deg:
            w = np.where(big, np.exp(-np.where(big, lc.real, 0.0)), 1.0)
            g = np.where(big, 1.0, np.exp(np.where(big, 0.0, lc.real)))
            M[:, r0, r0] += w + 0.5 * g
            rhs[:, r0] = g
            for j in range(n):
                if j == deg:
                    continue
                zj = zs[j]
                cp = -g / (1j + zj)
                dp = g / (1j - np.conj(zj))
                va, vb = cp + dp, 1j * (cp - dp)
                c0 = off[j]
                for r in range(2):
                    comp = 1 - r
                    sg = 0.5 if r == 0 else -0.5
                    M[:, r0, c0 + 2 * comp] += sg * va.real
                    M[:, r0, c0 + 2 * comp + 1] += sg * vb.real
            continue
        zk = zs[k]
        w = np.where(big, np.exp(-np.where(big, lc, 0.0)), 1.0 + 0j)
        g = np.where(big, 1.0 + 0j, np.exp(np.where(big, 0.0, lc)))
        b0 = g * (-1j / zk)
        rhs[:, r0] = b0.real
        rhs[:, r0 + 1] = b0.imag
        rhs[:, r0 + 2] = g.real
        rhs[:, r0 + 3] = g.imag
        for j in range(n):
            c0 = off[j]
            if j == deg:
                e = 1j * g / (zk + 1j)
                for r in range(2):
                    sg = 1.0 if r == 1 else -1.0
                    M[:, r0 + 2 * r, c0] += sg * e.real
                    M[:, r0 + 2 * r + 1, c0] += sg * e.imag
                continue
            zj = zs[j]
            cc = g / (zk + zj)
            dd = -g / (zk - np.conj(zj))
            va, vb = cc + dd, 1j * (cc - dd)
            for r in range(2):
                comp = 1 - r
                M[:, r0 + 2 * r, c0 + 2 * comp] += va.real
                M[:, r0 + 2 * r, c0 + 2 * comp + 1] += vb.real
                M[:, r0 + 2 * r + 1, c0 + 2 * comp] += va.imag
                M[:, r0 + 2 * r + 1, c0 + 2 * comp + 1] += vb.imag
            if j == k:
                for b in (0, 2):
                    M[:, r0 + b, c0 + b] += w.real
                    M[:, r0 + b, c0 + b + 1] += -w.imag
                    M[:, r0 + b + 1, c0 + b] += w.imag
                    M[:, r0 + b + 1, c0 + b + 1] += w.real
    sol = np.linalg.solve(M, rhs[..., None])[..., 0]
    q = -np.ones(npts)
    for j in range(n):
        if j == deg:
            q += sol[:, off[j]]
        else:
            q -= 2.0 * sol[:, off[j] + 3]
    return q


# ---------------------------------------------------------------------------
# Dispatchers
# ---------------------------------------------------------------------------

if USE_NUMBA:
    propagate = propagate_numba
    profile = profile_numba
    diff1 = diff1_numba
    diff3 = diff3_numba
    mkdv_rhs = mkdv_rhs_numba
    nonlinear = nonlinear_numba
    nsoliton_field = nsoliton_field_numba
else:
    propagate = propagate_numpy
    profile = profile_numpy
    diff1 = diff1_numpy
    diff3 = diff3_numpy
    mkdv_rhs = mkdv_rhs_numpy
    nonlinear = nonlinear_numpy
    nsoliton_field = nsoliton_field_numpy
