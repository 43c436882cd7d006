"""Hot numeric kernels with numba and pure-numpy implementations.

Each kernel exists twice: ``*_nb`` (loop form, compiled with numba when
available) and ``*_np`` (vectorised numpy).  The unsuffixed names are bound to
whichever backend :mod:`bspdc._accel` selected at import time.
"""
import numpy as np

from ._accel import USE_NUMBA, njit

LOG_FLOOR = 1e-12

# Lower-triangular Cholesky layout: (row, col) of each complex off-diagonal
# entry, in parameter order after the four real diagonal entries.
T_OFFDIAG = np.array([[1, 0], [2, 1], [3, 2], [2, 0], [3, 1], [3, 0]], dtype=np.int64)
N_CHOL = 16


# ---------------------------------------------------------------------------
# HOM overlap:  sum_k phi(W_k) phi*(-W_k) exp(-2 i W_k tau) / sum_k |phi|^2
# ---------------------------------------------------------------------------

def _hom_overlap_loop(phi, omega, taus):
    n = phi.shape[0]
    norm = 0.0
    for k in range(n):
        norm += phi[k].real ** 2 + phi[k].imag ** 2
    prod = np.empty(n, dtype=np.complex128)
    for k in range(n):
        prod[k] = phi[k] * np.conj(phi[n - 1 - k])
    out = np.empty(taus.shape[0], dtype=np.complex128)
    for j in range(taus.shape[0]):
        acc = 0.0 + 0.0j
        for k in range(n):
            arg = -2.0 * omega[k] * taus[j]
            acc += prod[k] * (np.cos(arg) + 1j * np.sin(arg))
        out[j] = acc / norm
    return out


def hom_overlap_np(phi, omega, taus, chunk=256):
    phi = np.asarray(phi, dtype=np.complex128)
    prod = phi * np.conj(phi[::-1])
    norm = np.sum(np.abs(phi) ** 2)
    out = np.empty(len(taus), dtype=np.complex128)
    for start in range(0, len(taus), chunk):
        t = taus[start:start + chunk]
        out[start:start + chunk] = np.exp(-2j * np.outer(t, omega)) @ prod
    return out / norm


# ---------------------------------------------------------------------------
# Domain-wall sum of a poled grating:
#   A(q) = sum_j s_j (exp(i q z_{j+1}) - exp(i q z_j)) / (i q)
# ---------------------------------------------------------------------------

def _grating_sum_loop(q, walls, signs):
    out = np.empty(q.shape[0], dtype=np.complex128)
    nd = signs.shape[0]
    for k in range(q.shape[0]):
        qk = q[k]
        acc = 0.0 + 0.0j
        if qk == 0.0:
            for j in range(nd):
                acc += signs[j] * (walls[j + 1] - walls[j])
        else:
            prev = np.cos(qk * walls[0]) + 1j * np.sin(qk * walls[0])
            for j in range(nd):
                cur = np.cos(qk * walls[j + 1]) + 1j * np.sin(qk * walls[j + 1])
                acc += signs[j] * (cur - prev)
                prev = cur
            acc = acc / (1j * qk)
        out[k] = acc
    return out


def grating_sum_np(q, walls, signs, chunk=64):
    q = np.asarray(q, dtype=float)
    out = np.empty(q.shape[0], dtype=np.complex128)
    widths_sum = np.sum(signs * np.diff(walls))
    for start in range(0, len(q), chunk):
        qc = q[start:start + chunk]
        e = np.exp(1j * np.outer(qc, walls))
        num = (e[:, 1:] - e[:, :-1]) @ signs
        with np.errstate(divide="ignore", invalid="ignore"):
            val = num / (1j * qc)
        out[start:start + chunk] = np.where(qc == 0.0, widths_sum, val)
    return out


# ---------------------------------------------------------------------------
# Poisson likelihood of a Cholesky-parameterised two-qubit state.
#
# x[:16] fills T (lower triangular, real diagonal), rho = T^+ T / Tr(T^+ T);
# x[16] = s with N = n0 * exp(s).  The objective is the negative Poisson
# log-likelihood divided by the total count, so it is invariant (up to a
# constant) under uniform scaling of counts together with n0.
# ---------------------------------------------------------------------------

def _t_matrix(x):
    t = np.zeros((4, 4), dtype=np.complex128)
    for d in range(4):
        t[d, d] = x[d]
    for i in range(6):
        r = T_OFFDIAG[i, 0]
        c = T_OFFDIAG[i, 1]
        t[r, c] = x[4 + 2 * i] + 1j * x[5 + 2 * i]
    return t


def _objective_loop(x, proj, counts, n0, total):
    t = _t_matrix(x)
    g = np.conj(t.T) @ t
    gtr = 0.0
    for d in range(4):
        gtr += g[d, d].real
    big_n = n0 * np.exp(x[16])
    nset = proj.shape[0]
    p = np.empty(nset)
    for v in range(nset):
        acc = 0.0
        for i in range(4):
            for j in range(4):
                acc += (g[i, j] * proj[v, j, i]).real
        p[v] = acc / gtr
    f = 0.0
    ds = 0.0
    w = np.empty(nset)
    for v in range(nset):
        mu = big_n * p[v]
        if mu > LOG_FLOOR:
            f -= counts[v] * np.log(mu) - mu
            w[v] = -(counts[v] / p[v] - big_n) / total
            ds -= counts[v] - mu
        else:
            f -= counts[v] * np.log(LOG_FLOOR) - mu
            w[v] = big_n / total
            ds += mu
    k = np.zeros((4, 4), dtype=np.complex128)
    for v in range(nset):
        for i in range(4):
            for j in range(4):
                k[i, j] += w[v] * proj[v, i, j]
            k[i, i] -= w[v] * p[v]
    k /= gtr
    q = k @ np.conj(t.T)
    grad = np.empty(17)
    for d in range(4):
        grad[d] = 2.0 * q[d, d].real
    for i in range(6):
        r = T_OFFDIAG[i, 0]
        c = T_OFFDIAG[i, 1]
        grad[4 + 2 * i] = 2.0 * q[c, r].real
        grad[5 + 2 * i] = -2.0 * q[c, r].imag
    grad[16] = ds / total
    return f / total, grad


def t_matrix_np(x):
    t = np.zeros((4, 4), dtype=np.complex128)
    t[np.arange(4), np.arange(4)] = x[:4]
    t[T_OFFDIAG[:, 0], T_OFFDIAG[:, 1]] = x[4:16:2] + 1j * x[5:16:2]
    return t


def objective_np(x, proj, counts, n0, total):
    t = t_matrix_np(x)
    g = t.conj().T @ t
    gtr = np.trace(g).real
    big_n = n0 * np.exp(x[16])
    p = np.einsum("ij,vji->v", g, proj).real / gtr
    mu = big_n * p
    ok = mu > LOG_FLOOR
    logmu = np.log(np.where(ok, mu, LOG_FLOOR))
    f = -np.sum(counts * logmu - mu)
    w = np.where(ok, -(counts / np.where(ok, p, 1.0) - big_n), big_n) / total
    ds = np.sum(np.where(ok, -(counts - mu), mu)) / total
    k = (np.einsum("v,vij->ij", w, proj) - np.sum(w * p) * np.eye(4)) / gtr
    q = k @ t.conj().T
    grad = np.empty(17)
    grad[:4] = 2.0 * np.diag(q).real
    qt = q[T_OFFDIAG[:, 1], T_OFFDIAG[:, 0]]
    grad[4:16:2] = 2.0 * qt.real
    grad[5:16:2] = -2.0 * qt.imag
    grad[16] = ds
    return f / total, grad


def _make_bfgs(objective):
    """BFGS with Armijo backtracking around ``objective``.

    Status codes: 0 gradient norm below ``gtol``, 1 step norm below ``xtol``,
    2 iteration limit reached.
    """

    def bfgs(x0, proj, counts, n0, total, max_iter, gtol, xtol):
        n = x0.shape[0]
        x = x0.copy()
        f, g = objective(x, proj, counts, n0, total)
        h = np.eye(n)
        gnorm = np.sqrt(np.dot(g, g))
        for it in range(max_iter):
            gnorm = np.sqrt(np.dot(g, g))
            if gnorm < gtol:
                return x, f, gnorm, it, 0
            d = -(h @ g)
            slope = np.dot(g, d)
            if slope >= 0.0:
                h = np.eye(n)
                d = -g
                slope = -gnorm * gnorm
            step = 1.0
            while True:
                dx = step * d
                if np.sqrt(np.dot(dx, dx)) < xtol:
                    return x, f, gnorm, it, 1
                xn = x + dx
                fn, gn = objective(xn, proj, counts, n0, total)
                if fn == fn and fn <= f + 1e-4 * step * slope:
                    break
                step *= 0.5
            y = gn - g
            sy = np.dot(dx, y)
            if it == 0 and sy > 0.0:
                h = np.eye(n) * (sy / np.dot(y, y))
            if sy > 1e-14 * np.sqrt(np.dot(dx, dx) * np.dot(y, y)):
                rho = 1.0 / sy
                hy = h @ y
                h = (h - rho * (np.outer(dx, hy) + np.outer(hy, dx))
                     + (rho * rho * np.dot(y, hy) + rho) * np.outer(dx, dx))
            x = xn
            f = fn
            g = gn
        return x, f, np.sqrt(np.dot(g, g)), max_iter, 2

    return bfgs


bfgs_np = _make_bfgs(objective_np)

if USE_NUMBA:
    _t_matrix = njit(_t_matrix)
    hom_overlap_nb = njit(_hom_overlap_loop)
    grating_sum_nb = njit(_grating_sum_loop)
    objective_nb = njit(_objective_loop)
    bfgs_nb = njit(_make_bfgs(objective_nb))

    hom_overlap = hom_overlap_nb
    grating_sum = grating_sum_nb
    objective = objective_nb
    bfgs = bfgs_nb
else:
    hom_overlap_nb = _hom_overlap_loop
    grating_sum_nb = _grating_sum_loop
    objective_nb = _objective_loop
    bfgs_nb = _make_bfgs(_objective_loop)

    hom_overlap = hom_overlap_np
    grating_sum = grating_sum_np
    objective = objective_np
    bfgs = bfgs_np
