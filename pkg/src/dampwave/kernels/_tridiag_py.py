"""Pure-Python fallback for the compiled tridiagonal kernels.

Same API as the extension; the LU work goes through LAPACK ``zgttrf`` /
``zgttrs`` and the Lanczos loop runs in numpy.
"""

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.linalg.lapack import zgttrf, zgttrs


def tridiag_factor(dl, d, du):
    dl, d, du, du2, ipiv, info = zgttrf(np.asarray(dl, dtype=complex),
                                         np.asarray(d, dtype=complex),
                                         np.asarray(du, dtype=complex))
    return dl, d, du, du2, ipiv, info


def tridiag_solve(fac, b, conj_trans=False):
    dl, d, du, du2, ipiv, info = fac
    if info:
        raise ZeroDivisionError("singular tridiagonal factor")
    x, info = zgttrs(dl, d, du, du2, ipiv, np.asarray(b, dtype=complex),
                     trans="C" if conj_trans else "N")
    return x


def _start_vector(n, seed):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)


def _inverse_norm(fac, v0, tol, kmax):
    n = v0.shape[0]
    V = np.empty((kmax + 1, n), dtype=complex)
    V[0] = v0
    alpha, beta = np.zeros(kmax), np.zeros(kmax)
    theta, resid = 0.0, np.inf
    for k in range(kmax):
        w = tridiag_solve(fac, tridiag_solve(fac, V[k]), conj_trans=True)
        alpha[k] = np.vdot(V[k], w).real
        for _ in range(2):
            w = w - (V[: k + 1].conj() @ w) @ V[: k + 1]
        b = np.linalg.norm(w)
        beta[k] = b
        small = b <= 1e-14 * max(abs(alpha[k]), 1e-300)
        if (k + 1) % 4 == 0 or k + 1 == kmax or small:
            ev, es = eigh_tridiagonal(alpha[: k + 1], beta[:k],
                                      select="i", select_range=(k, k))
            theta = float(ev[-1])
            resid = abs(b * es[-1, -1])
            if small or resid <= tol * abs(theta):
                return theta, resid, k + 1
        V[k + 1] = w / b
    return theta, resid, kmax


def tridiag_inverse_norm(dl, d, du, tol=1e-10, kmax=None, seed=0):
    fac = tridiag_factor(dl, d, du)
    n = len(d)
    if fac[5]:
        return np.inf, 0.0, 0
    kmax = min(n, 400) if kmax is None else min(kmax, n)
    theta, resid, steps = _inverse_norm(fac, _start_vector(n, seed), tol, kmax)
    return float(np.sqrt(theta)), float(resid), int(steps)


def shifted_inverse_norms(dl, d, du, shifts, tol=1e-10, kmax=None, seed=0):
    shifts = np.asarray(shifts, dtype=complex)
    d = np.asarray(d, dtype=complex)
    n = d.shape[0]
    kmax = min(n, 400) if kmax is None else min(kmax, n)
    v0 = _start_vector(n, seed)
    m = shifts.shape[0]
    norms, resids = np.empty(m), np.empty(m)
    steps = np.empty(m, dtype=int)
    for j in range(m):
        fac = tridiag_factor(dl, d + shifts[j], du)
        if fac[5]:
            norms[j], resids[j], steps[j] = np.inf, 0.0, 0
            continue
        theta, resids[j], steps[j] = _inverse_norm(fac, v0, tol, kmax)
        norms[j] = np.sqrt(theta)
    return norms, resids, steps
