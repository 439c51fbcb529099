"""Largest eigenvalue of a positive semidefinite operator by Lanczos.

The operator must be self-adjoint in the inner product ``<x, y> = y^H M x``;
``M`` defaults to the identity. Full reorthogonalization keeps the basis
clean, which matters when the top of the spectrum is clustered (strongly
damped resolvents have many singular values near the norm).
"""

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import NumericalError


def lanczos_top(apply_k, n, apply_m=None, tol=1e-10, kmax=None, seed=0,
                check_every=4):
    """Return ``(theta, resid, steps)`` for the top eigenvalue ``theta``.

    ``resid`` is the Lanczos residual bound ``beta_k |s_k|``; convergence
    means ``resid <= tol * theta``.
    """
    if kmax is None:
        kmax = min(n, 400)
    kmax = min(kmax, n)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    mv = apply_m(v) if apply_m else v
    nrm = np.sqrt(np.vdot(v, mv).real)
    v, mv = v / nrm, mv / nrm
    V = np.empty((kmax + 1, n), dtype=complex)
    MV = np.empty((kmax + 1, n), dtype=complex) if apply_m else V
    V[0] = v
    if apply_m:
        MV[0] = mv
    alpha, beta = [], []
    theta, resid = 0.0, np.inf
    for k in range(kmax):
        w = apply_k(V[k])
        a = np.vdot(MV[k], w).real
        alpha.append(a)
        # two passes of classical Gram-Schmidt against the whole basis
        for _ in range(2):
            c = MV[: k + 1].conj() @ w if apply_m else V[: k + 1].conj() @ w
            w = w - c @ V[: k + 1]
        mw = apply_m(w) if apply_m else w
        b = np.sqrt(max(np.vdot(w, mw).real, 0.0))
        beta.append(b)
        done = (k + 1) % check_every == 0 or k + 1 == kmax
        small = b <= 1e-14 * max(abs(a), 1e-300)
        if done or small:
            evals, evecs = eigh_tridiagonal(np.array(alpha), np.array(beta[:-1]),
                                            select="i", select_range=(k, k))
            theta = float(evals[-1])
            resid = abs(b * evecs[-1, -1])
            if small or resid <= tol * abs(theta):
                return theta, resid, k + 1
        V[k + 1] = w / b
        if apply_m:
            MV[k + 1] = mw / b
    if resid <= 1e-6 * abs(theta):
        # accept a looser bound at the cap rather than fail a sweep node
        return theta, resid, kmax
    raise NumericalError(
        f"Lanczos did not converge in {kmax} steps (resid {resid:.3e}, theta {theta:.6e})",
        partial=(theta, resid))
