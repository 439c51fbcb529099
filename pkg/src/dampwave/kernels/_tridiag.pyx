# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled complex tridiagonal kernels.

LU and triangular solves go straight to LAPACK (zgttrf/zgttrs) and the
Lanczos reorthogonalization to BLAS (zgemv) through SciPy's Cython
bindings, so a whole Lanczos run on T^{-H} T^{-1} executes without the
interpreter. The Ritz value check every 4 steps uses LAPACK dstev.
"""

import numpy as np

from libc.math cimport fabs, sqrt
from libc.stdlib cimport free, malloc
from libc.string cimport memcpy
from scipy.linalg.cython_blas cimport dznrm2, zdscal, zgemv
from scipy.linalg.cython_lapack cimport dstev, zgttrf, zgttrs

ctypedef double complex cplx


def tridiag_factor(dl, d, du):
    """LU factors ``(dl, d, du, du2, ipiv, info)`` of a tridiagonal matrix."""
    cdef cplx[::1] L = np.array(dl, dtype=complex)
    cdef cplx[::1] D = np.array(d, dtype=complex)
    cdef cplx[::1] U = np.array(du, dtype=complex)
    cdef int n = D.shape[0], info = 0
    cdef cplx[::1] U2 = np.zeros(max(n - 2, 1), dtype=complex)
    cdef int[::1] P = np.zeros(n, dtype=np.intc)
    zgttrf(&n, &L[0] if n > 1 else NULL, &D[0], &U[0] if n > 1 else NULL,
           &U2[0], &P[0], &info)
    return (np.asarray(L), np.asarray(D), np.asarray(U), np.asarray(U2),
            np.asarray(P), info)


cdef inline void _solve(char trans, int n, cplx* L, cplx* D, cplx* U, cplx* U2,
                        int* P, cplx* b) noexcept nogil:
    cdef int one = 1, info = 0
    zgttrs(&trans, &n, &one, L, D, U, U2, P, b, &n, &info)


def tridiag_solve(fac, b, conj_trans=False):
    """Solve ``T x = b`` (or ``T^H x = b``) from :func:`tridiag_factor` output."""
    L, D, U, U2, P, info = fac
    if info:
        raise ZeroDivisionError("singular tridiagonal factor")
    cdef cplx[::1] l = L, d = D, u = U, u2 = U2
    cdef int[::1] p = P
    cdef cplx[::1] x = np.array(b, dtype=complex)
    cdef int n = d.shape[0]
    _solve(b"C" if conj_trans else b"N", n, &l[0], &d[0], &u[0], &u2[0], &p[0], &x[0])
    return np.asarray(x)


cdef int _top_ritz(int k, double* alpha, double* beta, double* work, double* z,
                   double* theta, double* last) noexcept nogil:
    # largest eigenvalue of the (k x k) Lanczos matrix and its last eigvec entry
    cdef int info = 0, i, ldz = k
    cdef char jobz = b"V"
    cdef double* dd = work
    cdef double* ee = work + k
    cdef double* ws = work + 2 * k
    for i in range(k):
        dd[i] = alpha[i]
    for i in range(k - 1):
        ee[i] = beta[i]
    dstev(&jobz, &k, dd, ee, z, &ldz, ws, &info)
    theta[0] = dd[k - 1]
    last[0] = z[(k - 1) * k + (k - 1)]
    return info


cdef void _inverse_norm(int n, cplx* L, cplx* D, cplx* U, cplx* U2, int* P,
                        cplx* V, cplx* v0, double tol, int kmax,
                        double* out) noexcept nogil:
    """Top eigenvalue of T^{-H}T^{-1}; writes (theta, resid, steps) to out.

    ``V`` holds ``kmax + 1`` rows of length ``n``.
    """
    cdef int k, i, inc = 1, rows, sweep
    cdef cplx one = 1.0, zero = 0.0, mone = -1.0
    cdef char tc = b"C", tn = b"N"
    cdef double b, theta = 0.0, resid = 1e300, last, inv
    cdef bint small
    cdef cplx* w = <cplx*> malloc(n * sizeof(cplx))
    cdef cplx* c = <cplx*> malloc((kmax + 1) * sizeof(cplx))
    cdef double* alpha = <double*> malloc(kmax * sizeof(double))
    cdef double* beta = <double*> malloc(kmax * sizeof(double))
    cdef double* work = <double*> malloc((4 * kmax + 2) * sizeof(double))
    cdef double* z = <double*> malloc(kmax * kmax * sizeof(double))
    memcpy(V, v0, n * sizeof(cplx))
    out[2] = kmax
    for k in range(kmax):
        memcpy(w, V + <Py_ssize_t>k * n, n * sizeof(cplx))
        _solve(b"N", n, L, D, U, U2, P, w)
        _solve(b"C", n, L, D, U, U2, P, w)
        rows = k + 1
        for sweep in range(2):
            # c = V[:rows]^H w ; w -= V[:rows]^T c   (V rows = Fortran columns)
            zgemv(&tc, &n, &rows, &one, V, &n, w, &inc, &zero, c, &inc)
            if sweep == 0:
                alpha[k] = c[k].real
            zgemv(&tn, &n, &rows, &mone, V, &n, c, &inc, &one, w, &inc)
        b = dznrm2(&n, w, &inc)
        beta[k] = b
        small = b <= 1e-14 * (fabs(alpha[k]) if fabs(alpha[k]) > 1e-300 else 1e-300)
        if (k + 1) % 4 == 0 or k + 1 == kmax or small:
            _top_ritz(k + 1, alpha, beta, work, z, &theta, &last)
            resid = fabs(b * last)
            if small or resid <= tol * fabs(theta):
                out[2] = k + 1
                break
        inv = 1.0 / b
        zdscal(&n, &inv, w, &inc)
        memcpy(V + <Py_ssize_t>(k + 1) * n, w, n * sizeof(cplx))
    out[0] = theta
    out[1] = resid
    free(w)
    free(c)
    free(alpha)
    free(beta)
    free(work)
    free(z)


def _start_vector(n, seed):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return v / np.linalg.norm(v)


def tridiag_inverse_norm(dl, d, du, tol=1e-10, kmax=None, seed=0):
    """Return ``(norm, resid, steps)`` with ``norm = ||T^{-1}||_2``.

    ``norm`` is ``inf`` when the LU factorization hits an exact zero pivot.
    ``resid`` bounds the error of ``norm**2``.
    """
    norms, resids, steps = shifted_inverse_norms(dl, d, du, np.zeros(1), tol, kmax, seed)
    return float(norms[0]), float(resids[0]), int(steps[0])


def shifted_inverse_norms(dl, d, du, shifts, tol=1e-10, kmax=None, seed=0):
    """``||(T + s I)^{-1}||_2`` for each real or complex shift ``s``.

    Returns arrays ``(norms, resids, steps)``. The loop over shifts runs
    with the GIL released.
    """
    cdef cplx[::1] sh = np.ascontiguousarray(shifts, dtype=complex)
    cdef cplx[::1] d0 = np.ascontiguousarray(d, dtype=complex)
    cdef cplx[::1] l0 = np.ascontiguousarray(dl, dtype=complex)
    cdef cplx[::1] u0 = np.ascontiguousarray(du, dtype=complex)
    cdef int n = d0.shape[0]
    if kmax is None:
        kmax = min(n, 400)
    cdef int km = min(int(kmax), n)
    cdef Py_ssize_t m = sh.shape[0], j, i
    norms = np.empty(m)
    resids = np.empty(m)
    steps = np.empty(m, dtype=np.intc)
    cdef double[::1] nr = norms, rs = resids
    cdef int[::1] st = steps
    cdef cplx[:, ::1] V = np.empty((km + 1, n), dtype=complex)
    cdef cplx[::1] v0 = _start_vector(n, seed)
    cdef cplx[::1] L = np.empty(max(n - 1, 1), dtype=complex)
    cdef cplx[::1] D = np.empty(n, dtype=complex)
    cdef cplx[::1] U = np.empty(max(n - 1, 1), dtype=complex)
    cdef cplx[::1] U2 = np.empty(max(n - 2, 1), dtype=complex)
    cdef int[::1] P = np.empty(n, dtype=np.intc)
    cdef double out[3]
    cdef int info
    cdef double tl = tol
    with nogil:
        for j in range(m):
            for i in range(n - 1):
                L[i] = l0[i]
                U[i] = u0[i]
            for i in range(n):
                D[i] = d0[i] + sh[j]
            info = 0
            zgttrf(&n, &L[0], &D[0], &U[0], &U2[0], &P[0], &info)
            if info != 0:
                nr[j] = 1.0 / 0.0
                rs[j] = 0.0
                st[j] = 0
                continue
            _inverse_norm(n, &L[0], &D[0], &U[0], &U2[0], &P[0], &V[0, 0], &v0[0],
                          tl, km, out)
            nr[j] = sqrt(out[0])
            rs[j] = out[1]
            st[j] = <int>out[2]
    return norms, resids, steps.astype(int)
