"""Eigenvalues, weighted resolvent norms and low-frequency coercivity fits.

Resolvent norms are measured in the energy metric: for ``G = C^H C``,
``||(A_h - lam)^{-1}||_G = 1 / sigma_min(C (A_h - lam) C^{-1})``. Small
problems (dimension < 500) use a dense SVD; larger ones run Lanczos on the
normal operator of the inverse in the ``G`` inner product, which avoids
forming ``C`` and reuses one sparse LU per shift.

Classes
-------
SpectrumResult, PseudospectrumField, AxisScan, ExponentFit

Functions
---------
eig_complex, spectrum_wave, resolvent_norm, pseudospectrum_sweep,
imaginary_axis_scan, schur_inverse_norm, schur_resolvent_bound_check,
block_resolvent, coercivity_exponent, kato_slope
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import quad
from scipy.linalg import eigvalsh_tridiagonal

from . import kernels
from ._fit import ExponentFit, loglog_fit
from ._lanczos import lanczos_top
from .discretize import (Grid1D, assemble_schur, build_cell_grid, build_grid,
                         parse_profile, sample_coefficient)
from .errors import NumericalError, ValidationError

__all__ = [
    "ExponentFit", "SpectrumResult", "PseudospectrumField", "AxisScan",
    "eig_complex", "spectrum_wave", "resolvent_norm", "pseudospectrum_sweep",
    "imaginary_axis_scan", "schur_inverse_norm", "schur_resolvent_bound_check",
    "block_resolvent", "coercivity_exponent", "kato_slope",
]

DENSE_LIMIT = 500
EIG_CAP = 2000


def workers():
    """Worker count from ``DAMPWAVE_WORKERS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("DAMPWAVE_WORKERS", "1")))
    except ValueError:
        return 1


def _pmap(fn, items):
    items = list(items)
    nw = workers()
    if nw == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=nw) as ex:
        return list(ex.map(fn, items))


# --------------------------------------------------------------------------
# eigenvalues
# --------------------------------------------------------------------------

def _sort_key(w):
    return np.lexsort((np.round(w.imag, 12), np.round(w.real, 12)))


def eig_complex(matrix, cap=EIG_CAP, tol=1e-8, vectors=False):
    """All eigenvalues of a dense matrix with per-pair residuals.

    Residuals are ``||M v - lam v|| / ||v||``. Pairs whose residual exceeds
    ``tol * ||M||_1`` get two steps of shifted inverse iteration. Output is
    sorted by (Re, Im).
    """
    M = np.asarray(matrix.toarray() if sp.issparse(matrix) else matrix)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValidationError("eig_complex needs a square matrix")
    if M.shape[0] > cap:
        raise ValidationError(f"dimension {M.shape[0]} exceeds the eigensolver cap {cap}")
    if not np.all(np.isfinite(M)):
        raise ValidationError("matrix has non-finite entries")
    try:
        w, V = np.linalg.eig(M)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"QR iteration failed: {exc}") from exc
    V = V.astype(complex)
    scale = max(np.linalg.norm(M, 1), 1e-300)
    res = np.linalg.norm(M @ V - V * w, axis=0) / np.linalg.norm(V, axis=0)
    n = M.shape[0]
    for i in np.flatnonzero(res > tol * scale):
        lam = w[i]
        v = V[:, i]
        shift = lam + 1e-12 * scale
        try:
            lu = sla.lu_factor(M - shift * np.eye(n))
        except (ValueError, np.linalg.LinAlgError):
            continue
        for _ in range(2):
            v = sla.lu_solve(lu, v)
            v /= np.linalg.norm(v)
        lam = np.vdot(v, M @ v)
        w[i], V[:, i] = lam, v
        res[i] = np.linalg.norm(M @ v - lam * v)
    bad = res > tol * scale
    order = _sort_key(w)
    if np.any(bad):
        raise NumericalError(f"{bad.sum()} eigenpairs above residual tolerance",
                             partial=(w[order], res[order]))
    if vectors:
        return w[order], res[order], V[:, order]
    return w[order], res[order]


@dataclass(frozen=True)
class SpectrumResult:
    """Eigenvalues of ``A_h`` with residuals measured in the ``G`` metric."""

    eigenvalues: np.ndarray
    residuals: np.ndarray
    meta: dict

    def nonreal(self, rel=1e-6):
        w = self.eigenvalues
        return w[np.abs(w.imag) > rel * np.maximum(1.0, np.abs(w))]

    def lowest_upper(self, count, rel=1e-6):
        """The ``count`` smallest-modulus eigenvalues with ``Im > 0``."""
        w = self.nonreal(rel)
        w = w[w.imag > 0]
        return w[np.argsort(np.abs(w), kind="stable")][:count]

    def conjugation_gap(self):
        """Largest distance from an eigenvalue's conjugate to the set."""
        w = self.eigenvalues
        if w.size == 0:
            return 0.0
        d = np.abs(np.conj(w)[:, None] - w[None, :]).min(axis=1)
        return float(d.max())


def spectrum_wave(op, region=None):
    """Eigenvalues of ``A_h``, optionally filtered to a rectangle.

    ``region = (re_min, re_max, im_min, im_max)``.
    """
    w, _, V = eig_complex(op.dense(), vectors=True)
    G = op.G
    AV = op.A @ V
    R = AV - V * w
    num = np.sqrt(np.maximum(np.einsum("ij,ij->j", R.conj(), G @ R).real, 0))
    den = np.sqrt(np.einsum("ij,ij->j", V.conj(), G @ V).real)
    res = num / den
    if region is not None:
        r0, r1, i0, i1 = region
        sel = (w.real >= r0) & (w.real <= r1) & (w.imag >= i0) & (w.imag <= i1)
        w, res = w[sel], res[sel]
    meta = {"grid": op.grid.describe(), **op.profile_tags}
    return SpectrumResult(w, res, meta)


# --------------------------------------------------------------------------
# resolvent norms
# --------------------------------------------------------------------------

class _RealLU:
    """Sparse LU of a real matrix that also solves complex right-hand sides."""

    def __init__(self, M):
        self.lu = spla.splu(sp.csc_matrix(M))

    def solve(self, b):
        if np.iscomplexobj(b):
            return self.lu.solve(np.ascontiguousarray(b.real)) + \
                1j * self.lu.solve(np.ascontiguousarray(b.imag))
        return self.lu.solve(b)


_gram_cache = {}


def _gram_lu(op):
    key = id(op)
    hit = _gram_cache.get(key)
    if hit is None or hit[0] is not op:
        hit = (op, _RealLU(op.G))
        _gram_cache.clear()
        _gram_cache[key] = hit
    return hit[1]


def resolvent_norm(op, lam, weighted=True, tol=1e-10):
    """``||(A_h - lam)^{-1}||`` in the ``G`` metric (or Euclidean if not weighted).

    Returns ``inf`` when ``A_h - lam`` is numerically singular
    (``sigma_min < 1e-14 * scale``).
    """
    lam = complex(lam)
    if not np.isfinite(lam):
        raise ValidationError("spectral parameter must be finite")
    n2 = op.dim
    M = (op.A - lam * sp.identity(n2, format="csr")).astype(complex)
    if n2 < DENSE_LIMIT:
        Md = M.toarray()
        if weighted:
            try:
                C = np.linalg.cholesky(op.G.toarray()).conj().T
            except np.linalg.LinAlgError as exc:
                raise NumericalError("Gram matrix is not positive definite") from exc
            Md = C @ sla.solve_triangular(C, Md.T, trans="T", lower=False).T
        s = np.linalg.svd(Md, compute_uv=False)
        if s[-1] < 1e-14 * s[0]:
            return np.inf
        return float(1.0 / s[-1])
    try:
        lu = spla.splu(M.tocsc())
    except RuntimeError:
        return np.inf
    scale = spla.norm(M, 1)
    if weighted:
        G = op.G
        glu = _gram_lu(op)

        def apply_k(x):
            return glu.solve(lu.solve(G @ lu.solve(x), trans="H"))

        theta, _, _ = lanczos_top(apply_k, n2, apply_m=lambda x: G @ x, tol=tol)
    else:
        theta, _, _ = lanczos_top(lambda x: lu.solve(lu.solve(x), trans="H"), n2, tol=tol)
    if not np.isfinite(theta) or theta <= 0:
        return np.inf
    smin = 1.0 / np.sqrt(theta)
    if smin < 1e-14 * scale:
        return np.inf
    return float(np.sqrt(theta))


@dataclass(frozen=True)
class PseudospectrumField:
    """Resolvent norms on a rectangular grid; ``values[i, k]`` at ``re[k] + 1j*im[i]``."""

    re: np.ndarray
    im: np.ndarray
    values: np.ndarray
    weighted: bool

    def rows(self):
        """CSV rows ``(re, im, log10_norm)`` in row-major order."""
        out = []
        for i, y in enumerate(self.im):
            for k, x in enumerate(self.re):
                v = self.values[i, k]
                out.append((x, y, np.log10(v) if np.isfinite(v) else np.inf))
        return out


def pseudospectrum_sweep(op, re_range, im_range, n_re, n_im, weighted=True):
    """Weighted resolvent norm at every node of a rectangular grid."""
    if n_re < 2 or n_im < 2:
        raise ValidationError("pseudospectrum grid needs at least 2 points per axis")
    re = np.linspace(re_range[0], re_range[1], int(n_re))
    im = np.linspace(im_range[0], im_range[1], int(n_im))
    nodes = [complex(x, y) for y in im for x in re]
    vals = _pmap(lambda z: resolvent_norm(op, z, weighted), nodes)
    return PseudospectrumField(re, im, np.array(vals).reshape(len(im), len(re)), weighted)


@dataclass(frozen=True)
class AxisScan:
    """Samples ``(b, ||(A_h - i b)^{-1}||)`` along the imaginary axis."""

    b: np.ndarray
    norms: np.ndarray

    def fit(self, window=None):
        return loglog_fit(self.b, self.norms, window)

    def spread(self):
        return float(self.norms.max() / self.norms.min())


def imaginary_axis_scan(op, b_min, b_max, samples=25, log_spacing=True, weighted=True):
    if not (0 < b_min < b_max):
        raise ValidationError("need 0 < b_min < b_max")
    space = np.geomspace if log_spacing else np.linspace
    b = space(b_min, b_max, int(samples))
    vals = _pmap(lambda s: resolvent_norm(op, 1j * s, weighted), b)
    return AxisScan(b, np.array(vals))


def schur_inverse_norm(op, lam, tol=1e-10):
    """``||T_lam^{-1}||_2`` (the discrete L2 scaling cancels)."""
    T = assemble_schur(op, lam=lam)
    if isinstance(op.grid, Grid1D):
        dl, d, du = T.tridiagonal()
        nrm, _, _ = kernels.tridiag_inverse_norm(dl, d, du, tol=tol)
        return float(nrm)
    try:
        lu = spla.splu(T.T.tocsc())
    except RuntimeError:
        return np.inf
    theta, _, _ = lanczos_top(lambda x: lu.solve(lu.solve(x), trans="H"), op.n, tol=tol)
    return float(np.sqrt(theta))


def schur_resolvent_bound_check(op, b):
    """Compare ``||(A_h - ib)^{-1}||`` with ``1/|b| + |b| ||T_{ib}^{-1}||``."""
    if b == 0:
        raise ValidationError("b must be nonzero")
    lhs = resolvent_norm(op, 1j * b)
    rhs = 1.0 / abs(b) + abs(b) * schur_inverse_norm(op, 1j * b)
    return {"b": float(b), "lhs": lhs, "rhs": rhs, "ratio": lhs / rhs}


def block_resolvent(op, lam):
    """Dense ``(A_h - lam)^{-1}`` assembled blockwise from ``T_lam^{-1}``.

    ``-[[ (I + T^{-1}(Delta - q)) / lam, T^{-1} ], [ T^{-1}(Delta - q), lam T^{-1} ]]``
    """
    lam = complex(lam)
    if lam == 0:
        raise ValidationError("block formula needs lam != 0")
    T = assemble_schur(op, lam=lam).T.toarray()
    Tinv = np.linalg.inv(T)
    Dq = (op.lap - sp.diags(op.q)).toarray()
    n = op.n
    TD = Tinv @ Dq
    top = np.hstack([(np.eye(n) + TD) / lam, Tinv])
    bot = np.hstack([TD, lam * Tinv])
    return -np.vstack([top, bot])


# --------------------------------------------------------------------------
# low-frequency coercivity
# --------------------------------------------------------------------------

def _growth_exponent(profile):
    if profile.kind in ("power", "bracket"):
        return profile.beta
    if profile.kind in ("quadratic", "shifted"):
        return 2.0
    return 0.0


def _lowest_dirichlet(L, h, a_prof, q_prof, b):
    N = max(int(round(2 * L / h)) - 1, 3)
    grid = build_grid(L, N)
    x = grid.x
    diag = 2.0 / grid.h**2 + b * a_prof(x)
    if q_prof is not None:
        diag = diag + q_prof(x)
    off = -np.ones(N - 1) / grid.h**2
    return float(eigvalsh_tridiagonal(diag, off, select="i", select_range=(0, 0))[0])


def coercivity_exponent(a_profile, q_profile=None, b_range=(1e-3, 1e-1), samples=9,
                        points=1600, trunc_tol=1e-3, max_doublings=8):
    """Fit ``lambda_min(-Delta_h + q + b a) ~ b^gamma`` over ``b_range``.

    For a profile growing like ``|x|^beta`` the domain half-width starts at
    ``8 b^{-1/(2+beta)}`` (the coercivity length scale). It is then doubled,
    at fixed spacing, until the eigenvalue moves by less than ``trunc_tol``
    relative, which keeps the truncation error well under 1%.
    """
    a_prof = parse_profile(a_profile)
    q_prof = None if q_profile is None else parse_profile(q_profile)
    lo, hi = b_range
    if not (0 < lo < hi <= 1):
        raise ValidationError("b_range must lie in (0, 1]")
    beta = _growth_exponent(a_prof)
    bs = np.geomspace(lo, hi, int(samples))
    lams, Ls = [], []
    for b in bs:
        L = 8.0 * b ** (-1.0 / (2.0 + beta))
        h = min(2 * L / (points + 1), 0.1)
        lam = _lowest_dirichlet(L, h, a_prof, q_prof, b)
        for _ in range(max_doublings):
            lam2 = _lowest_dirichlet(2 * L, h, a_prof, q_prof, b)
            L *= 2
            done = abs(lam2 - lam) <= trunc_tol * abs(lam2)
            lam = lam2
            if done:
                break
        else:
            raise NumericalError(f"truncation not converged at b={b:g}", partial=(bs, lams))
        lams.append(lam)
        Ls.append(L)
    return loglog_fit(bs, np.array(lams), lambdas=[float(v) for v in lams],
                      half_widths=[float(v) for v in Ls])


def _neumann_lowest(grid, a_vals, b):
    h = grid.h
    diag = 2.0 * np.ones(grid.N) / h**2
    diag[0] = diag[-1] = 1.0 / h**2
    diag = diag + b * a_vals
    off = -np.ones(grid.N - 1) / h**2
    return float(eigvalsh_tridiagonal(diag, off, select="i", select_range=(0, 0))[0])


def kato_slope(a_profile, b_range=(1e-5, 1e-3), half_width=1.0, cells=400, samples=7):
    """Lowest Neumann eigenvalue of ``-Delta + b a`` on ``(-L, L)`` as ``b -> 0``.

    ``extra["limit"]`` is ``lambda_0(b)/b`` at the smallest ``b`` and
    ``extra["mean"]`` the mean value of ``a`` over the interval, which is
    the first-order coefficient.
    """
    lo, hi = b_range
    if not (0 < lo < hi <= 1e-2):
        raise ValidationError("b_range must lie in (0, 1e-2]")
    prof = parse_profile(a_profile)
    grid = build_cell_grid(half_width, cells)
    a_vals = sample_coefficient(prof, grid).values
    bs = np.geomspace(lo, hi, int(samples))
    lams = np.array([_neumann_lowest(grid, a_vals, b) for b in bs])
    mean = quad(lambda s: float(prof(np.array(s))), -half_width, half_width,
                points=[0.0])[0] / (2 * half_width)
    ratios = lams / bs
    return loglog_fit(bs, lams, limit=float(ratios[0]), mean=float(mean),
                      ratios=[float(r) for r in ratios])


def neumann_lowest(a_profile, b, half_width=1.0, cells=400):
    """Lowest eigenvalue of the Neumann problem at a single ``b`` (``b = 0`` allowed)."""
    grid = build_cell_grid(half_width, cells)
    a_vals = sample_coefficient(parse_profile(a_profile), grid).values
    return _neumann_lowest(grid, a_vals, b)


def dirichlet_laplacian_eigs(grid):
    """Closed-form eigenvalues of ``-Delta_h`` on a vertex grid (ascending)."""
    k = np.arange(1, grid.N + 1)
    return (2.0 / grid.h**2) * (1.0 - np.cos(k * np.pi * grid.h / (2.0 * grid.L)))

