"""Damped waves in the strip ``R x (-1, 1)`` with damping ``a(x, y) = x^(2n)``.

Separating the transverse Dirichlet modes ``g_j`` (eigenvalues
``zeta_j = (j pi / 2)^2``) reduces the Schur complement to the 1D family

    T_{lam,j} = -d_x^2 + lam x^(2n) + lam^2 + zeta_j,

and complex scaling turns ``-d_x^2 + lam x^(2n)`` into
``lam^(1/(n+1)) (-d_s^2 + s^(2n))``. Eigenvalues of the strip generator are
therefore the roots of

    F(lam) = lam^2 + zeta_j + mu_k lam^(1/(n+1)),

where ``mu_k`` are the anharmonic oscillator eigenvalues.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from math import pi

import numpy as np
from scipy.integrate import quad
from scipy.linalg import eigvalsh_tridiagonal
from scipy.optimize import brentq

from . import kernels
from ._fit import loglog_fit
from .errors import NumericalError, ValidationError

__all__ = [
    "OscillatorSpectrum", "ModeRoot", "TransverseMode", "oscillator_eigs", "zeta",
    "transverse_mode", "principal_root", "mode_eigen_equation", "asymptotic_root",
    "solve_mode_root", "mode_resolvent_norm", "strip_resolvent_norm",
    "resolvent_growth_fit", "StripNorm", "discrete_zeta", "gap_fit",
    "strip_grid_norm", "strip_modes_on_grid",
]


# --------------------------------------------------------------------------
# anharmonic oscillator
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class OscillatorSpectrum:
    n: int
    mu: np.ndarray
    meta: dict = field(default_factory=dict)

    def __getitem__(self, k):
        return float(self.mu[k])


def _fd_oscillator(n, K, W, N):
    x = np.linspace(-W, W, N + 2)[1:-1]
    h = x[1] - x[0]
    d = 2.0 / h**2 + x ** (2 * n)
    e = np.full(N - 1, -1.0 / h**2)
    return eigvalsh_tridiagonal(d, e, select="i", select_range=(0, K))


def _box_width(n, mu):
    # past the turning point, until the WKB tail exp(-int sqrt(V - mu)) is ~e^-20
    xt = mu ** (1.0 / (2 * n))
    tail = lambda W: quad(lambda x: np.sqrt(max(x ** (2 * n) - mu, 0.0)), xt, W)[0] - 20.0
    hi = xt + 1.0
    while tail(hi) < 0:
        hi *= 2
    return max(3.0 * xt, brentq(tail, xt, hi))


def _oscillator_core(n, K, points, drift_tol):
    # WKB-sized first guess, then widen until the box holds the K-th tail
    W = _box_width(n, (2.0 * K + 1.0) ** (2.0 * n / (n + 1)))
    for _ in range(6):
        grids = [points, 2 * points + 1, 4 * points + 3]
        vals = [_fd_oscillator(n, K, W, N) for N in grids]
        rich1 = (4 * vals[1] - vals[0]) / 3
        rich2 = (4 * vals[2] - vals[1]) / 3
        need = _box_width(n, rich2[-1])
        if need <= W * (1 + 1e-12):
            break
        W = need
    drift = float(np.max(np.abs(rich2 - rich1) / np.abs(rich2)))
    if drift > drift_tol:
        raise NumericalError(
            f"oscillator eigenvalues drift {drift:.2e} between grids; raise points",
            partial=rich2)
    return rich2, {"half_width": float(W), "points": grids, "drift": drift}


@lru_cache(maxsize=32)
def _oscillator_cached(n, K, points, drift_tol):
    mu, meta = _oscillator_core(n, K, points, drift_tol)
    mu.setflags(write=False)
    return mu, meta


def oscillator_eigs(n, K, points=2000, drift_tol=1e-5):
    """Lowest ``K+1`` eigenvalues of ``-d^2 + x^(2n)`` on the line.

    Second-order finite differences on ``[-W, W]``, with ``W`` past the
    turning point far enough that the WKB tail of the ``K``-th state is
    below ``e^-20``. Values are Richardson-extrapolated from grids ``h`` and
    ``h/2``; a second extrapolation from ``h/2, h/4`` measures the drift.
    """
    if int(n) != n or n < 1:
        raise ValidationError("n must be an integer >= 1")
    if int(K) != K or K < 0:
        raise ValidationError("K must be an integer >= 0")
    mu, meta = _oscillator_cached(int(n), int(K), int(points), float(drift_tol))
    if not np.all(np.diff(mu) > 0) or mu[0] <= 0:
        raise NumericalError("oscillator eigenvalues not strictly increasing", partial=mu)
    return OscillatorSpectrum(int(n), mu, dict(meta))


# --------------------------------------------------------------------------
# transverse modes
# --------------------------------------------------------------------------

def zeta(j):
    if int(j) != j or j < 1:
        raise ValidationError("transverse index j must be an integer >= 1")
    return (j * pi / 2.0) ** 2


@dataclass(frozen=True)
class TransverseMode:
    j: int
    zeta: float
    parity: str

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        arg = self.j * pi * y / 2.0
        return np.cos(arg) if self.parity == "cos" else np.sin(arg)


def transverse_mode(j):
    """``cos(j pi y / 2)`` for odd ``j``, ``sin(j pi y / 2)`` for even ``j``; unit norm on (-1, 1)."""
    return TransverseMode(int(j), zeta(j), "cos" if j % 2 else "sin")


def discrete_zeta(j, M):
    """Eigenvalue ``j`` of the ``M``-point Dirichlet Laplacian on (-1, 1)."""
    hy = 2.0 / (M + 1)
    return (2.0 / hy**2) * (1.0 - np.cos(j * pi * hy / 2.0))


# --------------------------------------------------------------------------
# mode eigenvalue equation
# --------------------------------------------------------------------------

def principal_root(z, n):
    """``z^(1/(n+1))`` on the principal branch, cut along ``(-inf, 0]``."""
    z = complex(z)
    if z.imag == 0.0 and z.real <= 0.0:
        raise ValidationError(f"{z} lies on the branch cut (-inf, 0]")
    return abs(z) ** (1.0 / (n + 1)) * np.exp(1j * np.angle(z) / (n + 1))


def mode_eigen_equation(lam, j, k, n, mu_k):
    """``F(lam) = lam^2 + zeta_j + mu_k lam^(1/(n+1))``; ``k`` labels ``mu_k``."""
    lam = complex(lam)
    return lam * lam + zeta(j) + mu_k * principal_root(lam, n)


def _dF(lam, n, mu_k):
    return 2.0 * lam + mu_k * principal_root(lam, n) / ((n + 1) * lam)


def asymptotic_root(k, j, n, mu_k):
    """``i pi j/2 + (mu_k/2)(pi j/2)^(-n/(n+1)) e^(i pi (n+2)/(2(n+1)))``."""
    if j < 1:
        raise ValidationError("j must be >= 1")
    p = n / (n + 1.0)
    return 1j * pi * j / 2 + 0.5 * mu_k * (pi * j / 2) ** (-p) * np.exp(
        1j * pi * (n + 2) / (2 * (n + 1)))


@dataclass(frozen=True)
class ModeRoot:
    k: int
    j: int
    n: int
    root: complex
    seed: complex
    residual: float
    gap: float
    iterations: int

    @property
    def scale(self):
        return abs(self.root) ** 2 + zeta(self.j)

    def row(self):
        return (self.k, self.j, self.root.real, self.root.imag, self.seed.real,
                self.seed.imag, self.gap, self.residual)

    def conjugate(self):
        return ModeRoot(self.k, self.j, self.n, self.root.conjugate(),
                        complex(self.seed).conjugate(), self.residual, self.gap,
                        self.iterations)


def solve_mode_root(k, j, n, mu=None, j_floor=3, tol=1e-10, maxit=50):
    """Newton on ``F`` from the asymptotic seed, halving steps that raise ``|F|``.

    Stops once ``|F| <= tol (|lam|^2 + zeta_j)`` and the last update is at
    round-off. ``mu`` defaults to the solver value of ``mu_k``.
    """
    if j < j_floor:
        raise ValidationError(f"j={j} below the Newton floor {j_floor}")
    mu_k = float(oscillator_eigs(n, k)[k]) if mu is None else float(mu)
    seed = complex(asymptotic_root(k, j, n, mu_k))
    lam = seed
    f = mode_eigen_equation(lam, j, k, n, mu_k)
    trace = [abs(f)]
    polished = 0
    for it in range(1, maxit + 1):
        step = f / _dF(lam, n, mu_k)
        t = 1.0
        while True:
            cand = lam - t * step
            try:
                fc = mode_eigen_equation(cand, j, k, n, mu_k)
            except ValidationError:
                fc = None
            if fc is not None and (abs(fc) <= abs(f) or t < 1e-6):
                break
            t *= 0.5
        lam, f = cand, fc
        trace.append(abs(f))
        scale = abs(lam) ** 2 + zeta(j)
        if abs(f) <= tol * scale:
            polished += 1
            if polished > 1 or abs(t * step) <= 1e-14 * abs(lam):
                break
    else:
        raise NumericalError(f"Newton did not converge for (k={k}, j={j}, n={n}): "
                             f"|F| trace {trace[-5:]}", partial=lam)
    if not (lam.real < 0 < lam.imag):
        raise NumericalError(f"root {lam} left the upper-left quadrant", partial=lam)
    return ModeRoot(k, j, n, lam, seed, abs(f), abs(lam - seed), it)


def gap_fit(k, n, js, mu=None):
    """Log-log fit of ``|root - seed|`` against ``j``."""
    roots = [solve_mode_root(k, j, n, mu=mu) for j in js]
    return loglog_fit(np.array(js, dtype=float), [r.gap for r in roots],
                      roots=roots, max_residual=max(r.residual / r.scale for r in roots))


# --------------------------------------------------------------------------
# resolvent norms
# --------------------------------------------------------------------------

_S0 = 8.0
_H0 = _S0 / 300.0


def _scaled_grid(n, energy, acc=1.0, refine=1):
    """Half-width and node count resolving ``-d^2 + i s^(2n) - energy``.

    The window must absorb waves of wavenumber ``sqrt(energy)`` before the
    Dirichlet wall, and the mesh puts ``1/acc`` nodes per unit phase.
    """
    k = np.sqrt(max(energy, 0.0))
    S = max(_S0, (40.0 * (2 * n + 1) * k) ** (1.0 / (2 * n + 1)))
    h = min(_H0, acc / max(k, 1e-300)) / refine
    N = int(np.ceil(2 * S / h)) - 1
    return S, N


def _scaled_operator(n, S, N):
    s = np.linspace(-S, S, N + 2)[1:-1]
    h = s[1] - s[0]
    off = np.full(N - 1, -1.0 / h**2, dtype=complex)
    return off, 2.0 / h**2 + 1j * s ** (2 * n), off.copy()


def _scale(b, n):
    return abs(b) ** (-1.0 / (2 * (n + 1)))


def _scaled_norms(n, shifts, acc=0.25, refine=1):
    """``||(-d^2 + i s^(2n) + c)^{-1}||`` for each real ``c``, grouped by grid."""
    shifts = np.asarray(shifts, dtype=float)
    out = np.empty(shifts.size)
    energy = np.maximum(-shifts, 0.0)
    # energies within a factor 2 share a grid
    key = np.where(energy < 16.0, 0, np.floor(np.log2(np.maximum(energy, 16.0) / 16.0)) + 1)
    for kk in np.unique(key):
        sel = np.nonzero(key == kk)[0]
        S, N = _scaled_grid(n, energy[sel].max(), acc, refine)
        dl, d, du = _scaled_operator(n, S, N)
        norms, _, _ = kernels.shifted_inverse_norms(dl, d, du, shifts[sel].astype(complex))
        out[sel] = norms
    return out


def mode_resolvent_norm(b, j, n, refine=1):
    """``||T_{ib,j}^{-1}||`` for ``T = -d_x^2 + i b x^(2n) - b^2 + zeta_j`` on the line."""
    if b == 0:
        raise ValidationError("b must be nonzero")
    b = abs(float(b))
    sig = _scale(b, n)
    c = sig**2 * (zeta(j) - b * b)
    return float(sig**2 * _scaled_norms(n, [c], refine=refine)[0])


@dataclass(frozen=True)
class StripNorm:
    b: float
    value: float
    argmax_j: int
    j_cut: int
    tail_bound: float
    drift: float


def strip_resolvent_norm(b, n, j_max=None, refine_band=0.5, chunk=16):
    """``sup_j ||T_{ib,j}^{-1}||`` with a certified cutoff.

    For ``zeta_j > b^2`` the real part of ``T`` is at least ``zeta_j - b^2``,
    so ``||T^{-1}|| <= 1/(zeta_j - b^2)``, decreasing in ``j``. Modes are
    computed until that bound falls below the running maximum; the default
    ``j_max`` allows ``zeta_j`` up to ``2 b^2 + 16``. A coarse sweep picks the
    candidates within ``refine_band`` of the maximum, which are recomputed at
    a quarter-phase mesh and once more at half that mesh (``drift``).
    """
    if b == 0:
        raise ValidationError("b must be nonzero")
    b = abs(float(b))
    if j_max is None:
        j_max = int(np.ceil(2.0 * np.sqrt(2.0 * b * b + 16.0) / pi)) + 1
    sig = _scale(b, n)

    def shifts_for(js):
        return sig**2 * ((js * pi / 2.0) ** 2 - b * b)

    j_top = max(1, min(j_max, int(np.floor(2.0 * b / pi)) + 1))
    js = np.arange(1, j_top + 1)
    vals = sig**2 * _scaled_norms(n, shifts_for(js), acc=1.0)
    while True:
        j_cut = int(js[-1]) + 1
        tail = 1.0 / (zeta(j_cut) - b * b) if zeta(j_cut) > b * b else np.inf
        if tail <= vals.max():
            break
        if js[-1] >= j_max:
            raise NumericalError(f"cutoff not certified by j_max={j_max}; raise j_max",
                                 partial=float(vals.max()))
        new = np.arange(js[-1] + 1, min(j_max, js[-1] + chunk) + 1)
        js = np.append(js, new)
        vals = np.append(vals, sig**2 * _scaled_norms(n, shifts_for(new), acc=1.0))
    top = js[vals >= refine_band * vals.max()]
    v1 = sig**2 * _scaled_norms(n, shifts_for(top))
    v2 = sig**2 * _scaled_norms(n, shifts_for(top), refine=2)
    drift = float(np.max(np.abs(v2 - v1) / v2))
    i = int(np.argmax(v2))
    return StripNorm(b, float(v2[i]), int(top[i]), j_cut, float(tail), drift)


def strip_grid_norm(b, n, L, N, M):
    """``||T_{ib}^{-1}||`` for the 2D tensor-grid discretization of the strip."""
    from .discretize import Profile, assemble_wave_operator, build_strip_grid
    from .spectral import schur_inverse_norm

    grid = build_strip_grid(L, N, M)
    op = assemble_wave_operator(grid, Profile("power", beta=2 * n))
    return schur_inverse_norm(op, 1j * b)


def strip_modes_on_grid(b, n, L, N, M, exact_zeta=False):
    """Mode formula on the 1D grid ``x`` of ``build_strip_grid(L, N, M)``.

    With ``exact_zeta=False`` the transverse eigenvalues are those of the
    ``M``-point Dirichlet Laplacian, which makes this the exact block
    diagonalization of the 2D matrix.
    """
    from .discretize import build_grid

    g = build_grid(L, N)
    x, h = g.x, g.h
    off = np.full(N - 1, -1.0 / h**2, dtype=complex)
    d = 2.0 / h**2 + 1j * b * x ** (2 * n) - b * b
    zs = [zeta(j) if exact_zeta else discrete_zeta(j, M) for j in range(1, M + 1)]
    norms, _, _ = kernels.shifted_inverse_norms(off, d, off.copy(), np.array(zs, dtype=complex))
    return float(norms.max())


def resolvent_growth_fit(n, b_range=(10.0, 1000.0), samples=12, kmax=2):
    """Growth of ``||(A - ib)^{-1}||`` along the peaks ``b = Im lam_{0,j}``.

    Upper bound: ``1/b + b sup_j ||T_{ib,j}^{-1}||``. Lower bound:
    ``1/dist(ib, roots)`` over the root families ``k <= kmax`` nearby.
    The returned fit is for the upper bound; ``extra['lower_fit']`` holds the
    slope of the lower bound.
    """
    lo, hi = b_range
    if not (10.0 <= lo < hi <= 1000.0):
        raise ValidationError("b_range must lie inside [10, 1000]")
    mu = oscillator_eigs(n, kmax)
    # Im lam_{0,j} ~ pi j / 2
    j_lo = max(3, int(np.ceil(2 * lo / pi)))
    j_hi = int(np.floor(2 * hi / pi))
    js = np.unique(np.round(np.geomspace(j_lo, j_hi, samples)).astype(int))
    bs, upper, lower, rows = [], [], [], []
    for j in js:
        r0 = solve_mode_root(0, j, n, mu=mu[0])
        b = r0.root.imag
        if not lo <= b <= hi:
            continue
        sn = strip_resolvent_norm(b, n)
        dist = np.inf
        for k in range(kmax + 1):
            for jj in range(max(3, j - 2), j + 3):
                rk = solve_mode_root(k, jj, n, mu=mu[k])
                dist = min(dist, abs(1j * b - rk.root))
        bs.append(b)
        upper.append(1.0 / b + b * sn.value)
        lower.append(1.0 / dist)
        rows.append(sn)
    bs = np.array(bs)
    low_fit = loglog_fit(bs, lower)
    return loglog_fit(bs, upper, lower=np.array(lower), lower_fit=low_fit.slope,
                      strip=rows, n=n)
