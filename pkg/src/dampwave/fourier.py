"""Exact per-frequency model for constant damping on the whole space.

With ``a = 1`` and ``q = 0`` the Fourier transform turns the damped wave
equation into ``d/dt (u, v) = M(xi) (u, v)`` with
``M(xi) = [[0, 1], [-|xi|^2, -1]]``, so every quantity below is an
exact integral over frequency. Radial data reduce the integral to
``|S^{d-1}| int_0^inf (.) r^(d-1) dr``, evaluated with composite
Gauss-Legendre panels graded geometrically toward ``r = 0``. The innermost
panel uses Gauss-Jacobi nodes, so data behaving like ``r^alpha`` near the
origin (the near-critical families) integrate exactly.
"""

from dataclasses import dataclass, field, replace
from math import e, gamma, pi

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import roots_jacobi, roots_legendre

from ._fit import loglog_fit
from .errors import ValidationError

JORDAN_RADIUS = 0.5


def sphere_area(d):
    return 2.0 * pi ** (d / 2.0) / gamma(d / 2.0)


# --------------------------------------------------------------------------
# symbol
# --------------------------------------------------------------------------

def _eigs(r):
    r = np.asarray(r, dtype=float)
    s = np.sqrt((1.0 - 4.0 * r * r).astype(complex))
    lp = -2.0 * r * r / (1.0 + s)          # cancellation-free (-1 + s)/2
    lm = -1.0 - lp
    return lp, lm, s


@dataclass(frozen=True)
class ModeSymbol:
    """Eigen-data of ``M(xi)``; duals are normalized so ``<Psi_i, Phi_k> = delta_ik``.

    The pairing is the bilinear ``Psi^T Phi``; ``psi_plus`` and
    ``psi_minus`` already hold the conjugated vectors.
    """

    r: float
    M: np.ndarray
    lam_plus: complex
    lam_minus: complex
    phi_plus: np.ndarray
    phi_minus: np.ndarray
    psi_plus: np.ndarray
    psi_minus: np.ndarray
    jordan: bool


def mode_symbol(xi):
    """Symbol data at frequency ``xi`` (scalar radius or vector)."""
    r = float(np.linalg.norm(np.atleast_1d(np.asarray(xi, dtype=float))))
    if not np.isfinite(r):
        raise ValidationError("frequency must be finite")
    lp, lm, _ = _eigs(r)
    lp, lm = complex(lp), complex(lm)
    M = np.array([[0.0, 1.0], [-r * r, -1.0]])
    jordan = 4.0 * r * r == 1.0
    phi_p = np.array([1.0, lp])
    phi_m = np.array([1.0, lm])
    if jordan:
        psi_p = psi_m = np.full(2, np.nan + 0j)
    else:
        dl = lp - lm
        psi_p = np.array([-lm, 1.0]) / dl
        psi_m = -np.array([-lp, 1.0]) / dl
    return ModeSymbol(r, M, lp, lm, phi_p, phi_m, psi_p, psi_m, jordan)


def _propagator_entries(r, t):
    """Entries ``(p11, p12, p21, p22)`` of ``exp(t M(r))`` (vectorized).

    Written as ``e^{-t/2} [cosh(dt) I + sinh(dt)/d (M + I/2)]`` with
    ``d = (lam_plus - lam_minus)/2``; it equals the eigenprojection sum
    away from ``2r = 1`` and stays continuous across it.
    """
    r = np.asarray(r, dtype=float)
    t = np.asarray(t, dtype=float)
    lp, lm, s = _eigs(r)
    d = 0.5 * s
    ep = np.exp(t * lp)
    em = np.exp(t * lm)
    ch = 0.5 * (ep + em)
    dt = d * t
    with np.errstate(divide="ignore", invalid="ignore"):
        sh = np.where(np.abs(dt) > 1e-3, (ep - em) / (2.0 * d),
                      np.exp(-0.5 * t) * t * (1 + dt * dt / 6 + dt**4 / 120))
    p11 = ch + 0.5 * sh
    p12 = sh
    p21 = -(r * r) * sh
    p22 = ch - 0.5 * sh
    return p11, p12, p21, p22


def mode_propagator(xi, t):
    """``exp(t M(xi))`` as a 2x2 complex matrix."""
    if t < 0:
        raise ValidationError("propagator needs t >= 0")
    r = float(np.linalg.norm(np.atleast_1d(np.asarray(xi, dtype=float))))
    p11, p12, p21, p22 = _propagator_entries(r, t)
    return np.array([[p11, p12], [p21, p22]], dtype=complex)


def heat_mode(xi, t, f_hat, g_hat):
    """``(u0_hat, d/dt u0_hat)`` for ``u0 = e^{t Delta}(f + g)``."""
    r2 = np.asarray(xi, dtype=float) ** 2
    u0 = np.exp(-t * r2) * (np.asarray(f_hat) + np.asarray(g_hat))
    return u0, -r2 * u0


# --------------------------------------------------------------------------
# radial quadrature and mode states
# --------------------------------------------------------------------------

def radial_rule(r_max=12.0, r_min=1e-12, ratio=0.5, order=20, alpha=0.0):
    """Nodes and weights for ``int_0^{r_max} F(r) dr``.

    Geometric panels ``[r_max ratio^(k+1), r_max ratio^k]`` down to
    ``r_min``; the last panel ``[0, r_min]`` is Gauss-Jacobi exact for
    ``F(r) = r^alpha * polynomial``.
    """
    if not (r_max > r_min > 0 and 0 < ratio < 1):
        raise ValidationError("need r_max > r_min > 0 and 0 < ratio < 1")
    xg, wg = roots_legendre(order)
    nodes, weights = [], []
    hi = r_max
    while hi > r_min:
        lo = max(hi * ratio, r_min)
        nodes.append(0.5 * (hi - lo) * xg + 0.5 * (hi + lo))
        weights.append(0.5 * (hi - lo) * wg)
        hi = lo
    # weight r^alpha on [0, r_min]: Jacobi (a=0, b=alpha) on [-1, 1]
    xj, wj = roots_jacobi(order, 0.0, alpha)
    rj = 0.5 * r_min * (xj + 1.0)
    wj = wj * (0.5 * r_min) ** (alpha + 1.0) / rj**alpha
    nodes.append(rj)
    weights.append(wj)
    r = np.concatenate(nodes[::-1])
    w = np.concatenate(weights[::-1])
    order_idx = np.argsort(r)
    return r[order_idx], w[order_idx]


@dataclass(frozen=True)
class ModeState:
    """Radial samples ``(f_hat, g_hat)`` with quadrature weights.

    ``weights`` already include the radial measure ``|S^{d-1}| r^(d-1)``,
    so ``sum(weights * |f_hat|^2) = ||f||^2``.
    """

    r: np.ndarray
    weights: np.ndarray
    f_hat: np.ndarray
    g_hat: np.ndarray
    d: int = 1
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if np.any(self.weights <= 0):
            raise ValidationError("quadrature weights must be positive")

    def norm(self, values):
        return float(np.sqrt(np.sum(self.weights * np.abs(values) ** 2)))

    def scaled(self, c):
        meta = dict(self.meta)
        if "coarse" in meta:
            meta["coarse"] = meta["coarse"].scaled(c)
        return replace(self, f_hat=c * self.f_hat, g_hat=c * self.g_hat, meta=meta)


def mode_state(f_fn, g_fn=None, d=1, alpha=0.0, r_max=12.0, order=20, **meta):
    """Sample radial profiles ``f_fn(r)``, ``g_fn(r)`` on a graded rule.

    ``alpha`` is the power of ``r`` that the integrands ``|f_hat|^2 r^(d-1)``
    behave like near zero. A half-order copy is kept in ``meta["coarse"]``
    so :func:`comparison_error` can flag under-resolved integrals.
    """
    if d < 1:
        raise ValidationError("dimension must be >= 1")

    def sample(n):
        r, w = radial_rule(r_max=r_max, alpha=alpha, order=n)
        w = w * sphere_area(d) * r ** (d - 1)
        f = np.asarray(f_fn(r), dtype=complex)
        g = np.zeros_like(f) if g_fn is None else np.asarray(g_fn(r), dtype=complex)
        return r, w, f, g

    coarse = ModeState(*sample(max(order // 2, 2)), d, {})
    return ModeState(*sample(order), d, {**meta, "coarse": coarse})


def h_norm(state):
    """``(||grad f||^2 + ||g||^2)^(1/2)``."""
    return float(np.hypot(state.norm(state.r * state.f_hat), state.norm(state.g_hat)))


def h1l2_norm(state):
    """``(||f||_{H^1}^2 + ||g||^2)^(1/2)``."""
    return float(np.sqrt(state.norm(state.f_hat) ** 2 + h_norm(state) ** 2))


def k_norm(state):
    """Energy-space analogue of the discrete K norm with ``a = 1``, ``q = 0``.

    ``||F||_H^2 + ||f||^2 + ||(f + g)/|xi| ||^2``.
    """
    s = state
    return float(np.sqrt(h_norm(s) ** 2 + s.norm(s.f_hat) ** 2 +
                         s.norm((s.f_hat + s.g_hat) / s.r) ** 2))


def kk_norm(state):
    """``(int (|xi|^2 + 1 + |xi|^-2) |f_hat|^2)^(1/2)`` for ``g = 0`` data."""
    s = state
    return float(np.sqrt(np.sum(s.weights * (s.r**2 + 1 + s.r**-2) * np.abs(s.f_hat) ** 2)))


def evolve_modes(state, t):
    """``(u_hat, v_hat)`` at time ``t``."""
    p11, p12, p21, p22 = _propagator_entries(state.r, t)
    return p11 * state.f_hat + p12 * state.g_hat, p21 * state.f_hat + p22 * state.g_hat


@dataclass(frozen=True)
class DecayNorms:
    t: float
    u: float
    grad: float
    dtu: float


def model_decay(t, state, k_norm_value=None):
    """``(||u||, ||grad u||, ||d_t u||)`` at time ``t`` (divided by ``k_norm_value`` if given)."""
    if t < 0:
        raise ValidationError("need t >= 0")
    u, v = evolve_modes(state, t)
    c = 1.0 if k_norm_value is None else 1.0 / k_norm_value
    return DecayNorms(float(t), c * state.norm(u), c * state.norm(state.r * u),
                      c * state.norm(v))


def decay_series(state, times):
    rows = [model_decay(t, state) for t in times]
    return {"t": np.array([x.t for x in rows]), "u": np.array([x.u for x in rows]),
            "grad": np.array([x.grad for x in rows]), "dtu": np.array([x.dtu for x in rows])}


# --------------------------------------------------------------------------
# heat comparison
# --------------------------------------------------------------------------

def _differences(r, t, f, g):
    """Per-mode ``(u - u0, v - d_t u0)`` without cancellation at small ``r``."""
    u, v = evolve_modes(ModeState(r, np.ones_like(r), f, g), t)
    r2 = r * r
    heat = np.exp(-t * r2)
    du = u - heat * (f + g)
    dv = v + r2 * heat * (f + g)
    low = r < 0.4
    if np.any(low):
        rl, fl, gl, hl = r[low], f[low], g[low], heat[low]
        lp, lm, _ = _eigs(rl)
        lp, lm = lp.real, lm.real
        dl = lp - lm
        ep, em = np.exp(t * lp), np.exp(t * lm)
        # lp + r^2 = -4 r^4 / (1 + sqrt(1 - 4 r^2))^2 and 1 - dl = -2 lp, both cancellation-free
        shift = -4 * rl**4 / (1 + np.sqrt(1 - 4 * rl * rl)) ** 2
        gap = hl * np.expm1(t * shift)
        du[low] = (ep * (-lp * fl - 2 * lp * gl) / dl + gap * (fl + gl) +
                   em * (lp * fl - gl) / dl)
        dv[low] = (ep * (rl * rl * 2 * lp * fl + (shift + 2 * rl * rl * lp) * gl) / dl
                   - rl * rl * (fl + gl) * gap
                   - em * (-rl * rl * fl + lm * gl) / dl)
    return du, dv


@dataclass(frozen=True)
class ComparisonError:
    t: float
    e0: float
    e1: float
    e2: float
    low: tuple
    high: tuple
    under_resolved: bool


def comparison_error(t, state, delta=0.1):
    """``(||u - u0||, ||grad(u - u0)||, ||d_t(u - u0)||)`` with ``u0 = e^{t Delta}(f+g)``.

    ``low``/``high`` split each error at ``|xi| = delta`` (the low/high
    frequency regions of the classical argument); the totals do not depend
    on ``delta``. ``under_resolved`` is set when a half-order quadrature
    disagrees by more than 1%.
    """
    if t < 1:
        raise ValidationError("comparison_error is meant for t >= 1")
    s = state
    du, dv = _differences(s.r, t, s.f_hat, s.g_hat)
    w = s.weights
    parts = {}
    for name, sel in (("low", s.r < delta), ("high", s.r >= delta)):
        parts[name] = tuple(float(np.sqrt(np.sum(w[sel] * np.abs(x[sel]) ** 2)))
                            for x in (du, s.r * du, dv))
    tot = tuple(float(np.hypot(a, b)) for a, b in zip(parts["low"], parts["high"]))
    coarse = s.meta.get("coarse")
    flag = False
    if coarse is not None:
        cdu, _ = _differences(coarse.r, t, coarse.f_hat, coarse.g_hat)
        c0 = float(np.sqrt(np.sum(coarse.weights * np.abs(cdu) ** 2)))
        flag = abs(c0 - tot[0]) > 0.01 * max(tot[0], 1e-300)
    return ComparisonError(float(t), *tot, parts["low"], parts["high"], flag)


def multiplier_error(t, r=None):
    """Worst case over data: ``sup_xi`` of the per-mode error operator norms.

    Returns ``(m0, m1, m2)``, the largest 2-norm over ``r`` of the row maps
    ``F_hat -> (u - u0)``, ``|xi| (u - u0)`` and ``(v - d_t u0)`` with ``F_hat``
    measured in ``H^1 x L^2`` (weights ``(1 + r^2)^(1/2)`` and 1).
    """
    if r is None:
        r = np.geomspace(1e-4, 20.0, 4000)
    one = np.ones_like(r, dtype=complex)
    zero = np.zeros_like(one)
    duf, dvf = _differences(r, t, one, zero)
    dug, dvg = _differences(r, t, zero, one)
    wf = np.sqrt(1 + r * r)
    m0 = np.sqrt(np.abs(duf / wf) ** 2 + np.abs(dug) ** 2).max()
    m1 = np.sqrt(np.abs(r * duf / wf) ** 2 + np.abs(r * dug) ** 2).max()
    m2 = np.sqrt(np.abs(dvf / wf) ** 2 + np.abs(dvg) ** 2).max()
    return float(m0), float(m1), float(m2)


# --------------------------------------------------------------------------
# sharp constants and data families
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class DecayConstants:
    c0: float
    c1: float
    c2: float

    def __getitem__(self, j):
        return (self.c0, self.c1, self.c2)[j]


def decay_constant(j):
    """``((j+1)/(2e))^((j+1)/2)`` = ``(sup_s s^(j+1) e^(-2s))^(1/2)``."""
    return ((j + 1) / (2 * e)) ** ((j + 1) / 2)


def decay_constants():
    return DecayConstants(decay_constant(0), decay_constant(1), decay_constant(2))


def argmax_shell(j):
    """Numerical maximizer of ``s^(j+1) e^(-2s)`` (bounded Brent search)."""
    res = minimize_scalar(lambda s: -(s ** (j + 1)) * np.exp(-2 * s), bounds=(0.0, 5.0),
                          method="bounded", options={"xatol": 1e-12})
    return float(res.x), float(np.sqrt(-res.fun))


def witness_data(j, t, eta1, eta2, d=1, order=40):
    """Data ``f_hat = 1`` on the shell ``eta1 <= t |xi|^2 <= eta2``, ``g = 0``.

    Normalized so that ``kk_norm = 1``.
    """
    if j not in (0, 1, 2):
        raise ValidationError("j must be 0, 1 or 2")
    if not (0 <= eta1 < eta2 <= 2):
        raise ValidationError("need 0 <= eta1 < eta2 <= 2")
    if t < 1:
        raise ValidationError("need t >= 1")
    lo, hi = np.sqrt(eta1 / t), np.sqrt(eta2 / t)
    if not hi > lo:
        raise ValidationError("frequency shell is empty after discretization")
    x, w = roots_legendre(order)
    r = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    w = 0.5 * (hi - lo) * w * sphere_area(d) * r ** (d - 1)
    s = ModeState(r, w, np.ones_like(r, dtype=complex), np.zeros_like(r, dtype=complex), d,
                  {"j": j, "t": t, "shell": (eta1, eta2)})
    return s.scaled(1.0 / kk_norm(s))


def sharpness_ratio(j, t, state):
    """``t^((j+1)/2) * (||u||, ||grad u||, ||d_t u||)[j] / kk_norm``."""
    n = model_decay(t, state)
    val = (n.u, n.grad, n.dtu)[j]
    return t ** ((j + 1) / 2) * val / kk_norm(state)


def heat_sharpness_ratio(j, t, state):
    """Same ratio for the heat flow ``e^{t Delta} f``."""
    u0, du0 = heat_mode(state.r, t, state.f_hat, state.g_hat)
    val = (state.norm(u0), state.norm(state.r * u0), state.norm(du0))[j]
    return t ** ((j + 1) / 2) * val / kk_norm(state)


def critical_profile(eps, d=1, order=20, r_max=12.0):
    """Data ``f_hat = |xi|^(1 - d/2 + eps) e^{-|xi|^2/2}``, ``g = 0``.

    This sits at the edge of the weighted space: the heat flow of it decays
    like ``t^(-1/2 - eps/2)`` in ``L2``.
    """
    if eps <= 0:
        raise ValidationError("eps must be positive")
    p = 1 - d / 2 + eps
    alpha = 2 * p + d - 1 - 2      # |f/r|^2 r^(d-1) ~ r^alpha near 0
    return mode_state(lambda r: r**p * np.exp(-0.5 * r * r), None, d=d,
                      alpha=alpha, r_max=r_max, order=order, eps=eps, family="critical")


def random_k_data(seed, d=1, eps=0.05, order=20, r_max=12.0):
    """Random data whose sum ``f_hat + g_hat`` starts like ``|xi|^(1 - d/2 + eps)``.

    The amplitude, a smooth modulation and the split between ``f`` and
    ``g`` are drawn from ``seed``; every draw has a finite K norm.
    """
    rng = np.random.default_rng(seed)
    p = 1 - d / 2 + eps
    amp = rng.uniform(0.5, 2.0)
    c1, c2 = rng.uniform(-0.2, 0.2, 2)
    width = rng.uniform(0.8, 1.25)
    split = rng.uniform(0.2, 0.8)
    phase = rng.uniform(0, 2 * np.pi)
    bump = rng.uniform(-0.5, 0.5)

    def total(r):
        return amp * r**p * (1 + c1 * r * r + c2 * r**4) * np.exp(-(r / width) ** 2)

    def f(r):
        return split * total(r) + bump * r * r * np.exp(-r * r) * np.exp(1j * phase)

    def g(r):
        return total(r) - f(r)

    alpha = 2 * p + d - 3
    return mode_state(f, g, d=d, alpha=alpha, r_max=r_max, order=order,
                      seed=seed, eps=eps, family="random_k")


def random_energy_data(seed, d=1, eps=0.05, order=20, r_max=12.0, smooth=False):
    """Random ``H^1 x L^2`` data.

    ``smooth=False`` draws near-critical data with ``f_hat + g_hat`` of order
    ``|xi|^(-d/2 + eps)`` at the origin (the worst case for the heat
    comparison); ``smooth=True`` draws bounded Gaussian-type data.
    """
    rng = np.random.default_rng(seed)
    p = 0.0 if smooth else -d / 2 + eps
    amp = rng.uniform(0.5, 2.0)
    c1 = rng.uniform(-0.2, 0.2)
    width = rng.uniform(0.8, 1.25)
    split = rng.uniform(0.2, 0.8)

    def total(r):
        return amp * r**p * (1 + c1 * r * r) * np.exp(-(r / width) ** 2)

    alpha = 2 * p + d - 1
    return mode_state(lambda r: split * total(r), lambda r: (1 - split) * total(r),
                      d=d, alpha=alpha, r_max=r_max, order=order, seed=seed, eps=eps,
                      family="smooth" if smooth else "critical_energy")


def fit_series(times, values, window=None):
    return loglog_fit(times, values, window)
