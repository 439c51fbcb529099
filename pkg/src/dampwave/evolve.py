"""Time evolution of the discrete damped wave semigroup and decay fits.

Two independent routes to ``U(t) = exp(t A_h) F``:

* Crank-Nicolson stepping, contractive in the energy metric ``G`` because
  ``A_h`` is ``G``-dissipative;
* inverse Laplace contour integration of ``e^{t lam} (lam - A_h)^{-1} F``.

The contour runs up the line ``Re lam = theta(Im lam)``, where ``theta`` is
``+eps`` for ``|Im lam| <= tau0`` and ``-gamma`` for ``|Im lam| >= 2 tau0``.
It then closes through the left half-plane beyond the spectrum.
"""

import hashlib
import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.special import roots_legendre

from . import discretize as dz
from . import fourier
from ._fit import loglog_fit
from .errors import NumericalError, ValidationError

__all__ = [
    "Trajectory", "ContourSpec", "ContourResult", "step_cn", "contour_propagator",
    "decay_fit", "run_decay_experiment", "state_norms", "QUANTITIES",
]

QUANTITIES = ("grad", "qhalf", "dtu", "u", "ahalf", "H")


# --------------------------------------------------------------------------
# trajectories
# --------------------------------------------------------------------------

def state_norms(U, op):
    """``(||grad u||, ||q^(1/2) u||, ||d_t u||, ||u||, ||a^(1/2) u||, ||U||_H)``."""
    u, v = op.split(U)
    vol = op.vol
    grad2 = max(vol * np.vdot(u, -(op.lap @ u)).real, 0.0)
    q2 = vol * np.sum(op.q * np.abs(u) ** 2)
    v2 = vol * np.vdot(v, v).real
    u2 = vol * np.vdot(u, u).real
    a2 = vol * np.sum(op.a * np.abs(u) ** 2)
    return np.sqrt([grad2, q2, v2, u2, a2, grad2 + q2 + v2])


@dataclass
class Trajectory:
    """Norm record along a time grid; ``norms[name]`` aligns with ``t``."""

    t: np.ndarray
    norms: dict
    snapshots: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for k in self.norms:
            if k not in QUANTITIES:
                raise ValidationError(f"unknown quantity {k!r}")

    def rows(self):
        cols = [self.norms.get(k, np.full(self.t.size, np.nan)) for k in QUANTITIES]
        return np.column_stack([self.t, *cols])

    def is_contractive(self, slack=1e-8):
        H = self.norms["H"]
        return bool(np.all(np.diff(H) <= slack * H[:-1]))

    @classmethod
    def from_modes(cls, state, times):
        """Exact constant-damping trajectory from a :class:`fourier.ModeState`."""
        times = np.asarray(times, dtype=float)
        ser = fourier.decay_series(state, times)
        H = np.hypot(ser["grad"], ser["dtu"])
        norms = {"grad": ser["grad"], "qhalf": np.zeros_like(H), "dtu": ser["dtu"],
                 "u": ser["u"], "ahalf": ser["u"], "H": H}
        return cls(times, norms, meta={"model": "fourier", "d": state.d})


def _check_grid(t_grid):
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 2 or np.any(np.diff(t) <= 0):
        raise ValidationError("t_grid must be strictly increasing with >= 2 points")
    return t


class _CNFactor:
    def __init__(self, op, dt):
        n2 = op.dim
        I = sp.identity(n2, format="csc")
        self.lu = spla.splu((I - 0.5 * dt * op.A).tocsc())
        self.B = (I + 0.5 * dt * op.A).tocsr()

    def step(self, U):
        rhs = self.B @ U
        if np.iscomplexobj(rhs):
            return self.lu.solve(rhs.real) + 1j * self.lu.solve(rhs.imag)
        return self.lu.solve(rhs)


def step_cn(op, F, t_grid, snapshot_times=(), record_every=1):
    """Crank-Nicolson ``U_{m+1} = (I - dt/2 A)^{-1} (I + dt/2 A) U_m``.

    One LU factorization per distinct step size (uniform grids factor once;
    geometric grids refactor every step). Norms are recorded on every
    ``record_every``-th grid point, plus the last one.
    """
    if isinstance(F, dz.StateVector):
        F = F.F
    t = _check_grid(t_grid)
    U = np.array(F, dtype=complex if np.iscomplexobj(F) else float)
    if U.shape != (op.dim,):
        raise ValidationError(f"state has shape {U.shape}, operator needs ({op.dim},)")
    dts = np.diff(t)
    uniform = np.allclose(dts, dts[0], rtol=1e-9, atol=0)
    cache = {}
    snaps = {}
    want = sorted(float(s) for s in snapshot_times)
    rec_t, rec = [t[0]], [state_norms(U, op)]
    for m, dt in enumerate(dts, start=1):
        key = float(dts[0]) if uniform else float(dt)
        fac = cache.get(key)
        if fac is None:
            try:
                fac = _CNFactor(op, key)
            except RuntimeError as exc:
                raise NumericalError(f"implicit matrix singular at dt={key}: {exc}") from exc
            cache = {key: fac}
        U = fac.step(U)
        if m % record_every == 0 or m == dts.size:
            rec_t.append(t[m])
            rec.append(state_norms(U, op))
        for s in want:
            if abs(t[m] - s) <= 1e-9 * max(1.0, s):
                snaps[s] = U.copy()
    rec = np.array(rec)
    norms = {k: rec[:, i] for i, k in enumerate(QUANTITIES)}
    meta = {"method": "crank-nicolson", "uniform": bool(uniform), "steps": int(dts.size),
            "lambda1": float(op.lambda1())}
    return Trajectory(np.array(rec_t), norms, snaps, meta)


def cn_state(op, F, t, dt):
    """State at time ``t`` by uniform Crank-Nicolson with step close to ``dt``."""
    steps = max(1, int(np.ceil(t / dt - 1e-12)))
    traj = step_cn(op, F, np.linspace(0.0, t, steps + 1), snapshot_times=(t,),
                   record_every=steps)
    return traj.snapshots[float(t)]


# --------------------------------------------------------------------------
# contour integration
# --------------------------------------------------------------------------

def _smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x**3 * (10 - 15 * x + 6 * x * x)


def _dsmoothstep(x):
    inside = (x > 0) & (x < 1)
    return np.where(inside, 30 * x * x * (1 - x) ** 2, 0.0)


@dataclass(frozen=True)
class ContourSpec:
    """Contour parameters; ``R`` and ``X`` are set from the operator when ``None``.

    ``X`` is the abscissa of the left closing segment; ``nodes`` is the
    Gauss-Legendre order per panel and ``panel`` the initial panel length.
    """

    tau0: float = 1.0
    eps: float = 0.5
    gamma: float = 0.25
    R: float = None
    X: float = None
    nodes: int = 16
    panel: float = 0.25
    tol: float = 1e-10
    max_doublings: int = 6

    def __post_init__(self):
        if not (0 < self.eps <= 1):
            raise ValidationError("need 0 < eps <= 1")
        if not self.gamma > 0:
            raise ValidationError("need gamma > 0")
        if not self.tau0 > 0:
            raise ValidationError("need tau0 > 0")
        if self.R is not None and self.R < 2 * self.tau0:
            raise ValidationError("need R >= 2 tau0")

    def theta(self, tau):
        """Real part of the contour at height ``tau``."""
        s = _smoothstep((np.abs(tau) - self.tau0) / self.tau0)
        return self.eps * (1 - s) - self.gamma * s

    def dtheta(self, tau):
        x = (np.abs(tau) - self.tau0) / self.tau0
        return -(self.eps + self.gamma) * _dsmoothstep(x) * np.sign(tau) / self.tau0


def spectral_box(op):
    """``(R, X)`` with every eigenvalue inside ``|Im| < R``, ``Re > -X``.

    For an eigenpair, ``lam^2 |u|^2 + lam <a u, u> + <K u, u> = 0``
    (``K = -Delta_h + q``). That gives ``|Im lam|^2 <= max K`` and
    ``Re lam >= -max a``.
    """
    lap_diag = -op.lap.diagonal()
    kmax = float(np.max(2 * lap_diag + op.q))     # Gershgorin for -Delta_h + q
    return 1.05 * np.sqrt(kmax) + 1.0, float(np.max(op.a)) + 1.0


def _segments(spec, R, X):
    """Smooth pieces ``(kind, a, b, high)`` of the closed contour, counterclockwise."""
    t0 = spec.tau0
    g = spec.gamma
    right = [(-R, -2 * t0, True), (-2 * t0, -t0, False), (-t0, t0, False),
             (t0, 2 * t0, False), (2 * t0, R, True)]
    segs = [("right", a, b, hi) for a, b, hi in right]
    segs += [("top", -g, -X, True), ("left", R, -R, True), ("bottom", -X, -g, True)]
    return segs


def _param(kind, s, spec, R, X):
    """Point and derivative of the contour piece ``kind`` at parameter ``s``."""
    if kind == "right":
        return spec.theta(s) + 1j * s, spec.dtheta(s) + 1j
    if kind == "top":
        return s + 1j * R, np.ones_like(s, dtype=complex)
    if kind == "bottom":
        return s - 1j * R, np.ones_like(s, dtype=complex)
    return -X + 1j * s, 1j * np.ones_like(s, dtype=complex)


def _panel_nodes(a, b, width, order):
    n = max(1, int(np.ceil(abs(b - a) / width)))
    x, w = roots_legendre(order)
    edges = np.linspace(a, b, n + 1)
    lo, hi = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    weights = 0.5 * (hi - lo) * w
    return nodes.ravel(), np.broadcast_to(weights, nodes.shape).ravel()


@dataclass
class ContourResult:
    U: np.ndarray
    low: np.ndarray
    high: np.ndarray
    drift: float
    nodes: int
    spec: ContourSpec
    R: float
    X: float


def _contour_pass(op, F, t, spec, R, X, width):
    n2 = op.dim
    I = sp.identity(n2, format="csc")
    A = op.A.tocsc()
    low = np.zeros(n2, dtype=complex)
    high = np.zeros(n2, dtype=complex)
    count = 0
    for kind, a, b, is_high in _segments(spec, R, X):
        s, w = _panel_nodes(a, b, width, spec.nodes)
        lam, dlam = _param(kind, s, spec, R, X)
        for lj, dj, wj in zip(lam, dlam, w):
            x = spla.spsolve((lj * I - A).tocsc(), F.astype(complex))
            term = (wj * dj * np.exp(t * lj) / (2j * np.pi)) * x
            if is_high:
                high += term
            else:
                low += term
        count += s.size
    return low, high, count


def contour_propagator(op, F, t, spec=None):
    """``exp(t A_h) F`` as ``(1/2 pi i) closed-integral e^{t lam} (lam - A_h)^{-1} F``.

    Panels are halved until two passes agree to ``spec.tol`` relative in the
    energy norm. Raises ``NumericalError`` when the drift after
    ``max_doublings`` exceeds ``1e-3``. ``high`` is the part carried by
    ``|Im lam| >= 2 tau0`` and the closure, which decays like ``e^{-gamma t}``.
    """
    if isinstance(F, dz.StateVector):
        F = F.F
    if t < 1:
        raise ValidationError("contour_propagator is meant for t >= 1")
    spec = spec or ContourSpec()
    R0, X0 = spectral_box(op)
    R = spec.R if spec.R is not None else max(R0, 2 * spec.tau0)
    X = spec.X if spec.X is not None else X0
    if R < R0:
        raise ValidationError(f"R={R} does not clear the spectral bound {R0:.3g}")
    width = spec.panel
    scale = dz.norm_H(F, op) or 1.0
    prev = None
    drift = np.inf
    for _ in range(spec.max_doublings + 1):
        low, high, count = _contour_pass(op, F, t, spec, R, X, width)
        U = low + high
        if prev is not None:
            drift = dz.norm_H(U - prev, op) / scale
            if drift <= spec.tol:
                break
        prev = U
        width *= 0.5
    if drift > 1e-3:
        raise NumericalError(f"contour quadrature drift {drift:.2e} after "
                             f"{spec.max_doublings} doublings", partial=U)
    if not np.iscomplexobj(F):
        U = U.real
    return ContourResult(U, low, high, float(drift), count, spec, R, X)


# --------------------------------------------------------------------------
# decay fits
# --------------------------------------------------------------------------

def default_window(traj):
    lam1 = traj.meta.get("lambda1")
    hi = 200.0 if lam1 is None else min(200.0, 0.1 / lam1)
    return (10.0, min(hi, float(traj.t[-1])))


def decay_fit(traj, quantity, window=None, points=40):
    """Least-squares slope of ``log(norm)`` against ``log(t)`` over ``window``.

    The trajectory is sampled at the recorded times closest to ``points``
    geometric points in the window.
    """
    if quantity not in QUANTITIES:
        raise ValidationError(f"quantity must be one of {QUANTITIES}")
    lo, hi = default_window(traj) if window is None else window
    if not 0 < lo < hi:
        raise ValidationError("window must satisfy 0 < lo < hi")
    t = traj.t
    y = np.asarray(traj.norms[quantity])
    target = np.geomspace(lo, hi, points)
    idx = np.unique(np.clip(np.searchsorted(t, target), 0, t.size - 1))
    idx = idx[(t[idx] >= lo * (1 - 1e-9)) & (t[idx] <= hi * (1 + 1e-9))]
    if idx.size < 2:
        raise ValidationError("window holds fewer than two recorded times")
    ref = y[0] if y[0] > 0 else np.max(y)
    if np.any(y[idx] < 1e-14 * ref):
        raise NumericalError(f"{quantity} underflows inside the window; shrink it")
    meta = {"quantity": quantity}
    if "lambda1" in traj.meta:
        meta["t_max_valid"] = 0.1 / traj.meta["lambda1"]
    return loglog_fit(t[idx], y[idx], (lo, hi), **meta)


# --------------------------------------------------------------------------
# experiment pipeline
# --------------------------------------------------------------------------

DEFAULTS = {
    "model": "grid",
    "profile": "const1",
    "q": "zero",
    "L": 200.0,
    "N": 3999,
    "dt": 0.05,
    "t_max": 200.0,
    "window": [10.0, 200.0],
    "data": "k",
    "seed": 0,
    "bumps": 4,
    "d": 1,
    "eps": 0.05,
    "j": 0,
    "t_check": 100.0,
}


def config_hash(cfg):
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _slopes(traj, window, names):
    out = {}
    for name in names:
        f = decay_fit(traj, name, window)
        out[name] = {"slope": f.slope, "window": list(f.window), "max_dev": f.max_dev}
    return out


def run_decay_experiment(config):
    """Assemble, generate data, evolve, fit; returns a JSON-ready report.

    ``model='grid'`` steps the 1D finite-difference system with
    Crank-Nicolson from ``make_k_data``; ``model='fourier'`` uses exact
    constant-damping modes with random near-critical data
    (``data='k'``) or shell witness data (``data='witness'``).
    """
    cfg = dict(DEFAULTS)
    unknown = set(config) - set(DEFAULTS)
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    cfg.update(config)
    t_start = time.perf_counter()
    lo, hi = map(float, cfg["window"])
    report = {"config": cfg, "config_hash": config_hash(cfg), "seeds": [cfg["seed"]],
              "constants": {}}
    names = ("grad", "dtu", "u")
    if cfg["model"] == "fourier":
        if cfg["data"] == "witness":
            j, tc = int(cfg["j"]), float(cfg["t_check"])
            s_star = (j + 1) / 2.0
            state = fourier.witness_data(j, tc, s_star - 0.1, s_star + 0.1, d=cfg["d"])
            ratio = fourier.sharpness_ratio(j, tc, state)
            cj = fourier.decay_constant(j)
            report["constants"] = {f"c{j}": cj, "ratio": ratio, f"c{j}_gap": cj - ratio}
        else:
            state = fourier.random_k_data(cfg["seed"], d=cfg["d"], eps=cfg["eps"])
        times = np.geomspace(lo, hi, 40)
        traj = Trajectory.from_modes(state, times)
        report["grid"] = {"model": "fourier", "d": cfg["d"], "nodes": int(state.r.size)}
        report["profile"] = "const1"
    elif cfg["model"] == "grid":
        grid = dz.build_grid(cfg["L"], int(cfg["N"]))
        op = dz.assemble_wave_operator(grid, dz.parse_profile(cfg["profile"]),
                                       dz.parse_profile(cfg["q"]))
        data = dz.make_k_data(cfg["seed"], op, bumps=int(cfg["bumps"]))
        steps = int(round(cfg["t_max"] / cfg["dt"]))
        traj = step_cn(op, data, np.linspace(0.0, steps * cfg["dt"], steps + 1))
        kn = dz.k_norm(data, op)
        ratio = traj.norms["H"] * traj.t / kn
        sel = (traj.t >= lo) & (traj.t <= hi)
        report["constants"] = {"k_norm": kn, "energy_ratio_max": float(ratio[sel].max())}
        report["grid"] = grid.describe()
        report["profile"] = op.profile_tags.get("a", cfg["profile"])
        if hi > 0.1 / traj.meta["lambda1"]:
            report["warning"] = "window exceeds the truncation-valid horizon 0.1/lambda1"
    else:
        raise ValidationError("model must be 'grid' or 'fourier'")
    report["slopes"] = _slopes(traj, (lo, hi), names)
    report["runtime_s"] = time.perf_counter() - t_start
    report["trajectory"] = traj
    return report


def contour_spec_dict(spec):
    return asdict(spec)
