"""Grids, coefficient fields, the discrete damped wave operator and its norms.

The continuous operator acts on pairs ``U = (f, g)`` as
``A U = (g, (Delta - q) f - a g)``. On a grid with Dirichlet truncation it
becomes the block matrix ``A_h = [[0, I], [Delta_h - q, -a]]`` and the
energy inner product is realized by ``G = blockdiag(G_W, G_L2)`` with
``G_W = vol * (-Delta_h + q)`` and ``G_L2 = vol * I`` (``vol`` is the cell
volume). With this choice ``Re <A_h U, U>_G = -vol * sum(a |v|^2)`` holds
exactly, not just up to discretization error.

Classes
-------
Grid1D, StripGrid
    Truncated computational domains.
Profile, CoefficientField
    Coefficient profiles and their samples on a grid.
WaveOperator, SchurComplement, StateVector
    Assembled discrete objects.

Functions
---------
build_grid, build_cell_grid, build_strip_grid, parse_profile,
sample_coefficient, assemble_laplacian, assemble_wave_operator,
assemble_schur, norm_H, norm_W, norm_L2, norm_Dt, norm_Wstar, k_norm,
k_norm_direct, make_k_data
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ValidationError


# --------------------------------------------------------------------------
# grids
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Grid1D:
    """Uniform grid on ``(-L, L)``.

    ``kind="vertex"``: interior nodes ``x_i = -L + i h``, ``i = 1..N``,
    ``h = 2L/(N+1)``, zero Dirichlet values at ``+-L`` implied.
    ``kind="cell"``: cell centres ``x_i = -L + (i + 1/2) h``, ``h = 2L/N``,
    used for the Neumann Laplacian.
    """

    L: float
    N: int
    kind: str = "vertex"

    @property
    def h(self):
        if self.kind == "cell":
            return 2.0 * self.L / self.N
        return 2.0 * self.L / (self.N + 1)

    @cached_property
    def x(self):
        if self.kind == "cell":
            return -self.L + (np.arange(self.N) + 0.5) * self.h
        return -self.L + np.arange(1, self.N + 1) * self.h

    @property
    def size(self):
        return self.N

    @property
    def vol(self):
        return self.h

    def describe(self):
        return {"type": "line", "L": self.L, "N": self.N, "h": self.h, "kind": self.kind}


@dataclass(frozen=True)
class StripGrid:
    """Tensor grid on ``(-L, L) x (-1, 1)``, Dirichlet on all sides.

    Unknowns are ordered x-major: flat index ``k = i * M + m`` for x node
    ``i`` and y node ``m``.
    """

    xgrid: Grid1D
    M: int

    @property
    def hy(self):
        return 2.0 / (self.M + 1)

    @cached_property
    def y(self):
        return -1.0 + np.arange(1, self.M + 1) * self.hy

    @property
    def size(self):
        return self.xgrid.N * self.M

    @property
    def vol(self):
        return self.xgrid.h * self.hy

    @property
    def x(self):
        """x coordinate of every unknown (length ``N*M``)."""
        return np.repeat(self.xgrid.x, self.M)

    def describe(self):
        return {"type": "strip", "L": self.xgrid.L, "N": self.xgrid.N, "M": self.M,
                "h": self.xgrid.h, "hy": self.hy}


def build_grid(L, N):
    """Vertex grid with ``N`` interior nodes on ``(-L, L)``."""
    if not (L > 0):
        raise ValidationError(f"half-width L must be positive, got {L}")
    if int(N) != N or N < 3:
        raise ValidationError(f"need N >= 3 interior nodes, got {N}")
    return Grid1D(float(L), int(N), "vertex")


def build_cell_grid(L, N):
    """Cell-centred grid of ``N`` cells on ``(-L, L)``."""
    if not (L > 0):
        raise ValidationError(f"half-width L must be positive, got {L}")
    if int(N) != N or N < 3:
        raise ValidationError(f"need N >= 3 cells, got {N}")
    return Grid1D(float(L), int(N), "cell")


def build_strip_grid(L, N, M):
    if int(M) != M or M < 3:
        raise ValidationError(f"need M >= 3 transverse nodes, got {M}")
    return StripGrid(build_grid(L, N), int(M))


# --------------------------------------------------------------------------
# coefficients
# --------------------------------------------------------------------------

PROFILE_KINDS = ("constant", "power", "bracket", "quadratic", "shifted", "composite")


@dataclass(frozen=True)
class Profile:
    """A coefficient profile of the variable ``x``.

    kinds: ``constant`` (c), ``power`` (c |x|^beta), ``bracket``
    (c (1 + x^2)^(beta/2)), ``quadratic`` (2 x^2), ``shifted`` (x^2 + 1),
    ``composite`` (c |x|^beta on ``|x| < radius``, ``outer`` elsewhere).
    The composite profile vanishes only on a bounded set and is bounded
    below by ``outer > 0`` outside it.
    """

    kind: str
    c: float = 1.0
    beta: float = 2.0
    radius: float = 1.0
    outer: float = 1.0

    def __post_init__(self):
        if self.kind not in PROFILE_KINDS:
            raise ValidationError(f"unknown profile kind {self.kind!r}")
        if self.c < 0:
            raise ValidationError("profile amplitude must be nonnegative")
        if self.kind in ("power", "bracket", "composite") and not self.beta > 0:
            raise ValidationError(f"profile exponent must be positive, got {self.beta}")
        if self.kind == "composite":
            if not (self.outer > 0 and self.c > 0 and self.radius > 0):
                raise ValidationError("composite profile needs outer > 0 and a "
                                      "positive inner integral")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.full_like(x, self.c)
        if self.kind == "power":
            return self.c * np.abs(x) ** self.beta
        if self.kind == "bracket":
            return self.c * (1.0 + x * x) ** (0.5 * self.beta)
        if self.kind == "quadratic":
            return 2.0 * x * x
        if self.kind == "shifted":
            return x * x + 1.0
        inner = np.abs(x) < self.radius
        return np.where(inner, self.c * np.abs(x) ** self.beta, self.outer)

    def tag(self):
        return {"kind": self.kind, "c": self.c, "beta": self.beta,
                "radius": self.radius, "outer": self.outer}


_NAMED = {
    "zero": Profile("constant", c=0.0),
    "const1": Profile("constant", c=1.0),
    "quad2": Profile("quadratic"),
    "shifted": Profile("shifted"),
    "composite": Profile("composite", c=1.0, beta=2.0, radius=1.0, outer=1.0),
}


def parse_profile(spec):
    """Profile from a short name.

    Accepted: ``zero``, ``const<c>``, ``quad2``, ``shifted``, ``composite``,
    ``power<beta>``, ``bracket<beta>``; a :class:`Profile` passes through.
    """
    if isinstance(spec, Profile):
        return spec
    if isinstance(spec, dict):
        return Profile(**spec)
    s = str(spec).strip().lower()
    if s in _NAMED:
        return _NAMED[s]
    for prefix, kind in (("const", "constant"), ("power", "power"), ("bracket", "bracket")):
        if s.startswith(prefix):
            try:
                val = float(s[len(prefix):])
            except ValueError:
                break
            if kind == "constant":
                return Profile(kind, c=val)
            return Profile(kind, beta=val)
    raise ValidationError(f"unknown profile {spec!r}")


@dataclass(frozen=True)
class CoefficientField:
    """Samples of a profile at the unknowns of a grid."""

    profile: Profile
    values: np.ndarray
    grid: object

    def __post_init__(self):
        if np.any(self.values < 0) or not np.all(np.isfinite(self.values)):
            raise ValidationError("coefficient samples must be finite and nonnegative")


def sample_coefficient(profile, grid):
    """Evaluate ``profile`` pointwise at the grid unknowns."""
    profile = parse_profile(profile)
    vals = profile(grid.x)
    vals = np.asarray(vals, dtype=float)
    vals.setflags(write=False)
    return CoefficientField(profile, vals, grid)


# --------------------------------------------------------------------------
# operators
# --------------------------------------------------------------------------

def _lap1d(grid, bc="dirichlet"):
    n, h = grid.N, grid.h
    main = -2.0 * np.ones(n)
    if bc == "neumann":
        main[0] = main[-1] = -1.0
    off = np.ones(n - 1)
    return sp.diags([off, main, off], [-1, 0, 1], format="csr") / (h * h)


def assemble_laplacian(grid, bc="dirichlet"):
    """Second-order centred Laplacian (sparse, symmetric).

    ``bc="dirichlet"`` on a vertex grid gives ``(1, -2, 1)/h^2``.
    ``bc="neumann"`` reflects at the outer cell faces, so the first and
    last diagonal entries become ``-1/h^2``; constants are in the kernel.
    Strip grids support Dirichlet only.
    """
    bc = bc.lower()
    if bc not in ("dirichlet", "neumann"):
        raise ValidationError(f"unknown boundary condition {bc!r}")
    if isinstance(grid, StripGrid):
        if bc != "dirichlet":
            raise ValidationError("strip grids are Dirichlet only")
        lx = _lap1d(grid.xgrid)
        ly = _lap1d(Grid1D(1.0, grid.M, "vertex"))
        return (sp.kron(lx, sp.identity(grid.M)) +
                sp.kron(sp.identity(grid.xgrid.N), ly)).tocsr()
    if bc == "neumann" and grid.kind != "cell":
        raise ValidationError("Neumann Laplacian needs a cell-centred grid (build_cell_grid)")
    if bc == "dirichlet" and grid.kind != "vertex":
        raise ValidationError("Dirichlet Laplacian needs a vertex grid (build_grid)")
    return _lap1d(grid, bc)


def _values(field_or_array, grid, name):
    if field_or_array is None:
        return np.zeros(grid.size)
    if isinstance(field_or_array, CoefficientField):
        if field_or_array.grid != grid:
            raise ValidationError(f"coefficient {name} was sampled on a different grid")
        vals = field_or_array.values
    elif isinstance(field_or_array, (Profile, str)):
        vals = sample_coefficient(field_or_array, grid).values
    else:
        vals = np.asarray(field_or_array, dtype=float)
    if vals.shape != (grid.size,):
        raise ValidationError(f"coefficient {name} has {vals.shape} samples, grid has {grid.size}")
    if np.any(vals < 0):
        raise ValidationError(f"coefficient {name} must be nonnegative")
    return vals


@dataclass(frozen=True, eq=False)
class WaveOperator:
    """Discrete generator ``A_h`` with its energy Gram matrix ``G``.

    Attributes
    ----------
    grid : Grid1D or StripGrid
    a, q : ndarray
        Damping and potential samples.
    lap : sparse matrix
        Dirichlet Laplacian ``Delta_h``.
    A, G, GW : sparse matrices
        Generator (size ``2n``), full Gram matrix and its ``W`` block.
    """

    grid: object
    a: np.ndarray
    q: np.ndarray
    lap: sp.spmatrix
    A: sp.spmatrix
    G: sp.spmatrix
    GW: sp.spmatrix
    profile_tags: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.grid.size

    @property
    def dim(self):
        return 2 * self.grid.size

    @property
    def vol(self):
        return self.grid.vol

    @cached_property
    def stiffness(self):
        """``-Delta_h + q`` (sparse, SPD)."""
        return (-self.lap + sp.diags(self.q)).tocsc()

    @cached_property
    def stiffness_lu(self):
        return spla.splu(self.stiffness)

    def dense(self):
        return self.A.toarray()

    def apply(self, U):
        return self.A @ U

    def split(self, U):
        U = np.asarray(U)
        return U[: self.n], U[self.n:]

    def inner(self, U, V):
        """``<U, V>_G = V^H G U``."""
        return np.vdot(V, self.G @ U)

    def lambda1(self):
        """Smallest eigenvalue of ``-Delta_h + q``."""
        if isinstance(self.grid, Grid1D) and not np.any(self.q):
            h, L = self.grid.h, self.grid.L
            return (2.0 / h**2) * (1.0 - np.cos(np.pi * h / (2.0 * L)))
        vals = spla.eigsh(self.stiffness, k=1, sigma=0, which="LM",
                          return_eigenvectors=False)
        return float(vals[0])

    def describe(self):
        return {"grid": self.grid.describe(), **self.profile_tags}


def assemble_wave_operator(grid, a, q=None):
    """Assemble ``A_h = [[0, I], [Delta_h - q, -a]]`` and ``G``."""
    av = _values(a, grid, "a")
    qv = _values(q, grid, "q")
    lap = assemble_laplacian(grid, "dirichlet")
    n = grid.size
    A = sp.bmat([[None, sp.identity(n)], [lap - sp.diags(qv), -sp.diags(av)]],
                format="csr")
    GW = (grid.vol * (-lap + sp.diags(qv))).tocsr()
    G = sp.block_diag([GW, grid.vol * sp.identity(n)], format="csr")
    tags = {}
    for name, obj in (("a", a), ("q", q)):
        if isinstance(obj, CoefficientField):
            tags[name] = obj.profile.tag()
        elif isinstance(obj, (Profile, str)):
            tags[name] = parse_profile(obj).tag()
    return WaveOperator(grid, av, qv, lap, A, G, GW, tags)


@dataclass(frozen=True, eq=False)
class SchurComplement:
    """``T_lam = -Delta_h + q + lam a + lam^2`` (complex symmetric)."""

    lam: complex
    T: sp.spmatrix
    grid: object

    def tridiagonal(self):
        """``(dl, d, du)`` for 1D grids."""
        if not isinstance(self.grid, Grid1D):
            raise ValidationError("tridiagonal form exists for 1D grids only")
        T = self.T.tocsr()
        return T.diagonal(-1), T.diagonal(0), T.diagonal(1)


def assemble_schur(grid_or_op, a=None, q=None, lam=0.0):
    """Schur complement at ``lam``; accepts a grid plus coefficients or an operator."""
    if isinstance(grid_or_op, WaveOperator):
        op = grid_or_op
        grid, av, qv, lap = op.grid, op.a, op.q, op.lap
    else:
        grid = grid_or_op
        av = _values(a, grid, "a")
        qv = _values(q, grid, "q")
        lap = assemble_laplacian(grid, "dirichlet")
    lam = complex(lam)
    T = (-lap + sp.diags(qv + lam * av + lam * lam)).astype(complex).tocsr()
    return SchurComplement(lam, T, grid)


# --------------------------------------------------------------------------
# norms
# --------------------------------------------------------------------------

def norm_L2(f, op):
    f = np.asarray(f)
    return float(np.sqrt(op.vol * np.vdot(f, f).real))


def norm_W(f, op):
    """``(||grad f||^2 + ||q^(1/2) f||^2)^(1/2)``."""
    f = np.asarray(f)
    return float(np.sqrt(max(np.vdot(f, op.GW @ f).real, 0.0)))


def norm_H(F, op):
    f, g = op.split(F)
    return float(np.hypot(norm_W(f, op), norm_L2(g, op)))


def norm_Dt(f, op):
    """``(||f||_W^2 + ||a^(1/2) f||^2 + ||f||^2)^(1/2)``."""
    f = np.asarray(f)
    w2 = norm_W(f, op) ** 2
    a2 = op.vol * np.sum(op.a * np.abs(f) ** 2)
    return float(np.sqrt(w2 + a2 + norm_L2(f, op) ** 2))


def norm_Wstar(w, op):
    """Dual norm ``||(Delta_h - q)^{-1} w||_W`` (one SPD solve)."""
    w = np.asarray(w)
    if not np.any(w):
        return 0.0
    u = op.stiffness_lu.solve(w.astype(complex) if np.iscomplexobj(w) else w)
    return norm_W(u, op)


@dataclass(frozen=True, eq=False)
class StateVector:
    """Initial data ``F = (f, g)`` with an optional witness ``G``, ``A_h G = F``."""

    F: np.ndarray
    witness: np.ndarray = None
    seed: int = None

    def scaled(self, c):
        w = None if self.witness is None else c * self.witness
        return StateVector(c * self.F, w, self.seed)


def k_norm(state, op):
    """``(||F||_H^2 + ||A_h^{-1} F||_H^2)^(1/2)`` from the witness."""
    if not isinstance(state, StateVector) or state.witness is None:
        raise ValidationError("k_norm needs a StateVector with a witness; "
                              "generate data with make_k_data")
    return float(np.hypot(norm_H(state.F, op), norm_H(state.witness, op)))


def k_norm_direct(F, op):
    """``(||F||_H^2 + ||f||^2 + ||a f + g||_{W*}^2)^(1/2)`` without a witness."""
    if isinstance(F, StateVector):
        F = F.F
    f, g = op.split(F)
    return float(np.sqrt(norm_H(F, op) ** 2 + norm_L2(f, op) ** 2 +
                         norm_Wstar(op.a * f + g, op) ** 2))


def _smooth_random(rng, x, bumps, span, width):
    out = np.zeros_like(x)
    for _ in range(bumps):
        c = rng.standard_normal()
        x0 = rng.uniform(-span, span)
        out += c * np.exp(-0.5 * ((x - x0) / width) ** 2)
    return out


def make_k_data(seed, op, bumps=4, span=None, width=None):
    """Reproducible data in the range of ``A_h``: ``F = A_h G``.

    ``G = (f_G, v_G)`` are sums of Gaussian bumps with random amplitudes
    and centres, which keeps the data smooth on the grid.
    """
    rng = np.random.default_rng(seed)
    grid = op.grid
    L = grid.xgrid.L if isinstance(grid, StripGrid) else grid.L
    h = grid.xgrid.h if isinstance(grid, StripGrid) else grid.h
    if span is None:
        span = min(0.25 * L, 4.0)
    if width is None:
        width = max(min(1.0, 0.1 * L), 4 * h)
    x = grid.x
    parts = []
    for _ in range(2):
        p = _smooth_random(rng, x, bumps, span, width)
        if isinstance(grid, StripGrid):
            m = rng.integers(1, 3)
            p = p * np.tile(np.sin(0.5 * m * np.pi * (grid.y + 1.0)), grid.xgrid.N)
        parts.append(p)
    Gw = np.concatenate(parts)
    Gw.setflags(write=False)
    F = op.A @ Gw
    F.setflags(write=False)
    return StateVector(F, Gw, seed)
