"""Fast invariant checks behind ``dampwave selftest``."""

import numpy as np
from scipy.linalg import expm

from . import discretize as dz
from . import evolve, fourier, kernels, spectral


def _check(name, value, tol):
    return {"name": name, "value": float(value), "tol": float(tol),
            "passed": bool(value <= tol)}


def run(seed=0):
    rng = np.random.default_rng(seed)
    out = []
    grid = dz.build_grid(5.0, 40)
    op = dz.assemble_wave_operator(grid, dz.parse_profile("shifted"), dz.parse_profile("const1"))

    worst = 0.0
    for _ in range(100):
        U = rng.standard_normal(op.dim) + 1j * rng.standard_normal(op.dim)
        _, v = op.split(U)
        lhs = op.inner(op.apply(U), U).real
        rhs = -op.vol * np.sum(op.a * np.abs(v) ** 2)
        worst = max(worst, abs(lhs - rhs) / op.inner(U, U).real)
    out.append(_check("dissipativity identity", worst, 1e-12))

    u = rng.standard_normal(op.n)
    riesz = abs(dz.norm_Wstar(op.stiffness @ u, op) - dz.norm_W(u, op)) / dz.norm_W(u, op)
    out.append(_check("W* Riesz isometry", riesz, 1e-10))

    data = dz.make_k_data(seed, op)
    kd = abs(dz.k_norm(data, op) - dz.k_norm_direct(data, op)) / dz.k_norm(data, op)
    out.append(_check("K norm witness vs direct", kd, 1e-8))

    M = op.dense()
    fs = 0.0
    for _ in range(10):
        lam = complex(rng.uniform(-2, 1), rng.uniform(-5, 5))
        ref = np.linalg.inv(M - lam * np.eye(op.dim))
        fs = max(fs, np.abs(spectral.block_resolvent(op, lam) - ref).max() / np.abs(ref).max())
    out.append(_check("block resolvent formula", fs, 1e-10))

    pe = 0.0
    for _ in range(20):
        r, t = rng.uniform(0, 3), rng.uniform(0, 20)
        ref = expm(t * np.array([[0, 1], [-r * r, -1]]))
        pe = max(pe, np.abs(fourier.mode_propagator(r, t) - ref).max())
    out.append(_check("mode propagator vs expm", pe, 1e-10))

    free = dz.assemble_wave_operator(grid, dz.parse_profile("zero"))
    traj = evolve.step_cn(free, dz.make_k_data(seed, free), np.linspace(0, 5, 101))
    H = traj.norms["H"]
    out.append(_check("CN energy conservation (a=0)", np.abs(H / H[0] - 1).max(), 1e-10))

    dl = rng.standard_normal(199) + 1j * rng.standard_normal(199)
    d = 4 + rng.standard_normal(200) + 1j * rng.standard_normal(200)
    du = rng.standard_normal(199) + 1j * rng.standard_normal(199)
    a = kernels.python_backend.tridiag_inverse_norm(dl, d, du)[0]
    if kernels.compiled_backend is not None:
        b = kernels.compiled_backend.tridiag_inverse_norm(dl, d, du)[0]
    else:
        b = a
    ref = 1.0 / np.linalg.svd(np.diag(d) + np.diag(dl, -1) + np.diag(du, 1),
                              compute_uv=False)[-1]
    out.append(_check("tridiagonal kernels vs SVD",
                      max(abs(a - ref), abs(b - ref)) / ref, 1e-8))
    return out
