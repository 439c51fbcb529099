import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings, strategies as st

from dampwave import discretize as dz
from dampwave.errors import ValidationError


def test_grid_nodes():
    g = dz.build_grid(2.0, 7)
    assert g.h == pytest.approx(0.5)
    assert np.allclose(g.x, np.linspace(-1.5, 1.5, 7))


@pytest.mark.parametrize("L,N", [(0.0, 10), (-1.0, 10), (1.0, 2), (1.0, 3.5)])
def test_grid_rejects_bad_input(L, N):
    with pytest.raises(ValidationError):
        dz.build_grid(L, N)


@pytest.mark.parametrize("name,x,expected", [
    ("const1", 3.0, 1.0), ("zero", 3.0, 0.0), ("quad2", 3.0, 18.0),
    ("shifted", 3.0, 10.0), ("power2", -3.0, 9.0), ("bracket2", 3.0, 10.0),
    ("composite", 0.5, 0.25), ("composite", 3.0, 1.0),
])
def test_named_profiles(name, x, expected):
    assert float(dz.parse_profile(name)(np.array(x))) == pytest.approx(expected)


@pytest.mark.parametrize("bad", ["wobble", "powerx", {"kind": "constant", "c": -1.0}])
def test_profile_rejects(bad):
    with pytest.raises(ValidationError):
        dz.parse_profile(bad)


def test_laplacian_spectrum_closed_form():
    from dampwave.spectral import dirichlet_laplacian_eigs
    g = dz.build_grid(3.0, 50)
    ev = np.linalg.eigvalsh(-dz.assemble_laplacian(g).toarray())
    assert np.allclose(ev, dirichlet_laplacian_eigs(g), rtol=1e-12)


def test_neumann_kernel_is_constants():
    g = dz.build_cell_grid(1.0, 30)
    lap = dz.assemble_laplacian(g, "neumann")
    assert np.abs(lap @ np.ones(30)).max() < 1e-10
    with pytest.raises(ValidationError):
        dz.assemble_laplacian(dz.build_grid(1.0, 30), "neumann")


def test_strip_laplacian_is_kron_sum():
    sg = dz.build_strip_grid(2.0, 6, 5)
    lap = dz.assemble_laplacian(sg).toarray()
    ex = np.linalg.eigvalsh(-dz.assemble_laplacian(sg.xgrid).toarray())
    ey = np.linalg.eigvalsh(-dz.assemble_laplacian(dz.build_grid(1.0, 5)).toarray())
    assert np.allclose(np.sort(np.linalg.eigvalsh(-lap)), np.sort(np.add.outer(ex, ey).ravel()))


def test_operator_block_structure(small_op):
    n = small_op.n
    A = small_op.dense()
    assert np.array_equal(A[:n, :n], np.zeros((n, n)))
    assert np.array_equal(A[:n, n:], np.eye(n))
    assert np.allclose(np.diag(A[n:, n:]), -small_op.a)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_dissipation_identity(small_op, seed):
    rng = np.random.default_rng(seed)
    U = rng.standard_normal(small_op.dim) + 1j * rng.standard_normal(small_op.dim)
    _, v = small_op.split(U)
    lhs = small_op.inner(small_op.apply(U), U).real
    rhs = -small_op.vol * np.sum(small_op.a * np.abs(v) ** 2)
    assert abs(lhs - rhs) <= 1e-12 * small_op.inner(U, U).real


def test_riesz_map_is_isometry(small_op, rng):
    # ||w||_{W*} = sup |<w, f>| / ||f||_W, attained by the Riesz representer
    w = rng.standard_normal(small_op.n)
    C = np.linalg.cholesky(small_op.GW.toarray())
    # dual norm of the functional f -> vol * <w, f>
    dual = np.linalg.norm(sla.solve_triangular(C, small_op.vol * w, lower=True))
    assert dz.norm_Wstar(w, small_op) == pytest.approx(dual, rel=1e-10)


def test_norms_are_consistent(small_op, rng):
    F = rng.standard_normal(small_op.dim)
    f, g = small_op.split(F)
    assert dz.norm_H(F, small_op) ** 2 == pytest.approx(
        small_op.inner(F, F).real, rel=1e-12)
    assert dz.norm_Dt(f, small_op) ** 2 == pytest.approx(
        dz.norm_W(f, small_op) ** 2 + dz.norm_L2(f, small_op) ** 2
        + small_op.vol * np.sum(small_op.a * f * f), rel=1e-12)


def test_k_norm_witness_equals_direct(small_op):
    data = dz.make_k_data(3, small_op)
    assert np.allclose(small_op.apply(data.witness), data.F)
    assert dz.k_norm(data, small_op) == pytest.approx(dz.k_norm_direct(data, small_op), rel=1e-8)
    with pytest.raises(ValidationError):
        dz.k_norm(dz.StateVector(data.F), small_op)


def test_k_data_reproducible(small_op):
    a, b = dz.make_k_data(7, small_op), dz.make_k_data(7, small_op)
    assert np.array_equal(a.F, b.F)
    assert not np.array_equal(a.F, dz.make_k_data(8, small_op).F)


def test_schur_complement_factorizes_resolvent(small_op):
    lam = 0.3 + 1.7j
    T = dz.assemble_schur(small_op, lam=lam).T.toarray()
    n = small_op.n
    ref = -(small_op.lap.toarray() - np.diag(small_op.q) - lam * np.diag(small_op.a)
            - lam**2 * np.eye(n))
    assert np.allclose(T, ref, atol=1e-12)
    # A - lam is singular exactly when T_lam is
    M = small_op.dense() - lam * np.eye(small_op.dim)
    assert np.linalg.det(M) / np.linalg.det(T) == pytest.approx(1.0, rel=1e-8)


def test_wave_operator_rejects_foreign_samples():
    g1, g2 = dz.build_grid(1.0, 10), dz.build_grid(2.0, 10)
    with pytest.raises(ValidationError):
        dz.assemble_wave_operator(g1, dz.sample_coefficient("const1", g2))


def test_lambda1_closed_form_matches_eigsh():
    op = dz.assemble_wave_operator(dz.build_grid(4.0, 80), "const1")
    ref = np.linalg.eigvalsh(op.stiffness.toarray())[0]
    assert op.lambda1() == pytest.approx(ref, rel=1e-10)
