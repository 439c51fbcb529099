import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm
from scipy.special import gamma, gammainc

from dampwave import fourier
from dampwave.errors import ValidationError

radii = st.floats(1e-6, 20.0).filter(lambda r: abs(2 * r - 1) > 1e-6)


@settings(max_examples=200, deadline=None)
@given(r=st.floats(0.0, 20.0), t=st.floats(0.0, 30.0))
def test_propagator_matches_expm(r, t):
    P = fourier.mode_propagator(r, t)
    ref = expm(t * np.array([[0.0, 1.0], [-r * r, -1.0]]))
    assert np.abs(P - ref).max() <= 1e-10 * max(1.0, np.abs(ref).max())


def test_propagator_continuous_across_double_root():
    t = 7.0
    P0 = fourier.mode_propagator(0.5, t)
    for dr in (1e-9, -1e-9, 1e-6, -1e-6):
        assert np.abs(fourier.mode_propagator(0.5 + dr, t) - P0).max() < 1e-5
    assert fourier.mode_symbol(0.5).jordan


@settings(max_examples=200, deadline=None)
@given(r1=st.floats(0.0, 10.0), r2=st.floats(0.0, 10.0), t=st.floats(0, 10), s=st.floats(0, 10))
def test_propagator_semigroup(r1, r2, t, s):
    r = np.hypot(r1, r2)
    lhs = fourier.mode_propagator([r1, r2], t + s)
    rhs = fourier.mode_propagator(r, t) @ fourier.mode_propagator(r, s)
    assert np.abs(lhs - rhs).max() <= 1e-10 * max(1.0, np.abs(lhs).max())


@pytest.mark.parametrize("r,t", [(0.1, 2.0), (0.5, 3.0), (0.9, 1.5), (4.0, 0.7)])
def test_propagator_time_derivative(r, t):
    h = 1e-5
    fd = (fourier.mode_propagator(r, t + h) - fourier.mode_propagator(r, t - h)) / (2 * h)
    M = fourier.mode_symbol(r).M
    assert np.abs(fd - M @ fourier.mode_propagator(r, t)).max() < 1e-8


def test_biorthogonality_on_many_frequencies():
    rs = np.geomspace(1e-4, 50, 1000)
    rs = rs[np.abs(2 * rs - 1) > 1e-3]
    worst = 0.0
    for r in rs:
        m = fourier.mode_symbol(r)
        Phi = np.column_stack([m.phi_plus, m.phi_minus])
        Psi = np.vstack([m.psi_plus, m.psi_minus])
        worst = max(worst, np.abs(Psi @ Phi - np.eye(2)).max())
        for lam, phi in ((m.lam_plus, m.phi_plus), (m.lam_minus, m.phi_minus)):
            assert np.abs(m.M @ phi - lam * phi).max() <= 1e-12 * max(1, abs(lam) ** 2)
    assert worst <= 1e-12


@settings(max_examples=200, deadline=None)
@given(r=radii)
def test_eigenvalue_relations(r):
    m = fourier.mode_symbol(r)
    assert abs(m.lam_plus + m.lam_minus + 1) <= 1e-12
    assert abs(m.lam_plus * m.lam_minus - r * r) <= 1e-12 * max(1, r * r)
    assert m.lam_plus.real >= m.lam_minus.real - 1e-15


def test_small_frequency_eigenvalue_no_cancellation():
    # lam_plus = -r^2 - r^4 - 2 r^6 + ...
    r = 1e-6
    assert fourier.mode_symbol(r).lam_plus.real == pytest.approx(-r * r - r**4, rel=1e-14)


@pytest.mark.parametrize("alpha", [0.0, -0.9, 0.5, 2.0])
def test_radial_rule_jacobi_panel(alpha):
    r, w = fourier.radial_rule(r_max=3.0, alpha=alpha, order=20)
    vals = r**alpha * (1 + r) * np.exp(-r)
    # lower incomplete gammas: int_0^3 x^alpha (1 + x) e^{-x} dx
    ref = gammainc(alpha + 1, 3) * gamma(alpha + 1) + gammainc(alpha + 2, 3) * gamma(alpha + 2)
    assert np.sum(w * vals) == pytest.approx(ref, rel=1e-12)


def test_radial_rule_validation():
    with pytest.raises(ValidationError):
        fourier.radial_rule(r_max=1.0, r_min=2.0)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_gaussian_norms(d):
    s = fourier.mode_state(lambda r: np.exp(-r * r / 2), d=d, alpha=d - 1)
    # int_{R^d} e^{-|xi|^2} = pi^(d/2); with |xi|^2 weight: (d/2) pi^(d/2)
    assert s.norm(s.f_hat) ** 2 == pytest.approx(np.pi ** (d / 2), rel=1e-12)
    assert fourier.h_norm(s) ** 2 == pytest.approx(d / 2 * np.pi ** (d / 2), rel=1e-12)


def test_plancherel_against_fft():
    # unitary transform of e^{-x^2/2} is e^{-xi^2/2}; compare with an FFT of the same function
    n, L = 4096, 40.0
    x = (np.arange(n) - n // 2) * (L / n)
    f = np.exp(-x * x / 2)
    fh = np.fft.fftshift(np.fft.fft(np.fft.ifftshift(f))) * (L / n) / np.sqrt(2 * np.pi)
    xi = 2 * np.pi * np.fft.fftshift(np.fft.fftfreq(n, L / n))
    assert np.abs(fh - np.exp(-xi * xi / 2)).max() < 1e-12
    s = fourier.mode_state(lambda r: np.exp(-r * r / 2), d=1)
    assert s.norm(s.f_hat) ** 2 == pytest.approx(np.sum(np.abs(f) ** 2) * L / n, rel=1e-12)


def test_model_decay_initial_values():
    s = fourier.mode_state(lambda r: np.exp(-r * r), lambda r: r * np.exp(-r * r), d=2, alpha=1)
    n = fourier.model_decay(0.0, s)
    assert n.u == pytest.approx(s.norm(s.f_hat), rel=1e-14)
    assert n.dtu == pytest.approx(s.norm(s.g_hat), rel=1e-14)
    assert fourier.model_decay(0.0, s, k_norm_value=2.0).u == pytest.approx(n.u / 2)
    with pytest.raises(ValidationError):
        fourier.model_decay(-1.0, s)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), t=st.floats(0.0, 50.0), dt=st.floats(0.01, 10.0))
def test_energy_nonincreasing(seed, t, dt):
    s = fourier.random_k_data(seed, d=2)

    def energy(tt):
        n = fourier.model_decay(tt, s)
        return n.grad**2 + n.dtu**2

    assert energy(t + dt) <= energy(t) * (1 + 1e-12)


def _mp_difference(r, t, f, g):
    mpmath.mp.dps = 50
    M = mpmath.matrix([[0, 1], [-mpmath.mpf(r) ** 2, -1]])
    P = mpmath.expm(t * M)
    heat = mpmath.e ** (-t * mpmath.mpf(r) ** 2) * (f + g)
    du = P[0, 0] * f + P[0, 1] * g - heat
    dv = P[1, 0] * f + P[1, 1] * g + mpmath.mpf(r) ** 2 * heat
    return complex(du), complex(dv)


@pytest.mark.parametrize("r", [1e-4, 1e-2, 0.1, 0.35, 0.45, 2.0])
@pytest.mark.parametrize("t", [1.0, 30.0])
def test_heat_differences_high_precision(r, t):
    du, dv = fourier._differences(np.array([r]), t, np.array([0.7 + 0j]), np.array([-0.2 + 0j]))
    rdu, rdv = _mp_difference(r, t, mpmath.mpf("0.7"), mpmath.mpf("-0.2"))
    assert abs(du[0] - rdu) <= 1e-10 * abs(rdu) + 1e-300
    assert abs(dv[0] - rdv) <= 1e-10 * abs(rdv) + 1e-300


@settings(max_examples=20, deadline=None)
@given(delta=st.floats(0.01, 2.0), t=st.floats(1.0, 200.0))
def test_comparison_total_independent_of_split(delta, t):
    s = fourier.random_energy_data(1)
    a = fourier.comparison_error(t, s)
    b = fourier.comparison_error(t, s, delta=delta)
    for x, y in ((a.e0, b.e0), (a.e1, b.e1), (a.e2, b.e2)):
        assert x == pytest.approx(y, rel=1e-12)


def test_comparison_rejects_small_t():
    with pytest.raises(ValidationError):
        fourier.comparison_error(0.5, fourier.random_energy_data(0))


@pytest.mark.parametrize("d", [1, 3])
def test_heat_comparison_exponents_at_late_times(d):
    # past the pre-asymptotic range the slopes settle at -(1, 1.5, 2) - eps/2
    eps = 0.1
    s = fourier.random_energy_data(0, d=d, eps=eps)
    times = np.geomspace(1e3, 1e4, 12)
    errs = [fourier.comparison_error(t, s) for t in times]
    for name, p in (("e0", 1.0), ("e1", 1.5), ("e2", 2.0)):
        vals = np.array([getattr(e, name) for e in errs])
        assert fourier.fit_series(times, vals).slope == pytest.approx(-p - eps / 2, abs=0.01)
    assert not any(e.under_resolved for e in errs)


def test_multiplier_error_decays():
    m10, m100 = fourier.multiplier_error(10.0), fourier.multiplier_error(100.0)
    assert all(b < a for a, b in zip(m10, m100))


@pytest.mark.parametrize("j", [0, 1, 2])
def test_constants_match_numerical_maximizer(j):
    s, c = fourier.argmax_shell(j)
    assert s == pytest.approx((j + 1) / 2, abs=1e-7)
    assert c == pytest.approx(fourier.decay_constant(j), rel=1e-12)
    assert fourier.decay_constants()[j] == fourier.decay_constant(j)


@settings(max_examples=40, deadline=None)
@given(j=st.sampled_from([0, 1, 2]), t=st.floats(1.0, 1e3),
       e1=st.floats(0.0, 1.9), w=st.floats(0.01, 1.0))
def test_heat_ratio_bounded_by_constant(j, t, e1, w):
    s = fourier.witness_data(j, t, e1, min(e1 + w, 2.0))
    assert fourier.kk_norm(s) == pytest.approx(1.0, rel=1e-12)
    assert fourier.heat_sharpness_ratio(j, t, s) <= fourier.decay_constant(j) * (1 + 1e-12)


@pytest.mark.parametrize("args", [(3, 10.0, 0.1, 0.2), (0, 10.0, 0.5, 0.5),
                                  (0, 10.0, 0.5, 3.0), (0, 0.5, 0.1, 0.2)])
def test_witness_validation(args):
    with pytest.raises(ValidationError):
        fourier.witness_data(*args)


def test_k_norm_finite_for_critical_data():
    s = fourier.random_k_data(0, eps=0.05)
    assert np.isfinite(fourier.k_norm(s))
    with pytest.raises(ValidationError):
        fourier.critical_profile(0.0)


def test_scaling_keeps_coarse_rule_consistent():
    s = fourier.random_energy_data(2).scaled(3.0)
    assert not fourier.comparison_error(10.0, s).under_resolved
    assert fourier.random_energy_data(2, order=4).meta["coarse"].r.size < 200
