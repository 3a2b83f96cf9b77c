import math
import warnings

import numpy as np
import pytest
from scipy.integrate import quad

from sho_spectra.mehler import (
    FilonScheme,
    QuadratureGrid,
    SampledFunction,
    check_w_derivative_bounds,
    default_grids,
    kernel_matrix,
    kernel_matrix_from_fourier_side,
    legendre_kernel,
    mehler_apply,
    mehler_fock_forward,
    mehler_fock_inverse,
    mehler_identity_residual,
    symmetrized_kernel,
    transformed_gauss_grid,
    trapezoid_grid,
    verify_identity,
    w_tau,
)
from sho_spectra.specfun import conical_legendre_values, m_tau


def small_grids():
    # cheaper than the defaults, still accurate enough for unit checks
    return transformed_gauss_grid(200, 16.0), trapezoid_grid(0.01, 6.0, 0.025)


# ---------------------------------------------------------------------------
# grids


def test_grid_validation():
    with pytest.raises(ValueError):
        QuadratureGrid([1.0, 0.5], [1.0, 1.0])
    with pytest.raises(ValueError):
        QuadratureGrid([0.0, 1.0], [1.0, -1.0])
    with pytest.raises(ValueError):
        QuadratureGrid([0.0, 1.0], [1.0, 1.0], kind="bogus")
    with pytest.raises(ValueError):
        SampledFunction(small_grids()[0], np.zeros(3))


# ---------------------------------------------------------------------------
# kernel operator


def test_apply_zero():
    g = small_grids()[0]
    out = mehler_apply(SampledFunction(g, np.zeros(len(g))))
    assert np.all(out.values == 0.0)


def test_apply_exponential_against_quad_oracle():
    g = small_grids()[0]
    out = mehler_apply(SampledFunction(g, np.exp(-g.nodes)))
    for i in (0, 40, 90, 150):
        t = g.nodes[i]
        ref, _ = quad(lambda s: math.exp(-s) / (2.0 + t + s), 0.0, np.inf, epsabs=1e-13)
        assert out.values[i].real == pytest.approx(ref / math.pi, abs=1e-10)


def test_apply_tail_warning():
    g = small_grids()[0]
    with pytest.warns(UserWarning):
        mehler_apply(SampledFunction(g, np.ones(len(g))))


def test_eigenfunction_identity():
    for tau in (0.5, 1.0, 2.0):
        assert mehler_identity_residual(tau) <= 1e-6


def test_identity_residual_over_tau_range():
    grid = default_grids()[0]
    for tau in np.linspace(0.25, 3.0, 8):
        assert mehler_identity_residual(float(tau), grid) <= 1e-6


def test_symmetrized_kernel_spectrum_in_unit_interval():
    g = small_grids()[0]
    ev = np.linalg.eigvalsh(symmetrized_kernel(g))
    assert ev.min() >= -1e-6
    assert ev.max() <= 1.0 + 1e-6


def test_kernel_matches_fourier_side_form():
    g = small_grids()[0]
    assert np.allclose(kernel_matrix(g), kernel_matrix_from_fourier_side(g), atol=1e-15)


# ---------------------------------------------------------------------------
# transform pair


def gaussian_bump(grid):
    return SampledFunction(grid, np.exp(-(grid.nodes - 2.0) ** 2 / 2.0))


def test_forward_linearity_zero():
    t_grid, tau_grid = small_grids()
    f = gaussian_bump(t_grid)
    zero = mehler_fock_forward(SampledFunction(t_grid, 0.0 * f.values), tau_grid.nodes)
    assert np.all(zero == 0.0)


def test_parseval_gaussian_bump():
    t_grid, tau_grid = default_grids()
    f = gaussian_bump(t_grid)
    ratio = tau_grid.norm(mehler_fock_forward(f, tau_grid.nodes)) / f.norm()
    assert abs(ratio - 1.0) <= 1e-3


def test_diagonalization_pointwise():
    t_grid, tau_grid = default_grids()
    f = gaussian_bump(t_grid)
    taus = tau_grid.nodes
    lhs = mehler_fock_forward(mehler_apply(f), taus)
    rhs = mehler_fock_forward(f, taus) / np.cosh(math.pi * taus)
    assert np.max(np.abs(lhs - rhs)) <= 1e-6


def test_inverse_of_zero():
    _, tau_grid = small_grids()
    out = mehler_fock_inverse(SampledFunction(tau_grid, np.zeros(len(tau_grid))), [0.5, 1.0])
    assert np.all(out == 0.0)


def test_round_trip_gaussian():
    t_grid, tau_grid = default_grids()
    f = gaussian_bump(t_grid)
    g = SampledFunction(tau_grid, mehler_fock_forward(f, tau_grid.nodes))
    back = mehler_fock_inverse(g, t_grid.nodes)
    rel = t_grid.norm(back - f.values) / f.norm()
    assert rel <= 1e-2


def test_inverse_of_damped_transform_matches_apply():
    t_grid, tau_grid = default_grids()
    f = gaussian_bump(t_grid)
    taus = tau_grid.nodes
    damped = mehler_fock_forward(f, taus) / np.cosh(math.pi * taus)
    back = mehler_fock_inverse(SampledFunction(tau_grid, damped), t_grid.nodes)
    target = mehler_apply(f).values
    assert np.max(np.abs(back - target)) <= 1e-4


def test_isometry_improves_under_refinement():
    coarse = verify_identity("unitarity", refined=False)["max_defect"]
    fine = verify_identity("unitarity", refined=True)["max_defect"]
    assert fine < coarse
    assert coarse <= 1e-3
    assert fine <= 1e-4


def test_verify_identity_f1_and_f3():
    assert verify_identity("f1")["max_residual"] <= 1e-6
    assert verify_identity("f3")["max_residual"] <= 1e-6
    with pytest.raises(ValueError):
        verify_identity("f2")


# ---------------------------------------------------------------------------
# w_tau


def w_oracle(tau, lam, phase_cut=5e3):
    # independent check: QAWO quadrature to a large cut plus first-order tail
    T = phase_cut / abs(lam)
    f = lambda t: conical_legendre_values(tau, 1.0 + t)
    re, _ = quad(f, 0.0, T, weight="cos", wvar=lam, limit=800)
    im, _ = quad(f, 0.0, T, weight="sin", wvar=lam, limit=800)
    X = 1.0 + T
    sig = -0.5 + 1j * tau
    m = m_tau(tau)

    def pt(rho, l):
        return np.exp(-1j * l * X) * (X ** rho / (1j * l) + rho * X ** (rho - 1) / (1j * l) ** 2)

    tail = np.exp(1j * lam) * 0.5 * (m * pt(sig, lam) + np.conj(m * pt(sig, -lam)))
    return (re - 1j * im + tail) / math.sqrt(2.0 * math.pi)


def test_w_tau_against_oracle():
    for tau, lam in ((0.5, 1.0), (1.0, -0.3), (2.0, 5.0)):
        assert w_tau(tau, lam) == pytest.approx(w_oracle(tau, lam), abs=5e-3)


def test_w_tau_conjugation():
    for tau in (0.5, 1.5):
        for lam in (0.25, 1.0, 17.0):
            a = w_tau(tau, -lam)
            b = np.conj(w_tau(tau, lam))
            assert a == pytest.approx(b, abs=1e-13)


def test_w_tau_rejects_zero_lambda():
    with pytest.raises(ValueError):
        w_tau(1.0, 0.0)


def test_w_large_lambda_bound():
    lams = np.geomspace(1.0, 100.0, 7)
    for tau in (0.5, 1.5, 3.0):
        vals = np.array([abs(w_tau(tau, l)) * l for l in lams])
        assert np.max(vals) <= 1.0


def test_w_small_lambda_bound():
    lams = np.geomspace(1e-4, 0.5, 7)
    for tau in (0.5, 1.5, 3.0):
        vals = np.array([abs(w_tau(tau, l)) * math.sqrt(l) for l in lams])
        assert np.max(vals) <= 2.0


def test_w_derivative_bounds_report():
    rep = check_w_derivative_bounds([1.0], [2.0, 1e-3])
    assert rep["violations"] == []
    assert 0.0 < rep["sup_w_times_lambda"] < 2.0
    assert 0.0 < rep["sup_dw_log_weighted"] < 5.0


def test_w_derivative_bounds_zero_harness():
    zero = lambda tau, lam, scheme: 0.0j
    rep = check_w_derivative_bounds([1.0], [2.0, 1e-3], eval_fn=zero)
    assert rep["violations"] == []
    assert rep["sup_w_times_lambda"] == 0.0
    assert rep["sup_w_times_sqrt_lambda"] == 0.0


def test_filon_scheme_refinement_stability():
    sch = FilonScheme()
    ref = sch.refine()
    for tau, lam in ((0.5, 0.01), (1.5, 1.0), (3.0, 30.0)):
        a, b = w_tau(tau, lam, sch), w_tau(tau, lam, ref)
        assert abs(a - b) <= 0.05 * abs(b)
