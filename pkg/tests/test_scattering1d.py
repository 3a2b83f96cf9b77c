import math

import numpy as np
import pytest

from sho_spectra.scattering1d import (
    BandEdgeError,
    LatticeModel,
    ScatteringData,
    momentum,
    sigma_scan,
    smatrix,
    transfer_matrix,
)


def scattering_oracle(model, lam):
    """Independent linear-solve oracle for (t, r).

    Solves (H - lam) u = 0 on a box with plane-wave matching rows instead of
    transfer-matrix products: unknowns are the interior amplitudes plus r, t.
    """
    k = math.acos(lam / 2.0)
    supp = model.support or (0, 0)
    B = max(abs(supp[0]), abs(supp[1])) + 3
    interior = list(range(-B + 1, B))          # unknown u_n on the interior
    nun = len(interior)
    A = np.zeros((nun + 2, nun + 2), dtype=complex)
    b = np.zeros(nun + 2, dtype=complex)
    idx = {n: i for i, n in enumerate(interior)}
    ir, it = nun, nun + 1

    def add_u(row, n, coeff):
        # u_n as unknown, or via the scattering ansatz outside the interior
        if n in idx:
            A[row, idx[n]] += coeff
        elif n <= -B:
            b[row] -= coeff * np.exp(1j * k * n)
            A[row, ir] += coeff * np.exp(-1j * k * n)
        else:
            A[row, it] += coeff * np.exp(1j * k * n)

    row = 0
    for n in range(-B, B + 1):
        if n not in idx and n not in (-B, B):
            continue
        v = model.potential.get(n, 0.0)
        add_u(row, n + 1, 1.0)
        add_u(row, n - 1, 1.0)
        add_u(row, n, v - lam)
        row += 1
    sol = np.linalg.solve(A[:row, :], b[:row])
    return sol[it], sol[ir]


def test_free_transfer_is_identity():
    M = transfer_matrix(LatticeModel(), 0.7)
    assert np.max(np.abs(M - np.eye(2))) <= 1e-14


def test_free_smatrix_identity():
    sd = smatrix(LatticeModel(), -0.3)
    assert np.max(np.abs(sd.S - np.eye(2))) <= 1e-14
    assert np.max(np.abs(sd.sigmas - 1.0)) <= 1e-14


def test_transfer_determinant_one():
    rng = np.random.default_rng(3)
    for _ in range(50):
        sites = rng.integers(-4, 5, size=rng.integers(1, 4))
        model = LatticeModel({int(n): float(rng.normal()) for n in sites})
        lam = float(rng.uniform(-1.9, 1.9))
        M = transfer_matrix(model, lam)
        assert abs(np.linalg.det(M) - 1.0) <= 1e-12


def test_single_site_transfer_value():
    # hand product for v at n=0, lam=0 (k = pi/2): M = [[1+i, i], [-i, 1-i]]
    M = transfer_matrix(LatticeModel.single_site(2.0), 0.0)
    expect = np.array([[1.0 + 1.0j, 1.0j], [-1.0j, 1.0 - 1.0j]])
    assert np.max(np.abs(M - expect)) <= 1e-13


def test_single_site_against_linear_solve_oracle():
    rng = np.random.default_rng(5)
    for _ in range(20):
        model = LatticeModel({int(rng.integers(-3, 4)): float(rng.normal())})
        lam = float(rng.uniform(-1.8, 1.8))
        sd = smatrix(model, lam)
        t_ref, r_ref = scattering_oracle(model, lam)
        assert sd.S[0, 0] == pytest.approx(t_ref, abs=1e-10)
        assert sd.S[1, 0] == pytest.approx(r_ref, abs=1e-10)


def test_multi_site_against_linear_solve_oracle():
    rng = np.random.default_rng(6)
    for _ in range(10):
        model = LatticeModel({n: float(rng.normal()) for n in range(-2, 3)})
        lam = float(rng.uniform(-1.8, 1.8))
        sd = smatrix(model, lam)
        t_ref, r_ref = scattering_oracle(model, lam)
        assert sd.S[0, 0] == pytest.approx(t_ref, abs=1e-10)
        assert sd.S[1, 0] == pytest.approx(r_ref, abs=1e-10)


def test_single_site_sigma_closed_form():
    # |sigma1 - 1| = 2|v|/sqrt(4 sin^2 k + v^2); at lam=0, v=2 this is sqrt(2)
    sd = smatrix(LatticeModel.single_site(2.0), 0.0)
    assert abs(sd.sigmas[0] - 1.0) == pytest.approx(math.sqrt(2.0), abs=1e-12)
    assert sd.sigmas[1] == pytest.approx(1.0, abs=1e-12)
    for v, lam in ((0.5, 0.3), (-1.5, -0.8), (3.0, 1.2)):
        sd = smatrix(LatticeModel.single_site(v), lam)
        k = momentum(lam)
        expect = 2 * abs(v) / math.sqrt(4 * math.sin(k) ** 2 + v * v)
        assert abs(sd.sigmas[0] - 1.0) == pytest.approx(expect, abs=1e-12)


def test_unitarity_random_models():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(1000):
        width = int(rng.integers(1, 5))
        start = int(rng.integers(-5, 3))
        model = LatticeModel({start + j: float(rng.normal(scale=1.5)) for j in range(width)})
        lam = float(rng.uniform(-1.95, 1.95))
        sd = smatrix(model, lam)
        worst = max(worst, sd.unitarity_defect)
        assert np.max(np.abs(np.abs(sd.sigmas) - 1.0)) <= 1e-10
    assert worst <= 1e-10


def test_flux_and_reciprocity():
    rng = np.random.default_rng(12)
    for _ in range(100):
        model = LatticeModel({int(n): float(rng.normal()) for n in rng.integers(-4, 5, size=3)})
        lam = float(rng.uniform(-1.9, 1.9))
        sd = smatrix(model, lam)
        t, rp, r, t2 = sd.S[0, 0], sd.S[0, 1], sd.S[1, 0], sd.S[1, 1]
        assert abs(t - t2) <= 1e-12                      # equal diagonal
        assert abs(abs(t) ** 2 + abs(r) ** 2 - 1.0) <= 1e-10


def test_parity_symmetric_potential():
    model = LatticeModel({-1: 0.7, 0: -0.4, 1: 0.7})
    sd = smatrix(model, 0.9)
    swap = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert np.max(np.abs(sd.S @ swap - swap @ sd.S)) <= 1e-10
    # eigenvectors are (1, 1) and (1, -1)
    for vec in (np.array([1.0, 1.0]), np.array([1.0, -1.0])):
        out = sd.S @ vec
        ratio = out[0] / vec[0]
        assert np.max(np.abs(out - ratio * vec)) <= 1e-10


def test_eigenvalue_sorting():
    rng = np.random.default_rng(13)
    for _ in range(50):
        model = LatticeModel({0: float(rng.normal()), 2: float(rng.normal())})
        sd = smatrix(model, float(rng.uniform(-1.5, 1.5)))
        assert abs(sd.sigmas[0] - 1.0) >= abs(sd.sigmas[1] - 1.0) - 1e-15


def test_band_edge_guard():
    with pytest.raises(BandEdgeError):
        momentum(2.0)
    with pytest.raises(BandEdgeError):
        momentum(-2.0000001)
    with pytest.raises(BandEdgeError):
        smatrix(LatticeModel.single_site(1.0), 1.9999999999999)


def test_scan_free_model():
    out = sigma_scan(LatticeModel(), np.linspace(-1.9, 1.9, 20))
    for row in out["rows"]:
        assert abs(row["sigma1"] - 1.0) <= 1e-13
        assert abs(row["sigma2"] - 1.0) <= 1e-13


def test_scan_single_site_continuity():
    grid = np.arange(-1.9, 1.9001, 0.01)
    out = sigma_scan(LatticeModel.single_site(2.0), grid)
    # sigma_1 is smooth inside the band; increments stay proportional to the step
    assert out["max_dsigma_per_dlambda"] < 5.0
    edge_rows = [out["rows"][0], out["rows"][-1]]
    # |sigma1 - 1| approaches its band-edge maximum 2 near |lam| = 2 (not asserted at the edge)
    for row in edge_rows:
        assert row["abs_sigma1_minus_1"] > 1.5


def test_model_roundtrip_dict():
    model = LatticeModel({0: 2.0, 3: -1.0})
    again = LatticeModel.from_dict(model.to_dict())
    assert again.potential == model.potential
    assert LatticeModel({1: 0.0}).support is None
