import math

import numpy as np
import pytest

from atomol import (CapacityError, FockState, InvalidParameterError,
                    ModelParams, SparseHermitian, build_basis,
                    build_hamiltonian, eigensolve_dense, eigensolve_lowest,
                    fidelity, ground_observables, index_of, zero_degeneracy,
                    zero_degeneracy_law)


def dense(N, z, delta=0.0, rho=1.0, phi=0.0):
    basis = build_basis(N)
    return build_hamiltonian(ModelParams(N=N, z=z, delta=delta, rho=rho,
                                         phi=phi), basis).to_dense()


# --- matrix elements -------------------------------------------------------

def test_n2_matrix_matches_hand_derivation():
    rho, z = 1.3, 0.7
    H = dense(2, z=z, rho=rho)
    expected = np.array([[0, 0, rho], [0, 0, z], [rho, z, 0]])
    assert np.allclose(H, expected, atol=1e-15)


def test_n4_selected_elements():
    z, delta = 0.9, 0.35
    basis = build_basis(4)
    H = build_hamiltonian(ModelParams(N=4, z=z, delta=delta), basis).to_dense()
    i = index_of(basis, FockState(0, 2, 0))
    j = index_of(basis, FockState(0, 1, 1))
    assert H[i, i] == pytest.approx(2 * delta, abs=1e-15)
    assert H[j, i] == pytest.approx(z * math.sqrt(2), abs=1e-15)


def test_phi_coupling_element_orientation():
    # bra side <n_a-2, n_g, n_e+1| carries rho e^{-i phi}
    rho, phi, N = 1.1, 0.8, 4
    basis = build_basis(N)
    H = build_hamiltonian(ModelParams(N=N, z=0.4, rho=rho, phi=phi),
                          basis).to_dense()
    src = index_of(basis, FockState(4, 0, 0))
    dst = index_of(basis, FockState(2, 0, 1))
    w = math.sqrt(4 * 3 * 1 / N)
    assert H[dst, src] == pytest.approx(rho * np.exp(-1j * phi) * w, abs=1e-14)
    assert H[src, dst] == pytest.approx(rho * np.exp(+1j * phi) * w, abs=1e-14)


@pytest.mark.parametrize("N,phi", [(6, 0.0), (8, 1.2), (10, 4.0)])
def test_hermitian_by_construction(N, phi):
    H = dense(N, z=0.8, delta=0.2, phi=phi)
    assert np.array_equal(H, H.conj().T)


def test_stored_triangle_invariants():
    basis = build_basis(10)
    H = build_hamiltonian(ModelParams(N=10, z=1.0, delta=0.3, phi=0.5), basis)
    H.validate()


def test_basis_params_mismatch():
    with pytest.raises(InvalidParameterError):
        build_hamiltonian(ModelParams(N=4, z=1.0), build_basis(6))


def test_params_validation():
    with pytest.raises(InvalidParameterError):
        ModelParams(N=5, z=1.0)
    with pytest.raises(InvalidParameterError):
        ModelParams(N=4, z=1.0, rho=0.0)
    with pytest.raises(InvalidParameterError):
        ModelParams(N=4, z=math.inf)
    # phase normalized into [0, 2 pi)
    assert ModelParams(N=4, z=1.0, phi=-1.0).phi == pytest.approx(
        2 * math.pi - 1.0)


# --- spectra ----------------------------------------------------------------

def test_n2_closed_form_spectrum():
    for z in (0.0, 0.5, 1.7):
        spec = eigensolve_dense(
            build_hamiltonian(ModelParams(N=2, z=z, rho=1.0), build_basis(2)))
        root = math.hypot(z, 1.0)
        assert np.allclose(spec.energies, [-root, 0.0, root], atol=1e-12)


def test_n2_z0_unit_spectrum():
    spec = eigensolve_dense(
        build_hamiltonian(ModelParams(N=2, z=0.0, rho=1.0), build_basis(2)))
    assert np.allclose(spec.energies, [-1.0, 0.0, 1.0], atol=1e-12)


def test_diagonal_matrix_returns_sorted_diagonal():
    d = np.array([3.0, -1.0, 2.0, 0.5])
    H = SparseHermitian(4, np.arange(4), np.arange(4), d)
    spec = eigensolve_dense(H)
    assert np.allclose(spec.energies, np.sort(d), atol=0)


def test_eigenpair_residuals_and_orthonormality():
    basis = build_basis(20)
    H = build_hamiltonian(ModelParams(N=20, z=1.4, delta=0.1), basis)
    spec = eigensolve_dense(H)
    Hd = H.to_dense()
    V = spec.vectors
    bound = H.norm_bound()
    resid = np.linalg.norm(Hd @ V - V * spec.energies, axis=0)
    assert resid.max() <= 1e-10 * bound
    gram = V.T.conj() @ V
    assert np.abs(gram - np.eye(V.shape[1])).max() <= 1e-10


def test_dense_capacity_error_redirects():
    basis = build_basis(182)         # dim 4278 just over the ceiling
    H = build_hamiltonian(ModelParams(N=182, z=1.0), basis)
    with pytest.raises(CapacityError):
        eigensolve_dense(H)
    spec = eigensolve_lowest(H, 2)
    assert spec.energies.shape == (2,)


def test_lowest_matches_dense():
    basis = build_basis(100)
    H = build_hamiltonian(ModelParams(N=100, z=1.9), basis)
    low = eigensolve_lowest(H, 2)
    full = eigensolve_dense(H)
    assert np.allclose(low.energies, full.energies[:2], atol=1e-8)


def test_lowest_k_equals_dim_on_small_sector():
    basis = build_basis(4)
    H = build_hamiltonian(ModelParams(N=4, z=1.2, delta=0.3), basis)
    low = eigensolve_lowest(H, H.dim)
    full = eigensolve_dense(H)
    assert np.allclose(low.energies, full.energies, atol=1e-12)
    assert np.allclose(low.vectors, full.vectors, atol=1e-12)


def test_lowest_rejects_bad_k():
    basis = build_basis(8)
    H = build_hamiltonian(ModelParams(N=8, z=1.0), basis)
    with pytest.raises(InvalidParameterError):
        eigensolve_lowest(H, 0)
    with pytest.raises(InvalidParameterError):
        eigensolve_lowest(H, H.dim + 1)


def test_lowest_is_deterministic():
    basis = build_basis(60)
    H = build_hamiltonian(ModelParams(N=60, z=1.8), basis)
    a = eigensolve_lowest(H, 2)
    b = eigensolve_lowest(H, 2)
    assert np.array_equal(a.energies, b.energies)
    assert np.array_equal(a.vectors, b.vectors)


# --- symmetries -------------------------------------------------------------

@pytest.mark.parametrize("N", [2, 6, 12, 26, 40])
def test_zero_detuning_spectrum_symmetric(N):
    basis = build_basis(N)
    H = build_hamiltonian(ModelParams(N=N, z=1.0), basis)
    w = eigensolve_dense(H).energies
    assert np.allclose(w, -w[::-1], atol=1e-9)


@pytest.mark.parametrize("N", [4, 10, 16, 20])
@pytest.mark.parametrize("phi", [0.7, 2.3])
def test_spectrum_independent_of_phi(N, phi):
    basis = build_basis(N)
    w0 = eigensolve_dense(
        build_hamiltonian(ModelParams(N=N, z=1.1, delta=0.2), basis)).energies
    w1 = eigensolve_dense(
        build_hamiltonian(ModelParams(N=N, z=1.1, delta=0.2, phi=phi),
                          basis)).energies
    assert np.allclose(w0, w1, atol=1e-9)


@pytest.mark.parametrize("N,count", [(2, 1), (8, 3), (40, 11)])
def test_zero_degeneracy_examples(N, count):
    assert zero_degeneracy(N, z=1.0, rho=1.0) == count
    assert zero_degeneracy_law(N) == count


def test_gap_positive_across_coupling_grid():
    basis = build_basis(30)
    for z in np.linspace(0.2, 3.0, 8):
        obs = ground_observables(ModelParams(N=30, z=float(z)), basis)
        assert obs.gap > 0


# --- observables ------------------------------------------------------------

def test_ground_observables_n2_z0():
    obs = ground_observables(ModelParams(N=2, z=0.0, rho=1.0))
    assert obs.gap == pytest.approx(1.0, abs=1e-12)
    assert obs.atomic_fraction == pytest.approx(0.5, abs=1e-12)
    target = np.array([1.0, 0.0, -1.0]) / math.sqrt(2)
    assert np.allclose(obs.ground_vector, target, atol=1e-12)


def test_atomic_fraction_vanishes_deep_in_molecule_phase():
    obs = ground_observables(ModelParams(N=30, z=8.0))
    assert obs.atomic_fraction < 0.05


def test_atomic_fraction_bounded():
    for z in (0.1, 1.0, 2.0, 3.5):
        obs = ground_observables(ModelParams(N=12, z=z, delta=0.3))
        assert 0.0 <= obs.atomic_fraction <= 1.0


def test_ground_observables_rejects_empty_sector():
    with pytest.raises(InvalidParameterError):
        ground_observables(ModelParams(N=0, z=1.0))


# --- fidelity ---------------------------------------------------------------

def test_fidelity_identity_and_orthogonality():
    v = np.array([0.6, 0.8, 0.0])
    assert fidelity(v, v) == pytest.approx(1.0, abs=1e-15)
    e1 = np.array([1.0, 0.0, 0.0])
    e2 = np.array([0.0, 1.0, 0.0])
    assert fidelity(e1, e2) == 0.0


def test_fidelity_symmetric_and_phase_free():
    rng = np.random.default_rng(5)
    v1 = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    v2 = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    v1 /= np.linalg.norm(v1)
    v2 /= np.linalg.norm(v2)
    assert fidelity(v1, v2) == pytest.approx(fidelity(v2, v1), abs=1e-15)
    assert fidelity(v1 * np.exp(0.9j), v2) == pytest.approx(
        fidelity(v1, v2), abs=1e-12)


def test_fidelity_dimension_mismatch():
    with pytest.raises(InvalidParameterError):
        fidelity(np.ones(3), np.ones(4))
