import numpy as np
import pytest

from atomol import (FockState, InvalidParameterError, StateNotFoundError,
                    basis_dimension, build_basis, index_of)


def test_dimension_formula_all_even_n_up_to_200():
    for N in range(0, 201, 2):
        basis = build_basis(N)
        assert len(basis) == (N // 2 + 1) * (N // 2 + 2) // 2
        assert basis.dim == basis_dimension(N)


def test_every_state_satisfies_particle_constraint():
    for N in (0, 2, 10, 36):
        basis = build_basis(N)
        assert np.all(basis.n_a + 2 * (basis.n_g + basis.n_e) == N)
        assert basis.n_a.min() >= 0
        assert basis.n_g.min() >= 0
        assert basis.n_e.min() >= 0


def test_index_round_trip():
    for N in (2, 8, 30):
        basis = build_basis(N)
        for k, state in enumerate(basis.states):
            assert index_of(basis, state) == k


def test_canonical_order_n2():
    basis = build_basis(2)
    assert [(s.n_a, s.n_g, s.n_e) for s in basis.states] == [
        (2, 0, 0), (0, 1, 0), (0, 0, 1)]
    assert index_of(basis, FockState(2, 0, 0)) == 0
    assert index_of(basis, FockState(0, 0, 1)) == 2


def test_vacuum_sector():
    basis = build_basis(0)
    assert [(s.n_a, s.n_g, s.n_e) for s in basis.states] == [(0, 0, 0)]


def test_n8_has_15_states():
    assert len(build_basis(8)) == 15


def test_ordering_is_deterministic():
    a = build_basis(12)
    b = build_basis(12)
    assert a.states == b.states


@pytest.mark.parametrize("bad", [-2, 3, 7, 4001])
def test_invalid_n_rejected(bad):
    with pytest.raises(InvalidParameterError):
        build_basis(bad)


def test_foreign_state_rejected():
    basis = build_basis(2)
    with pytest.raises(StateNotFoundError):
        index_of(basis, FockState(1, 0, 0))
    with pytest.raises(StateNotFoundError):
        index_of(basis, FockState(4, 0, 0))
