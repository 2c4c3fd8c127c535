"""Conserved-N Fock basis for one atomic and two molecular bosonic modes.

A number state |n_a, n_g, n_e> counts atoms, ground-state molecules and
excited-state molecules.  Two atoms bind into one molecule, so the conserved
total is N = n_a + 2(n_g + n_e); only even N is supported and the sector
dimension is (N/2 + 1)(N/2 + 2)/2.

The canonical ordering is ascending n_e, then ascending n_g (n_a is fixed by
the constraint).  For N = 2 this reads (2,0,0), (0,1,0), (0,0,1).  The order
is part of the output contract: matrices and CSV dumps built on it are
bit-reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterator

import numpy as np

from .errors import InvalidParameterError, StateNotFoundError

# Enumeration stays cheap well past this (dim ~ 2e6 at N = 4000), but the
# ceiling keeps accidental huge requests from exhausting memory.
MAX_TOTAL_ATOMS = 4000


def basis_dimension(N: int) -> int:
    """Sector dimension (N/2 + 1)(N/2 + 2)/2 for even N."""
    half = N // 2
    return (half + 1) * (half + 2) // 2


@dataclass(frozen=True)
class FockState:
    """Occupation triple with n_a + 2(n_g + n_e) equal to the sector's N."""

    n_a: int
    n_g: int
    n_e: int

    def total_atoms(self) -> int:
        return self.n_a + 2 * (self.n_g + self.n_e)


class FockBasis:
    """Canonically ordered number states of the even-N sector.

    Occupation numbers are kept as integer arrays (`n_a`, `n_g`, `n_e`);
    the `states` tuple of FockState objects and the lookup table are built
    lazily because large-N Hamiltonian assembly only needs the arrays.
    """

    def __init__(self, N: int, n_a: np.ndarray, n_g: np.ndarray, n_e: np.ndarray,
                 block_starts: np.ndarray):
        self.N = N
        self.n_a = n_a
        self.n_g = n_g
        self.n_e = n_e
        # block_starts[k] = index of the first state with n_e = k
        self._block_starts = block_starts
        self.dim = n_a.shape[0]

    def __len__(self) -> int:
        return self.dim

    def __iter__(self) -> Iterator[FockState]:
        return iter(self.states)

    @cached_property
    def states(self) -> tuple[FockState, ...]:
        return tuple(FockState(int(a), int(g), int(e))
                     for a, g, e in zip(self.n_a, self.n_g, self.n_e))

    @cached_property
    def index(self) -> dict[FockState, int]:
        return {s: k for k, s in enumerate(self.states)}

    def position(self, n_e: np.ndarray | int, n_g: np.ndarray | int):
        """Index of (n_e, n_g) pairs under the canonical order (vectorized)."""
        return self._block_starts[n_e] + n_g


def build_basis(N: int) -> FockBasis:
    """Enumerate the even-N sector in canonical order.

    Raises InvalidParameterError for odd, negative, or oversized N.
    """
    if not isinstance(N, (int, np.integer)):
        raise InvalidParameterError(f"N must be an integer, got {N!r}")
    N = int(N)
    if N < 0:
        raise InvalidParameterError(f"N must be non-negative, got {N}")
    if N % 2 != 0:
        raise InvalidParameterError(f"N must be even, got {N}")
    if N > MAX_TOTAL_ATOMS:
        raise InvalidParameterError(
            f"N={N} exceeds the supported ceiling {MAX_TOTAL_ATOMS}")

    half = N // 2
    counts = np.arange(half + 1, 0, -1)          # states per n_e block
    block_starts = np.concatenate(([0], np.cumsum(counts)))[:-1]
    dim = basis_dimension(N)
    n_e = np.repeat(np.arange(half + 1), counts)
    n_g = np.arange(dim) - np.repeat(block_starts, counts)
    n_a = N - 2 * (n_g + n_e)
    return FockBasis(N, n_a, n_g, n_e, block_starts)


def index_of(basis: FockBasis, state: FockState) -> int:
    """Position of `state` in the canonical order; round-trips enumeration."""
    if state.total_atoms() != basis.N or min(state.n_a, state.n_g, state.n_e) < 0:
        raise StateNotFoundError(
            f"{state} violates n_a + 2(n_g + n_e) = {basis.N}")
    return int(basis.position(state.n_e, state.n_g))
