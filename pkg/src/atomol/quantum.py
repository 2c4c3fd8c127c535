"""Many-body Hamiltonian of the driven atom-molecule sector and its spectra.

The interaction-picture Hamiltonian on the conserved-N Fock basis is

    H = Delta (N_g + N_e) + z b_e^dag b_g + (rho e^{-i phi} / sqrt(N)) b_e^dag a a + h.c.

so its only nonzero matrix elements are

    <n_a, n_g, n_e| H |n_a, n_g, n_e>         = Delta (n_g + n_e)
    <n_a, n_g-1, n_e+1| H |n_a, n_g, n_e>     = z sqrt(n_g (n_e + 1))
    <n_a-2, n_g, n_e+1| H |n_a, n_g, n_e>     = rho e^{-i phi} sqrt(n_a (n_a - 1)(n_e + 1)) / sqrt(N)

plus Hermitian closure.  The phase phi is removable by the gauge
b_g -> e^{-i phi} b_g, b_e -> e^{-i phi} b_e, so phi = 0 builds a real
symmetric matrix; a complex-Hermitian path is kept for phi != 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import CapacityError, ConvergenceError, InvalidParameterError
from .fock import FockBasis, build_basis

# Dense diagonalization is allowed up to this dimension (N = 180 -> dim 4186).
DENSE_DIM_CEILING = 4200

# Dimension below which full dense solves beat iterative ones.
_SMALL_DENSE = 600

# |E| <= ZERO_TOL_FACTOR * norm_bound counts as a zero eigenvalue.
ZERO_TOL_FACTOR = 1e-9

_EIGSH_SEED = 20260808


@dataclass(frozen=True)
class ModelParams:
    """Interaction-picture parameter set.

    `rho` sets the energy unit (every public energy is reported in units of
    rho unless stated otherwise); `delta` and `z` are measured in the same
    unit; `phi` is the coupling phase in radians, normalized into [0, 2pi).
    """

    N: int
    z: float
    delta: float = 0.0
    rho: float = 1.0
    phi: float = 0.0

    def __post_init__(self):
        if self.N < 0 or self.N % 2 != 0:
            raise InvalidParameterError(f"N must be even and >= 0, got {self.N}")
        if not (self.rho > 0.0):
            raise InvalidParameterError(f"rho must be positive, got {self.rho}")
        for name in ("z", "delta", "phi"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise InvalidParameterError(f"{name} must be finite, got {v}")
        object.__setattr__(self, "phi", float(self.phi) % (2.0 * math.pi))

    def meanfield(self):
        """Drop N: the matching semiclassical parameter set."""
        from .meanfield import MeanFieldParams

        return MeanFieldParams(z=self.z, rho=self.rho, delta=self.delta,
                               phi=self.phi)


@dataclass(frozen=True)
class SparseHermitian:
    """Coordinate-format Hermitian matrix (upper triangle plus diagonal).

    Invariants: row <= col for every stored entry, diagonal entries real,
    no duplicate (row, col) pairs.  The represented matrix is the Hermitian
    closure of the stored triangle.
    """

    dim: int
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray

    @property
    def entries(self) -> Iterator[tuple[int, int, complex]]:
        return ((int(r), int(c), v) for r, c, v in
                zip(self.rows, self.cols, self.vals))

    @property
    def nnz_stored(self) -> int:
        return self.vals.shape[0]

    def max_abs_entry(self) -> float:
        if self.vals.size == 0:
            return 0.0
        return float(np.max(np.abs(self.vals)))

    def norm_bound(self) -> float:
        """Cheap upper bound on the spectral norm: max |entry| times dim."""
        return self.max_abs_entry() * self.dim

    def to_csr(self) -> sp.csr_matrix:
        off = self.rows != self.cols
        rows = np.concatenate([self.rows, self.cols[off]])
        cols = np.concatenate([self.cols, self.rows[off]])
        vals = np.concatenate([self.vals, np.conj(self.vals[off])])
        return sp.coo_matrix((vals, (rows, cols)),
                             shape=(self.dim, self.dim)).tocsr()

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=self.vals.dtype)
        out[self.rows, self.cols] = self.vals
        off = self.rows != self.cols
        out[self.cols[off], self.rows[off]] = np.conj(self.vals[off])
        return out

    def validate(self) -> None:
        """Assert the stored-triangle invariants (meant for tests)."""
        if np.any(self.rows > self.cols):
            raise AssertionError("entry below the diagonal")
        diag = self.rows == self.cols
        if np.iscomplexobj(self.vals) and np.any(np.abs(self.vals[diag].imag) > 0):
            raise AssertionError("complex diagonal entry")
        pairs = set(zip(self.rows.tolist(), self.cols.tolist()))
        if len(pairs) != self.nnz_stored:
            raise AssertionError("duplicate (row, col) pair")


@dataclass(frozen=True)
class HamiltonianTerms:
    """Parameter-independent coupling structure of one Fock sector.

    H(params) = delta * diag(mol) + z * Z + rho * R(phi), which makes
    repeated assembly along a z-grid an O(nnz) scalar combination.
    """

    dim: int
    mol_count: np.ndarray     # n_g + n_e per state (diagonal / delta)
    z_rows: np.ndarray
    z_cols: np.ndarray
    z_weight: np.ndarray      # sqrt(n_g (n_e + 1))
    r_rows: np.ndarray
    r_cols: np.ndarray
    r_weight: np.ndarray      # sqrt(n_a (n_a - 1)(n_e + 1) / N)

    def assemble(self, params: ModelParams) -> SparseHermitian:
        real = params.phi == 0.0
        dtype = np.float64 if real else np.complex128
        diag_mask = params.delta != 0.0
        parts_r, parts_c, parts_v = [], [], []
        if diag_mask:
            idx = np.arange(self.dim)
            parts_r.append(idx)
            parts_c.append(idx)
            parts_v.append((params.delta * self.mol_count).astype(dtype))
        parts_r.append(self.z_rows)
        parts_c.append(self.z_cols)
        parts_v.append((params.z * self.z_weight).astype(dtype))
        parts_r.append(self.r_rows)
        parts_c.append(self.r_cols)
        # Stored upper-triangle value is the conjugate of the bra-side
        # element <n_a-2, n_g, n_e+1|H|n_a, n_g, n_e> = rho e^{-i phi} w.
        coupling = params.rho * (1.0 if real else np.exp(1j * params.phi))
        parts_v.append((coupling * self.r_weight).astype(dtype))
        return SparseHermitian(self.dim,
                               np.concatenate(parts_r),
                               np.concatenate(parts_c),
                               np.concatenate(parts_v))

    def csr(self, params: ModelParams) -> sp.csr_matrix:
        return self.assemble(params).to_csr()


def hamiltonian_terms(basis: FockBasis) -> HamiltonianTerms:
    """Extract the coupling structure of `basis` once, for reuse across sweeps."""
    n_a, n_g, n_e = basis.n_a, basis.n_g, basis.n_e
    idx = np.arange(basis.dim)

    m = n_g >= 1
    z_rows = idx[m]
    z_cols = basis.position(n_e[m] + 1, n_g[m] - 1)
    z_weight = np.sqrt(n_g[m] * (n_e[m] + 1.0))

    m2 = n_a >= 2
    r_rows = idx[m2]
    r_cols = basis.position(n_e[m2] + 1, n_g[m2])
    # basis.N = 0 implies no state with n_a >= 2, so the division is safe
    scale = 1.0 / math.sqrt(basis.N) if basis.N > 0 else 0.0
    r_weight = np.sqrt(n_a[m2] * (n_a[m2] - 1.0) * (n_e[m2] + 1.0)) * scale

    return HamiltonianTerms(basis.dim, (n_g + n_e).astype(np.float64),
                            z_rows, z_cols, z_weight,
                            r_rows, r_cols, r_weight)


def build_hamiltonian(params: ModelParams, basis: FockBasis) -> SparseHermitian:
    """Assemble H on `basis`; errors if the basis was built for a different N."""
    if params.N != basis.N:
        raise InvalidParameterError(
            f"basis built for N={basis.N} but params.N={params.N}")
    return hamiltonian_terms(basis).assemble(params)


@dataclass(frozen=True)
class Spectrum:
    """Ascending eigenvalues with optional matching orthonormal eigenvectors.

    Column k of `vectors` belongs to `energies[k]`.  Each vector's global
    phase is fixed by rotating its largest-magnitude component to the
    positive real axis, so dumps and overlaps are reproducible.
    """

    energies: np.ndarray
    vectors: np.ndarray | None = None


def _fix_phases(vectors: np.ndarray) -> np.ndarray:
    out = vectors.copy()
    for k in range(out.shape[1]):
        v = out[:, k]
        j = int(np.argmax(np.abs(v)))
        mag = abs(v[j])
        if mag > 0:
            out[:, k] = v * (np.conj(v[j]) / mag)
        if np.iscomplexobj(out):
            # the rotation leaves at most a round-off imaginary residue here
            out[j, k] = out[j, k].real
    return out


def _sorted_pairs(w: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def eigensolve_dense(H: SparseHermitian) -> Spectrum:
    """Full spectrum by dense diagonalization (dim <= DENSE_DIM_CEILING)."""
    if H.dim > DENSE_DIM_CEILING:
        raise CapacityError(
            f"dim {H.dim} exceeds dense ceiling {DENSE_DIM_CEILING}; "
            "use eigensolve_lowest for the low end of the spectrum")
    w, v = np.linalg.eigh(H.to_dense())
    w, v = _sorted_pairs(w, v)
    return Spectrum(w, _fix_phases(v))


def _default_v0(dim: int) -> np.ndarray:
    rng = np.random.default_rng(_EIGSH_SEED)
    v0 = rng.standard_normal(dim)
    return v0 / np.linalg.norm(v0)


def _eigsh_lowest(H_csr: sp.csr_matrix, k: int,
                  v0: np.ndarray | None = None,
                  tol: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    dim = H_csr.shape[0]
    if v0 is None:
        v0 = _default_v0(dim)
    ncv = min(dim, max(40, 4 * k + 1))
    try:
        w, v = spla.eigsh(H_csr, k=k, which="SA", v0=v0, ncv=ncv, tol=tol,
                          maxiter=200 * dim)
    except spla.ArpackNoConvergence as exc:
        # one retry with a larger working subspace before giving up
        try:
            w, v = spla.eigsh(H_csr, k=k, which="SA", v0=v0, tol=tol,
                              ncv=min(dim, 4 * ncv), maxiter=400 * dim)
        except spla.ArpackNoConvergence as exc2:
            best = None
            if exc2.eigenvalues is not None and len(exc2.eigenvalues):
                ev = exc2.eigenvectors[:, 0]
                best = float(np.linalg.norm(H_csr @ ev - exc2.eigenvalues[0] * ev))
            raise ConvergenceError(
                f"iterative eigensolver failed for k={k}, dim={dim}",
                best_residual=best) from exc
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]


def eigensolve_lowest(H: SparseHermitian, k: int) -> Spectrum:
    """Lowest-k eigenpairs via implicitly restarted Lanczos (ARPACK).

    Deterministic (fixed starting vector).  For k within one of dim the
    solve falls back to the dense path, which keeps the k = dim limit of
    the contract exact.
    """
    if k < 1:
        raise InvalidParameterError(f"k must be >= 1, got {k}")
    if k > H.dim:
        raise InvalidParameterError(f"k={k} exceeds dim={H.dim}")
    if k >= H.dim - 1 or H.dim <= 8:
        full = eigensolve_dense(H)
        return Spectrum(full.energies[:k], full.vectors[:, :k])
    H_csr = H.to_csr()
    w, v = _eigsh_lowest(H_csr, k)
    v = _fix_phases(v)
    bound = H.norm_bound()
    resid = float(max(np.linalg.norm(H_csr @ v[:, j] - w[j] * v[:, j])
                      for j in range(k)))
    if bound > 0 and resid > 1e-10 * bound:
        raise ConvergenceError(
            f"residual {resid:.3e} above 1e-10 * norm bound {bound:.3e}",
            best_residual=resid)
    return Spectrum(w, v)


@dataclass(frozen=True)
class GroundObservables:
    """Ground-state summary of one parameter point."""

    E0: float
    E1: float
    gap: float                 # (E1 - E0) / rho
    atomic_fraction: float     # <N_a> / N in the ground state
    ground_vector: np.ndarray


def ground_observables(params: ModelParams,
                       basis: FockBasis | None = None) -> GroundObservables:
    """Lowest two levels, dimensionless gap and atomic fraction.

    Picks the dense solver for small sectors and the iterative one above
    `_SMALL_DENSE`; both agree to the stated solver tolerances.
    """
    if params.N < 2:
        raise InvalidParameterError("ground observables need N >= 2")
    if basis is None:
        basis = build_basis(params.N)
    H = build_hamiltonian(params, basis)
    if H.dim <= _SMALL_DENSE:
        spec = eigensolve_dense(H)
        w, v = spec.energies[:2], spec.vectors[:, :2]
    else:
        spec = eigensolve_lowest(H, 2)
        w, v = spec.energies, spec.vectors
    ground = v[:, 0]
    weights = np.abs(ground) ** 2
    af = float(weights @ basis.n_a) / params.N
    return GroundObservables(E0=float(w[0]), E1=float(w[1]),
                             gap=float((w[1] - w[0]) / params.rho),
                             atomic_fraction=af, ground_vector=ground)


def zero_degeneracy(N: int, z: float = 1.0, rho: float = 1.0) -> int:
    """Number of zero eigenvalues of the zero-detuning sector.

    Zero means |E| <= 1e-9 * (max |entry| * dim).  Matches the closed-form
    count `zero_degeneracy_law` for generic nonzero couplings.
    """
    basis = build_basis(N)
    H = build_hamiltonian(ModelParams(N=N, z=z, rho=rho, delta=0.0), basis)
    spec = eigensolve_dense(H)
    tol = ZERO_TOL_FACTOR * H.norm_bound()
    if tol == 0.0:          # N = 0 sector: single exact zero level
        return int(np.sum(spec.energies == 0.0))
    return int(np.sum(np.abs(spec.energies) <= tol))


def zero_degeneracy_law(N: int) -> int:
    """Closed-form degeneracy ceil((N/2 + 1)/2) = (N - N mod 4)/4 + 1."""
    return (N - N % 4) // 4 + 1


def fidelity(v1: np.ndarray, v2: np.ndarray) -> float:
    """Modulus of the overlap |<v1|v2>| between two normalized vectors."""
    v1 = np.asarray(v1)
    v2 = np.asarray(v2)
    if v1.shape != v2.shape:
        raise InvalidParameterError(
            f"dimension mismatch: {v1.shape} vs {v2.shape}")
    return float(abs(np.vdot(v1, v2)))
