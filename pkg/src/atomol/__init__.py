"""Numerics for a driven three-level atom-molecule conversion model.

One atomic mode is photoassociated into an excited molecular mode (coupling
rho), which a second drive dumps into a stable molecular mode (coupling z).
The package reproduces the model's second-order transition at
z_c = 2 rho + delta from four sides: exact diagonalization of the conserved-N
sector, closed-form and numeric semiclassical ground states, finite-size
scaling of the gap minimum, and the adiabatic loop phase that jumps from
pi/3 to 0 across the transition.
"""

from .analysis import (DEFAULT_SCALING_GRID, FidelitySweep, GapEvaluator,
                       GapMinimum, ScalingFit, ScalingStudy, fidelity_sweep,
                       fit_nu, fit_zeta, pseudo_critical_point, scaling_study)
from .dynamics import (CanonicalState, EvolutionResult, LoopResult, Trajectory,
                       amplitudes_from_canonical, berry_phase_linearized,
                       canonical_from_amplitudes, eom_cartesian, evolve,
                       ground_fixed_point_populations, hamilton_rhs,
                       integrate_loop, integrate_loop_canonical,
                       phase_rate_first_order, population_response_rate)
from .errors import (AtomolError, BracketError, CapacityError,
                     ConvergenceError, IntegrationError, InvalidDataError,
                     InvalidParameterError, SingularCoordinatesError,
                     StateNotFoundError, StepSizeError)
from .fock import (FockBasis, FockState, basis_dimension, build_basis,
                   index_of)
from .meanfield import (EnergyProfile, GroundSolution, MeanFieldParams,
                        MeanFieldState, ProfilePoint, classical_energy,
                        critical_point, eigen_residual,
                        energy_derivative_profile, gauge_transform,
                        ground_state_analytic, ground_state_numeric,
                        meanfield_matrix, s0_asymptotic)
from .quantum import (GroundObservables, ModelParams, SparseHermitian,
                      Spectrum, build_hamiltonian, eigensolve_dense,
                      eigensolve_lowest, fidelity, ground_observables,
                      hamiltonian_terms, zero_degeneracy, zero_degeneracy_law)

__version__ = "0.1.0"
