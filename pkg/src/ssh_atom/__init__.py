"""Emitter coupled to a finite SSH chain in the single-excitation sector."""

__version__ = "0.1.0"

from .errors import (DegeneratePhaseError, DomainError, IntegratorError, NumericalError, ParameterError,
                     SSHAtomError, UnsupportedCaseError)
from .lattice import (AtomParams, BasisLayout, ChainParams, DisorderRealization, Sublattice,
                      build_disordered_hamiltonian, build_disordered_ssh, build_full_hamiltonian,
                      build_ssh_hamiltonian, inversion_operator, sample_disorder)
from .spectral import (GapStateTag, SpectralDecomposition, count_gap_states, eigendecompose,
                       identify_gap_states, project_onto, site_probabilities)
from .edge import (AmplitudeTriple, EdgeStateAnalytic, ThreeLevelModel, analytic_amplitudes,
                   analytic_edge_states, effective_couplings, find_theta_g_equal, find_theta_g_zero,
                   gap_state_energy, subspace_matrix, subspace_roots)
from .dynamics import (SweepSchedule, Trajectory, fidelity, observables_of, propagate_static,
                       propagate_sweep)
from .disorder import EnsembleSpec, disordered_spectrum_sweep, ensemble_gap_statistics
