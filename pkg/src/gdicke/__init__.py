"""Symmetry-adapted, fidelity-certified bases for multilevel atom-field models."""

__version__ = "0.1.0"

from .basis import (
    Basis,
    BasisState,
    build_reduced,
    build_truncated,
    dim_lambda,
    dim_v,
    dim_xi,
    enumerate_matter,
    enumerate_rwa_sector,
    estimate_dimension,
    field_order,
    matter_order,
    matter_subset,
)
from .errors import GdickeError, NoConvergenceError
from .hamiltonian import SparseHamiltonian, assemble, diagonal_energy, transition_amplitude
from .model import (
    CouplingSpec,
    ModelConfig,
    ValidatedModel,
    coupling_value,
    lambda_model,
    subsystems,
    two_level_model,
    validate,
    vee_model,
    xi_model,
)
from .observables import ErrorMetrics, ObservableSet, error_metrics, expectations, separatrix
from .solver import (
    ConvergenceReport,
    GroundState,
    assemble_kappa,
    caps_for_region,
    caps_for_sector,
    converge_full,
    converge_two_level,
    fidelity,
    fidelity_deficit,
    ground_over_sectors,
    ground_state,
    two_level_cutoff,
)
from .symmetry import (
    ParitySector,
    SymmetryOperator,
    SymmetrySet,
    conventional_constants,
    eval_K,
    find_constants,
    in_integer_span,
    sectors,
)

__all__ = [name for name in dir() if not name.startswith("_")]
