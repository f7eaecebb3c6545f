"""Weakly driven chiral-coupled atomic chains in the low-saturation limit.

Rates and detunings are in units of the total single-atom decay rate
gamma (= 1), times in units of 1/gamma.
"""

from chiralchain.errors import (
    CapabilityError,
    ChainError,
    CriticalPointError,
    DomainError,
    InsufficientDataError,
    IntegrationError,
    TraversalTimeout,
)
from chiralchain.model import (
    ChainConfig,
    Detuning,
    build_coupling_matrix,
    coupling_matrix,
    detuning_at,
    drive_vector,
    gamma_rates,
)
from chiralchain.steady_state import (
    SteadyState,
    condition_check,
    edge_population_analytic,
    solve_steady,
    steady_state,
)
from chiralchain.observables import (
    StructureSpectrum,
    excess_population,
    participation_ratio,
    structure_factor,
    structure_spectrum,
    transport_imbalance,
)
from chiralchain.spectrum import (
    EigenSpectrum,
    decoherence_free_count,
    eigen_spectrum,
    subradiant_sector,
)
from chiralchain.dynamics import (
    OracleResult,
    Trajectory,
    lindblad_oracle,
    propagate,
    subharmonic_metric,
    traversal_time,
)
from chiralchain.phases import (
    PhaseLabel,
    ScalingFit,
    bee_bhe_boundary_analytic,
    cfd_dichotomy,
    classify_point,
    fit_pr_scaling,
    fit_structure_thermo,
)

__version__ = "0.1.0"

__all__ = [
    "CapabilityError",
    "ChainConfig",
    "ChainError",
    "CriticalPointError",
    "Detuning",
    "DomainError",
    "EigenSpectrum",
    "InsufficientDataError",
    "IntegrationError",
    "OracleResult",
    "PhaseLabel",
    "ScalingFit",
    "SteadyState",
    "StructureSpectrum",
    "Trajectory",
    "TraversalTimeout",
    "bee_bhe_boundary_analytic",
    "build_coupling_matrix",
    "cfd_dichotomy",
    "classify_point",
    "condition_check",
    "coupling_matrix",
    "decoherence_free_count",
    "detuning_at",
    "drive_vector",
    "edge_population_analytic",
    "eigen_spectrum",
    "excess_population",
    "fit_pr_scaling",
    "fit_structure_thermo",
    "gamma_rates",
    "lindblad_oracle",
    "participation_ratio",
    "propagate",
    "solve_steady",
    "steady_state",
    "structure_factor",
    "structure_spectrum",
    "subharmonic_metric",
    "subradiant_sector",
    "transport_imbalance",
    "traversal_time",
]
