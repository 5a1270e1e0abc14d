"""Conditioned quantum dynamics simulator and entropy-rate bound verifier.

The package integrates the diffusive stochastic master equation for a
measured open quantum system, aggregates seeded trajectory ensembles,
and checks the von Neumann entropy rate of the ensemble mean against its
variance/quantumness lower bound, including the two-level stabilization
scenario with its closed-form threshold.
"""

from .ensemble import (
    EnsembleConfig,
    EnsembleStatistics,
    mean_entropy_vs_entropy_of_mean,
    run_ensemble,
    trajectory_seed,
)
from .entropy import (
    EntropyBoundReport,
    build_bound_report,
    certifies_entropy_nondecreasing,
    dissipator_entropy_gap,
    entropy_rate_bound,
    entropy_rate_estimate,
    ito_correction_terms,
    log_inequality_gap,
    observable_variance,
    quantumness,
    von_neumann_entropy,
)
from .integrate import (
    IntegrationError,
    IntegratorConfig,
    TrajectoryRecord,
    TrajectoryState,
    em_step,
    integrate_master_equation,
    project_to_physical,
    simulate_trajectory,
    wiener_increment,
)
from .linalg import (
    SpectralDecomposition,
    ValidationError,
    commutator,
    expectation,
    hermitian_eig,
    log_density,
    random_density,
    trace_distance,
    validate_density,
)
from .model import (
    ControlLaw,
    ModelSpec,
    dissipator,
    evaluate_control,
    innovation,
    lindblad_rhs,
    sme_increment,
)
from .qubit import (
    BlochVector,
    QubitScenario,
    bloch_to_density,
    decay_z,
    density_to_bloch,
    dephasing_x,
    qubit_model,
    threshold_consistency,
    z_threshold,
)

__version__ = "0.1.0"
