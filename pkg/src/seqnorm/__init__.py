"""Multistage hypothesis tests for the mean of a normal distribution.

Design multistage plans with hard error guarantees (known or unknown
variance), calibrate the risk tuning parameter, evaluate certified
operating-characteristic and sample-number bounds through closed-form
Gaussian geometry, verify everything against Monte Carlo oracles, and run
tests stage by stage over real data with auditable persistence.
"""

from .calibrate import CalibrationResult, calibrate_known, calibrate_unknown
from .errors import (
    CalibrationError,
    ContractViolationError,
    DegenerateSampleError,
    DomainError,
    InconsistentBoundaryError,
    InsufficientDataError,
    IntegrityError,
    PlanCertificationError,
    SeqnormError,
    SessionFormatError,
    StateError,
)
from .geometry import (
    BoundaryPiece,
    ConeRegion,
    HyperbolaConeRegion,
    PolarBoundary,
    classify_branch,
    cone_prob,
    hyperbola_cone_prob,
    offset_domain_prob,
    origin_domain_prob,
    psi_barrier_integrand,
    psi_line_integrand,
    upsilon_integrand,
)
from .plan_known import (
    Decision,
    KnownVarPlan,
    Stage,
    build_known_plan,
    decide_stage,
    mirror_known_plan,
    oc_bounds_known,
    oc_upper_phi,
    sample_tail_known,
    statistic_known,
)
from .plan_unknown import (
    PartitionCell,
    UnknownVarPlan,
    build_unknown_plan,
    min_stage_size,
    mirror_unknown_plan,
    oc_bounds_unknown,
    oc_upper_P,
    refine_partition,
    sample_tail_unknown,
    statistic_unknown,
)
from .runner import (
    HistoryEntry,
    SessionStatus,
    TestSession,
    feed,
    load_plan,
    load_session,
    new_session,
    plan_from_dict,
    plan_to_dict,
    save_plan,
    save_session,
)
from .simulate import (
    DecompositionReport,
    SimReport,
    TransitionSums,
    grid_domain_prob,
    sample_decomposition_check,
    mc_domain_prob,
    mc_domain_prob_many,
    mc_transition_sums,
    simulate_plan,
)
from .special import (
    CriticalValueSpec,
    chi_square_cdf,
    chi_square_quantile,
    noncentral_t_cdf,
    std_normal_cdf,
    std_normal_critical,
    student_t_critical,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
