"""Conditions of possible experience, computationally.

Exact correlation polytopes (vertices and facet inequalities), the marginal
problem with witnesses and Farkas certificates, deterministic Monte Carlo
runners for triple/pair/quantum measurement protocols, and two-slit
additivity reports. See the module docstrings for the mathematics each part
implements.
"""

__version__ = "0.1.0"

from .errors import (
    BoolekitError,
    CapacityError,
    DomainError,
    EmptyResultError,
    ShapeError,
    ValidationError,
)
from .feasibility import (
    STATUS_FEASIBLE,
    STATUS_INCONSISTENT,
    STATUS_INFEASIBLE,
    ContextMarginal,
    FarkasCertificate,
    FeasibilityVerdict,
    JointDistribution,
    check_consistency,
    context_marginal,
    correlations_to_marginals,
    joint_exists,
    joint_from_full_context,
    load_marginal_problem,
    marginal_problem_from_dict,
    marginals_to_dict,
    save_marginal_problem,
)
from .polytope import (
    MAX_OBSERVABLES,
    Assignment,
    CorrelationPoint,
    FacetDerivation,
    Inequality,
    derive_facets,
    derive_facets_detailed,
    enumerate_vertices,
    evaluate,
    format_inequality,
    iter_vertices,
    vertex_correlation,
    write_facets_csv,
)
from .scenario import (
    Context,
    CyclicityReport,
    Observable,
    Scenario,
    build_scenario,
    cycle_scenario,
    detect_cyclicity,
    load_scenario,
    save_scenario,
    scenario_from_dict,
    scenario_to_dict,
    triple_scenario,
)
from .simulator import (
    DataRecord,
    EstimatedCorrelations,
    PairEstimate,
    PairProtocolConfig,
    PairProtocolResult,
    QuantumTwoLevelModel,
    RecordBlock,
    SingleEstimate,
    TripleProtocolResult,
    TripleSummary,
    lg_statistic,
    quantum_pair_correlator,
    quantum_pair_tables,
    run_pair_protocol,
    run_quantum_pair_protocol,
    run_triple_protocol,
    write_records_csv,
)
from .two_slit import (
    AdditivityReport,
    SlitContext,
    SlitGeometry,
    additivity_report,
    build_contexts,
    default_geometry,
    load_geometry,
    sample_screen_hits,
    save_geometry,
)

__all__ = [name for name in dir() if not name.startswith("_")]
