"""Strongly convex principal component pursuit from reduced linear measurements.

Recovers a low-rank matrix plus an entrywise-sparse matrix from the
projection of their sum onto a measurement subspace Q, using the strongly
convex pursuit program (nuclear + l1 + scaled Frobenius terms). Ships the
solver, seeded instance generators, tau selection rules, a numerical
optimality-certificate toolbox, and a batch experiment harness.
"""

from .estimator import StronglyConvexPCP
from .linops import (
    DirectSumProjector,
    SubspaceProjector,
    SupportSet,
    TangentSpace,
    make_subspace_projector,
    operator_norm,
    product_norm,
    project_direct_sum,
    project_support,
    project_tangent,
    project_tangent_complement,
    soft_threshold,
    svt,
)
from .model import (
    GroundTruth,
    ProblemInstance,
    build_instance,
    gen_low_rank,
    gen_sparse,
    gen_subspace,
    incoherence,
    tau_criterion,
    tau_oracle,
)
from .solver import (
    Solution,
    SolverOptions,
    dual_objective,
    kkt_residual,
    primal_objective,
    recovery_error,
    solve,
)
from .certificate import (
    CertificateCandidate,
    CertificateReport,
    build_correction,
    certificate_search,
    check_correction_bounds,
    check_direct_sum_dimensions,
    check_low_rank_candidate_bounds,
    check_pairwise_sum_bound,
    check_sparse_candidate_bounds,
    check_subspace_tangent_bound,
)
from .experiments import (
    ExperimentConfig,
    ExperimentRecord,
    lemma_suite,
    phase_grid,
    read_records,
    tau_sweep,
    write_records,
)

__version__ = "0.1.0"

__all__ = [
    "StronglyConvexPCP",
    "DirectSumProjector",
    "SubspaceProjector",
    "SupportSet",
    "TangentSpace",
    "make_subspace_projector",
    "operator_norm",
    "product_norm",
    "project_direct_sum",
    "project_support",
    "project_tangent",
    "project_tangent_complement",
    "soft_threshold",
    "svt",
    "GroundTruth",
    "ProblemInstance",
    "build_instance",
    "gen_low_rank",
    "gen_sparse",
    "gen_subspace",
    "incoherence",
    "tau_criterion",
    "tau_oracle",
    "Solution",
    "SolverOptions",
    "dual_objective",
    "kkt_residual",
    "primal_objective",
    "recovery_error",
    "solve",
    "CertificateCandidate",
    "CertificateReport",
    "build_correction",
    "certificate_search",
    "check_correction_bounds",
    "check_direct_sum_dimensions",
    "check_low_rank_candidate_bounds",
    "check_pairwise_sum_bound",
    "check_sparse_candidate_bounds",
    "check_subspace_tangent_bound",
    "ExperimentConfig",
    "ExperimentRecord",
    "lemma_suite",
    "phase_grid",
    "read_records",
    "tau_sweep",
    "write_records",
]
