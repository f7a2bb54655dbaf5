"""Online primal-dual solver for covering programs with sum-of-lq-norm objectives."""

from .certify import (
    Certificate,
    DualityChain,
    ViolationReport,
    certified_ratio,
    dual_violation,
    violation_bound,
    weak_duality_check,
)
from .model import (
    CoveringConstraint,
    InstanceHeader,
    NormTerm,
    dual_exponent,
    eval_gradient,
    eval_objective,
    instance_stats,
    norm_q,
)
from .oracle import OracleResult, offline_oracle
from .reduction import DuplicationMap, ReducedSolver, duplicate, project_solution
from .solver import SolverConfig, SolverState, StepTrace, default_delta

__all__ = [
    "Certificate",
    "CoveringConstraint",
    "DualityChain",
    "DuplicationMap",
    "InstanceHeader",
    "NormTerm",
    "OracleResult",
    "ReducedSolver",
    "SolverConfig",
    "SolverState",
    "StepTrace",
    "ViolationReport",
    "certified_ratio",
    "default_delta",
    "dual_exponent",
    "dual_violation",
    "duplicate",
    "eval_gradient",
    "eval_objective",
    "instance_stats",
    "norm_q",
    "offline_oracle",
    "project_solution",
    "violation_bound",
    "weak_duality_check",
]
