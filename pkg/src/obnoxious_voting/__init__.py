"""Distributed voting over obnoxious alternatives in metric spaces.

Two-step mechanisms (groups pick representatives, representatives are
weighted by group size), exact and adversarial distortion evaluation, a
small simplex solver for the adversary, and generators for the tight
lower-bound instances.
"""

from .distortion import (
    BoundViolation,
    DistortionReport,
    Method,
    SearchSpaceTooLarge,
    adversarial_distortion,
    adversarial_lp,
    discrete_adversary,
    distortion_on_metric,
    mechanism_distortion_bound_check,
)
from .forge import BaseCase, ChainStep, Family, Final, GeneratorSpec, build
from .lp import LinearProgram, LpSolution, Relation, Status, check_solution, solve
from .matching import hopcroft_karp
from .mechanisms import (
    MECHANISMS,
    DominationCertificate,
    MechanismOutcome,
    certify_domination,
    centralized_veto,
    max_weight_of_domination,
    max_weight_of_domination_line,
    max_weight_of_optimal,
    max_weight_of_optimal_line,
    plurality_veto,
    reduce_line_instance,
)
from .model import (
    Grouping,
    MetricInstance,
    ModelError,
    OrdinalProfile,
    TieRule,
    derive_profile,
    is_consistent,
    optimal_alternative,
    social_welfare,
    validate_metric,
)

__all__ = [
    "BaseCase", "BoundViolation", "ChainStep", "DistortionReport", "DominationCertificate",
    "Family", "Final", "GeneratorSpec", "Grouping", "LinearProgram", "LpSolution", "MECHANISMS",
    "MechanismOutcome", "Method", "MetricInstance", "ModelError", "OrdinalProfile", "Relation",
    "SearchSpaceTooLarge", "Status", "TieRule", "adversarial_distortion", "adversarial_lp",
    "build", "centralized_veto", "certify_domination", "check_solution", "derive_profile",
    "discrete_adversary", "distortion_on_metric", "hopcroft_karp", "is_consistent",
    "max_weight_of_domination", "max_weight_of_domination_line", "max_weight_of_optimal",
    "max_weight_of_optimal_line", "mechanism_distortion_bound_check", "optimal_alternative",
    "plurality_veto", "reduce_line_instance", "social_welfare", "solve", "validate_metric",
]
