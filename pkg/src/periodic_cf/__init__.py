"""Periodic continued fractions of quadratic irrationals, computed exactly by
the surd recurrence and by a walk along the river of the associated form."""

from .core import (
    CFExpansion,
    ConvergentPair,
    QuadraticSurd,
    convergents,
    expand,
    expand_sqrt,
    floor_surd,
    isqrt,
    make_surd,
)
from .errors import CFError, DomainError, InvariantViolation, RationalRoot
from .river import RiverState, check_theorem2, detect_period, init_river, river_step
from .stats import CylinderConstraint, cylinder_measure, empirical_P, gk_limit, gk_report

__all__ = [
    "CFExpansion",
    "CFError",
    "CylinderConstraint",
    "ConvergentPair",
    "DomainError",
    "InvariantViolation",
    "QuadraticSurd",
    "RationalRoot",
    "RiverState",
    "check_theorem2",
    "convergents",
    "cylinder_measure",
    "detect_period",
    "empirical_P",
    "expand",
    "expand_sqrt",
    "floor_surd",
    "gk_limit",
    "gk_report",
    "init_river",
    "isqrt",
    "make_surd",
    "river_step",
]
