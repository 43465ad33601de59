class CFError(Exception):
    """Base class; ``kind`` is the machine-readable tag printed by the CLI."""

    kind = "error"


class DomainError(CFError, ValueError):
    kind = "domain"


class DegenerateDiscriminant(DomainError):
    kind = "nonpositive_discriminant"


class RationalRoot(DomainError):
    kind = "rational_root"


class InvalidDiscriminant(DomainError):
    kind = "invalid_discriminant"


class StepBudgetExceeded(CFError, RuntimeError):
    kind = "step_budget"


class NodeBudgetExceeded(CFError, RuntimeError):
    kind = "node_budget"


class InvariantViolation(CFError, AssertionError):
    """An identity that must hold did not.  Never caught internally."""

    kind = "invariant_violation"
