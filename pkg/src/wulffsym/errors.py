"""Exception taxonomy shared by all modules."""


class DomainError(ValueError):
    """An argument is outside the mathematical domain of the operation."""


class InputError(ValueError):
    """Input data violates a stated precondition (sign, monotonicity, ...)."""


class CostGuardError(ValueError):
    """A combinatorial evaluator was asked to exceed its size guard."""


class CapabilityError(RuntimeError):
    """The requested configuration has no implemented evaluation path."""


class NumericError(RuntimeError):
    """A numerical routine failed to reach its accuracy target."""


class DegenerateLevelError(NumericError):
    """A level set carries vanishing gradient and cannot be sampled."""


class ModelError(RuntimeError):
    """Computed data contradicts a structural assumption (e.g. monotonicity)."""
