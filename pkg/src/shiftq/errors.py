"""Exception hierarchy shared by every engine."""


class ShiftqError(Exception):
    pass


class StructuralError(ShiftqError, ValueError):
    """Operands do not fit together (variable lists, arities, caps)."""


class DomainError(ShiftqError, ValueError):
    """Inputs are well formed but outside the operation's domain."""


class ResourceError(ShiftqError, RuntimeError):
    """A configured budget (degree, term count, candidates) was exceeded."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class HypothesisError(ShiftqError):
    """A theorem hypothesis failed; ``hypothesis`` names which one."""

    def __init__(self, hypothesis, message, residual=None):
        super().__init__(f"{hypothesis}: {message}")
        self.hypothesis = hypothesis
        self.residual = residual
