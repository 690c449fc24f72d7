"""Exception hierarchy.

``ValidationError`` covers malformed inputs (CLI exit code 2); everything
under ``NumericalError`` is a failure of a computation on valid input (exit
code 3).
"""


class MdeError(Exception):
    pass


class ValidationError(MdeError, ValueError):
    pass


class ExprSyntaxError(ValidationError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class NumericalError(MdeError, ArithmeticError):
    pass


class ExprDomainError(NumericalError):
    def __init__(self, message: str, offset: int, node_text: str):
        where = f" in '{node_text}'" if node_text else ""
        at = f" (offset {offset})" if offset >= 0 else ""
        super().__init__(f"{message}{where}{at}")
        self.offset = offset
        self.node_text = node_text


class NonDifferentiableError(NumericalError):
    def __init__(self, message: str, offset: int = -1):
        super().__init__(message if offset < 0 else f"{message} at offset {offset}")
        self.offset = offset


class QuadratureError(NumericalError):
    pass


class DomainExitError(NumericalError):
    """The state left the open box Omega."""

    def __init__(self, message: str, t: float, state=None):
        super().__init__(f"{message} at t={t!r}")
        self.t = t
        self.state = state


class StepSizeError(NumericalError):
    pass


class SingularJumpFactorError(NumericalError):
    pass


class SingularJacobianError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    pass
