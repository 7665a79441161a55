"""Exception hierarchy shared by all modules."""


class TalentiError(Exception):
    """Base class for every error raised by talenti_lab."""


class ParameterError(TalentiError, ValueError):
    """An argument violates a documented precondition."""


class FormatError(TalentiError):
    """A MESH v1 file is malformed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(TalentiError):
    """A mesh or dof map violates a structural invariant."""


class ContractError(TalentiError):
    """Inputs are inconsistent with each other (mesh mismatch, negative field, ...)."""


class ConvergenceError(TalentiError):
    """An iterative solver did not converge."""

    def __init__(self, message, residual=None):
        self.residual = residual
        if residual is not None:
            message = f"{message} (last residual {residual:.3e})"
        super().__init__(message)


class DiagnosticError(ConvergenceError):
    """An iteration behaved in a way the theory rules out (e.g. oscillating eigenvalue)."""


class HypothesisError(TalentiError):
    """A comparison was requested outside the hypotheses under which it is known to hold."""


class ConfigurationError(TalentiError):
    """A scenario file does not match the schema."""

    def __init__(self, message, pointer=""):
        self.pointer = pointer
        super().__init__(f"{pointer or '/'}: {message}")
