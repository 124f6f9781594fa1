"""Exceptions raised by the simulator.

Every error the package raises on purpose derives from `TwpaSimError` so callers (the
CLI in particular) can tell input problems from solver problems.
"""

from collections.abc import Sequence


class TwpaSimError(Exception):
    pass


class InputError(TwpaSimError):
    """Invalid user input; the CLI maps these to exit code 2."""


class SolverError(TwpaSimError):
    """A numerical procedure failed; the CLI maps these to exit code 3."""


class InvalidParameters(InputError):
    pass


class InvalidDesign(InputError):
    pass


class ManifestError(InputError):
    pass


class NetlistSyntaxError(InputError):
    def __init__(self, line: int, reason: str):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class NetlistSemanticError(InputError):
    def __init__(self, reason: str, *, names: Sequence[str] = (), line: int | None = None):
        self.reason = reason
        self.names = tuple(names)
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{reason}")


class ZeroCoupling(InputError):
    pass


class NoConvergence(SolverError):
    def __init__(
        self,
        message: str,
        *,
        residual_history: Sequence[float] = (),
        flux_ratio: float | None = None,
    ):
        self.residual_history = list(residual_history)
        self.flux_ratio = flux_ratio
        super().__init__(message)


class DegenerateExpansion(SolverError):
    def __init__(self, message: str, *, flux_ratio: float | None = None):
        self.flux_ratio = flux_ratio
        super().__init__(message)


class SingularSystem(SolverError):
    pass


class SingularJacobian(SolverError):
    pass


class GuardExceeded(InputError):
    pass


class InsufficientLength(InputError):
    pass
