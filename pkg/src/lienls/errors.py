"""Exception hierarchy."""


class LieNLSError(Exception):
    """Base class for all toolkit errors."""


class UnboundSymbolError(LieNLSError):
    def __init__(self, names):
        self.names = list(names)
        super().__init__("unbound symbol(s): " + ", ".join(self.names))


class DomainError(LieNLSError, ValueError):
    pass


class SerializationError(LieNLSError, ValueError):
    pass


class AlgebraError(LieNLSError, ValueError):
    pass


class RankInstabilityError(AlgebraError):
    pass


class NotSubalgebraError(AlgebraError):
    pass


class OutOfChartError(LieNLSError, ValueError):
    pass


class FrameDegenerateError(LieNLSError):
    pass


class SymbolicInversionError(LieNLSError):
    pass


class NonUnimodularError(LieNLSError):
    pass


class SingularMetricError(LieNLSError):
    pass


class PolarizationError(LieNLSError):
    def __init__(self, condition: str, detail: str = ""):
        self.condition = condition
        super().__init__(f"invalid polarization ({condition})" + (f": {detail}" if detail else ""))


class SplitIncompatibleError(LieNLSError):
    pass


class NonScalarError(LieNLSError):
    pass


class UnsupportedGroupError(LieNLSError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class NotReducibleError(LieNLSError):
    def __init__(self, message: str, witness=None):
        self.witness = witness
        super().__init__(message)


class WrongEquationError(LieNLSError):
    pass


class SingularityError(LieNLSError):
    pass


class BoundaryContaminationError(LieNLSError):
    pass


class ConfigError(LieNLSError):
    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        self.line = line
        self.source = source
        where = ""
        if source:
            where += source
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)
