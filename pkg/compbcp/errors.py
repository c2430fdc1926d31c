class CompBcpError(Exception):
    """Base class for every error raised on purpose by compbcp."""


class ParameterError(CompBcpError, ValueError):
    pass


class DomainError(CompBcpError, ValueError):
    pass


class ConstraintViolation(DomainError):
    def __init__(self, row: int, detail: str):
        self.row = row
        self.detail = detail
        super().__init__(f"Row {row} violates the row constraint: {detail}")


class ContractError(CompBcpError, ValueError):
    pass


class ConfigurationError(CompBcpError, ValueError):
    pass


class InvariantBreach(CompBcpError, RuntimeError):
    pass


class CompBcpWarning(UserWarning):
    pass


class ConvergenceWarning(CompBcpWarning):
    pass


class ScreeningCaveat(CompBcpWarning):
    pass
