"""Exception types shared across the simulator."""


class SimulationError(Exception):
    """Base class for gatesim errors."""


class IdentityError(SimulationError):
    """Unknown, duplicate, or mismatched agent identity."""


class AdmissionError(SimulationError):
    """Contract acceptance attempted against a failing admission verdict."""


class LedgerError(SimulationError):
    """Ledger integrity violation (double settlement, dangling reference)."""


class LedgerParseError(LedgerError):
    """Persisted ledger file is malformed or truncated."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class EnumerationBoundError(SimulationError):
    """Brute-force enumeration request exceeds the supported instance size."""


class GovernanceError(SimulationError):
    """Governance schedule entry violates threshold monotonicity."""


class ConfigError(SimulationError):
    """Scenario configuration failed validation.

    ``errors`` holds one "path: message" string per violation.
    """

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
