from __future__ import annotations


class DnlsError(Exception):
    """Base error; `exit_code` is what the CLI returns when it escapes a command."""

    exit_code: int = 1

    def __init__(self, message: str, *, details: dict | None = None) -> None:
        super().__init__(message)
        self.user_message = message
        self.details = dict(details or {})


class ConfigError(DnlsError):
    exit_code = 2


class GridError(DnlsError):
    exit_code = 2


class DecayError(DnlsError):
    exit_code = 2


class ReflectionError(DnlsError):
    exit_code = 2


class SolverError(DnlsError):
    exit_code = 3


class WindingUnresolved(SolverError):
    def __init__(self, message: str, *, suggested_samples: int) -> None:
        super().__init__(message, details={"suggested_samples": suggested_samples})
        self.suggested_samples = suggested_samples


class HypothesisError(DnlsError):
    exit_code = 4


class ResonanceDetected(HypothesisError):
    pass


class EigenvalueDetected(HypothesisError):
    pass
