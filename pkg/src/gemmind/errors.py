"""Shared exception types."""


class GemmindError(Exception):
    """Base class for all package errors."""


class ConfigError(GemmindError):
    """A configuration document or object failed validation."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class ContractError(GemmindError):
    """A caller violated an operation precondition."""


class GenerationError(GemmindError):
    """A stimulus sequence could not be generated under its constraints."""


class SyncError(GemmindError):
    """Clock-offset estimation had insufficient or unusable data."""


class ArchiveError(GemmindError):
    """A session archive is malformed or cannot be written."""


class AnalysisError(GemmindError):
    """An analysis stage received unusable input."""
