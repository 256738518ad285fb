"""Exception types shared across the package."""

from __future__ import annotations

__all__ = [
    "VaccinationChannelError",
    "GainConstraintError",
    "PredictionError",
    "HorizonError",
    "NonFiniteStateError",
    "ScenarioError",
]


class VaccinationChannelError(ValueError):
    """The vaccination channel gain mu*N is zero; V cannot act."""


class GainConstraintError(ValueError):
    """A law was bound with gains violating a required constraint."""


class PredictionError(ValueError):
    """No valid asymptotic prediction exists for the requested law/gains."""


class HorizonError(ValueError):
    """The trajectory horizon is too short for the requested check."""

    def __init__(self, message: str, required_t_end: float | None = None):
        super().__init__(message)
        self.required_t_end = required_t_end


class NonFiniteStateError(RuntimeError):
    """Integration produced a non-finite state."""

    def __init__(self, message: str, t: float, sample_index: int):
        super().__init__(message)
        self.t = t
        self.sample_index = sample_index


class ScenarioError(ValueError):
    """A scenario file failed to parse or validate."""
