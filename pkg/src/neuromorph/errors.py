"""Exception hierarchy shared by every module in the package."""


class NeuromorphError(Exception):
    """Base class for all package errors."""


class ShapeError(NeuromorphError, ValueError):
    """Array dimensions do not line up."""


class DomainError(NeuromorphError, ValueError):
    """A value lies outside the range an operation accepts."""


class ParameterError(NeuromorphError, ValueError):
    """Invalid model or codec parameters (thresholds, T, L, ...)."""


class ModeError(NeuromorphError, ValueError):
    """Input activations are not of the kind an operation requires."""


class VocabularyError(NeuromorphError, KeyError):
    """Unknown symbol or token ID."""

    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return str(self.args[0]) if self.args else ""


class DegenerateRowError(NeuromorphError, ValueError):
    """Every entry of a softmax row is masked."""
