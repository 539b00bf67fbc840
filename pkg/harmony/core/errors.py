"""
Exception hierarchy shared by the library, the CLI and the HTTP service.
"""
from typing import Optional


class HarmonyError(Exception):
    """Base class for every error raised on purpose by this package."""


class ModelError(HarmonyError):
    """An error hypergraph, mechanism or shot violates its invariants."""


class ParseError(HarmonyError):
    """Malformed detector-error-model text."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class UnsupportedConstructError(ParseError):
    """Valid upstream syntax that this parser rejects explicitly (repeat blocks etc.)."""


class DecompositionError(HarmonyError):
    """A mechanism cannot be split into graph-like components."""


class InfeasibleSyndromeError(HarmonyError):
    """No edge set of the matching graph produces the requested detection events."""


class RecoveryError(HarmonyError):
    """A chosen edge has no mechanism that could explain it."""


class NumericalError(HarmonyError):
    """Tensor network contraction lost all precision."""


class ProblemTooLargeError(HarmonyError):
    """Exhaustive computation requested beyond its enumeration bound."""


class ConfigurationError(HarmonyError):
    """Invalid combination of inputs, e.g. correlated decoding without basis tags."""
