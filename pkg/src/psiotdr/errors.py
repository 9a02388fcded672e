"""Exception hierarchy and the CLI exit codes it maps to."""
from dataclasses import dataclass
from typing import Iterable, List, Union

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIGURATION = 2
EXIT_ANALYSIS = 3


@dataclass(frozen=True)
class Diagnostic:
    """One problem found while validating an input, located by a field path."""
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message}" if self.path else self.message


class PsiOtdrError(Exception):
    """Base class for all errors raised by the package."""
    exit_code: int = EXIT_UNEXPECTED


class DomainError(PsiOtdrError, ValueError):
    """Argument outside the physical domain of a function (negative time, x <= 0 in dB)."""
    exit_code = EXIT_CONFIGURATION


class ConfigurationError(PsiOtdrError, ValueError):
    """Invalid settings, scenario, link plan or command-line flag.

    Carries every diagnostic found, not just the first one.
    """
    exit_code = EXIT_CONFIGURATION

    def __init__(self, diagnostics: Union[str, Diagnostic, Iterable[Union[str, Diagnostic]]]):
        if isinstance(diagnostics, (str, Diagnostic)):
            diagnostics = [diagnostics]
        self.diagnostics: List[Diagnostic] = [
            d if isinstance(d, Diagnostic) else Diagnostic("", str(d)) for d in diagnostics
        ]
        super().__init__("; ".join(str(d) for d in self.diagnostics))


class AnalysisError(PsiOtdrError):
    """A figure of merit cannot be extracted from the trace."""
    exit_code = EXIT_ANALYSIS


class BeatLengthNotDetected(AnalysisError):
    """The P-OTDR spectrum holds no dominant spatial frequency."""

    def __init__(self, message: str = "no beat length detected"):
        super().__init__(message)
