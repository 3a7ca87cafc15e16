from typing import List, Optional


class DiffTriageError(Exception):
    """Base class of every error raised by difftriage."""


class ArtifactError(DiffTriageError, ValueError):
    """
    A diff artifact could not be loaded or parsed.

    Args:
        message (str): Human-readable description.
        path (Optional[str]): Field path of the offending value, f.e. "functions[3].kind".
    """

    def __init__(self, message: str, path: Optional[str] = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class ArtifactValidationError(ArtifactError):
    """The artifact is well-formed JSON but violates one or more invariants."""

    def __init__(self, violations: List[str]):
        self.violations = list(violations)
        super().__init__("artifact violates invariants: " + "; ".join(self.violations))


class NameCollisionError(ArtifactError):
    """Two functions would end up with the same canonical name."""


class VectorParseError(DiffTriageError, ValueError):
    """A FSS vector string is malformed."""


class ReplyParseError(DiffTriageError, ValueError):
    """An LLM reply does not follow the requested output contract."""


class ConfigError(DiffTriageError, ValueError):
    """Invalid configuration (file contents, flags or environment)."""


class BackendError(DiffTriageError, RuntimeError):
    """The LLM backend failed to produce a completion."""

    def __init__(self, message: str, attempts: int = 1):
        self.attempts = attempts
        super().__init__(message)


class BackendAuthenticationError(BackendError):
    """The LLM backend rejected the credentials."""


class EvaluationError(DiffTriageError, ValueError):
    """Corpus-level evaluation could not be performed."""
