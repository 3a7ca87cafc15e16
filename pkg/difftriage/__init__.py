"""
difftriage.

Summarizes binary diffs of software updates with an LLM, scores every changed function with the
Functional Sensitivity Score and predicts whether an update contains injected malicious code.
"""

from difftriage.client import DiffTriageClient

__all__ = ["DiffTriageClient"]
