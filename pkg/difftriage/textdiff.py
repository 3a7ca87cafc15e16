import difflib
import re
from typing import List, Tuple

from pydantic import BaseModel, ConfigDict

from difftriage.const import DEFAULT_DIFF_CONTEXT

OLD_HEADER = "--- old"
NEW_HEADER = "+++ new"

_HUNK_HEADER = re.compile(r"^@@ -(\d+)(?:,(\d+))? \+(\d+)(?:,(\d+))? @@$")


class UnifiedDiff(BaseModel):
    """
    Unified diff of two decompiled function bodies.

    `text` is empty when both sides are identical, otherwise it starts with the
    "--- old" / "+++ new" file headers followed by the hunks.
    """
    model_config = ConfigDict(frozen=True)

    text: str = ""
    hunks: Tuple[str, ...] = ()

    @property
    def hunk_count(self) -> int:
        return len(self.hunks)

    @property
    def is_empty(self) -> bool:
        return not self.text

    @property
    def header(self) -> str:
        return f"{OLD_HEADER}\n{NEW_HEADER}\n" if self.text else ""

    @classmethod
    def from_text(cls, text: str) -> "UnifiedDiff":
        """Splits a diff text produced by :func:`unified_diff` back into its hunks."""
        if not text:
            return cls()
        hunks: List[List[str]] = []
        for line in text.rstrip("\n").split("\n")[2:]:
            if line.startswith("@@"):
                hunks.append([line])
            elif hunks:
                hunks[-1].append(line)
        return cls(text=text, hunks=tuple("\n".join(hunk) + "\n" for hunk in hunks))


def _normalized_lines(code: str) -> List[str]:
    return [line.rstrip() for line in code.splitlines()]


def unified_diff(old_code: str, new_code: str, context: int = DEFAULT_DIFF_CONTEXT) -> UnifiedDiff:
    """
    Computes the unified diff of two code bodies.

    Lines are compared after stripping trailing whitespace, nothing else is normalized.
    Hunk headers follow difflib, which omits the line count when it is 1 ("@@ -4 +4 @@").

    Args:
        old_code (str): old side, newline delimited.
        new_code (str): new side, newline delimited.
        context (int): number of unchanged lines around each change. Defaults to 3.
    Returns:
        UnifiedDiff: the diff, empty if the sides are identical.
    """
    if context < 0:
        raise ValueError("context must not be negative")

    lines = list(difflib.unified_diff(
        _normalized_lines(old_code),
        _normalized_lines(new_code),
        fromfile="old",
        tofile="new",
        n=context,
        lineterm="",
    ))
    if not lines:
        return UnifiedDiff()

    hunks: List[List[str]] = []
    for line in lines[2:]:
        if line.startswith("@@"):
            hunks.append([line])
        else:
            hunks[-1].append(line)

    return UnifiedDiff(
        text="\n".join(lines) + "\n",
        hunks=tuple("\n".join(hunk) + "\n" for hunk in hunks),
    )


def parse_hunk_header(header: str) -> Tuple[int, int, int, int]:
    """
    Parses "@@ -a,b +c,d @@" into (a, b, c, d), a missing count meaning 1.
    """
    match = _HUNK_HEADER.match(header.strip())
    if not match:
        raise ValueError(f"malformed hunk header {header!r}")
    old_start, old_count, new_start, new_count = match.groups()
    return (
        int(old_start),
        1 if old_count is None else int(old_count),
        int(new_start),
        1 if new_count is None else int(new_count),
    )


def apply_unified_diff(old_code: str, diff: UnifiedDiff) -> str:
    """
    Applies a diff produced by :func:`unified_diff` to the old side.

    The result has trailing whitespace stripped from every line and no trailing newline,
    matching the normalization the diff was computed with.

    Args:
        old_code (str): the old side the diff was computed from.
        diff (UnifiedDiff): the diff.
    Returns:
        str: the reconstructed new side.
    Raises:
        ValueError: if a context or removed line does not match the old side.
    """
    old_lines = _normalized_lines(old_code)
    if diff.is_empty:
        return "\n".join(old_lines)

    result: List[str] = []
    cursor = 0
    for hunk in diff.hunks:
        header, *body = hunk.rstrip("\n").split("\n")
        old_start, old_count, _, _ = parse_hunk_header(header)
        # an empty old range points at the line before the insertion
        hunk_start = old_start - 1 if old_count > 0 else old_start
        result.extend(old_lines[cursor:hunk_start])
        cursor = hunk_start
        for line in body:
            marker, text = line[:1], line[1:]
            if marker == "+":
                result.append(text)
                continue
            if cursor >= len(old_lines) or old_lines[cursor] != text:
                raise ValueError(f"diff does not apply at old line {cursor + 1}")
            if marker == " ":
                result.append(text)
            cursor += 1
    result.extend(old_lines[cursor:])
    return "\n".join(result)
