import json
import re
from typing import Any, Dict, List, Optional

from difftriage.errors import ReplyParseError

TRUNCATION_MARKER = "/* ... truncated {omitted} characters ... */"
DIFF_TRUNCATION_MARKER = "@@ ... {omitted} more hunk(s) truncated ... @@"

_FENCED_BLOCK = re.compile(r"```([A-Za-z0-9_+-]*)[ \t]*\n(.*?)```", re.DOTALL)


def fenced_blocks(text: str) -> List[tuple]:
    """All fenced code blocks of a markdown text as (language, content) tuples."""
    return [(match.group(1).lower(), match.group(2)) for match in _FENCED_BLOCK.finditer(text)]


def extract_json_block(text: str) -> Dict[str, Any]:
    """
    Extracts the first fenced JSON object of a reply, ignoring any surrounding prose.

    Blocks tagged "json" are preferred, untagged blocks are accepted as long as they decode to an
    object.

    Raises:
        ReplyParseError: if the reply contains no fenced JSON object.
    """
    candidates = [content for language, content in fenced_blocks(text) if language == "json"]
    candidates += [content for language, content in fenced_blocks(text) if language == ""]
    for content in candidates:
        try:
            value = json.loads(content)
        except json.JSONDecodeError:
            continue
        if isinstance(value, dict):
            return value
    raise ReplyParseError("reply contains no fenced JSON object")


def first_code_block(text: str) -> Optional[str]:
    blocks = fenced_blocks(text)
    return blocks[0][1] if blocks else None


def truncate_code(code: str, budget: int) -> str:
    """
    Cuts code to at most `budget` characters and appends an explicit marker if anything was cut.
    """
    if len(code) <= budget:
        return code
    omitted = len(code) - budget
    return code[:budget] + "\n" + TRUNCATION_MARKER.format(omitted=omitted)


def truncate_hunks(header: str, hunks: List[str], budget: int) -> str:
    """
    Joins diff hunks under a header, dropping whole trailing hunks once the budget is exceeded.

    The first hunk is always kept, cut with :func:`truncate_code` if it alone exceeds the budget.
    """
    text = header
    for index, hunk in enumerate(hunks):
        if index > 0 and len(text) + len(hunk) > budget:
            return text + DIFF_TRUNCATION_MARKER.format(omitted=len(hunks) - index) + "\n"
        text += hunk
    if len(text) > budget:
        return truncate_code(text, budget)
    return text
