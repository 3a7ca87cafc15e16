"""
Deterministic offline backend.

Answers the pipeline's prompts from a rule table mapping code substrings to FSS level
fragments. Only the decompiled code section of a conversation is matched, never dependency
summaries or diffs, so a function is classified by its own code alone.
"""

import json
import re
from typing import List, Optional, Sequence, Tuple

from difftriage.backends import LLMBackend
from difftriage.config import MockConfig, MockVerdict
from difftriage.const import (
    CODE_SECTION_HEADER,
    DEFAULT_MOCK_VERDICT_THRESHOLD,
    DIFF_SECTION_HEADER,
    FSS_REQUEST_MARKER,
    FUNCTION_NAME_LABEL,
    PREDICTION_SCORE_LABEL,
    VERDICT_LINE_PREFIX,
)
from difftriage.fss import parse_vector
from difftriage.model import (
    ChatMessage,
    ChatRole,
    Completion,
    FssCategory,
    FssClassification,
    TokenUsage,
)
from difftriage.util.text_utils import first_code_block

MOCK_MODEL_NAME = "mock"

_SCORE = re.compile(rf"{re.escape(PREDICTION_SCORE_LABEL)}\s*(\d+(?:\.\d+)?)")


class MockRule:
    """
    Maps a code substring to a partial classification.

    Args:
        pattern (str): substring searched in the decompiled code, case-sensitive.
        levels (FssClassification | str): the fragment, either a classification or a partial
            vector like "B:H/R:H" (categories not named are none).
    """

    def __init__(self, pattern: str, levels: FssClassification | str):
        if not pattern:
            raise ValueError("mock rule pattern must not be empty")
        self.pattern = pattern
        self.levels = parse_vector(levels, allow_partial=True) if isinstance(levels, str) else levels

    def __repr__(self) -> str:
        return f"MockRule({self.pattern!r})"


DEFAULT_RULES: Tuple[MockRule, ...] = (
    MockRule("socket(", "B:H/R:H"),
    MockRule("connect(", "B:H/R:H"),
    MockRule("execve", "I:H/C:H"),
    MockRule("/bin/sh", "I:H/C:H"),
    MockRule("encrypt", "I:H"),
    MockRule("AES", "I:H"),
    MockRule("fork(", "B:M"),
    MockRule("dup2(", "C:M"),
    MockRule("sendto(", "A:H/R:M"),
    MockRule("opendir(", "R:M/B:L"),
)


def _approximate_tokens(text: str) -> int:
    return len(text.split())


class MockBackend(LLMBackend):
    """
    Backend answering from a rule table, a pure function of (rules, conversation).

    Summary prompts get a templated summary naming the matched patterns, FSS prompts the
    element-wise maximum of all matched fragments and prediction prompts MALICIOUS iff any
    listed score reaches the verdict threshold (or the fixed verdict, if configured).
    """

    def __init__(
        self,
        rules: Sequence[MockRule] = DEFAULT_RULES,
        verdict_threshold: float = DEFAULT_MOCK_VERDICT_THRESHOLD,
        fixed_verdict: Optional[MockVerdict] = None,
        model: str = MOCK_MODEL_NAME,
    ):
        self.rules = tuple(rules)
        self.verdict_threshold = verdict_threshold
        self.fixed_verdict = fixed_verdict
        self._model = model

    @property
    def model(self) -> str:
        return self._model

    @classmethod
    def from_config(cls, config: MockConfig, model: str = MOCK_MODEL_NAME) -> "MockBackend":
        rules = DEFAULT_RULES
        if config.rules is not None:
            rules = tuple(MockRule(rule.pattern, rule.vector) for rule in config.rules)
        return cls(
            rules=rules,
            verdict_threshold=config.verdict_threshold,
            fixed_verdict=config.fixed_verdict,
            model=model,
        )

    def matching_rules(self, code: str) -> List[MockRule]:
        return [rule for rule in self.rules if rule.pattern in code]

    def classify(self, code: str) -> FssClassification:
        classification = FssClassification.none()
        for rule in self.matching_rules(code):
            classification = classification.maximum(rule.levels)
        return classification

    async def _complete(self, messages: List[ChatMessage]) -> Completion:
        user_messages = [message.content for message in messages if message.role == ChatRole.USER]
        reply = self._reply(user_messages)
        usage = TokenUsage(
            input_tokens=sum(_approximate_tokens(message.content) for message in messages),
            output_tokens=_approximate_tokens(reply),
        )
        return Completion(reply=reply, usage=usage)

    def _reply(self, user_messages: List[str]) -> str:
        for content in reversed(user_messages):
            if FSS_REQUEST_MARKER in content:
                return self._fss_reply(user_messages)
            if VERDICT_LINE_PREFIX in content:
                return self._prediction_reply(content)
            if CODE_SECTION_HEADER in content:
                return self._summary_reply(content)
        return "I can only answer summary, classification and prediction prompts."

    @staticmethod
    def _code_of(content: str) -> str:
        _, _, section = content.partition(CODE_SECTION_HEADER)
        return first_code_block(section) or ""

    @staticmethod
    def _name_of(content: str) -> str:
        for line in content.splitlines():
            if line.startswith(FUNCTION_NAME_LABEL):
                return line[len(FUNCTION_NAME_LABEL):].strip()
        return "The function"

    def _summary_reply(self, content: str) -> str:
        name = self._name_of(content)
        patterns = [rule.pattern for rule in self.matching_rules(self._code_of(content))]
        if patterns:
            summary = f"{name} uses sensitive operations: {', '.join(patterns)}."
        else:
            summary = f"{name} performs ordinary program logic without sensitive operations."
        result = {"summary": summary}

        if DIFF_SECTION_HEADER in content:
            _, _, section = content.partition(DIFF_SECTION_HEADER)
            diff = first_code_block(section) or ""
            lines = diff.splitlines()
            added = sum(1 for line in lines if line.startswith("+") and not line.startswith("+++"))
            removed = sum(1 for line in lines if line.startswith("-") and not line.startswith("---"))
            result["diff_summary"] = f"The update adds {added} and removes {removed} line(s) of {name}."

        return f"Summary of the function:\n```json\n{json.dumps(result, indent=2)}\n```"

    def _fss_reply(self, user_messages: List[str]) -> str:
        code = ""
        for content in reversed(user_messages):
            if CODE_SECTION_HEADER in content:
                code = self._code_of(content)
                break
        classification = self.classify(code)
        result = {category.field_name: classification.level(category).value for category in FssCategory}
        return f"Classification based on the observed behavior:\n```json\n{json.dumps(result, indent=2)}\n```"

    def _prediction_reply(self, content: str) -> str:
        if self.fixed_verdict is not None:
            verdict = self.fixed_verdict.value.upper()
            return f"Verdict fixed by configuration.\n{VERDICT_LINE_PREFIX} {verdict}"
        scores = [float(match) for match in _SCORE.findall(content)]
        highest = max(scores, default=0.0)
        verdict = "MALICIOUS" if highest >= self.verdict_threshold else "BENIGN"
        return (
            f"The most sensitive changed function scores {highest:.1f}, "
            f"the threshold is {self.verdict_threshold:.1f}.\n{VERDICT_LINE_PREFIX} {verdict}"
        )


def mock_rules(table: Sequence[Tuple[str, FssClassification | str]], **kwargs) -> MockBackend:
    """
    Builds a mock backend from a (pattern, levels) table.

    Raises:
        ValueError: if a pattern is empty.
    """
    return MockBackend(rules=[MockRule(pattern, levels) for pattern, levels in table], **kwargs)
