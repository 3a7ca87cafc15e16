import re
from typing import Dict, Iterable, List, Optional

from difftriage.backends import LLMBackend
from difftriage.config import PredictorConfig
from difftriage.const import (
    NO_CHANGES_RATIONALE,
    PREDICTION_SCORE_LABEL,
    SUMMARIZATION_FAILED_RATIONALE,
    VERDICT_LINE_PREFIX,
)
from difftriage.errors import ReplyParseError
from difftriage.fss import format_vector
from difftriage.model import (
    BinaryMeta,
    ChatMessage,
    ChatRole,
    DiffArtifact,
    DiffVerdict,
    FunctionAnalysis,
    TopFunction,
    Verdict,
)
from difftriage.modules import TriageModule

PREDICTION_SYSTEM_PROMPT = f"""You are a security analyst verifying a software update before it is deployed.
You are given the description of the program and the most sensitive functions the update added,
deleted or modified, each with a summary and a Functional Sensitivity Score between 0 and 10.

Decide whether the update contains injected malicious code by reasoning about whether the
changes match the project description. Explain your reasoning briefly and end your answer with
exactly one final line, either
{VERDICT_LINE_PREFIX} MALICIOUS
or
{VERDICT_LINE_PREFIX} BENIGN"""

_VERDICT = re.compile(rf"{re.escape(VERDICT_LINE_PREFIX)}\s*\**\s*(MALICIOUS|BENIGN)\b", re.IGNORECASE)


def select_top_k(analyses: Dict[str, FunctionAnalysis] | Iterable[FunctionAnalysis], k: int) -> List[FunctionAnalysis]:
    """
    Selects the k functions with the highest score.

    Ties are broken by display name, so the result does not depend on the input order.

    Args:
        analyses: analyses keyed by display name, or any iterable of analyses.
        k (int): maximum number of functions, at least 1.
    Raises:
        ValueError: if k < 1.
    """
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    values = analyses.values() if isinstance(analyses, dict) else analyses
    ordered = sorted(values, key=lambda analysis: (-analysis.score.value, analysis.name))
    return ordered[:k]


def build_prediction_prompt(
    top: List[FunctionAnalysis],
    old: BinaryMeta,
    new: BinaryMeta,
    include_changelog: bool = False,
) -> List[ChatMessage]:
    """
    Builds the prediction prompt from the selected functions.

    Args:
        top (List[FunctionAnalysis]): the selected functions, most sensitive first.
        old (BinaryMeta): the old binary.
        new (BinaryMeta): the new binary, its project description and changelog are used.
        include_changelog (bool): append the new version's changelog if it has one.
    Raises:
        ValueError: if no function is given.
    """
    if not top:
        raise ValueError("the prediction prompt needs at least one function")

    sections = [
        f"## Project\n{new.project_description}",
        f"## Update\n{new.name} {old.version} -> {new.version}",
    ]
    functions = []
    for rank, analysis in enumerate(top, start=1):
        lines = [
            f"### {rank}. {analysis.name} ({analysis.kind.value})",
            f"{PREDICTION_SCORE_LABEL} {analysis.score.value:.1f}",
            f"Vector: {format_vector(analysis.classification)}",
            f"Summary: {analysis.summary}",
        ]
        if analysis.diff_summary:
            lines.append(f"Changes: {analysis.diff_summary}")
        functions.append("\n".join(lines))
    sections.append("## Most sensitive changed functions\n" + "\n\n".join(functions))

    if include_changelog and new.changelog:
        sections.append(f"## Changelog\n{new.changelog}")

    sections.append(
        f"Is this update malicious? End with the line \"{VERDICT_LINE_PREFIX} MALICIOUS\" "
        f"or \"{VERDICT_LINE_PREFIX} BENIGN\"."
    )
    return [
        ChatMessage(role=ChatRole.SYSTEM, content=PREDICTION_SYSTEM_PROMPT),
        ChatMessage(role=ChatRole.USER, content="\n\n".join(sections)),
    ]


def parse_verdict(text: str) -> Verdict:
    """
    Finds the verdict line anywhere in a reply, case-insensitive; the last one wins.

    Raises:
        ReplyParseError: if the reply contains no verdict.
    """
    matches = _VERDICT.findall(text)
    if not matches:
        raise ReplyParseError(f"no '{VERDICT_LINE_PREFIX} MALICIOUS' or '{VERDICT_LINE_PREFIX} BENIGN' line found")
    return Verdict(matches[-1].upper())


def _rationale(reply: str) -> str:
    lines = [line for line in reply.strip().splitlines() if not _VERDICT.search(line)]
    return "\n".join(lines).strip() or reply.strip()


class PredictorModule(TriageModule):
    """Decides MALICIOUS or BENIGN for a whole diff from its most sensitive functions."""

    def __init__(
        self,
        backend: LLMBackend,
        config: PredictorConfig = PredictorConfig(),
    ):
        super().__init__(backend)
        self.config = config

    async def predict(
        self,
        artifact: DiffArtifact,
        analyses: Dict[str, FunctionAnalysis],
        k: Optional[int] = None,
        include_changelog: Optional[bool] = None,
    ) -> DiffVerdict:
        """
        Predicts the verdict of a diff in a fresh conversation.

        Args:
            artifact (DiffArtifact): the diff, only its metadata is used.
            analyses (Dict[str, FunctionAnalysis]): analyses of the diff's functions.
            k (Optional[int]): overrides the configured k.
            include_changelog (Optional[bool]): overrides the configured changelog flag.
        Returns:
            DiffVerdict: UNKNOWN if the reply stays unparseable after one re-prompt.
        Raises:
            BackendError: transport errors are not handled here.
        """
        k = self.config.k if k is None else k
        include_changelog = self.config.include_changelog if include_changelog is None else include_changelog

        if not artifact.functions:
            self.logging.info(f"{artifact.new.name} {artifact.new.version}: empty diff, benign")
            return DiffVerdict(verdict=Verdict.BENIGN, rationale=NO_CHANGES_RATIONALE)

        top = select_top_k(analyses, k)
        top_functions = tuple(
            TopFunction(id=analysis.id, score=analysis.score.value, vector=format_vector(analysis.classification))
            for analysis in top
        )
        if not top:
            self.logging.warning(f"{artifact.new.name} {artifact.new.version}: no analyses, verdict unknown without prediction")
            return DiffVerdict(verdict=Verdict.UNKNOWN, rationale=SUMMARIZATION_FAILED_RATIONALE)

        messages = build_prediction_prompt(top, artifact.old, artifact.new, include_changelog=include_changelog)
        exchange = await self._ask(messages, parse_verdict)
        if exchange.error is not None:
            self.logging.warning(f"no verdict after re-prompt: {exchange.error}")
            return DiffVerdict(
                verdict=Verdict.UNKNOWN,
                rationale=str(exchange.error),
                top_functions=top_functions,
                usage=exchange.usage,
            )

        reply = exchange.conversation[-1].content
        self.logging.info(f"{artifact.new.name} {artifact.old.version} -> {artifact.new.version}: {exchange.value.value}")
        return DiffVerdict(
            verdict=exchange.value,
            rationale=_rationale(reply),
            top_functions=top_functions,
            usage=exchange.usage,
        )


async def predict(
    backend: LLMBackend,
    artifact: DiffArtifact,
    analyses: Dict[str, FunctionAnalysis],
    k: int,
    include_changelog: bool,
) -> DiffVerdict:
    return await PredictorModule(backend).predict(artifact, analyses, k=k, include_changelog=include_changelog)
