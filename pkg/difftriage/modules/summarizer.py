import asyncio
import logging
from typing import Dict, List, Optional, Set, Tuple

from difftriage.backends import LLMBackend
from difftriage.callgraph import Schedule
from difftriage.config import SummarizerConfig
from difftriage.const import (
    CODE_SECTION_HEADER,
    CYCLE_STUB_SUMMARY,
    DEFAULT_CODE_BUDGET,
    DEFAULT_DIFF_BUDGET,
    DEPENDENCY_SECTION_HEADER,
    DIFF_SECTION_HEADER,
    FAILED_STUB_SUMMARY,
    FSS_REQUEST_MARKER,
    FUNCTION_NAME_LABEL,
)
from difftriage.errors import BackendError, ReplyParseError
from difftriage.fss import fss_score
from difftriage.model import (
    ChatMessage,
    ChatRole,
    DiffArtifact,
    FssCategory,
    FssClassification,
    FssLevel,
    FunctionAnalysis,
    FunctionKind,
    FunctionRecord,
    TokenUsage,
)
from difftriage.modules import TriageModule
from difftriage.run_store import RunStore
from difftriage.textdiff import UnifiedDiff, unified_diff
from difftriage.util.hashing import cache_key
from difftriage.util.text_utils import extract_json_block, truncate_code, truncate_hunks

logger = logging.getLogger(__name__)

SUMMARY_SYSTEM_PROMPT = """You are an experienced reverse engineer reviewing a software update.
You are given one decompiled function that was added, deleted or modified by the update, the
summaries of the functions it calls and, for modified functions, the textual diff between the
old and the new version.

Describe in two or three sentences what the function does. Name sensitive behavior explicitly,
f.e. network communication, process creation, file system traversal or cryptography. If a diff
is given, additionally describe what the update changed.

Answer with a single fenced JSON block:
```json
{"summary": "<what the function does>", "diff_summary": "<what the update changed>"}
```
Leave out "diff_summary" if no diff is given."""

FSS_PROMPT = f"""{FSS_REQUEST_MARKER}
Classify the function you just summarized in the following five categories.

- behaviors: sensitive behaviors, f.e. reading system information, opening sockets, forking processes
- resources: sensitive resources, f.e. the network, system files, hardware devices
- confidentiality: confidentiality impact, f.e. sending files over the network, reading passwords or keys
- integrity: integrity impact, f.e. modifying the system configuration, overwriting files, encrypting data
- availability: availability impact, f.e. disabling system services, consuming unnecessary resources

Use exactly one of the levels none, low, medium or high per category.

Answer with a single fenced JSON block:
```json
{{"behaviors": "<level>", "resources": "<level>", "confidentiality": "<level>", "integrity": "<level>", "availability": "<level>"}}
```"""


def _diff_of(function: FunctionRecord, diff_context: int) -> UnifiedDiff:
    if function.text_diff is not None:
        return UnifiedDiff.from_text(function.text_diff)
    return unified_diff(function.code_old or "", function.code_new or "", context=diff_context)


def build_summary_prompt(
    function: FunctionRecord,
    dependency_summaries: List[Tuple[str, str]],
    project_description: str,
    code_budget: int = DEFAULT_CODE_BUDGET,
    diff_budget: int = DEFAULT_DIFF_BUDGET,
    diff_context: int = 3,
) -> List[ChatMessage]:
    """
    Builds the first prompt of a function: its code, the summaries of its callees and, for
    Modified functions, the diff.

    Args:
        function (FunctionRecord): the function, Deleted functions are shown with their old code.
        dependency_summaries (List[Tuple[str, str]]): (name, summary) of every in-diff callee.
        project_description (str): what the program is supposed to do.
        code_budget (int): maximum number of code characters before truncation.
        diff_budget (int): maximum number of diff characters, whole hunks are dropped beyond it.
        diff_context (int): context lines if the diff has to be computed here.
    """
    code = truncate_code(function.code, code_budget)
    if code != function.code:
        logger.warning(f"code of {function.display_name} truncated to {code_budget} characters")
    sections = [
        f"## Project\n{project_description}",
        f"## Function\n{FUNCTION_NAME_LABEL} {function.display_name}\nKind: {function.kind.value}",
        f"{CODE_SECTION_HEADER}\n```c\n{code}\n```",
    ]
    if dependency_summaries:
        dependencies = "\n".join(f"- {name}: {summary}" for name, summary in dependency_summaries)
    else:
        dependencies = "None, the function calls no other changed function."
    sections.append(f"{DEPENDENCY_SECTION_HEADER}\n{dependencies}")

    if function.kind == FunctionKind.MODIFIED:
        diff = _diff_of(function, diff_context)
        if diff.is_empty:
            diff_text = "(no textual difference)\n"
        else:
            diff_text = truncate_hunks(diff.header, list(diff.hunks), diff_budget)
            if diff_text != diff.header + "".join(diff.hunks):
                logger.warning(f"diff of {function.display_name} truncated to {diff_budget} characters")
        sections.append(f"{DIFF_SECTION_HEADER}\n```diff\n{diff_text}```")

    return [
        ChatMessage(role=ChatRole.SYSTEM, content=SUMMARY_SYSTEM_PROMPT),
        ChatMessage(role=ChatRole.USER, content="\n\n".join(sections)),
    ]


def build_fss_prompt(prior: List[ChatMessage]) -> List[ChatMessage]:
    """
    Continues the summary conversation with the classification request.

    Raises:
        ValueError: if the conversation does not end with the assistant's summary.
    """
    if not prior or prior[-1].role != ChatRole.ASSISTANT:
        raise ValueError("the FSS prompt continues a conversation ending with the summary reply")
    return list(prior) + [ChatMessage(role=ChatRole.USER, content=FSS_PROMPT)]


def parse_summary_reply(text: str) -> Tuple[str, Optional[str]]:
    """
    Extracts (summary, diff summary) from a reply.

    Raises:
        ReplyParseError: if the JSON block or the summary is missing.
    """
    data = extract_json_block(text)
    summary = data.get("summary")
    if not isinstance(summary, str) or not summary.strip():
        raise ReplyParseError("missing key 'summary'")
    diff_summary = data.get("diff_summary")
    if diff_summary is not None and not isinstance(diff_summary, str):
        raise ReplyParseError("'diff_summary' must be a string")
    return summary.strip(), (diff_summary.strip() or None) if diff_summary else None


def parse_fss_reply(text: str) -> FssClassification:
    """
    Extracts the five category levels from a reply, level names are case-insensitive.

    Raises:
        ReplyParseError: naming the missing key or the invalid level.
    """
    data = extract_json_block(text)
    levels: Dict[str, FssLevel] = {}
    for category in FssCategory:
        key = category.field_name
        if key not in data:
            raise ReplyParseError(f"missing key '{key}'")
        try:
            levels[key] = FssLevel.parse(data[key])
        except ValueError:
            raise ReplyParseError(f"invalid level {data[key]!r} for '{key}', expected none, low, medium or high")
    return FssClassification(**levels)


class SummarizationResult:
    """
    Attributes:
        analyses (Dict[str, FunctionAnalysis]): per display name, in schedule order.
        failures (Dict[str, str]): functions that could not be analyzed and the reason.
        usage (TokenUsage): tokens spent by backend calls of this run, cache hits excluded.
        cache_hits (int): functions taken from the run directory.
    """

    def __init__(
        self,
        analyses: Dict[str, FunctionAnalysis],
        failures: Dict[str, str],
        usage: TokenUsage,
        cache_hits: int,
    ):
        self.analyses = analyses
        self.failures = failures
        self.usage = usage
        self.cache_hits = cache_hits


class SummarizerModule(TriageModule):
    """
    Summarizes and classifies every function of a diff, callees before callers.
    """

    def __init__(
        self,
        backend: LLMBackend,
        config: SummarizerConfig = SummarizerConfig(),
        store: Optional[RunStore] = None,
    ):
        super().__init__(backend)
        self.config = config
        self.store = store

    def _dependency_summaries(
        self,
        name: str,
        schedule: Schedule,
        analyses: Dict[str, FunctionAnalysis],
        failures: Dict[str, str],
    ) -> List[Tuple[str, str]]:
        summaries = []
        for callee in schedule.dep_map[name]:
            if callee in analyses:
                summaries.append((callee, analyses[callee].summary))
            elif callee in failures:
                summaries.append((callee, FAILED_STUB_SUMMARY))
            else:
                # only possible for a callee in the same cycle that is not processed yet
                summaries.append((callee, CYCLE_STUB_SUMMARY))
        return summaries

    def _cache_key(
        self,
        function: FunctionRecord,
        dependency_summaries: List[Tuple[str, str]],
        project_description: str,
    ) -> str:
        return cache_key(self._backend.model, {
            "name": function.display_name,
            "kind": function.kind.value,
            "code_old": function.code_old,
            "code_new": function.code_new,
            "text_diff": function.text_diff,
            "dependencies": [list(entry) for entry in dependency_summaries],
            "project_description": project_description,
            "code_budget": self.config.code_budget,
            "diff_budget": self.config.diff_budget,
            "diff_context": self.config.diff_context,
        })

    async def analyze_function(
        self,
        function: FunctionRecord,
        dependency_summaries: List[Tuple[str, str]],
        project_description: str,
    ) -> Tuple[FunctionAnalysis, List[ChatMessage]]:
        """
        Runs the two-turn summarize-then-classify conversation for one function.

        Returns:
            Tuple[FunctionAnalysis, List[ChatMessage]]: the analysis and the full conversation.
        Raises:
            ReplyParseError: if a reply stays unparseable after the re-prompt.
            BackendError: if the backend fails.
        """
        messages = build_summary_prompt(
            function,
            dependency_summaries,
            project_description,
            code_budget=self.config.code_budget,
            diff_budget=self.config.diff_budget,
            diff_context=self.config.diff_context,
        )
        summary_exchange = await self._ask(messages, parse_summary_reply)
        self._save_failed_conversation(function.display_name, summary_exchange)
        summary, diff_summary = summary_exchange.unwrap()

        fss_exchange = await self._ask(build_fss_prompt(summary_exchange.conversation), parse_fss_reply)
        self._save_failed_conversation(function.display_name, fss_exchange)
        classification = fss_exchange.unwrap()

        analysis = FunctionAnalysis(
            id=function.id,
            kind=function.kind,
            summary=summary,
            diff_summary=diff_summary if function.kind == FunctionKind.MODIFIED else None,
            classification=classification,
            score=fss_score(classification),
            usage=summary_exchange.usage + fss_exchange.usage,
        )
        return analysis, fss_exchange.conversation

    def _save_failed_conversation(self, name: str, exchange) -> None:
        if exchange.error is not None and self.store is not None:
            self.store.save_prompt_log(name, exchange.conversation)

    async def run(self, artifact: DiffArtifact, schedule: Schedule) -> SummarizationResult:
        """
        Analyzes every function of a canonicalized artifact along its schedule.

        Components whose dependencies are complete run concurrently up to the configured bound,
        members of one component run one after another in name order. A failing function is
        recorded and its callers see a stub summary instead.

        Args:
            artifact (DiffArtifact): canonicalized artifact.
            schedule (Schedule): schedule of the artifact's diff callgraph.
        Returns:
            SummarizationResult: analyses in schedule order, failures and usage.
        """
        functions = artifact.functions_by_name
        project_description = artifact.new.project_description
        semaphore = asyncio.Semaphore(self.config.concurrency)

        analyses: Dict[str, FunctionAnalysis] = {}
        failures: Dict[str, str] = {}
        usage = [TokenUsage()]
        cache_hits = [0]

        async def process(name: str) -> None:
            function = functions[name]
            dependency_summaries = self._dependency_summaries(name, schedule, analyses, failures)
            key = self._cache_key(function, dependency_summaries, project_description)
            if self.store is not None:
                cached = self.store.load_analysis(name, key)
                if cached is not None:
                    self.logging.debug(f"cache hit for {name}")
                    analyses[name] = cached
                    cache_hits[0] += 1
                    return
            async with semaphore:
                try:
                    analysis, conversation = await self.analyze_function(
                        function, dependency_summaries, project_description,
                    )
                except (BackendError, ReplyParseError) as e:
                    self.logging.error(f"analysis of {name} failed: {e}")
                    failures[name] = str(e)
                    return
            analyses[name] = analysis
            usage[0] = usage[0] + analysis.usage
            if self.store is not None:
                self.store.save_prompt_log(name, conversation)
                self.store.save_analysis(analysis, key)
            self.logging.debug(f"{name}: score {analysis.score.value}")

        async def process_component(index: int) -> None:
            for name in schedule.components[index]:
                await process(name)

        completed: Set[int] = set()
        started: Set[int] = set()
        pending: Dict[asyncio.Task, int] = {}
        try:
            while len(completed) < len(schedule.components):
                for index in schedule.ready_components(completed, started):
                    started.add(index)
                    pending[asyncio.create_task(process_component(index))] = index
                done, _ = await asyncio.wait(pending, return_when=asyncio.FIRST_COMPLETED)
                for task in done:
                    completed.add(pending.pop(task))
                    task.result()
        finally:
            for task in pending:
                task.cancel()

        self.logging.info(
            f"analyzed {len(analyses)} of {len(functions)} functions "
            f"({cache_hits[0]} cached, {len(failures)} failed)"
        )
        return SummarizationResult(
            analyses={name: analyses[name] for name in schedule.order if name in analyses},
            failures={name: failures[name] for name in schedule.order if name in failures},
            usage=usage[0],
            cache_hits=cache_hits[0],
        )


async def run_summarization(
    artifact: DiffArtifact,
    schedule: Schedule,
    backend: LLMBackend,
    config: SummarizerConfig = SummarizerConfig(),
    store: Optional[RunStore] = None,
) -> SummarizationResult:
    return await SummarizerModule(backend, config=config, store=store).run(artifact, schedule)
