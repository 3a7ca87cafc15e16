import asyncio
from typing import List
from unittest.mock import AsyncMock

from difftriage.backends.mock import DEFAULT_RULES
from difftriage.callgraph import build_diff_callgraph, schedule
from difftriage.config import SummarizerConfig
from difftriage.const import CYCLE_STUB_SUMMARY, FAILED_STUB_SUMMARY
from difftriage.errors import BackendError, ReplyParseError
from difftriage.ingest import preprocess
from difftriage.model import ChatMessage, ChatRole, Completion, DiffArtifact, FssLevel, FunctionKind
from difftriage.modules.summarizer import (
    SummarizerModule,
    build_fss_prompt,
    build_summary_prompt,
    parse_fss_reply,
    parse_summary_reply,
    run_summarization,
)
from difftriage.run_store import RunStore
from tests import RecordingBackend, TestBase, added, artifact_of, modified

FSS_JSON = (
    "```json\n"
    '{"behaviors": "High", "resources": "high", "confidentiality": "none", '
    '"integrity": "LOW", "availability": "none"}\n'
    "```"
)


class _FailingBackend(RecordingBackend):
    """Fails every request about one function."""

    def __init__(self, failing: str):
        super().__init__()
        self.failing = failing

    async def _complete(self, messages: List[ChatMessage]) -> Completion:
        if any(f"Name: {self.failing}\n" in message.content for message in messages):
            raise BackendError("HTTP 503")
        return await super()._complete(messages)


class _ConcurrencyBackend(RecordingBackend):
    def __init__(self):
        super().__init__()
        self.active = 0
        self.peak = 0

    async def _complete(self, messages: List[ChatMessage]) -> Completion:
        self.active += 1
        self.peak = max(self.peak, self.active)
        await asyncio.sleep(0.01)
        self.active -= 1
        return await super()._complete(messages)


class TestSummarizer(TestBase):

    async def _run(self, artifact: DiffArtifact, backend, store=None, config=SummarizerConfig()):
        artifact = preprocess(artifact)
        order = schedule(build_diff_callgraph(artifact))
        return await run_summarization(artifact, order, backend, config=config, store=store)

    def test_summary_prompt_of_modified_function(self):
        # GIVEN
        function = preprocess(self._chain_artifact()).functions_by_name["mod_401000_401100"]

        # WHEN
        messages = build_summary_prompt(function, [("FUN_401200", "Calls the leaf.")], "A CSV converter.")

        # THEN
        self.assertEqual([ChatRole.SYSTEM, ChatRole.USER], [message.role for message in messages])
        prompt = messages[1].content
        self.assertIn("## Project\nA CSV converter.", prompt)
        self.assertIn("Name: mod_401000_401100\nKind: modified", prompt)
        self.assertIn("## Decompiled code\n```c\nundefined8 mod_401000_401100(", prompt)
        self.assertIn("## Dependencies\n- FUN_401200: Calls the leaf.", prompt)
        self.assertIn("## Textual diff (old -> new)\n```diff\n--- old\n+++ new\n@@", prompt)

    def test_summary_prompt_of_added_function(self):
        # GIVEN
        function = added("1000", "int FUN_1000(void)\n{\n  return 0;\n}")

        # WHEN
        prompt = build_summary_prompt(function, [], "A CSV converter.")[1].content

        # THEN
        self.assertIn("None, the function calls no other changed function.", prompt)
        self.assertNotIn("Textual diff", prompt)

    def test_long_code_is_truncated_with_marker(self):
        # GIVEN
        function = added("1000", "x" * 500)

        # WHEN
        with self.assertLogs("difftriage.modules.summarizer", level="WARNING") as logs:
            prompt = build_summary_prompt(function, [], "A CSV converter.", code_budget=100)[1].content

        # THEN
        self.assertIn("x" * 100 + "\n/* ... truncated 400 characters ... */", prompt)
        self.assertNotIn("x" * 101, prompt)
        self.assertIn("code of FUN_1000 truncated", logs.output[0])

    def test_long_diff_drops_trailing_hunks(self):
        # GIVEN
        old_lines = [f"  l{index};" for index in range(1, 21)]
        new_lines = list(old_lines)
        new_lines[1] = "  L2;"
        new_lines[17] = "  L18;"
        function = modified("1000", "1100", "\n".join(old_lines), "\n".join(new_lines))

        # WHEN
        with self.assertLogs("difftriage.modules.summarizer", level="WARNING") as logs:
            prompt = build_summary_prompt(function, [], "A CSV converter.", diff_budget=80)[1].content

        # THEN
        self.assertIn("+  L2;", prompt)
        self.assertNotIn("+  L18;", prompt)
        self.assertIn("@@ ... 1 more hunk(s) truncated ... @@", prompt)
        self.assertIn("diff of FUN_1100 truncated", logs.output[0])

    def test_fss_prompt_continues_after_summary(self):
        # GIVEN
        messages = build_summary_prompt(added("1000", "int f();"), [], "A CSV converter.")

        # THEN
        with self.assertRaises(ValueError):
            build_fss_prompt(messages)
        continued = build_fss_prompt(messages + [ChatMessage(role=ChatRole.ASSISTANT, content="It does nothing.")])
        self.assertEqual(4, len(continued))
        self.assertTrue(continued[-1].content.startswith("## Functional Sensitivity Score"))

    def test_parse_summary_reply(self):
        # WHEN
        summary, diff_summary = parse_summary_reply(
            'Here you go:\n```json\n{"summary": " Opens a shell. ", "diff_summary": "Adds the call."}\n```\nDone.'
        )

        # THEN
        self.assertEqual("Opens a shell.", summary)
        self.assertEqual("Adds the call.", diff_summary)

    def test_parse_summary_reply_errors(self):
        with self.assertRaises(ReplyParseError) as context:
            parse_summary_reply('```json\n{"description": "x"}\n```')
        self.assertIn("missing key 'summary'", str(context.exception))
        with self.assertRaises(ReplyParseError):
            parse_summary_reply("The function opens a shell.")

    def test_parse_fss_reply_is_case_insensitive(self):
        # WHEN
        classification = parse_fss_reply(FSS_JSON)

        # THEN
        self.assertEqual(FssLevel.HIGH, classification.behaviors)
        self.assertEqual(FssLevel.LOW, classification.integrity)

    def test_parse_fss_reply_errors(self):
        with self.assertRaises(ReplyParseError) as context:
            parse_fss_reply('```json\n{"behaviors": "high", "resources": "high", "confidentiality": "none", "availability": "none"}\n```')
        self.assertIn("missing key 'integrity'", str(context.exception))
        with self.assertRaises(ReplyParseError) as context:
            parse_fss_reply(FSS_JSON.replace('"High"', '"extreme"'))
        self.assertIn("'extreme'", str(context.exception))
        self.assertIn("'behaviors'", str(context.exception))

    async def test_chain_is_summarized_callee_first(self):
        # GIVEN
        backend = RecordingBackend()

        # WHEN
        result = await self._run(self._chain_artifact(), backend)

        # THEN
        self.assertEqual(["FUN_401300", "FUN_401200", "mod_401000_401100"], list(result.analyses))
        self.assertEqual(
            {"FUN_401300": 9.4, "FUN_401200": 0.0, "mod_401000_401100": 0.0},
            self._scores(result.analyses),
        )
        self.assertEqual({}, result.failures)
        self.assertEqual(6, backend.calls)
        leaf_summary = result.analyses["FUN_401300"].summary
        self.assertIn("socket(", leaf_summary)
        [caller_prompt] = backend.prompts_mentioning("Name: FUN_401200\n")
        self.assertIn(f"- FUN_401300: {leaf_summary}", caller_prompt)
        self.assertIsNotNone(result.analyses["mod_401000_401100"].diff_summary)
        self.assertIsNone(result.analyses["FUN_401300"].diff_summary)
        self.assertEqual(FunctionKind.MODIFIED, result.analyses["mod_401000_401100"].kind)
        self.assertGreater(result.usage.total_tokens, 0)

    async def test_warm_cache_makes_no_calls(self):
        # GIVEN
        store = RunStore(self._temp_dir())
        first = await self._run(self._chain_artifact(), RecordingBackend(), store=store)
        backend = RecordingBackend()

        # WHEN
        second = await self._run(self._chain_artifact(), backend, store=store)

        # THEN
        self.assertEqual(0, backend.calls)
        self.assertEqual(3, second.cache_hits)
        self.assertEqual(first.analyses, second.analyses)
        self.assertEqual(0, second.usage.total_tokens)
        self.assertIn("### assistant", store.load_prompt_log("FUN_401300"))
        self.assertTrue(store.analysis_path("mod_401000_401100").exists())

    async def test_changed_inputs_miss_the_cache(self):
        # GIVEN
        store = RunStore(self._temp_dir())
        await self._run(self._chain_artifact(), RecordingBackend(), store=store)
        artifact = self._chain_artifact()
        changed = artifact.model_copy(update={
            "new": artifact.new.model_copy(update={"project_description": "A network daemon."}),
        })
        backend = RecordingBackend()

        # WHEN
        result = await self._run(changed, backend, store=store)

        # THEN
        self.assertEqual(0, result.cache_hits)
        self.assertEqual(6, backend.calls)

    async def test_other_model_misses_the_cache(self):
        # GIVEN
        store = RunStore(self._temp_dir())
        await self._run(self._chain_artifact(), RecordingBackend(), store=store)

        # WHEN
        result = await self._run(self._chain_artifact(), RecordingBackend(model="other"), store=store)

        # THEN
        self.assertEqual(0, result.cache_hits)

    async def test_failed_function_becomes_a_stub(self):
        # GIVEN
        backend = _FailingBackend("FUN_401300")

        # WHEN
        result = await self._run(self._chain_artifact(), backend)

        # THEN
        self.assertEqual(["FUN_401300"], list(result.failures))
        self.assertIn("HTTP 503", result.failures["FUN_401300"])
        self.assertEqual(["FUN_401200", "mod_401000_401100"], list(result.analyses))
        [caller_prompt] = backend.prompts_mentioning("Name: FUN_401200\n")
        self.assertIn(f"- FUN_401300: {FAILED_STUB_SUMMARY}", caller_prompt)

    async def test_mutual_recursion_gets_cycle_stub(self):
        # GIVEN
        artifact = artifact_of(
            added("1000", "int FUN_1000(int param_1)\n{\n  return FUN_2000(param_1 - 1);\n}", callees=["FUN_2000"]),
            added("2000", "int FUN_2000(int param_1)\n{\n  return FUN_1000(param_1 - 1);\n}", callees=["FUN_1000"]),
        )
        backend = RecordingBackend()

        # WHEN
        result = await self._run(artifact, backend)

        # THEN
        self.assertEqual(["FUN_1000", "FUN_2000"], list(result.analyses))
        [first_prompt] = backend.prompts_mentioning("Name: FUN_1000\n")
        [second_prompt] = backend.prompts_mentioning("Name: FUN_2000\n")
        self.assertIn(f"- FUN_2000: {CYCLE_STUB_SUMMARY}", first_prompt)
        self.assertIn(f"- FUN_1000: {result.analyses['FUN_1000'].summary}", second_prompt)

    async def test_concurrency_is_bounded(self):
        # GIVEN
        artifact = artifact_of(*[
            added(f"{index}000", f"int FUN_{index}000(void)\n{{\n  return {index};\n}}")
            for index in range(1, 7)
        ])
        backend = _ConcurrencyBackend()

        # WHEN
        result = await self._run(artifact, backend, config=SummarizerConfig(concurrency=2))

        # THEN
        self.assertEqual(6, len(result.analyses))
        self.assertEqual(2, backend.peak)

    async def test_unparseable_reply_is_reprompted_once(self):
        # GIVEN
        backend = AsyncMock()
        backend.model = "scripted"
        backend.complete.side_effect = [
            Completion(reply="The function returns zero."),
            Completion(reply='```json\n{"summary": "Returns zero."}\n```'),
            Completion(reply=FSS_JSON),
        ]
        under_test = SummarizerModule(backend)

        # WHEN
        analysis, conversation = await under_test.analyze_function(
            added("1000", "int FUN_1000(void)\n{\n  return 0;\n}"), [], "A CSV converter.",
        )

        # THEN
        self.assertEqual(3, backend.complete.await_count)
        self.assertEqual("Returns zero.", analysis.summary)
        self.assertEqual(
            [ChatRole.SYSTEM, ChatRole.USER, ChatRole.ASSISTANT, ChatRole.USER,
             ChatRole.ASSISTANT, ChatRole.USER, ChatRole.ASSISTANT],
            [message.role for message in conversation],
        )
        self.assertIn("could not be processed", conversation[3].content)
        self.assertEqual(FssLevel.HIGH, analysis.classification.behaviors)

    async def test_reply_unparseable_twice_fails_the_function(self):
        # GIVEN
        backend = AsyncMock()
        backend.model = "scripted"
        backend.complete.side_effect = [
            Completion(reply="The function returns zero."),
            Completion(reply="Still no JSON, sorry."),
        ]
        store = RunStore(self._temp_dir())
        artifact = artifact_of(added("1000", "int FUN_1000(void)\n{\n  return 0;\n}"))

        # WHEN
        result = await self._run(artifact, backend, store=store)

        # THEN
        self.assertEqual({}, result.analyses)
        self.assertIn("reply contains no fenced JSON object", result.failures["FUN_1000"])
        self.assertIn("Still no JSON, sorry.", store.load_prompt_log("FUN_1000"))
        self.assertFalse(store.analysis_path("FUN_1000").exists())

    async def test_sensitive_tokens_never_lower_the_score(self):
        # GIVEN
        patterns = [rule.pattern for rule in DEFAULT_RULES]
        token_sets = [[pattern] for pattern in patterns] + [
            patterns[index:index + 3] for index in range(0, len(patterns), 2)
        ] + [patterns]
        functions = []
        for index, tokens in enumerate(token_sets):
            body = "".join(f'  sink("{token}");\n' for token in tokens)
            functions.append(added(f"{0x5000 + 2 * index:x}", f"int f(int a) {{\n{body}  return a * 3;\n}}"))
            functions.append(added(f"{0x5001 + 2 * index:x}", "int f(int a) {\n  return a * 3;\n}"))

        # WHEN
        result = await self._run(artifact_of(*functions), RecordingBackend(), config=SummarizerConfig(concurrency=8))

        # THEN
        scores = self._scores(result.analyses)
        for index, tokens in enumerate(token_sets):
            with self.subTest(tokens=tokens):
                seeded = scores[f"FUN_{0x5000 + 2 * index:x}"]
                stripped = scores[f"FUN_{0x5001 + 2 * index:x}"]
                self.assertEqual(0.0, stripped)
                self.assertGreaterEqual(seeded, stripped)
        self.assertEqual(10.0, scores[f"FUN_{0x5000 + 2 * (len(token_sets) - 1):x}"])
