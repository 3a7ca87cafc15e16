import logging
from os import PathLike
from pathlib import Path
from typing import Dict, Optional

from difftriage.backends import LLMBackend
from difftriage.backends.http import HttpBackend
from difftriage.backends.mock import MockBackend
from difftriage.callgraph import Schedule, build_diff_callgraph, schedule
from difftriage.config import BackendConfig, BackendKind, MockConfig, TriageConfig
from difftriage.const import REPORT_JSON_FILE, REPORT_MARKDOWN_FILE
from difftriage.evaluator import EvaluationReport, evaluate_corpus
from difftriage.ingest import load_artifact, preprocess
from difftriage.model import DiffArtifact, DiffVerdict
from difftriage.modules.predictor import PredictorModule
from difftriage.modules.summarizer import SummarizationResult, SummarizerModule
from difftriage.report import AnalysisReport, build_analysis_report, dump_report, render_analysis_markdown
from difftriage.run_store import RunStore, write_text_atomic


def create_backend(config: BackendConfig, mock: MockConfig = MockConfig()) -> LLMBackend:
    """
    Creates the backend described by a configuration section.

    Raises:
        ConfigError: for the HTTP backend, if LLM_API_KEY is not set.
    """
    if config.kind == BackendKind.MOCK:
        return MockBackend.from_config(mock)
    return HttpBackend(config)


class AnalysisOutcome:
    def __init__(
        self,
        artifact: DiffArtifact,
        schedule: Schedule,
        summarization: SummarizationResult,
        verdict: DiffVerdict,
        report: AnalysisReport,
    ):
        self.artifact = artifact
        self.schedule = schedule
        self.summarization = summarization
        self.verdict = verdict
        self.report = report


class DiffTriageClient:
    """
    Client running the triage pipeline on diff artifacts.
    """
    logging = logging.getLogger(__name__)

    def __init__(
        self,
        config: TriageConfig = TriageConfig(),
        backend: Optional[LLMBackend] = None,
        prediction_backend: Optional[LLMBackend] = None,
    ):
        """
        Initializes the client, creating the backends from the configuration unless given.

        Args:
            config (TriageConfig): the run configuration.
            backend (Optional[LLMBackend]): backend of the summarization step.
            prediction_backend (Optional[LLMBackend]): backend of the prediction step, defaults
                to the [prediction_backend] section if configured, otherwise to `backend`.
        """
        self.config = config
        self._backend = backend or create_backend(config.backend, config.mock)
        if prediction_backend is None and config.prediction_backend is not None:
            prediction_backend = create_backend(config.prediction_backend, config.mock)
        self._prediction_backend = prediction_backend or self._backend

    def summarizer(self, store: Optional[RunStore] = None) -> SummarizerModule:
        return SummarizerModule(self._backend, config=self.config.summarizer, store=store)

    @property
    def predictor(self) -> PredictorModule:
        return PredictorModule(self._prediction_backend, config=self.config.predictor)

    def prepare(self, artifact: DiffArtifact) -> tuple[DiffArtifact, Schedule]:
        """Canonicalizes names, attaches diffs and computes the schedule."""
        artifact = preprocess(artifact, context=self.config.summarizer.diff_context)
        callgraph = build_diff_callgraph(artifact)
        return artifact, schedule(callgraph)

    async def analyze(
        self,
        artifact: DiffArtifact | PathLike | str,
        run_dir: Optional[PathLike | str] = None,
    ) -> AnalysisOutcome:
        """
        Runs load, canonicalization, scheduling, summarization and prediction on one diff.

        Args:
            artifact: the artifact or the path of its JSON file.
            run_dir: if given, analyses are cached there and the reports are written to it.
        Returns:
            AnalysisOutcome: all intermediate results and the report.
        """
        if not isinstance(artifact, DiffArtifact):
            artifact = load_artifact(artifact)
        artifact, order = self.prepare(artifact)
        self.logging.info(
            f"schedule of {artifact.new.name} {artifact.old.version} -> {artifact.new.version}: "
            f"{len(order.order)} functions in {len(order.components)} components"
        )

        store = RunStore(run_dir) if run_dir is not None else None
        summarization = await self.summarizer(store).run(artifact, order)
        verdict = await self.predictor.predict(artifact, summarization.analyses)
        report = build_analysis_report(
            artifact,
            summarization.analyses,
            summarization.failures,
            verdict,
            k=self.config.predictor.k,
            include_changelog=self.config.predictor.include_changelog,
        )

        if store is not None:
            write_text_atomic(store.run_dir / REPORT_JSON_FILE, dump_report(report))
            write_text_atomic(store.run_dir / REPORT_MARKDOWN_FILE, render_analysis_markdown(report))
            store.write_run_info(self._run_info(summarization, verdict))
        return AnalysisOutcome(artifact, order, summarization, verdict, report)

    def _run_info(self, summarization: SummarizationResult, verdict: DiffVerdict) -> Dict:
        return {
            "config": self.config.model_dump(mode="json"),
            "model": self._backend.model,
            "prediction_model": self._prediction_backend.model,
            "cache_hits": summarization.cache_hits,
            "backend_usage": (summarization.usage + verdict.usage).model_dump(mode="json"),
            "failures": summarization.failures,
            "verdict": verdict.verdict.value,
        }

    async def evaluate(
        self,
        manifest_path: PathLike | str,
        work_dir: Optional[PathLike | str] = None,
    ) -> EvaluationReport:
        """Evaluates a labeled corpus under every configured (k, changelog) combination."""
        return await evaluate_corpus(
            manifest_path,
            self.config,
            self._backend,
            prediction_backend=self._prediction_backend,
            work_dir=Path(work_dir) if work_dir is not None else None,
        )
