"""
Corpus-level evaluation: detection precision and recall of the verdicts and the separation of
the FSS distributions of benign and malicious functions.
"""

import logging
from os import PathLike
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy
from matplotlib import cbook
from pydantic import BaseModel, ConfigDict, Field

from difftriage.backends import LLMBackend
from difftriage.callgraph import build_diff_callgraph, schedule
from difftriage.config import PredictorConfig, TriageConfig
from difftriage.const import SUMMARIZATION_FAILED_RATIONALE
from difftriage.corpus import load_manifest
from difftriage.errors import EvaluationError
from difftriage.ingest import load_artifact, preprocess
from difftriage.model import DiffVerdict, FunctionAnalysis, Label, TokenUsage, Verdict
from difftriage.modules.predictor import PredictorModule
from difftriage.modules.summarizer import SummarizerModule
from difftriage.run_store import RunStore

logger = logging.getLogger(__name__)

WHISKER_RANGE = 1.5


class EvaluationModel(BaseModel):
    model_config = ConfigDict(frozen=True)


class DetectionMetrics(EvaluationModel):
    """
    Confusion counts with MALICIOUS as the positive class.

    UNKNOWN verdicts count as BENIGN predictions and are additionally tallied in `unknown`.
    Precision and recall are None when their denominator is 0.
    """
    tp: int = Field(ge=0)
    fp: int = Field(ge=0)
    tn: int = Field(ge=0)
    fn: int = Field(ge=0)
    unknown: int = Field(ge=0)
    precision: Optional[float] = None
    recall: Optional[float] = None

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def detection_metrics(
    verdicts: Sequence[Tuple[DiffVerdict, Optional[Label]]],
    names: Optional[Sequence[str]] = None,
) -> DetectionMetrics:
    """
    Computes the confusion counts of a corpus.

    Args:
        verdicts: (verdict, ground truth) per diff.
        names: diff names used in error messages, defaults to the position.
    Raises:
        EvaluationError: if a diff has no ground-truth label.
    """
    tp = fp = tn = fn = unknown = 0
    for index, (verdict, label) in enumerate(verdicts):
        if label is None:
            name = names[index] if names is not None else f"#{index}"
            raise EvaluationError(f"diff {name} has no ground-truth label")
        if verdict.verdict == Verdict.UNKNOWN:
            unknown += 1
        predicted_malicious = verdict.verdict == Verdict.MALICIOUS
        if predicted_malicious and label == Label.MALICIOUS:
            tp += 1
        elif predicted_malicious:
            fp += 1
        elif label == Label.MALICIOUS:
            fn += 1
        else:
            tn += 1
    return DetectionMetrics(
        tp=tp, fp=fp, tn=tn, fn=fn, unknown=unknown,
        precision=tp / (tp + fp) if tp + fp else None,
        recall=tp / (tp + fn) if tp + fn else None,
    )


class BoxStats(EvaluationModel):
    """Box plot statistics, quartiles linearly interpolated, whiskers at 1.5 times the IQR."""
    count: int
    mean: float
    median: float
    q1: float
    q3: float
    whisker_low: float
    whisker_high: float
    outliers: Tuple[float, ...] = ()


def box_stats(values: Sequence[float]) -> Optional[BoxStats]:
    if not values:
        return None
    # independent of the order of the diffs
    ordered = numpy.sort(numpy.asarray(values, dtype=float))
    stats = cbook.boxplot_stats(ordered, whis=WHISKER_RANGE)[0]
    return BoxStats(
        count=len(ordered),
        mean=float(numpy.mean(ordered)),
        median=float(stats["med"]),
        q1=float(stats["q1"]),
        q3=float(stats["q3"]),
        whisker_low=float(stats["whislo"]),
        whisker_high=float(stats["whishi"]),
        outliers=tuple(float(value) for value in stats["fliers"]),
    )


class SeparationStats(EvaluationModel):
    """
    Attributes:
        fss_ben: per diff, the mean score of its benign-labeled functions.
        fss_mal: per diff, the mean score of its malicious-labeled functions.
        separation: median(fss_mal) - median(fss_ben), None if a side is empty.
        mean_separation: the same for the means.
    """
    fss_ben: Tuple[float, ...]
    fss_mal: Tuple[float, ...]
    benign: Optional[BoxStats] = None
    malicious: Optional[BoxStats] = None
    separation: Optional[float] = None
    mean_separation: Optional[float] = None


def diff_means(
    analyses: Dict[str, FunctionAnalysis],
    function_labels: Dict[str, Label],
) -> Tuple[Optional[float], Optional[float]]:
    """
    Mean scores of the benign and the malicious functions of one diff, None for an absent class.

    Functions without analysis (failed) are skipped.
    """
    scores: Dict[Label, List[float]] = {Label.BENIGN: [], Label.MALICIOUS: []}
    for name, label in sorted(function_labels.items()):
        if name in analyses:
            scores[label].append(analyses[name].score.value)
    benign = float(numpy.mean(scores[Label.BENIGN])) if scores[Label.BENIGN] else None
    malicious = float(numpy.mean(scores[Label.MALICIOUS])) if scores[Label.MALICIOUS] else None
    return benign, malicious


def fss_separation(
    entries: Iterable[Tuple[Dict[str, FunctionAnalysis], Optional[Dict[str, Label]]]],
) -> SeparationStats:
    """
    Computes the separation statistics of a corpus.

    Args:
        entries: (analyses, function labels) per diff; diffs without labels contribute nothing.
    Raises:
        EvaluationError: if the corpus has no labeled function.
    """
    fss_ben: List[float] = []
    fss_mal: List[float] = []
    for analyses, function_labels in entries:
        if not function_labels:
            continue
        benign, malicious = diff_means(analyses, function_labels)
        if benign is not None:
            fss_ben.append(benign)
        if malicious is not None:
            fss_mal.append(malicious)

    if not fss_ben and not fss_mal:
        raise EvaluationError("corpus contains no labeled functions")

    benign_stats = box_stats(fss_ben)
    malicious_stats = box_stats(fss_mal)
    separation = mean_separation = None
    if benign_stats is not None and malicious_stats is not None:
        separation = malicious_stats.median - benign_stats.median
        mean_separation = malicious_stats.mean - benign_stats.mean
    return SeparationStats(
        fss_ben=tuple(fss_ben),
        fss_mal=tuple(fss_mal),
        benign=benign_stats,
        malicious=malicious_stats,
        separation=separation,
        mean_separation=mean_separation,
    )


class EvaluatedDiff:
    """One corpus diff after summarization and prediction under every configuration."""

    def __init__(
        self,
        name: str,
        project: str,
        family: Optional[str],
        label: Label,
        analyses: Dict[str, FunctionAnalysis],
        function_labels: Optional[Dict[str, Label]],
        verdicts: Dict[str, DiffVerdict],
        usage: TokenUsage = TokenUsage(),
        failures: Optional[Dict[str, str]] = None,
    ):
        self.name = name
        self.project = project
        self.family = family
        self.label = label
        self.analyses = analyses
        self.function_labels = function_labels
        self.verdicts = verdicts
        self.usage = usage
        self.failures = failures or {}


def grouped_separation(entries: Sequence[EvaluatedDiff], by: str = "project") -> Dict[str, SeparationStats]:
    """
    Separation statistics per project or per payload family.

    Diffs without payload family form the group "clean" when grouping by family.

    Raises:
        ValueError: if `by` is neither "project" nor "family".
    """
    if by not in ("project", "family"):
        raise ValueError(f"cannot group by {by!r}, expected 'project' or 'family'")
    groups: Dict[str, List[EvaluatedDiff]] = {}
    for entry in entries:
        key = entry.project if by == "project" else (entry.family or "clean")
        groups.setdefault(key, []).append(entry)

    result: Dict[str, SeparationStats] = {}
    for key in sorted(groups):
        try:
            result[key] = fss_separation((entry.analyses, entry.function_labels) for entry in groups[key])
        except EvaluationError:
            logger.debug(f"group {key} has no labeled functions")
    return result


def configuration_key(config: PredictorConfig) -> str:
    return f"k={config.k}" + (" +changelog" if config.include_changelog else "")


class ConfigurationResult(EvaluationModel):
    k: int
    include_changelog: bool
    metrics: DetectionMetrics
    per_project: Dict[str, DetectionMetrics]
    usage: TokenUsage = TokenUsage()

    @property
    def key(self) -> str:
        return configuration_key(PredictorConfig(k=self.k, include_changelog=self.include_changelog))


def configuration_result(entries: Sequence[EvaluatedDiff], config: PredictorConfig) -> ConfigurationResult:
    key = configuration_key(config)
    projects = sorted({entry.project for entry in entries})
    return ConfigurationResult(
        k=config.k,
        include_changelog=config.include_changelog,
        metrics=detection_metrics(
            [(entry.verdicts[key], entry.label) for entry in entries],
            names=[entry.name for entry in entries],
        ),
        per_project={
            project: detection_metrics(
                [(entry.verdicts[key], entry.label) for entry in entries if entry.project == project],
                names=[entry.name for entry in entries if entry.project == project],
            )
            for project in projects
        },
        usage=sum((entry.verdicts[key].usage for entry in entries), TokenUsage()),
    )


class EvaluationReport(EvaluationModel):
    diffs: int
    functions: int
    configurations: Tuple[ConfigurationResult, ...]
    separation: Optional[SeparationStats] = None
    separation_by_project: Dict[str, SeparationStats] = {}
    separation_by_family: Dict[str, SeparationStats] = {}
    summarization_usage: TokenUsage = TokenUsage()
    failures: Dict[str, Dict[str, str]] = {}
    notices: Tuple[str, ...] = ()

    @property
    def total_usage(self) -> TokenUsage:
        return sum((result.usage for result in self.configurations), self.summarization_usage)


def build_evaluation_report(entries: Sequence[EvaluatedDiff], configurations: Sequence[PredictorConfig]) -> EvaluationReport:
    notices: List[str] = []
    separation = None
    by_project: Dict[str, SeparationStats] = {}
    by_family: Dict[str, SeparationStats] = {}
    try:
        separation = fss_separation((entry.analyses, entry.function_labels) for entry in entries)
        by_project = grouped_separation(entries, by="project")
        by_family = grouped_separation(entries, by="family")
    except EvaluationError as e:
        notices.append(f"FSS separation omitted: {e}")
    unanalyzed = [
        entry.name for entry in entries
        if any(verdict.rationale == SUMMARIZATION_FAILED_RATIONALE for verdict in entry.verdicts.values())
    ]
    if unanalyzed:
        notices.append(
            f"{len(unanalyzed)} diff(s) counted as UNKNOWN without a prediction, "
            f"every function failed summarization: {', '.join(unanalyzed)}"
        )

    return EvaluationReport(
        diffs=len(entries),
        functions=sum(len(entry.analyses) for entry in entries),
        configurations=tuple(configuration_result(entries, config) for config in configurations),
        separation=separation,
        separation_by_project=by_project,
        separation_by_family=by_family,
        summarization_usage=sum((entry.usage for entry in entries), TokenUsage()),
        failures={entry.name: entry.failures for entry in entries if entry.failures},
        notices=tuple(notices),
    )


async def evaluate_corpus(
    manifest_path: PathLike | str,
    config: TriageConfig,
    backend: LLMBackend,
    prediction_backend: Optional[LLMBackend] = None,
    work_dir: Optional[PathLike | str] = None,
) -> EvaluationReport:
    """
    Summarizes every diff of a corpus once and predicts it under every configured (k, changelog)
    combination.

    Args:
        manifest_path: the corpus manifest, artifact paths are relative to it.
        config (TriageConfig): summarizer settings and evaluation configurations.
        backend (LLMBackend): backend of the summarization step.
        prediction_backend (Optional[LLMBackend]): backend of the prediction step, defaults to `backend`.
        work_dir: if given, every diff gets a cached run directory below it.
    Raises:
        EvaluationError: if the manifest is invalid or a diff has no label.
    """
    manifest_path = Path(manifest_path)
    manifest = load_manifest(manifest_path)
    for entry in manifest.diffs:
        if entry.label is None:
            raise EvaluationError(f"diff {entry.path} has no ground-truth label")

    configurations = config.evaluation.configurations()
    predictor = PredictorModule(prediction_backend or backend, config.predictor)
    entries: List[EvaluatedDiff] = []
    for entry in manifest.diffs:
        path = manifest_path.parent / entry.path
        artifact = preprocess(load_artifact(path), context=config.summarizer.diff_context)
        store = RunStore(Path(work_dir) / Path(entry.path).stem) if work_dir is not None else None
        summarizer = SummarizerModule(backend, config=config.summarizer, store=store)
        result = await summarizer.run(artifact, schedule(build_diff_callgraph(artifact)))

        verdicts: Dict[str, DiffVerdict] = {}
        for configuration in configurations:
            verdicts[configuration_key(configuration)] = await predictor.predict(
                artifact,
                result.analyses,
                k=configuration.k,
                include_changelog=configuration.include_changelog,
            )
        entries.append(EvaluatedDiff(
            name=entry.path,
            project=entry.project,
            family=entry.family,
            label=entry.label,
            analyses=result.analyses,
            function_labels=artifact.function_labels,
            verdicts=verdicts,
            usage=sum((analysis.usage for analysis in result.analyses.values()), TokenUsage()),
            failures=result.failures,
        ))
        logger.info(f"evaluated {entry.path}: " + ", ".join(
            f"{key}={verdict.verdict.value}" for key, verdict in verdicts.items()
        ))

    return build_evaluation_report(entries, configurations)


def plot_separation(report: EvaluationReport, path: PathLike | str) -> None:
    """
    Writes box plots of FSS_ben and FSS_mal, overall and per payload family.

    Raises:
        EvaluationError: if the report has no separation statistics.
    """
    if report.separation is None:
        raise EvaluationError("report has no FSS separation statistics to plot")

    import matplotlib
    matplotlib.use("Agg")
    from matplotlib import pyplot

    groups = [("all", report.separation)] + [
        (family, stats) for family, stats in report.separation_by_family.items() if family != "clean"
    ]
    data: List[Sequence[float]] = []
    labels: List[str] = []
    for name, stats in groups:
        for side, values in (("ben", stats.fss_ben), ("mal", stats.fss_mal)):
            if values:
                data.append(values)
                labels.append(f"{name}\n{side}")

    figure, axes = pyplot.subplots(figsize=(max(4, len(data) * 1.2), 4))
    axes.boxplot(data, whis=WHISKER_RANGE)
    axes.set_xticks(range(1, len(labels) + 1), labels)
    axes.set_ylabel("mean FSS per diff")
    axes.set_ylim(0, 10)
    figure.tight_layout()
    figure.savefig(path)
    pyplot.close(figure)
    logger.info(f"wrote separation plot to {path}")
