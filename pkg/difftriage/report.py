"""
Human-readable and machine-readable reports.

`report.json` is a serialized :class:`AnalysisReport`, its JSON schema is published as
:data:`REPORT_SCHEMA`. The Markdown renderings print the same numbers with fixed precision.
"""

import json
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict

from difftriage.const import SCHEMA_VERSION
from difftriage.evaluator import DetectionMetrics, EvaluationReport, SeparationStats
from difftriage.fss import format_vector, severity
from difftriage.model import DiffArtifact, DiffVerdict, FunctionAnalysis, TokenUsage, Verdict


class ReportModel(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class FunctionRow(ReportModel):
    name: str
    kind: str
    score: float
    severity: str
    vector: str
    summary: str
    diff_summary: Optional[str] = None


class TopFunctionRow(ReportModel):
    name: str
    score: float
    vector: str


class VerdictReport(ReportModel):
    verdict: Verdict
    rationale: str
    top_functions: List[TopFunctionRow]


class UsageReport(ReportModel):
    summarization: TokenUsage
    prediction: TokenUsage
    total: TokenUsage


class AnalysisReport(ReportModel):
    schema_version: int = SCHEMA_VERSION
    binary: str
    old_version: str
    new_version: str
    k: int
    include_changelog: bool
    verdict: VerdictReport
    functions: List[FunctionRow]
    failures: Dict[str, str]
    usage: UsageReport


REPORT_SCHEMA = AnalysisReport.model_json_schema()


def verdict_report(verdict: DiffVerdict) -> VerdictReport:
    return VerdictReport(
        verdict=verdict.verdict,
        rationale=verdict.rationale,
        top_functions=[
            TopFunctionRow(name=top.id.display_name, score=top.score, vector=top.vector)
            for top in verdict.top_functions
        ],
    )


def build_analysis_report(
    artifact: DiffArtifact,
    analyses: Dict[str, FunctionAnalysis],
    failures: Dict[str, str],
    verdict: DiffVerdict,
    k: int,
    include_changelog: bool,
) -> AnalysisReport:
    """
    Collects the outcome of one analysis. Functions are listed by score, highest first, ties by name.

    Usage totals cover every analysis, cached ones included, so a rerun reports the same numbers.
    """
    ordered = sorted(analyses.values(), key=lambda analysis: (-analysis.score.value, analysis.name))
    summarization = sum((analysis.usage for analysis in ordered), TokenUsage())
    return AnalysisReport(
        binary=artifact.new.name,
        old_version=artifact.old.version,
        new_version=artifact.new.version,
        k=k,
        include_changelog=include_changelog,
        verdict=verdict_report(verdict),
        functions=[
            FunctionRow(
                name=analysis.name,
                kind=analysis.kind.value,
                score=analysis.score.value,
                severity=severity(analysis.score.value),
                vector=format_vector(analysis.classification),
                summary=analysis.summary,
                diff_summary=analysis.diff_summary,
            )
            for analysis in ordered
        ],
        failures=dict(failures),
        usage=UsageReport(
            summarization=summarization,
            prediction=verdict.usage,
            total=summarization + verdict.usage,
        ),
    )


def dump_report(report: BaseModel) -> str:
    return json.dumps(report.model_dump(mode="json"), indent=2, ensure_ascii=False) + "\n"


def _cell(text: Optional[str]) -> str:
    if not text:
        return ""
    return text.replace("|", "\\|").replace("\n", " ")


def _ratio(value: Optional[float]) -> str:
    return "n/a" if value is None else f"{value:.3f}"


def render_analysis_markdown(report: AnalysisReport) -> str:
    lines = [
        f"# {report.binary} {report.old_version} -> {report.new_version}",
        "",
        f"**Verdict: {report.verdict.verdict.value}** (k={report.k}, changelog {'on' if report.include_changelog else 'off'})",
        "",
        report.verdict.rationale,
        "",
        "## Functions",
        "",
        "| Function | Kind | FSS | Severity | Vector | Summary |",
        "|---|---|---:|---|---|---|",
    ]
    for row in report.functions:
        summary = row.summary if not row.diff_summary else f"{row.summary} Changes: {row.diff_summary}"
        lines.append(
            f"| {row.name} | {row.kind} | {row.score:.1f} | {row.severity} | {row.vector} | {_cell(summary)} |"
        )
    if report.failures:
        lines += ["", "## Failures", ""]
        lines += [f"- {name}: {_cell(reason)}" for name, reason in sorted(report.failures.items())]
    usage = report.usage
    lines += [
        "",
        "## Token usage",
        "",
        "| Step | Input | Output | Total |",
        "|---|---:|---:|---:|",
        f"| summarization | {usage.summarization.input_tokens} | {usage.summarization.output_tokens} | {usage.summarization.total_tokens} |",
        f"| prediction | {usage.prediction.input_tokens} | {usage.prediction.output_tokens} | {usage.prediction.total_tokens} |",
        f"| total | {usage.total.input_tokens} | {usage.total.output_tokens} | {usage.total.total_tokens} |",
        "",
    ]
    return "\n".join(lines)


def _metrics_cell(metrics: DetectionMetrics) -> str:
    return f"P={_ratio(metrics.precision)} R={_ratio(metrics.recall)}"


def _separation_rows(groups: List[Tuple[str, SeparationStats]]) -> List[str]:
    lines = [
        "| Group | Diffs ben | Diffs mal | Median ben | Median mal | Mean ben | Mean mal | Separation |",
        "|---|---:|---:|---:|---:|---:|---:|---:|",
    ]
    for name, stats in groups:
        lines.append(
            f"| {name} | {len(stats.fss_ben)} | {len(stats.fss_mal)} "
            f"| {_ratio(stats.benign.median if stats.benign else None)} "
            f"| {_ratio(stats.malicious.median if stats.malicious else None)} "
            f"| {_ratio(stats.benign.mean if stats.benign else None)} "
            f"| {_ratio(stats.malicious.mean if stats.malicious else None)} "
            f"| {_ratio(stats.separation)} |"
        )
    return lines


def render_evaluation_markdown(report: EvaluationReport) -> str:
    """
    Renders the detection table with one row per program and one column per configuration,
    followed by the confusion counts and the FSS separation.
    """
    columns = [result.key for result in report.configurations]
    projects = sorted({project for result in report.configurations for project in result.per_project})
    lines = [
        "# Evaluation",
        "",
        f"{report.diffs} diffs, {report.functions} functions analyzed.",
        "",
        "## Detection",
        "",
        "| Program | " + " | ".join(columns) + " |",
        "|---|" + "---|" * len(columns),
    ]
    for project in projects:
        cells = [_metrics_cell(result.per_project[project]) for result in report.configurations]
        lines.append(f"| {project} | " + " | ".join(cells) + " |")
    lines.append("| **all** | " + " | ".join(_metrics_cell(result.metrics) for result in report.configurations) + " |")

    lines += [
        "",
        "| Configuration | TP | FP | TN | FN | Unknown | Precision | Recall |",
        "|---|---:|---:|---:|---:|---:|---:|---:|",
    ]
    for result in report.configurations:
        metrics = result.metrics
        lines.append(
            f"| {result.key} | {metrics.tp} | {metrics.fp} | {metrics.tn} | {metrics.fn} | {metrics.unknown} "
            f"| {_ratio(metrics.precision)} | {_ratio(metrics.recall)} |"
        )

    lines += ["", "## FSS separation", ""]
    if report.separation is None:
        lines.append("Separation omitted, the corpus has no function labels.")
    else:
        groups = [("all", report.separation)]
        groups += [(f"project {name}", stats) for name, stats in report.separation_by_project.items()]
        groups += [(f"family {name}", stats) for name, stats in report.separation_by_family.items()]
        lines += _separation_rows(groups)

    if report.failures:
        lines += ["", "## Failures", ""]
        for diff, failures in sorted(report.failures.items()):
            lines += [f"- {diff} / {name}: {_cell(reason)}" for name, reason in sorted(failures.items())]

    total = report.total_usage
    lines += [
        "",
        "## Token usage",
        "",
        f"Summarization: {report.summarization_usage.input_tokens} input / {report.summarization_usage.output_tokens} output tokens.",
        f"Total: {total.input_tokens} input / {total.output_tokens} output tokens.",
    ]
    if report.notices:
        lines += ["", "## Notices", ""] + [f"- {notice}" for notice in report.notices]
    lines.append("")
    return "\n".join(lines)


def evaluation_json(report: EvaluationReport) -> str:
    data = report.model_dump(mode="json")
    data["total_usage"] = report.total_usage.model_dump(mode="json")
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"
