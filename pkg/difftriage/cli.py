"""
Command line interface.

Exit codes are the machine contract: 0 benign, 2 malicious, 3 unknown verdict, 1 on any error.
Everything printed to stdout is meant for humans.
"""

import argparse
import asyncio
import logging
import sys
from pathlib import Path
from typing import List, Optional

from difftriage.callgraph import build_diff_callgraph, schedule
from difftriage.client import DiffTriageClient
from difftriage.config import load_config, with_overrides
from difftriage.const import (
    EVALUATION_JSON_FILE,
    EVALUATION_MARKDOWN_FILE,
    EXIT_BENIGN,
    EXIT_ERROR,
    EXIT_MALICIOUS,
    EXIT_UNKNOWN,
    REPORT_MARKDOWN_FILE,
)
from difftriage.corpus import generate_corpus
from difftriage.errors import ConfigError, DiffTriageError
from difftriage.evaluator import plot_separation
from difftriage.fss import fss_score, parse_vector, plot_score_curve, severity
from difftriage.ingest import load_artifact, preprocess
from difftriage.model import Verdict
from difftriage.report import evaluation_json, render_evaluation_markdown

logger = logging.getLogger(__name__)

VERDICT_EXIT_CODES = {
    Verdict.BENIGN: EXIT_BENIGN,
    Verdict.MALICIOUS: EXIT_MALICIOUS,
    Verdict.UNKNOWN: EXIT_UNKNOWN,
}


class UsageError(Exception):
    pass


class ArgumentParser(argparse.ArgumentParser):
    """Reports usage errors with exit code 1, exit code 2 means MALICIOUS."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def setup_logging(verbose: bool = False) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s :: %(levelname)s :: %(name)s :: %(message)s",
        datefmt="%d.%m.%Y %H:%M:%S",
        handlers=[logging.StreamHandler()],
    )
    # set log level of httpx
    logging.getLogger("httpx").setLevel(logging.WARNING)
    logging.getLogger("matplotlib").setLevel(logging.WARNING)


def _add_override_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="TOML configuration file")
    parser.add_argument("--k", type=int, help="number of top functions passed to the prediction")
    parser.add_argument(
        "--changelog",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="pass the new version's changelog to the prediction",
    )
    parser.add_argument("--concurrency", type=int, help="maximum number of concurrent LLM requests")
    parser.add_argument("--model", help="model of the summarization backend")


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="difftriage", description="Summarize and triage binary diffs with an LLM.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    analyze = subparsers.add_parser("analyze", help="analyze one diff artifact")
    analyze.add_argument("artifact", type=Path, help="diff artifact JSON file")
    analyze.add_argument("--run-dir", type=Path, required=True, help="directory for cache, prompts and reports")
    _add_override_arguments(analyze)

    evaluate = subparsers.add_parser("evaluate", help="evaluate a labeled corpus")
    evaluate.add_argument("manifest", type=Path, help="corpus manifest.json")
    evaluate.add_argument("--out", type=Path, required=True, help="output directory of the evaluation report")
    evaluate.add_argument("--work-dir", type=Path, help="cache directory, one run directory per diff")
    evaluate.add_argument("--plot", type=Path, help="write the FSS separation box plot to this file")
    _add_override_arguments(evaluate)

    score = subparsers.add_parser("score", help="compute the FSS of a vector")
    score.add_argument("vector", nargs="?", help='f.e. "FSS:1/B:H/R:M/C:N/I:L/A:N" or "B:M/C:L"')
    score.add_argument("--curve", type=Path, help="write the sorted score curve of all classifications")

    corpus = subparsers.add_parser("gen-corpus", help="generate a synthetic labeled corpus")
    corpus.add_argument("out", type=Path, help="output directory")
    corpus.add_argument("--seed", type=int, default=42)
    corpus.add_argument("--projects", type=int, default=2)
    corpus.add_argument("--versions", type=int, default=3)
    corpus.add_argument("--inject-rate", type=float, default=0.5)
    corpus.add_argument(
        "--one-slot-per-family",
        action="store_true",
        help="one injected diff per payload family and version pair",
    )

    graph = subparsers.add_parser("graph-dump", help="print the diff callgraph as DOT and the schedule")
    graph.add_argument("artifact", type=Path, help="diff artifact JSON file")
    return parser


def _load_config(args: argparse.Namespace, evaluation: bool = False):
    if not args.config:
        raise UsageError("--config is required")
    config = load_config(args.config)
    return with_overrides(
        config,
        k=args.k,
        include_changelog=args.changelog,
        concurrency=args.concurrency,
        model=args.model,
        evaluation=evaluation,
    )


def cmd_analyze(args: argparse.Namespace) -> int:
    config = _load_config(args)
    client = DiffTriageClient(config)
    outcome = asyncio.run(client.analyze(args.artifact, run_dir=args.run_dir))
    report = outcome.report
    print(f"{report.binary} {report.old_version} -> {report.new_version}: {report.verdict.verdict.value}")
    for row in report.functions[:config.predictor.k]:
        print(f"  {row.score:4.1f}  {row.name}  {row.vector}")
    if report.failures:
        print(f"  {len(report.failures)} function(s) failed, see {args.run_dir / REPORT_MARKDOWN_FILE}")
    return VERDICT_EXIT_CODES[outcome.verdict.verdict]


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = _load_config(args, evaluation=True)
    client = DiffTriageClient(config)
    report = asyncio.run(client.evaluate(args.manifest, work_dir=args.work_dir))
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / EVALUATION_JSON_FILE).write_text(evaluation_json(report), encoding="utf-8")
    markdown = render_evaluation_markdown(report)
    (args.out / EVALUATION_MARKDOWN_FILE).write_text(markdown, encoding="utf-8")
    if args.plot:
        if report.separation is None:
            logger.warning("no function labels, skipping the separation plot")
        else:
            plot_separation(report, args.plot)
    print(markdown)
    return EXIT_BENIGN


def cmd_score(args: argparse.Namespace) -> int:
    if args.vector is None and args.curve is None:
        raise UsageError("either a vector or --curve is required")
    if args.curve is not None:
        plot_score_curve(args.curve)
        print(f"score curve written to {args.curve}")
    if args.vector is not None:
        score = fss_score(parse_vector(args.vector, allow_partial=True))
        print(f"S = {score.sensitivity:.4f}")
        print(f"M = {score.impact:.4f}")
        print(f"FSS = {score.value:.1f} ({severity(score.value)})")
    return EXIT_BENIGN


def cmd_gen_corpus(args: argparse.Namespace) -> int:
    paths = generate_corpus(
        seed=args.seed,
        n_projects=args.projects,
        versions_per_project=args.versions,
        inject_rate=args.inject_rate,
        out_dir=args.out,
        one_slot_per_family=args.one_slot_per_family,
    )
    print(f"{len(paths)} artifacts written to {args.out}")
    return EXIT_BENIGN


def cmd_graph_dump(args: argparse.Namespace) -> int:
    artifact = preprocess(load_artifact(args.artifact))
    callgraph = build_diff_callgraph(artifact)
    order = schedule(callgraph)
    print(callgraph.to_dot(), end="")
    for index, component in enumerate(order.components):
        print(f"// {index}: {', '.join(component)}")
    return EXIT_BENIGN


COMMANDS = {
    "analyze": cmd_analyze,
    "evaluate": cmd_evaluate,
    "score": cmd_score,
    "gen-corpus": cmd_gen_corpus,
    "graph-dump": cmd_graph_dump,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(args.verbose)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as e:
        parser.print_usage(sys.stderr)
        print(f"difftriage: error: {e}", file=sys.stderr)
        return EXIT_ERROR
    except (DiffTriageError, OSError, ValueError) as e:
        print(f"difftriage: error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
