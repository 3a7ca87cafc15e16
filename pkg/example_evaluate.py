import asyncio
import logging
from pathlib import Path

from difftriage.client import DiffTriageClient
from difftriage.config import BackendConfig, BackendKind, EvaluationConfig, TriageConfig
from difftriage.corpus import generate_corpus
from difftriage.evaluator import plot_separation
from difftriage.report import render_evaluation_markdown

# set basic logging
logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s :: %(levelname)s :: %(name)s :: %(message)s",
    datefmt="%d.%m.%Y %H:%M:%S",
    handlers=[logging.StreamHandler()],
)
# set log level of httpx
logging.getLogger("httpx").setLevel(logging.WARNING)

OUT_DIR = Path("./evaluation")


async def main():
    # one clean and one injected update per payload family for every version pair
    generate_corpus(
        seed=42,
        n_projects=3,
        versions_per_project=3,
        inject_rate=0.0,
        out_dir=OUT_DIR / "corpus",
        one_slot_per_family=True,
    )

    client = DiffTriageClient(
        TriageConfig(
            backend=BackendConfig(kind=BackendKind.MOCK),
            evaluation=EvaluationConfig(k_values=[5, 10], changelog_options=[False, True]),
        ),
    )
    # summaries are cached below the work dir, running this again only repeats the predictions
    report = await client.evaluate(OUT_DIR / "corpus" / "manifest.json", work_dir=OUT_DIR / "runs")

    print(render_evaluation_markdown(report))
    plot_separation(report, OUT_DIR / "separation.png")


if __name__ == "__main__":
    try:
        asyncio.run(main())
    except KeyboardInterrupt:
        quit()
