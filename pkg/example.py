import asyncio
import logging
import tempfile
from pathlib import Path

from difftriage.client import DiffTriageClient
from difftriage.config import BackendConfig, BackendKind, TriageConfig
from difftriage.corpus import generate_corpus
from difftriage.fss import fss_score, parse_vector

# set basic logging
logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s :: %(levelname)s :: %(name)s :: %(message)s",
    datefmt="%d.%m.%Y %H:%M:%S",
    handlers=[logging.StreamHandler()],
)
# set log level of httpx
logging.getLogger("httpx").setLevel(logging.WARNING)


async def main():
    # the mock backend answers deterministically and needs no API key,
    # use BackendKind.HTTP (and set LLM_API_KEY) to talk to a real model
    client = DiffTriageClient(
        TriageConfig(backend=BackendConfig(kind=BackendKind.MOCK)),
    )

    # FSS of a single classification
    score = fss_score(parse_vector("FSS:1/B:H/R:M/C:N/I:L/A:N"))
    print(f"S = {score.sensitivity:.4f}, M = {score.impact:.4f}, FSS = {score.value}")

    with tempfile.TemporaryDirectory() as directory:
        directory = Path(directory)
        # two injected updates of one synthetic project
        artifacts = generate_corpus(
            seed=42, n_projects=1, versions_per_project=2, inject_rate=1.0, out_dir=directory / "corpus",
        )

        for artifact in artifacts:
            outcome = await client.analyze(artifact, run_dir=directory / "runs" / artifact.stem)
            print(f"{artifact.name}: {outcome.verdict.verdict.value}")
            for row in outcome.report.functions[:3]:
                print(f"  {row.name:<24} {row.kind:<9} {row.score:>4} {row.severity}")


if __name__ == "__main__":
    try:
        asyncio.run(main())
    except KeyboardInterrupt:
        quit()
