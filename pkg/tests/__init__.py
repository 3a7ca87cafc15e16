import tempfile
from pathlib import Path
from typing import Dict, List, Optional, Sequence
from unittest import IsolatedAsyncioTestCase

from difftriage.backends.mock import MockBackend
from difftriage.fss import fss_score, parse_vector
from difftriage.ingest import load_artifact
from difftriage.model import (
    BinaryMeta,
    ChatMessage,
    Completion,
    DiffArtifact,
    FunctionAnalysis,
    FunctionId,
    FunctionKind,
    FunctionRecord,
)


def _find_test_folder() -> Path:
    p = Path("./")

    if p.absolute().parts[-1] == "tests":
        return p
    else:
        import glob
        while str(p.absolute()) != "/":
            files = glob.glob(str(Path(p)) + '/**/tests', recursive=True)
            if len(files) > 0:
                return Path(files[0]).absolute()
            else:
                p = p.parent.absolute()

    raise AssertionError("test folder not found")


OLD_HASH = "9414886b1ebf025db067a4cbd13a0903fbd9733a5372bba1b58bd72c1699b798"
NEW_HASH = "f95e379849d33bb372b33eae8a4164cecb9d40402df265934044c89eacbfa622"


def binary_meta(version: str, changelog: Optional[str] = None, content_hash: str = OLD_HASH) -> BinaryMeta:
    return BinaryMeta(
        name="csvtool",
        version=version,
        content_hash=content_hash,
        project_description="csvtool is a command line utility that converts CSV files into JSON records.",
        changelog=changelog,
    )


def added(address: str, code: str, callees: Sequence[str] = ()) -> FunctionRecord:
    return FunctionRecord(
        kind=FunctionKind.ADDED,
        new_address=address,
        display_name=f"FUN_{address}",
        code_new=code,
        callees=tuple(callees),
    )


def deleted(address: str, code: str, callees: Sequence[str] = ()) -> FunctionRecord:
    return FunctionRecord(
        kind=FunctionKind.DELETED,
        old_address=address,
        display_name=f"FUN_{address}",
        code_old=code,
        callees=tuple(callees),
    )


def modified(old_address: str, new_address: str, code_old: str, code_new: str, callees: Sequence[str] = ()) -> FunctionRecord:
    return FunctionRecord(
        kind=FunctionKind.MODIFIED,
        old_address=old_address,
        new_address=new_address,
        display_name=f"FUN_{new_address}",
        code_old=code_old,
        code_new=code_new,
        callees=tuple(callees),
    )


def artifact_of(*functions: FunctionRecord, changelog: Optional[str] = None, **kwargs) -> DiffArtifact:
    return DiffArtifact(
        old=binary_meta("1.0.0"),
        new=binary_meta("1.1.0", changelog=changelog, content_hash=NEW_HASH),
        functions=tuple(functions),
        **kwargs,
    )


def analysis_of(
    name: str,
    vector: str = "B:N",
    kind: FunctionKind = FunctionKind.ADDED,
    summary: Optional[str] = None,
    diff_summary: Optional[str] = None,
) -> FunctionAnalysis:
    """An analysis with the given partial vector, f.e. analysis_of("FUN_1", "B:H/C:L")."""
    classification = parse_vector(vector, allow_partial=True)
    return FunctionAnalysis(
        id=FunctionId(new_address=name.rsplit("_", 1)[-1], display_name=name),
        kind=kind,
        summary=summary or f"{name} does something.",
        diff_summary=diff_summary,
        classification=classification,
        score=fss_score(classification),
    )


class RecordingBackend(MockBackend):
    """Mock backend remembering every conversation it was asked to complete."""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.conversations: List[List[ChatMessage]] = []

    @property
    def calls(self) -> int:
        return len(self.conversations)

    async def _complete(self, messages: List[ChatMessage]) -> Completion:
        self.conversations.append(list(messages))
        return await super()._complete(messages)

    def prompts_mentioning(self, text: str) -> List[str]:
        return [
            conversation[-1].content
            for conversation in self.conversations
            if text in conversation[-1].content
        ]


class TestBase(IsolatedAsyncioTestCase):
    _test_folder = _find_test_folder()
    _test_data_folder = _test_folder / "data"

    def _temp_dir(self) -> Path:
        return Path(self.enterContext(tempfile.TemporaryDirectory()))

    def _chain_artifact(self) -> DiffArtifact:
        return load_artifact(self._test_data_folder / "chain_artifact.json")

    def _clean_artifact(self) -> DiffArtifact:
        return load_artifact(self._test_data_folder / "clean_artifact.json")

    @staticmethod
    def _scores(analyses: Dict[str, FunctionAnalysis]) -> Dict[str, float]:
        return {name: analysis.score.value for name, analysis in analyses.items()}
