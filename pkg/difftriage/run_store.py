"""
On-disk layout of an analysis run.

    <run-dir>/analyses/<display-name>.json   cached FunctionAnalysis plus its cache key
    <run-dir>/prompts/<display-name>.txt     full conversation of the function (audit log)
    <run-dir>/run.json                       configuration, usage totals and failures

`run.json` is the only file carrying a timestamp, every other file is a pure function of the
inputs.
"""

import json
import logging
import os
import re
import tempfile
from datetime import datetime, timezone
from os import PathLike
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from difftriage.const import RUN_ANALYSES_DIR, RUN_INFO_FILE, RUN_PROMPTS_DIR
from difftriage.model import ChatMessage, FunctionAnalysis
from difftriage.util.hashing import sha256_hex

_UNSAFE_FILE_CHARACTERS = re.compile(r"[^A-Za-z0-9_.-]")


def write_text_atomic(path: Path, text: str) -> None:
    """Writes a file through a temporary sibling and a rename, readers never see partial content."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with tempfile.NamedTemporaryFile(
        "w", encoding="utf-8", dir=path.parent, prefix=f".{path.name}.", suffix=".tmp", delete=False
    ) as file:
        file.write(text)
        temp_name = file.name
    os.replace(temp_name, path)


def format_conversation(messages: List[ChatMessage]) -> str:
    return "".join(f"### {message.role.value}\n{message.content}\n\n" for message in messages)


class RunStore:
    logging = logging.getLogger(__name__)

    def __init__(self, run_dir: PathLike | str):
        self.run_dir = Path(run_dir)
        self.analyses_dir = self.run_dir / RUN_ANALYSES_DIR
        self.prompts_dir = self.run_dir / RUN_PROMPTS_DIR

    @staticmethod
    def file_stem(name: str) -> str:
        """
        File name stem of a function, sanitized names get a hash suffix so distinct
        names never share a file.
        """
        stem = _UNSAFE_FILE_CHARACTERS.sub("_", name)
        if stem != name:
            stem = f"{stem}-{sha256_hex(name)[:12]}"
        return stem

    def analysis_path(self, name: str) -> Path:
        return self.analyses_dir / f"{self.file_stem(name)}.json"

    def prompt_path(self, name: str) -> Path:
        return self.prompts_dir / f"{self.file_stem(name)}.txt"

    def load_analysis(self, name: str, cache_key: str) -> Optional[FunctionAnalysis]:
        """
        Returns the cached analysis of a function if it was computed from the same inputs.

        Args:
            name (str): display name of the function.
            cache_key (str): key of the current prompt inputs.
        Returns:
            Optional[FunctionAnalysis]: the cached analysis, None on a miss or a stale entry.
        """
        path = self.analysis_path(name)
        if not path.exists():
            return None
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
            if data.get("cache_key") != cache_key:
                self.logging.debug(f"stale cache entry for {name}")
                return None
            return FunctionAnalysis.model_validate(data["analysis"])
        except (OSError, ValueError, KeyError, ValidationError) as e:
            self.logging.warning(f"ignoring unreadable cache entry {path}: {e}")
            return None

    def save_analysis(self, analysis: FunctionAnalysis, cache_key: str) -> None:
        data = {
            "cache_key": cache_key,
            "analysis": analysis.model_dump(mode="json"),
        }
        write_text_atomic(self.analysis_path(analysis.name), json.dumps(data, indent=2, ensure_ascii=False) + "\n")

    def save_prompt_log(self, name: str, messages: List[ChatMessage]) -> None:
        write_text_atomic(self.prompt_path(name), format_conversation(messages))

    def load_prompt_log(self, name: str) -> str:
        return self.prompt_path(name).read_text(encoding="utf-8")

    def write_run_info(self, info: Dict[str, Any]) -> None:
        data = {"written_at": datetime.now(timezone.utc).isoformat(), **info}
        write_text_atomic(self.run_dir / RUN_INFO_FILE, json.dumps(data, indent=2, ensure_ascii=False) + "\n")
        self.logging.debug(f"wrote {self.run_dir / RUN_INFO_FILE}")
