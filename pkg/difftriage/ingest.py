"""
Loading and canonicalization of diff artifacts.

An artifact is a versioned JSON document (see :data:`difftriage.const.SCHEMA_VERSION`). Strict
mode rejects unknown fields and invariant violations, lenient mode drops unknown fields with a
warning and leaves invariant checks to the caller.
"""

import json
import logging
import re
from os import PathLike
from pathlib import Path
from typing import Any, Dict, List, Optional, Type

from pydantic import BaseModel, ValidationError

from difftriage.const import (
    CANONICAL_MODIFIED_PREFIX,
    DECOMPILER_FUNCTION_PREFIX,
    DEFAULT_DIFF_CONTEXT,
    SCHEMA_VERSION,
)
from difftriage.errors import ArtifactError, ArtifactValidationError, NameCollisionError
from difftriage.model import (
    BinaryMeta,
    DiffArtifact,
    FunctionKind,
    FunctionRecord,
    validate_artifact,
)
from difftriage.textdiff import unified_diff

logger = logging.getLogger(__name__)

_DECOMPILER_TOKEN = re.compile(rf"\b{DECOMPILER_FUNCTION_PREFIX}[0-9a-f]+\b")


def _format_location(location: tuple) -> str:
    path = ""
    for part in location:
        if isinstance(part, int):
            path += f"[{part}]"
        else:
            path += f".{part}" if path else str(part)
    return path


def _drop_unknown_fields(data: Any, model: Type[BaseModel], path: str) -> Any:
    if not isinstance(data, dict):
        return data
    known = model.model_fields
    cleaned: Dict[str, Any] = {}
    for key, value in data.items():
        if key not in known:
            logger.warning(f"ignoring unknown field {path}{key}")
            continue
        cleaned[key] = value
    for key, nested in (("old", BinaryMeta), ("new", BinaryMeta)):
        if model is DiffArtifact and key in cleaned:
            cleaned[key] = _drop_unknown_fields(cleaned[key], nested, f"{key}.")
    if model is DiffArtifact and isinstance(cleaned.get("functions"), list):
        cleaned["functions"] = [
            _drop_unknown_fields(function, FunctionRecord, f"functions[{index}].")
            for index, function in enumerate(cleaned["functions"])
        ]
    return cleaned


def parse_artifact(data: Any, strict: bool = True, source: Optional[str] = None) -> DiffArtifact:
    """
    Builds a DiffArtifact from decoded JSON data.

    Args:
        data (Any): the decoded JSON document.
        strict (bool): reject unknown fields and invariant violations. Defaults to True.
        source (Optional[str]): name of the origin, used in log messages.
    Returns:
        DiffArtifact: the parsed artifact.
    Raises:
        ArtifactError: with the path of the offending field.
        ArtifactValidationError: strict mode only, if invariants are violated.
    """
    if not isinstance(data, dict):
        raise ArtifactError("artifact must be a JSON object")
    if "schema_version" not in data:
        raise ArtifactError("missing schema version", path="schema_version")
    if data["schema_version"] != SCHEMA_VERSION:
        raise ArtifactError(f"unsupported schema version {data['schema_version']!r}", path="schema_version")

    if not strict:
        data = _drop_unknown_fields(data, DiffArtifact, "")

    try:
        artifact = DiffArtifact.model_validate(data)
    except ValidationError as e:
        error = e.errors()[0]
        raise ArtifactError(error["msg"], path=_format_location(error["loc"])) from e

    if strict:
        violations = validate_artifact(artifact)
        if violations:
            raise ArtifactValidationError(violations)

    logger.debug(f"parsed artifact {source or ''} with {len(artifact.functions)} functions")
    return artifact


def load_artifact(path: PathLike | str, strict: bool = True) -> DiffArtifact:
    """
    Loads an artifact file.

    Args:
        path (PathLike | str): path to the JSON file.
        strict (bool): see :func:`parse_artifact`.
    Raises:
        OSError: if the file cannot be read.
        ArtifactError: if the file is not a valid artifact.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ArtifactError(f"invalid JSON in {path}: {e}") from e
    artifact = parse_artifact(data, strict=strict, source=str(path))
    logger.info(
        f"loaded {path.name}: {artifact.old.name} {artifact.old.version} -> {artifact.new.version}, "
        f"{len(artifact.functions)} functions"
    )
    return artifact


def dump_artifact(artifact: DiffArtifact) -> str:
    """
    Serializes an artifact to its canonical JSON text.

    Fields appear in schema order, absent optional fields are omitted and function labels are
    sorted by name, so dump(parse(dump(x))) == dump(x).
    """
    data = artifact.model_dump(mode="json", exclude_none=True)
    if "function_labels" in data:
        data["function_labels"] = dict(sorted(data["function_labels"].items()))
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"


def save_artifact(artifact: DiffArtifact, path: PathLike | str) -> None:
    Path(path).write_text(dump_artifact(artifact), encoding="utf-8")


def canonical_name(function: FunctionRecord) -> str:
    return f"{CANONICAL_MODIFIED_PREFIX}{function.old_address}_{function.new_address}"


def canonicalize_names(artifact: DiffArtifact) -> DiffArtifact:
    """
    Renames Modified functions to "mod_<old>_<new>" and rewrites every reference to them.

    References are the decompiler tokens "FUN_<old>" in old-side code and "FUN_<new>" in
    new-side code, plus callee lists. Added and Deleted functions keep their names. Applying
    the function twice gives the same result as applying it once.

    Raises:
        NameCollisionError: if two functions would share a name after renaming.
    """
    old_tokens: Dict[str, str] = {}
    new_tokens: Dict[str, str] = {}
    renamed: Dict[str, str] = {}
    taken: Dict[str, str] = {
        function.display_name: function.display_name
        for function in artifact.functions
        if function.kind != FunctionKind.MODIFIED
    }

    for function in artifact.functions:
        if function.kind != FunctionKind.MODIFIED:
            continue
        canonical = canonical_name(function)
        if canonical in taken:
            raise NameCollisionError(
                f"'{function.display_name}' and '{taken[canonical]}' both map to '{canonical}'"
            )
        taken[canonical] = function.display_name
        renamed[function.display_name] = canonical
        old_tokens[f"{DECOMPILER_FUNCTION_PREFIX}{function.old_address}"] = canonical
        new_tokens[f"{DECOMPILER_FUNCTION_PREFIX}{function.new_address}"] = canonical

    if not renamed:
        return artifact

    def rewrite_code(code: Optional[str], tokens: Dict[str, str]) -> Optional[str]:
        if code is None:
            return None
        return _DECOMPILER_TOKEN.sub(lambda match: tokens.get(match.group(0), match.group(0)), code)

    def rewrite_callee(callee: str, kind: FunctionKind) -> str:
        if callee in renamed:
            return renamed[callee]
        # deleted callers only know old-side names, everything else is read from the new side
        if kind == FunctionKind.DELETED:
            return old_tokens.get(callee, callee)
        return new_tokens.get(callee, old_tokens.get(callee, callee))

    functions: List[FunctionRecord] = []
    for function in artifact.functions:
        callees: List[str] = []
        for callee in function.callees:
            rewritten = rewrite_callee(callee, function.kind)
            if rewritten not in callees:
                callees.append(rewritten)
        functions.append(function.model_copy(update={
            "display_name": renamed.get(function.display_name, function.display_name),
            "code_old": rewrite_code(function.code_old, old_tokens),
            "code_new": rewrite_code(function.code_new, new_tokens),
            "callees": tuple(callees),
        }))

    function_labels = artifact.function_labels
    if function_labels is not None:
        function_labels = {renamed.get(name, name): label for name, label in function_labels.items()}

    logger.debug(f"renamed {len(renamed)} modified function(s)")
    return artifact.model_copy(update={"functions": tuple(functions), "function_labels": function_labels})


def preprocess(artifact: DiffArtifact, context: int = DEFAULT_DIFF_CONTEXT) -> DiffArtifact:
    """
    Canonicalizes names and attaches the textual diff to every Modified function.

    Raises:
        ArtifactValidationError: if the result violates the preprocessed-artifact invariants.
    """
    artifact = canonicalize_names(artifact)
    functions = [
        function.model_copy(update={
            "text_diff": unified_diff(function.code_old or "", function.code_new or "", context=context).text,
        }) if function.kind == FunctionKind.MODIFIED else function
        for function in artifact.functions
    ]
    artifact = artifact.with_functions(functions)
    violations = validate_artifact(artifact, preprocessed=True)
    if violations:
        raise ArtifactValidationError(violations)
    return artifact
