"""
Domain types shared by every stage of the pipeline.

All types are immutable pydantic models, so instances can be shared freely between
concurrently running tasks. Structural checks (types, required fields, unknown keys) are
done by pydantic, the semantic invariants of a diff artifact by :func:`validate_artifact`.
"""

import re
from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator

from difftriage.const import SCHEMA_VERSION

_HEX_ADDRESS = re.compile(r"^[0-9a-f]+$")
_CONTENT_HASH = re.compile(r"^[0-9a-f]{64}$")


class FrozenModel(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class FunctionKind(str, Enum):
    """Which of the three diff lists a function belongs to."""
    ADDED = "added"
    DELETED = "deleted"
    MODIFIED = "modified"


class Label(str, Enum):
    """Ground truth of a diff or a function in a labeled corpus."""
    MALICIOUS = "malicious"
    BENIGN = "benign"


class Verdict(str, Enum):
    MALICIOUS = "MALICIOUS"
    BENIGN = "BENIGN"
    UNKNOWN = "UNKNOWN"


class FssLevel(str, Enum):
    NONE = "none"
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"

    @property
    def letter(self) -> str:
        return self.value[0].upper()

    @property
    def rank(self) -> int:
        return _LEVEL_ORDER.index(self)

    @classmethod
    def from_letter(cls, letter: str) -> "FssLevel":
        for level in cls:
            if level.letter == letter:
                return level
        raise ValueError(f"invalid level {letter}")

    @classmethod
    def parse(cls, value: str) -> "FssLevel":
        """
        Parses a level name case-insensitively.

        Args:
            value (str): one of none, low, medium, high (any case).
        Raises:
            ValueError: if the value is not a level name.
        """
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"invalid level {value!r}, expected one of none, low, medium, high")


_LEVEL_ORDER = [FssLevel.NONE, FssLevel.LOW, FssLevel.MEDIUM, FssLevel.HIGH]


class FssCategory(str, Enum):
    """The five FSS categories, in canonical vector order."""
    BEHAVIORS = "B"
    RESOURCES = "R"
    CONFIDENTIALITY = "C"
    INTEGRITY = "I"
    AVAILABILITY = "A"

    @property
    def field_name(self) -> str:
        return self.name.lower()

    @property
    def is_sensitivity(self) -> bool:
        return self in (FssCategory.BEHAVIORS, FssCategory.RESOURCES)


class BinaryMeta(FrozenModel):
    name: str
    version: str
    content_hash: str
    project_description: str
    changelog: Optional[str] = None


class FunctionId(FrozenModel):
    old_address: Optional[str] = None
    new_address: Optional[str] = None
    display_name: str


class FunctionRecord(FrozenModel):
    kind: FunctionKind
    old_address: Optional[str] = None
    new_address: Optional[str] = None
    display_name: str
    code_old: Optional[str] = None
    code_new: Optional[str] = None
    callees: Tuple[str, ...] = ()
    text_diff: Optional[str] = None

    @property
    def id(self) -> FunctionId:
        return FunctionId(
            old_address=self.old_address,
            new_address=self.new_address,
            display_name=self.display_name,
        )

    @property
    def code(self) -> str:
        """The code side that represents this function: new for Added/Modified, old for Deleted."""
        if self.kind == FunctionKind.DELETED:
            return self.code_old or ""
        return self.code_new or ""


class DiffArtifact(FrozenModel):
    schema_version: int = SCHEMA_VERSION
    old: BinaryMeta
    new: BinaryMeta
    functions: Tuple[FunctionRecord, ...] = ()
    label: Optional[Label] = None
    function_labels: Optional[Dict[str, Label]] = None

    @property
    def functions_by_name(self) -> Dict[str, FunctionRecord]:
        return {function.display_name: function for function in self.functions}

    def with_functions(self, functions: List[FunctionRecord]) -> "DiffArtifact":
        return self.model_copy(update={"functions": tuple(functions)})


class FssClassification(FrozenModel):
    behaviors: FssLevel
    resources: FssLevel
    confidentiality: FssLevel
    integrity: FssLevel
    availability: FssLevel

    @classmethod
    def none(cls) -> "FssClassification":
        return cls(**{category.field_name: FssLevel.NONE for category in FssCategory})

    def level(self, category: FssCategory) -> FssLevel:
        return getattr(self, category.field_name)

    def with_level(self, category: FssCategory, level: FssLevel) -> "FssClassification":
        return self.model_copy(update={category.field_name: level})

    def maximum(self, other: "FssClassification") -> "FssClassification":
        """Element-wise maximum of two classifications."""
        return FssClassification(**{
            category.field_name: max(self.level(category), other.level(category), key=lambda level: level.rank)
            for category in FssCategory
        })


class FssScore(FrozenModel):
    sensitivity: float = Field(ge=0.0, le=1.0)
    impact: float = Field(ge=0.0, le=1.0)
    value: float = Field(ge=0.0, le=10.0)


class TokenUsage(FrozenModel):
    input_tokens: int = Field(default=0, ge=0)
    output_tokens: int = Field(default=0, ge=0)

    def __add__(self, other: "TokenUsage") -> "TokenUsage":
        return TokenUsage(
            input_tokens=self.input_tokens + other.input_tokens,
            output_tokens=self.output_tokens + other.output_tokens,
        )

    @property
    def total_tokens(self) -> int:
        return self.input_tokens + self.output_tokens


class FunctionAnalysis(FrozenModel):
    id: FunctionId
    kind: FunctionKind
    summary: str
    diff_summary: Optional[str] = None
    classification: FssClassification
    score: FssScore
    usage: TokenUsage = TokenUsage()

    @property
    def name(self) -> str:
        return self.id.display_name


class ChatRole(str, Enum):
    SYSTEM = "system"
    USER = "user"
    ASSISTANT = "assistant"


class ChatMessage(FrozenModel):
    role: ChatRole
    content: str

    @field_validator("content")
    @classmethod
    def _content_not_empty(cls, value: str) -> str:
        if not value:
            raise ValueError("chat message content must not be empty")
        return value


class Completion(FrozenModel):
    reply: str
    usage: TokenUsage = TokenUsage()


class TopFunction(FrozenModel):
    id: FunctionId
    score: float
    vector: str


class DiffVerdict(FrozenModel):
    verdict: Verdict
    rationale: str
    top_functions: Tuple[TopFunction, ...] = ()
    usage: TokenUsage = TokenUsage()


def validate_artifact(artifact: DiffArtifact, preprocessed: bool = False) -> List[str]:
    """
    Checks the invariants of a diff artifact.

    Args:
        artifact (DiffArtifact): The artifact to check.
        preprocessed (bool): If True, Modified functions must carry their text diff.
    Returns:
        List[str]: One description per violation, empty if the artifact is valid.
    """
    violations: List[str] = []

    for side, meta in (("old", artifact.old), ("new", artifact.new)):
        if not meta.name:
            violations.append(f"{side}.name: must not be empty")
        if not meta.version:
            violations.append(f"{side}.version: must not be empty")
        if not _CONTENT_HASH.match(meta.content_hash):
            violations.append(f"{side}.content_hash: must be 64 lowercase hex characters")

    first_index: Dict[str, int] = {}
    for index, function in enumerate(artifact.functions):
        name = function.display_name or f"functions[{index}]"
        if not function.display_name:
            violations.append(f"functions[{index}]: display-name must not be empty")
        elif function.display_name in first_index:
            violations.append(
                f"duplicate display-name '{function.display_name}' in "
                f"functions[{first_index[function.display_name]}] and functions[{index}]"
            )
        else:
            first_index[function.display_name] = index

        violations.extend(_function_violations(name, function, preprocessed))

    if artifact.function_labels is not None:
        if artifact.label is None:
            violations.append("function_labels: present on an artifact without label")
        for labeled_name in sorted(artifact.function_labels):
            if labeled_name not in first_index:
                violations.append(f"function_labels: '{labeled_name}' is not a function of this artifact")

    return violations


def _function_violations(name: str, function: FunctionRecord, preprocessed: bool) -> List[str]:
    violations: List[str] = []

    if function.old_address is None and function.new_address is None:
        violations.append(f"{name}: at least one address is required")
    for field in ("old_address", "new_address"):
        address = getattr(function, field)
        if address is not None and not _HEX_ADDRESS.match(address):
            violations.append(f"{name}: {field} must be lowercase hex without 0x prefix")

    if function.kind == FunctionKind.ADDED:
        if function.old_address is not None:
            violations.append(f"{name}: Added must not carry old-address")
        if function.new_address is None:
            violations.append(f"{name}: Added requires new-address")
        if function.code_old is not None:
            violations.append(f"{name}: Added must not carry code-old")
        if function.code_new is None:
            violations.append(f"{name}: Added requires code-new")
    elif function.kind == FunctionKind.DELETED:
        if function.new_address is not None:
            violations.append(f"{name}: Deleted must not carry new-address")
        if function.old_address is None:
            violations.append(f"{name}: Deleted requires old-address")
        if function.code_new is not None:
            violations.append(f"{name}: Deleted must not carry code-new")
        if function.code_old is None:
            violations.append(f"{name}: Deleted requires code-old")
    else:
        if function.old_address is None or function.new_address is None:
            violations.append(f"{name}: Modified requires both addresses")
        if function.code_old is None or function.code_new is None:
            violations.append(f"{name}: Modified requires code-old and code-new")
        if preprocessed and function.text_diff is None:
            violations.append(f"{name}: Modified requires text-diff after preprocessing")

    if function.kind != FunctionKind.MODIFIED and function.text_diff is not None:
        violations.append(f"{name}: text-diff is only allowed for Modified")

    seen = set()
    for callee in function.callees:
        if callee in seen:
            violations.append(f"{name}: duplicate callee '{callee}'")
        seen.add(callee)

    return violations
