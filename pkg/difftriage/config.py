"""
Run configuration.

Read from a TOML file and validated with pydantic. The API key is never part of the
configuration, it is read from the environment by the HTTP backend.
"""

import logging
import tomllib
from enum import Enum
from os import PathLike
from pathlib import Path
from typing import Annotated, Any, List, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from difftriage.const import (
    DEFAULT_BACKOFF_SECONDS,
    DEFAULT_BASE_URL,
    DEFAULT_CODE_BUDGET,
    DEFAULT_CONCURRENCY,
    DEFAULT_DIFF_BUDGET,
    DEFAULT_DIFF_CONTEXT,
    DEFAULT_EVALUATION_CHANGELOG_OPTIONS,
    DEFAULT_EVALUATION_K_VALUES,
    DEFAULT_MAX_RETRIES,
    DEFAULT_MOCK_VERDICT_THRESHOLD,
    DEFAULT_MODEL,
    DEFAULT_TEMPERATURE,
    DEFAULT_TIMEOUT_SECONDS,
    DEFAULT_TOP_K,
    DEFAULT_TOP_P,
)
from difftriage.errors import ConfigError

logger = logging.getLogger(__name__)


class ConfigModel(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class BackendKind(str, Enum):
    MOCK = "mock"
    HTTP = "http"


class ReasoningEffort(str, Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"


class BackendConfig(ConfigModel):
    kind: BackendKind = BackendKind.HTTP
    base_url: str = DEFAULT_BASE_URL
    model: str = DEFAULT_MODEL
    temperature: float = Field(default=DEFAULT_TEMPERATURE, ge=0.0)
    top_p: float = Field(default=DEFAULT_TOP_P, gt=0.0, le=1.0)
    reasoning_effort: Optional[ReasoningEffort] = None
    max_retries: int = Field(default=DEFAULT_MAX_RETRIES, ge=0)
    timeout_seconds: float = Field(default=DEFAULT_TIMEOUT_SECONDS, gt=0.0)
    backoff_seconds: float = Field(default=DEFAULT_BACKOFF_SECONDS, ge=0.0)


class MockRuleConfig(ConfigModel):
    pattern: str = Field(min_length=1)
    vector: str


class MockVerdict(str, Enum):
    MALICIOUS = "malicious"
    BENIGN = "benign"


class MockConfig(ConfigModel):
    verdict_threshold: float = Field(default=DEFAULT_MOCK_VERDICT_THRESHOLD, ge=0.0, le=10.0)
    fixed_verdict: Optional[MockVerdict] = None
    rules: Optional[List[MockRuleConfig]] = None


class SummarizerConfig(ConfigModel):
    concurrency: int = Field(default=DEFAULT_CONCURRENCY, ge=1)
    code_budget: int = Field(default=DEFAULT_CODE_BUDGET, ge=1)
    diff_budget: int = Field(default=DEFAULT_DIFF_BUDGET, ge=1)
    diff_context: int = Field(default=DEFAULT_DIFF_CONTEXT, ge=0)


class PredictorConfig(ConfigModel):
    k: int = Field(default=DEFAULT_TOP_K, ge=1)
    include_changelog: bool = False


class EvaluationConfig(ConfigModel):
    k_values: List[Annotated[int, Field(ge=1)]] = Field(default=list(DEFAULT_EVALUATION_K_VALUES), min_length=1)
    changelog_options: List[bool] = Field(default=list(DEFAULT_EVALUATION_CHANGELOG_OPTIONS), min_length=1)

    def configurations(self) -> List[PredictorConfig]:
        """All (k, changelog) combinations, k varying slowest."""
        return [
            PredictorConfig(k=k, include_changelog=changelog)
            for k in self.k_values
            for changelog in self.changelog_options
        ]


class TriageConfig(ConfigModel):
    backend: BackendConfig = BackendConfig()
    prediction_backend: Optional[BackendConfig] = None
    mock: MockConfig = MockConfig()
    summarizer: SummarizerConfig = SummarizerConfig()
    predictor: PredictorConfig = PredictorConfig()
    evaluation: EvaluationConfig = EvaluationConfig()

    @property
    def effective_prediction_backend(self) -> BackendConfig:
        return self.prediction_backend or self.backend


def _find_api_key(data: Any, path: str = "") -> Optional[str]:
    if isinstance(data, dict):
        for key, value in data.items():
            location = f"{path}.{key}" if path else key
            if key.lower() == "api_key":
                return location
            found = _find_api_key(value, location)
            if found:
                return found
    return None


def parse_config(data: dict) -> TriageConfig:
    """
    Validates decoded configuration data.

    Raises:
        ConfigError: naming the offending field.
    """
    api_key_location = _find_api_key(data)
    if api_key_location:
        raise ConfigError(f"{api_key_location}: API keys are read from the environment only, remove it from the file")
    try:
        return TriageConfig.model_validate(data)
    except ValidationError as e:
        error = e.errors()[0]
        location = ".".join(str(part) for part in error["loc"])
        raise ConfigError(f"{location}: {error['msg']}") from e


def load_config(path: PathLike | str) -> TriageConfig:
    """
    Loads a TOML configuration file.

    Raises:
        ConfigError: if the file is missing, not valid TOML or not a valid configuration.
    """
    path = Path(path)
    try:
        with path.open("rb") as file:
            data = tomllib.load(file)
    except FileNotFoundError as e:
        raise ConfigError(f"config file {path} not found") from e
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: {e}") from e
    config = parse_config(data)
    logger.debug(f"loaded config {path}: backend={config.backend.kind.value} model={config.backend.model}")
    return config


def with_overrides(
    config: TriageConfig,
    k: Optional[int] = None,
    include_changelog: Optional[bool] = None,
    concurrency: Optional[int] = None,
    model: Optional[str] = None,
    evaluation: bool = False,
) -> TriageConfig:
    """
    Applies command line overrides, re-validating the result.

    Args:
        evaluation (bool): k and the changelog flag replace the evaluation sweep
            (`k_values`, `changelog_options`) instead of the single prediction setting.
    Raises:
        ConfigError: if an override is invalid, f.e. k=0.
    """
    data = config.model_dump(mode="json")
    if k is not None:
        if evaluation:
            data["evaluation"]["k_values"] = [k]
        else:
            data["predictor"]["k"] = k
    if include_changelog is not None:
        if evaluation:
            data["evaluation"]["changelog_options"] = [include_changelog]
        else:
            data["predictor"]["include_changelog"] = include_changelog
    if concurrency is not None:
        data["summarizer"]["concurrency"] = concurrency
    if model is not None:
        data["backend"]["model"] = model
    return parse_config(data)
