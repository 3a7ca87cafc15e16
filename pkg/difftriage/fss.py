"""
Functional Sensitivity Score.

A CVSS 3.1 style score from 0.0 to 10.0 aggregated over five categories. Behaviors (B) and
resources (R) form the sensitivity aggregate S, the three impact categories (C, I, A) the
impact aggregate M. A function without any impact scores 0.0 regardless of S.
"""

import itertools
import logging
import math
from os import PathLike
from typing import Dict, List

from difftriage.const import (
    FSS_IMPACT_COEFFICIENT,
    FSS_MAX_SCORE,
    FSS_SENSITIVITY_COEFFICIENT,
    FSS_VECTOR_PREFIX,
)
from difftriage.errors import VectorParseError
from difftriage.model import FssCategory, FssClassification, FssLevel, FssScore

logger = logging.getLogger(__name__)

SENSITIVITY_WEIGHTS: Dict[FssLevel, float] = {
    FssLevel.NONE: 0.0,
    FssLevel.LOW: 0.1,
    FssLevel.MEDIUM: 0.35,
    FssLevel.HIGH: 0.6,
}

IMPACT_WEIGHTS: Dict[FssLevel, float] = {
    FssLevel.NONE: 0.0,
    FssLevel.LOW: 0.22,
    FssLevel.MEDIUM: 0.39,
    FssLevel.HIGH: 0.56,
}


def level_weight(category: FssCategory, level: FssLevel) -> float:
    """
    Returns the tabulated weight of a level within a category.

    Args:
        category (FssCategory): B and R use the sensitivity weights, C, I and A the impact weights.
        level (FssLevel): The classified level.
    """
    if category.is_sensitivity:
        return SENSITIVITY_WEIGHTS[level]
    return IMPACT_WEIGHTS[level]


def sensitivity_aggregate(b: float, r: float) -> float:
    return 1 - (1 - b) * (1 - r)


def impact_aggregate(c: float, i: float, a: float) -> float:
    return 1 - (1 - c) * (1 - i) * (1 - a)


def roundup(x: float) -> float:
    """
    Rounds up to one decimal place.

    Works on scaled integers so that values which are one-decimal numbers up to floating point
    noise (f.e. 4.000000000000001) are not pushed to the next tenth.

    Args:
        x (float): value in [0, 11)
    """
    int_input = round(x * 100000)
    if int_input % 10000 == 0:
        return int_input / 100000.0
    return (math.floor(int_input / 10000) + 1) / 10.0


def fss_score(classification: FssClassification) -> FssScore:
    """
    Computes the score of a classification.

    Args:
        classification (FssClassification): levels of all five categories.
    Returns:
        FssScore: S, M and the capped, rounded-up value.
    """
    weights = {
        category: level_weight(category, classification.level(category))
        for category in FssCategory
    }
    sensitivity = sensitivity_aggregate(
        weights[FssCategory.BEHAVIORS],
        weights[FssCategory.RESOURCES],
    )
    impact = impact_aggregate(
        weights[FssCategory.CONFIDENTIALITY],
        weights[FssCategory.INTEGRITY],
        weights[FssCategory.AVAILABILITY],
    )
    if impact <= 0:
        value = 0.0
    else:
        raw = FSS_SENSITIVITY_COEFFICIENT * sensitivity + FSS_IMPACT_COEFFICIENT * impact
        value = min(FSS_MAX_SCORE, roundup(raw))
    return FssScore(sensitivity=sensitivity, impact=impact, value=value)


def format_vector(classification: FssClassification) -> str:
    """
    Formats a classification as vector string, f.e. "FSS:1/B:H/R:M/C:N/I:L/A:N".
    """
    parts = [FSS_VECTOR_PREFIX] + [
        f"{category.value}:{classification.level(category).letter}"
        for category in FssCategory
    ]
    return "/".join(parts)


def parse_vector(vector: str, allow_partial: bool = False) -> FssClassification:
    """
    Parses a vector string.

    Args:
        vector (str): f.e. "FSS:1/B:H/R:M/C:N/I:L/A:N".
        allow_partial (bool): If True, the "FSS:1" prefix is optional, categories may appear in any
            order and missing categories default to none, f.e. "B:M/C:L".
    Returns:
        FssClassification: the parsed classification.
    Raises:
        VectorParseError: naming the offending token.
    """
    if not vector or not vector.strip():
        raise VectorParseError("empty vector")

    tokens = vector.strip().split("/")
    if tokens[0] == FSS_VECTOR_PREFIX:
        tokens = tokens[1:]
    elif not allow_partial:
        raise VectorParseError(f"vector must start with {FSS_VECTOR_PREFIX}, got {tokens[0]!r}")

    levels: Dict[FssCategory, FssLevel] = {}
    for token in tokens:
        key, separator, letter = token.partition(":")
        if not separator:
            raise VectorParseError(f"malformed token {token!r}")
        try:
            category = FssCategory(key)
        except ValueError:
            raise VectorParseError(f"unknown category {key!r} in token {token!r}")
        if category in levels:
            raise VectorParseError(f"duplicate category {key}")
        try:
            levels[category] = FssLevel.from_letter(letter)
        except ValueError:
            raise VectorParseError(f"invalid level {letter} for {key}")

    categories = list(FssCategory)
    if not allow_partial:
        if list(levels) != categories:
            missing = [category.value for category in categories if category not in levels]
            if missing:
                raise VectorParseError(f"missing categories {', '.join(missing)}")
            raise VectorParseError("categories must appear in the order B/R/C/I/A")

    return FssClassification(**{
        category.field_name: levels.get(category, FssLevel.NONE)
        for category in categories
    })


def severity(value: float) -> str:
    """Qualitative band of a score, using the CVSS 3.1 thresholds."""
    if value == 0.0:
        return "none"
    if value < 4.0:
        return "low"
    if value < 7.0:
        return "medium"
    if value < 9.0:
        return "high"
    return "critical"


def all_classifications() -> List[FssClassification]:
    """All 4^5 classifications, B varying slowest."""
    categories = list(FssCategory)
    return [
        FssClassification(**{category.field_name: level for category, level in zip(categories, levels)})
        for levels in itertools.product(list(FssLevel), repeat=len(categories))
    ]


def score_curve() -> List[float]:
    """Score values of all classifications in increasing order."""
    return sorted(fss_score(classification).value for classification in all_classifications())


def plot_score_curve(path: PathLike | str) -> None:
    """
    Writes the sorted score curve of all classifications as image.

    Args:
        path (PathLike | str): target file, the format is derived from the suffix (f.e. ".png").
    """
    import matplotlib
    matplotlib.use("Agg")
    from matplotlib import pyplot

    values = score_curve()
    figure, axes = pyplot.subplots(figsize=(6, 4))
    axes.plot(range(len(values)), values, label="FSS")
    axes.set_xlabel("classification (sorted by score)")
    axes.set_ylabel("score")
    axes.set_ylim(0, FSS_MAX_SCORE)
    axes.legend()
    figure.tight_layout()
    figure.savefig(path)
    pyplot.close(figure)
    logger.info(f"wrote score curve of {len(values)} classifications to {path}")
