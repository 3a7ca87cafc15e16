from fractions import Fraction

from hypothesis import given, strategies

from difftriage.errors import VectorParseError
from difftriage.fss import (
    IMPACT_WEIGHTS,
    SENSITIVITY_WEIGHTS,
    all_classifications,
    format_vector,
    fss_score,
    parse_vector,
    roundup,
    score_curve,
    severity,
)
from difftriage.model import FssCategory, FssClassification, FssLevel
from tests import TestBase

levels = strategies.sampled_from(list(FssLevel))
classifications = strategies.builds(
    FssClassification,
    behaviors=levels,
    resources=levels,
    confidentiality=levels,
    integrity=levels,
    availability=levels,
)


def _exact_score(classification: FssClassification) -> Fraction:
    """Reference score in exact arithmetic, rounded up to the next tenth."""
    weights = {
        category: Fraction(str(
            SENSITIVITY_WEIGHTS[classification.level(category)]
            if category.is_sensitivity
            else IMPACT_WEIGHTS[classification.level(category)]
        ))
        for category in FssCategory
    }
    s = 1 - (1 - weights[FssCategory.BEHAVIORS]) * (1 - weights[FssCategory.RESOURCES])
    m = 1 - (
        (1 - weights[FssCategory.CONFIDENTIALITY])
        * (1 - weights[FssCategory.INTEGRITY])
        * (1 - weights[FssCategory.AVAILABILITY])
    )
    if m == 0:
        return Fraction(0)
    raw = Fraction("5.3") * s + Fraction("6.1") * m
    tenths = -((-raw * 10) // 1)
    return min(Fraction(10), Fraction(tenths, 10))


class TestFss(TestBase):

    def test_all_classifications_match_exact_arithmetic(self):
        # GIVEN
        classifications = all_classifications()

        # WHEN
        mismatches = [
            (format_vector(classification), fss_score(classification).value, float(_exact_score(classification)))
            for classification in classifications
            if fss_score(classification).value != float(_exact_score(classification))
        ]

        # THEN
        self.assertEqual(1024, len(classifications))
        self.assertEqual([], mismatches)

    def test_no_impact_scores_zero(self):
        # GIVEN
        classification = parse_vector("FSS:1/B:H/R:H/C:N/I:N/A:N")

        # WHEN
        score = fss_score(classification)

        # THEN
        self.assertEqual(0.0, score.value)
        self.assertAlmostEqual(0.84, score.sensitivity)
        self.assertEqual(0.0, score.impact)

    def test_maximum_classification_is_capped(self):
        # GIVEN
        classification = parse_vector("FSS:1/B:H/R:H/C:H/I:H/A:H")

        # WHEN
        score = fss_score(classification)

        # THEN
        self.assertEqual(10.0, score.value)

    def test_minimum_impact(self):
        # GIVEN
        classification = parse_vector("FSS:1/B:N/R:N/C:L/I:N/A:N")

        # WHEN
        score = fss_score(classification)

        # THEN
        # 6.1 * 0.22 = 1.342
        self.assertEqual(1.4, score.value)

    def test_partial_vector(self):
        # GIVEN
        classification = parse_vector("B:M/C:L", allow_partial=True)

        # WHEN
        score = fss_score(classification)

        # THEN
        self.assertAlmostEqual(0.35, score.sensitivity)
        self.assertAlmostEqual(0.22, score.impact)
        self.assertEqual(3.2, score.value)
        self.assertEqual("low", severity(score.value))

    def test_command_and_control_leaf(self):
        # GIVEN
        classification = parse_vector("FSS:1/B:H/R:H/C:H/I:H/A:N")

        # WHEN
        score = fss_score(classification)

        # THEN
        self.assertAlmostEqual(0.84, score.sensitivity)
        self.assertAlmostEqual(0.8064, score.impact)
        self.assertEqual(9.4, score.value)
        self.assertEqual("critical", severity(score.value))

    def test_roundup_ignores_floating_point_noise(self):
        self.assertEqual(4.0, roundup(4.000000000000001))
        self.assertEqual(4.1, roundup(4.02))
        self.assertEqual(0.0, roundup(0.0))

    def test_raising_a_level_never_lowers_the_score(self):
        # GIVEN
        raises = [
            (classification, classification.with_level(category, list(FssLevel)[classification.level(category).rank + 1]))
            for classification in all_classifications()
            for category in FssCategory
            if classification.level(category) != FssLevel.HIGH
        ]

        # THEN
        self.assertEqual(1024 * 5 - 256 * 5, len(raises))
        lowered = [
            (format_vector(before), format_vector(after))
            for before, after in raises
            if fss_score(after).value < fss_score(before).value
        ]
        self.assertEqual([], lowered)

    @given(classifications)
    def test_score_is_in_range(self, classification: FssClassification):
        score = fss_score(classification)

        self.assertGreaterEqual(score.value, 0.0)
        self.assertLessEqual(score.value, 10.0)
        self.assertEqual(score.value, round(score.value, 1))

    @given(classifications)
    def test_vector_text_is_stable(self, classification: FssClassification):
        vector = format_vector(classification)

        self.assertEqual(classification, parse_vector(vector))
        self.assertTrue(vector.startswith("FSS:1/B:"))

    def test_score_curve_is_sorted(self):
        # WHEN
        curve = score_curve()

        # THEN
        self.assertEqual(1024, len(curve))
        self.assertEqual(sorted(curve), curve)
        self.assertEqual(0.0, curve[0])
        self.assertEqual(10.0, curve[-1])

    def test_plot_score_curve(self):
        # GIVEN
        from difftriage.fss import plot_score_curve
        path = self._temp_dir() / "curve.png"

        # WHEN
        plot_score_curve(path)

        # THEN
        self.assertTrue(path.exists())
        self.assertGreater(path.stat().st_size, 0)

    def test_parse_errors_name_the_token(self):
        cases = {
            "": "empty vector",
            "B:H/R:H/C:H/I:H/A:H": "must start with FSS:1",
            "FSS:1/B:H/R:H/C:H/I:H": "missing categories A",
            "FSS:1/B:X/R:H/C:H/I:H/A:H": "invalid level X for B",
            "FSS:1/Q:H/R:H/C:H/I:H/A:H": "unknown category 'Q'",
            "FSS:1/B:H/B:H/C:H/I:H/A:H": "duplicate category B",
            "FSS:1/R:H/B:H/C:H/I:H/A:H": "order B/R/C/I/A",
            "FSS:1/BH/R:H/C:H/I:H/A:H": "malformed token 'BH'",
        }
        for vector, message in cases.items():
            with self.subTest(vector=vector):
                with self.assertRaises(VectorParseError) as context:
                    parse_vector(vector)
                self.assertIn(message, str(context.exception))

    def test_severity_bands(self):
        self.assertEqual("none", severity(0.0))
        self.assertEqual("low", severity(3.9))
        self.assertEqual("medium", severity(4.0))
        self.assertEqual("high", severity(7.0))
        self.assertEqual("critical", severity(9.0))
