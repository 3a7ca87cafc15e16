import json

from hypothesis import given, settings, strategies

from difftriage.textdiff import UnifiedDiff, apply_unified_diff, parse_hunk_header, unified_diff
from tests import TestBase

code_lines = strategies.lists(
    strategies.text(alphabet="abc{}; =", min_size=1, max_size=6),
    max_size=12,
)


class TestTextDiff(TestBase):

    def test_single_change_with_context(self):
        # GIVEN
        old_code = "a\nb\nc"
        new_code = "a\nB\nc"

        # WHEN
        diff = unified_diff(old_code, new_code)

        # THEN
        self.assertEqual("--- old\n+++ new\n@@ -1,3 +1,3 @@\n a\n-b\n+B\n c\n", diff.text)
        self.assertEqual(1, diff.hunk_count)
        self.assertEqual(("@@ -1,3 +1,3 @@\n a\n-b\n+B\n c\n",), diff.hunks)

    def test_single_line_range_omits_count(self):
        # WHEN
        diff = unified_diff("x", "y", context=0)

        # THEN
        self.assertEqual("--- old\n+++ new\n@@ -1 +1 @@\n-x\n+y\n", diff.text)

    def test_pure_insertion_without_context(self):
        # WHEN
        diff = unified_diff("a\nc", "a\nb\nc", context=0)

        # THEN
        self.assertEqual(("@@ -1,0 +2 @@\n+b\n",), diff.hunks)
        self.assertEqual("a\nb\nc", apply_unified_diff("a\nc", diff))

    def test_distant_changes_become_separate_hunks(self):
        # GIVEN
        old_lines = [f"l{index}" for index in range(1, 11)]
        new_lines = list(old_lines)
        new_lines[1] = "L2"
        new_lines[8] = "L9"

        # WHEN
        diff = unified_diff("\n".join(old_lines), "\n".join(new_lines), context=1)

        # THEN
        self.assertEqual(
            (
                "@@ -1,3 +1,3 @@\n l1\n-l2\n+L2\n l3\n",
                "@@ -8,3 +8,3 @@\n l8\n-l9\n+L9\n l10\n",
            ),
            diff.hunks,
        )

    def test_identical_sides_give_empty_diff(self):
        # WHEN
        diff = unified_diff("int f() {\n  return 0;\n}", "int f() {\n  return 0;\n}")

        # THEN
        self.assertTrue(diff.is_empty)
        self.assertEqual("", diff.text)
        self.assertEqual(0, diff.hunk_count)
        self.assertEqual("", diff.header)

    def test_trailing_whitespace_is_ignored(self):
        # WHEN
        diff = unified_diff("a  \nb\t", "a\nb")

        # THEN
        self.assertTrue(diff.is_empty)

    def test_negative_context_is_rejected(self):
        with self.assertRaises(ValueError):
            unified_diff("a", "b", context=-1)

    def test_from_text_restores_hunks(self):
        # GIVEN
        diff = unified_diff("a\nb\nc\nd\ne\nf\ng\nh", "A\nb\nc\nd\ne\nf\ng\nH", context=1)

        # WHEN
        restored = UnifiedDiff.from_text(diff.text)

        # THEN
        self.assertEqual(2, restored.hunk_count)
        self.assertEqual(diff, restored)
        self.assertEqual(UnifiedDiff(), UnifiedDiff.from_text(""))

    def test_parse_hunk_header(self):
        self.assertEqual((1, 3, 1, 4), parse_hunk_header("@@ -1,3 +1,4 @@"))
        self.assertEqual((4, 1, 4, 1), parse_hunk_header("@@ -4 +4 @@"))
        self.assertEqual((1, 0, 2, 1), parse_hunk_header("@@ -1,0 +2 @@"))
        with self.assertRaises(ValueError):
            parse_hunk_header("@@ broken @@")

    def test_matches_reference_diffs(self):
        # GIVEN
        pairs = json.loads((self._test_data_folder / "diff_reference.json").read_text(encoding="utf-8"))["pairs"]

        # THEN
        self.assertEqual(50, len(pairs))
        for index, pair in enumerate(pairs):
            with self.subTest(index=index, context=pair["context"]):
                diff = unified_diff(pair["old"], pair["new"], context=pair["context"])
                self.assertEqual(pair["diff"], diff.text)
                self.assertEqual(pair["new"], apply_unified_diff(pair["old"], diff))

    def test_apply_rejects_wrong_base(self):
        # GIVEN
        diff = unified_diff("a\nb\nc", "a\nB\nc")

        # THEN
        with self.assertRaises(ValueError):
            apply_unified_diff("a\nx\nc", diff)

    @settings(max_examples=200)
    @given(code_lines, code_lines, strategies.integers(min_value=0, max_value=3))
    def test_applying_the_diff_gives_the_new_side(self, old_lines, new_lines, context):
        old_code = "\n".join(old_lines)
        new_code = "\n".join(new_lines)

        diff = unified_diff(old_code, new_code, context=context)

        self.assertEqual("\n".join(line.rstrip() for line in new_lines), apply_unified_diff(old_code, diff))

    @given(code_lines, code_lines, strategies.integers(min_value=0, max_value=3))
    def test_more_context_never_adds_hunks(self, old_lines, new_lines, context):
        old_code = "\n".join(old_lines)
        new_code = "\n".join(new_lines)

        narrow = unified_diff(old_code, new_code, context=context)
        wide = unified_diff(old_code, new_code, context=context + 1)

        self.assertLessEqual(wide.hunk_count, narrow.hunk_count)
        self.assertEqual(narrow.is_empty, wide.is_empty)
