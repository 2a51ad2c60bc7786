import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from finemerge.metrics import aligned_diff, cer, edit_distance, per_word_error_reduction, wer
from oracles import levenshtein


class TestEditDistance:
    def test_substitution(self):
        assert edit_distance("a b c".split(), "a x c".split()) == (1, ["M", "S", "M"])

    def test_identity(self):
        assert edit_distance(list("xyz"), list("xyz"))[0] == 0

    def test_deletions(self):
        assert edit_distance("abc", "") == (3, ["D", "D", "D"])

    def test_insertions(self):
        assert edit_distance("", "ab") == (2, ["I", "I"])

    @given(st.text("abc", max_size=7), st.text("abc", max_size=7))
    def test_matches_oracle(self, a, b):
        d, ops = edit_distance(a, b)
        assert d == levenshtein(a, b)
        assert sum(op != "M" for op in ops) == d
        assert sum(op != "I" for op in ops) == len(a)
        assert sum(op != "D" for op in ops) == len(b)


class TestRates:
    def test_perfect(self):
        assert wer(["a b", "c"], ["a b", "c"]) == 0.0

    def test_one_third(self):
        assert wer(["a b c"], ["a b"]) == 1 / 3

    def test_cer_swap(self):
        assert cer(["ab"], ["ba"]) == 1.0

    def test_corpus_not_mean(self):
        refs, hyps = ["a", "a b c d"], ["x", "a b c d"]
        assert wer(refs, hyps) == 1 / 5

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            wer(["a"], [])

    def test_empty_reference(self):
        with pytest.raises(ValueError):
            wer([""], ["a"])
        with pytest.raises(ValueError):
            cer([], [])

    def test_order_invariant(self):
        rng = random.Random(3)
        refs = ["the cat sat", "on the mat", "a dog", "ran far away"]
        hyps = ["the bat sat", "on mat", "a dog dog", "ran away"]
        pairs = list(zip(refs, hyps))
        rng.shuffle(pairs)
        r2, h2 = zip(*pairs)
        assert wer(refs, hyps) == wer(list(r2), list(h2))
        assert cer(refs, hyps) == cer(list(r2), list(h2))


class TestPerWord:
    def test_however(self):
        refs = ["however it works"] * 10
        a = ["however it works"] * 5 + ["how ever it works"] * 5
        b = ["however it works"] * 9 + ["whatever it works"]
        rows = per_word_error_reduction(refs, a, b, min_count=5)
        top = rows[0]
        assert (top.word, top.count) == ("however", 10)
        assert (top.err_a, top.err_b, top.reduction) == pytest.approx((0.5, 0.1, 0.4))

    def test_a_perfect(self):
        refs = ["x y", "y z", "x"]
        rows = per_word_error_reduction(refs, refs, ["x", "y q", "q"], min_count=1)
        assert all(r.err_a == 0 and r.reduction <= 0 for r in rows)

    def test_min_count(self):
        assert per_word_error_reduction(["a b"], ["a b"], ["a"], min_count=2) == []


class TestAlignedDiff:
    def test_columns(self):
        top, mid, bot = aligned_diff("the cat sat", "the bat")
        assert top.split() == ["the", "cat", "sat"]
        # the backtrace runs from the end, so "sat"/"bat" pair up first
        assert mid.split() == ["the", "*", "bat"]
        assert bot.split() == ["D", "S"]
        assert len(top) == len(mid)
