import pytest
from hypothesis import given
from hypothesis import strategies as st

from finemerge import LocalHypothesis, ServiceHypothesis, train_trigram
from finemerge.baselines import RoverParams, rescore_nbest, rover_chars, rover_words
from oracles import optimal_alignments

RANK = {"M": 0, "S": 1, "D": 2, "I": 3}


def oracle_vote(a, ac, b, bc, conf_null, service_wins_ties=True):
    """Among all optimal alignments pick the one the backtrace prefers, then vote per slot."""
    def ops(al):
        return [("D" if y is None else "I" if x is None else "M" if x == y else "S") for x, y in al]

    cands = optimal_alignments(a, b)
    best = min(cands, key=lambda al: [RANK[o] for o in reversed(ops(al))])
    out, i, j = [], 0, 0
    for x, y in best:
        ca = ac[i] if x is not None else conf_null
        cb = bc[j] if y is not None else conf_null
        i += x is not None
        j += y is not None
        if x == y:
            win = x
        elif ca > cb or (ca == cb and service_wins_ties):
            win = x
        else:
            win = y
        if win is not None:
            out.append(win)
    return out


def char_stream(text, confs):
    words = text.split()
    chars, cc = [], []
    for k, (w, c) in enumerate(zip(words, confs)):
        chars += list(w)
        cc += [c] * len(w)
        if k < len(words) - 1:
            chars.append(" ")
            cc.append(c)
    return chars, cc


class TestRoverWords:
    def test_identical(self):
        h = ("everyone posted the", [0.9, 0.4, 0.9])
        assert rover_words(h, h) == "everyone posted the"

    def test_spec_pair(self):
        a = ("everyone posted the", [0.9, 0.4, 0.9])
        b = ("everyone to state the", [0.9, 0.6, 0.5, 0.9])
        expected = " ".join(oracle_vote(a[0].split(), a[1], b[0].split(), b[1], 0.45))
        assert expected == "everyone to state the"
        assert rover_words(a, b, RoverParams(0.45)) == expected

    def test_confident_word_wins(self):
        a = ServiceHypothesis("a brief note", (0.9, 0.8, 0.9))
        b = LocalHypothesis("a breese note", (0.9, 0.3, 0.9))
        assert "brief" in rover_words(a, b).split()

    def test_null_wins_drops_word(self):
        assert rover_words(("a b", [0.9, 0.2]), ("a", [0.9]), RoverParams(0.45)) == "a"

    def test_tie_preference(self):
        a, b = ("x", [0.5]), ("y", [0.5])
        assert rover_words(a, b) == "x"
        assert rover_words(a, b, RoverParams(prefer_on_tie="local")) == "y"

    def test_confidence_count_checked(self):
        with pytest.raises(ValueError):
            rover_words(("a b", [0.5]), ("a", [0.5]))

    def test_params_validation(self):
        with pytest.raises(ValueError):
            RoverParams(conf_null=1.5)
        with pytest.raises(ValueError):
            RoverParams(prefer_on_tie="either")

    @given(st.lists(st.sampled_from(["a", "b", "c"]), max_size=6))
    def test_self_combination_is_identity(self, words):
        text = " ".join(words)
        assert rover_words((text, [0.3] * len(words)), (text, [0.7] * len(words))) == text

    @given(
        st.lists(st.sampled_from(["a", "b", "cd"]), max_size=5),
        st.lists(st.sampled_from(["a", "b", "cd"]), max_size=5),
        st.lists(st.sampled_from([0.2, 0.45, 0.5, 0.9]), min_size=5, max_size=5),
    )
    def test_matches_oracle(self, wa, wb, confs):
        ac, bc = confs[: len(wa)], confs[::-1][: len(wb)]
        got = rover_words((" ".join(wa), ac), (" ".join(wb), bc))
        assert got == " ".join(oracle_vote(wa, ac, wb, bc, 0.45))


class TestRoverChars:
    def test_identical(self):
        assert rover_chars(("to be", [0.5, 0.5]), ("to be", [0.9, 0.9])) == "to be"

    def test_posted_to_state(self):
        a, b = ("posted", [0.5]), ("to state", [0.5, 0.5])
        ca, cac = char_stream(*a)
        cb, cbc = char_stream(*b)
        expected = " ".join("".join(oracle_vote(ca, cac, cb, cbc, 0.45)).split())
        assert rover_chars(a, b, RoverParams(0.45)) == expected == "po staed"

    def test_empty_side(self):
        assert rover_chars(("", []), ("abc", [0.3]), RoverParams(0.45)) == ""


class TestRescore:
    LM = train_trigram(["everyone toasted the bread", "the bread"])

    def test_single(self):
        svc = ServiceHypothesis("x y", (1.0, 1.0), (("x y", -1.0),))
        assert rescore_nbest(svc, self.LM) == "x y"

    def test_huge_lambda_keeps_top(self):
        svc = ServiceHypothesis("posted the", (1.0, 1.0), (("posted the", 0.0), ("toasted the", -0.1)))
        assert rescore_nbest(svc, self.LM, lam=1e9) == "posted the"

    def test_lm_breaks_equal_scores(self):
        svc = ServiceHypothesis("posted the bread", (1.0,) * 3,
                                (("posted the bread", -1.0), ("toasted the bread", -1.0)))
        assert rescore_nbest(svc, self.LM) == "toasted the bread"

    def test_tie_keeps_earlier(self):
        svc = ServiceHypothesis("q", (1.0,), (("q", -1.0), ("r", -1.0)))
        assert rescore_nbest(svc, self.LM) == "q"

    def test_no_nbest(self):
        with pytest.raises(ValueError):
            rescore_nbest(ServiceHypothesis("a"), self.LM)
