"""Word and character error rates, and per-word error analysis."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import List, Sequence, Tuple

MATCH, SUB, DEL, INS = "M", "S", "D", "I"


def edit_distance(ref: Sequence, hyp: Sequence) -> Tuple[int, List[str]]:
    """Levenshtein distance and one optimal edit script.

    Ops are relative to ``ref``: ``D`` drops a reference token, ``I`` adds a
    hypothesis token.  The backtrace prefers match, then substitution,
    deletion, insertion.
    """
    n, m = len(ref), len(hyp)
    d = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        d[i][0] = i
    for j in range(1, m + 1):
        d[0][j] = j
    for i in range(1, n + 1):
        ri = ref[i - 1]
        row, prev = d[i], d[i - 1]
        for j in range(1, m + 1):
            row[j] = min(prev[j - 1] + (ri != hyp[j - 1]), prev[j] + 1, row[j - 1] + 1)

    ops: List[str] = []
    i, j = n, m
    while i or j:
        if i and j and ref[i - 1] == hyp[j - 1] and d[i][j] == d[i - 1][j - 1]:
            ops.append(MATCH)
            i, j = i - 1, j - 1
        elif i and j and d[i][j] == d[i - 1][j - 1] + 1:
            ops.append(SUB)
            i, j = i - 1, j - 1
        elif i and d[i][j] == d[i - 1][j] + 1:
            ops.append(DEL)
            i -= 1
        else:
            ops.append(INS)
            j -= 1
    ops.reverse()
    return d[n][m], ops


def _check(refs, hyps):
    if len(refs) != len(hyps):
        raise ValueError(f"{len(refs)} references but {len(hyps)} hypotheses")


def wer(refs: Sequence[str], hyps: Sequence[str]) -> float:
    """Corpus word error rate: total word edits over total reference words."""
    _check(refs, hyps)
    errs = words = 0
    for r, h in zip(refs, hyps):
        rw = r.split()
        errs += edit_distance(rw, h.split())[0]
        words += len(rw)
    if words == 0:
        raise ValueError("reference corpus has no words")
    return errs / words


def cer(refs: Sequence[str], hyps: Sequence[str]) -> float:
    """Corpus character error rate; spaces count as characters."""
    _check(refs, hyps)
    errs = chars = 0
    for r, h in zip(refs, hyps):
        r = " ".join(r.split())
        errs += edit_distance(r, " ".join(h.split()))[0]
        chars += len(r)
    if chars == 0:
        raise ValueError("reference corpus has no characters")
    return errs / chars


@dataclass(frozen=True)
class WordErrorRow:
    word: str
    count: int
    err_a: float
    err_b: float

    @property
    def reduction(self) -> float:
        return self.err_a - self.err_b


def _matched_ref_words(ref: str, hyp: str):
    rw = ref.split()
    _, ops = edit_distance(rw, hyp.split())
    i = 0
    for op in ops:
        if op == INS:
            continue
        yield rw[i], op == MATCH
        i += 1


def per_word_error_reduction(
    refs: Sequence[str], hyps_a: Sequence[str], hyps_b: Sequence[str], min_count: int = 5
) -> List[WordErrorRow]:
    """Per reference word, the fraction of its occurrences each system fails to match.

    A word occurrence counts as correct when the optimal alignment of its
    utterance marks it as a match.  Rows are sorted by ``err_a - err_b``,
    largest first, then by word.
    """
    _check(refs, hyps_a)
    _check(refs, hyps_b)
    total = defaultdict(int)
    miss_a = defaultdict(int)
    miss_b = defaultdict(int)
    for r, a, b in zip(refs, hyps_a, hyps_b):
        for w, ok in _matched_ref_words(r, a):
            total[w] += 1
            miss_a[w] += not ok
        for w, ok in _matched_ref_words(r, b):
            miss_b[w] += not ok
    rows = [
        WordErrorRow(w, n, miss_a[w] / n, miss_b[w] / n)
        for w, n in total.items()
        if n >= min_count
    ]
    rows.sort(key=lambda r: (-r.reduction, r.word))
    return rows


def aligned_diff(ref: str, hyp: str) -> Tuple[str, str, str]:
    """Three text lines (reference, hypothesis, ops) with columns padded to line up."""
    rw, hw = ref.split(), hyp.split()
    _, ops = edit_distance(rw, hw)
    top, mid, bot = [], [], []
    i = j = 0
    for op in ops:
        r = h = "*"
        if op in (MATCH, SUB, DEL):
            r = rw[i]
            i += 1
        if op in (MATCH, SUB, INS):
            h = hw[j]
            j += 1
        width = max(len(r), len(h))
        top.append(r.ljust(width))
        mid.append(h.ljust(width))
        bot.append(("" if op == MATCH else op).ljust(width))
    return " ".join(top), " ".join(mid), " ".join(bot).rstrip()
