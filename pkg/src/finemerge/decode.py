"""CTC decoding: greedy, forward scoring, LM-fused prefix beam search, word confidences."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .align import AlignmentError, min_frames, smooth, viterbi_align
from .core import DEFAULT_VOCAB, FramePosteriors, LocalHypothesis, Vocabulary
from .lm import NGramLM

NEG_INF = -math.inf


@dataclass(frozen=True)
class BeamParams:
    """Prefix beam search settings.

    ``token_min_logp`` skips characters whose frame log-probability falls
    below it, and ``prune_margin`` drops prefixes scoring more than that
    many nats behind the best one.  Both default to off, in which case the
    search is exact whenever ``width`` covers every reachable prefix.
    """

    width: int = 100
    alpha: float = 1.0
    beta: float = 0.0
    nbest: int = 1
    token_min_logp: Optional[float] = None
    prune_margin: Optional[float] = None

    def __post_init__(self):
        if self.width < 1:
            raise ValueError("beam width must be at least 1")
        if self.nbest < 1:
            raise ValueError("nbest must be at least 1")
        if self.alpha < 0:
            raise ValueError("alpha must be non-negative")


def _lse(a: float, b: float) -> float:
    if a < b:
        a, b = b, a
    if b == NEG_INF:
        return a
    return a + math.log1p(math.exp(b - a))


def collapse(ids, blank: int) -> List[int]:
    out = []
    prev = None
    for i in ids:
        if i != prev and i != blank:
            out.append(i)
        prev = i
    return out


def greedy_decode(P: FramePosteriors, vocab: Vocabulary = DEFAULT_VOCAB) -> str:
    """Per-frame argmax (lowest index on ties), merge repeats, drop blanks."""
    best = np.argmax(np.asarray(P.probs), axis=1)
    return vocab.decode(collapse(best.tolist(), vocab.blank_index))


def ctc_logprob(P: FramePosteriors, y: str, vocab: Vocabulary = DEFAULT_VOCAB) -> float:
    """Log of the total probability of all CTC expansions of ``y`` (forward algorithm)."""
    probs = np.asarray(P.probs, dtype=np.float64)
    T = probs.shape[0]
    if T < min_frames(y):
        raise AlignmentError(f"{T} frames cannot carry {y!r}")
    with np.errstate(divide="ignore"):
        logP = np.log(probs)
    blank = vocab.blank_index
    if not y:
        return float(logP[:, blank].sum())
    labels = np.full(2 * len(y) + 1, blank, dtype=np.int64)
    labels[1::2] = vocab.encode(y)
    S = len(labels)
    can_skip = np.zeros(S, dtype=bool)
    can_skip[3::2] = labels[3::2] != labels[1:-2:2]

    alpha = np.full(S, NEG_INF)
    alpha[0] = logP[0, labels[0]]
    alpha[1] = logP[0, labels[1]]
    for t in range(1, T):
        prev1 = np.concatenate(([NEG_INF], alpha[:-1]))
        prev2 = np.where(can_skip, np.concatenate(([NEG_INF, NEG_INF], alpha[:-2])), NEG_INF)
        alpha = np.logaddexp(np.logaddexp(alpha, prev1), prev2) + logP[t, labels]
    return float(np.logaddexp(alpha[-1], alpha[-2]))


class _LMScorer:
    """Word-boundary LM bonus ``alpha * logp + beta`` with per-prefix memo."""

    def __init__(self, lm: Optional[NGramLM], alpha: float, beta: float):
        self.lm = lm
        self.alpha = alpha
        self.beta = beta

    def word(self, ctx, word: str) -> Tuple[tuple, float]:
        if self.lm is None:
            return ctx, self.beta
        ctx, lp = self.lm.advance(ctx, word)
        return ctx, self.alpha * lp + self.beta

    def start(self):
        return self.lm.begin() if self.lm is not None else ()

    def doom_bonus(self) -> Optional[float]:
        """Bonus every out-of-vocabulary word receives, whatever its history."""
        if self.lm is None:
            return None
        return self.alpha * self.lm.log_floor + self.beta

    def end(self, ctx) -> float:
        if self.lm is None:
            return 0.0
        return self.alpha * self.lm.finish(ctx)


def beam_decode(
    P: FramePosteriors,
    lm: Optional[NGramLM],
    params: BeamParams = BeamParams(),
    vocab: Vocabulary = DEFAULT_VOCAB,
) -> List[Tuple[str, float]]:
    """CTC prefix beam search with word-level shallow LM fusion.

    Each prefix carries its blank- and non-blank-ending log masses.  When a
    space closes a word, ``alpha * log P_lm(word | history) + beta`` is added
    to the prefix; the last word and the end-of-sentence transition are
    scored at the end.  Returns up to ``nbest`` ``(transcript, score)`` pairs,
    best first, ties broken by transcript.
    """
    with np.errstate(divide="ignore"):
        logP = np.log(np.asarray(P.probs, dtype=np.float64))
    T, V = logP.shape
    blank = vocab.blank_index
    space = vocab.space_index
    symbols = vocab.symbols
    scorer = _LMScorer(lm, params.alpha, params.beta)
    width = params.width
    margin = params.prune_margin

    non_blank = np.array([i for i in range(V) if i != blank])
    if params.token_min_logp is None:
        cands = [non_blank] * T
    else:
        keep = logP[:, non_blank] >= params.token_min_logp
        cands = [non_blank[keep[t]] for t in range(T)]
    steps = []
    for row, cand in zip(logP.tolist(), cands):
        steps.append((row[blank], [(c, symbols[c], row[c]) for c in cand.tolist()]))
    doom = scorer.doom_bonus()

    # prefix -> [log p_blank, log p_nonblank]
    beams: Dict[str, List[float]] = {"": [0.0, NEG_INF]}
    # prefix -> (bonus of closed words, lm context, open word, ranking bonus).  An open
    # word that can no longer become in-vocabulary is charged its (certain) word bonus
    # early in the ranking bonus, so junk words cannot dodge pruning by staying open.
    info: Dict[str, tuple] = {"": (0.0, scorer.start(), "", 0.0)}

    for p_blank, cand in steps:
        nxt: Dict[str, List[float]] = {}
        for prefix, (pb, pnb) in beams.items():
            total = _lse(pb, pnb)
            # blank keeps the prefix
            slot = nxt.get(prefix)
            if slot is None:
                nxt[prefix] = [total + p_blank, NEG_INF]
            else:
                slot[0] = _lse(slot[0], total + p_blank)
            last = prefix[-1] if prefix else None
            for c, ch, lp in cand:
                if ch == last:
                    # repeat collapses unless separated by a blank
                    slot = nxt[prefix]
                    slot[1] = _lse(slot[1], pnb + lp)
                    mass = pb + lp
                else:
                    mass = total + lp
                if mass == NEG_INF:
                    continue
                ext = prefix + ch
                slot = nxt.get(ext)
                if slot is not None:
                    slot[1] = _lse(slot[1], mass)
                    continue
                nxt[ext] = [NEG_INF, mass]
                if ext in info:
                    continue
                bonus, ctx, word, rank = info[prefix]
                if c == space:
                    if word:
                        ctx, inc = scorer.word(ctx, word)
                        bonus += inc
                    info[ext] = (bonus, ctx, "", bonus)
                else:
                    word += ch
                    if rank == bonus and doom is not None and not scorer.lm.is_word_prefix(word):
                        rank = bonus + doom
                    info[ext] = (bonus, ctx, word, rank)

        if len(nxt) > width or margin is not None:
            scored = [(-(_lse(pb, pnb) + info[k][3]), k) for k, (pb, pnb) in nxt.items()]
            scored.sort()
            del scored[width:]
            if margin is not None:
                cut = scored[0][0] + margin
                scored = [x for x in scored if x[0] <= cut]
            beams = {k: nxt[k] for _, k in scored}
        else:
            beams = nxt

    final = []
    for prefix, (pb, pnb) in beams.items():
        bonus, ctx, word, _ = info[prefix]
        if word:
            ctx, inc = scorer.word(ctx, word)
            bonus += inc
        final.append((_lse(pb, pnb) + bonus + scorer.end(ctx), prefix))
    final.sort(key=lambda x: (-x[0], x[1]))
    return [(k, s) for s, k in final[: params.nbest]]


def local_confidences(
    P: FramePosteriors, transcript: str, vocab: Vocabulary = DEFAULT_VOCAB
) -> LocalHypothesis:
    """Word confidences from a forced alignment of ``transcript`` onto ``P``.

    Each word scores the geometric mean of the (smoothed) posteriors on the
    frames aligned to its letters.  Infeasible alignments give 0.5 per word.
    """
    words = transcript.split()
    if not words:
        return LocalHypothesis("", ())
    text = " ".join(words)
    try:
        A = viterbi_align(text, smooth(P), vocab)
    except AlignmentError:
        return LocalHypothesis(text, tuple(0.5 for _ in words))
    logP = smooth(P)
    word_of = []
    w = 0
    for ch in text:
        word_of.append(None if ch == " " else w)
        if ch == " ":
            w += 1
    sums = [0.0] * len(words)
    counts = [0] * len(words)
    for t, pos in enumerate(A.source_char_positions):
        if pos is None or word_of[pos] is None:
            continue
        k = word_of[pos]
        sums[k] += logP[t, A.states[t]]
        counts[k] += 1
    confs = tuple(
        min(1.0, max(0.0, math.exp(s / n))) if n else 0.5 for s, n in zip(sums, counts)
    )
    return LocalHypothesis(text, confs)
