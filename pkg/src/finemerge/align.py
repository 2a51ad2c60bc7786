"""CTC-style Viterbi forced alignment of a transcript onto frame posteriors."""

from __future__ import annotations

from typing import List, Optional, Tuple

import numpy as np

from .core import DEFAULT_VOCAB, FrameAlignment, FramePosteriors, Vocabulary

NEG_INF = -np.inf


class AlignmentError(ValueError):
    """The transcript cannot be expanded over the available frames."""


def smooth(P: FramePosteriors, eps: float = 1e-20) -> np.ndarray:
    """Return ``log(P + eps)`` so that unheard characters stay reachable."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    return np.log(np.asarray(P.probs, dtype=np.float64) + eps)


def min_frames(s: str) -> int:
    """Fewest frames that can carry ``s``: one per label plus a blank between repeats."""
    return len(s) + sum(1 for a, b in zip(s, s[1:]) if a == b)


def augmented_labels(label_ids: List[int], blank: int) -> Tuple[np.ndarray, List[Optional[int]]]:
    """Blank-interleaved label states and the transcript position behind each."""
    n = 2 * len(label_ids) + 1
    states = np.full(n, blank, dtype=np.int64)
    states[1::2] = label_ids
    sources: List[Optional[int]] = [None] * n
    for i in range(len(label_ids)):
        sources[2 * i + 1] = i
    return states, sources


def viterbi_align(
    s: str, logP: np.ndarray, vocab: Vocabulary = DEFAULT_VOCAB
) -> FrameAlignment:
    """Highest-scoring length-T expansion of ``s`` under CTC transition rules.

    ``logP`` is a (T, V) log-posterior matrix, normally ``smooth(P)``.
    Ties between predecessors go to the lowest state index, which keeps the
    path in earlier states as long as possible; the final-state tie between
    the last label and the trailing blank goes to the label.
    """
    if not s:
        raise AlignmentError("cannot align an empty transcript")
    logP = np.asarray(logP, dtype=np.float64)
    T = logP.shape[0]
    need = min_frames(s)
    if T < need:
        raise AlignmentError(f"{T} frames cannot carry {s!r} (needs {need})")

    labels, sources = augmented_labels(vocab.encode(s), vocab.blank_index)
    S = len(labels)
    emit = logP[:, labels]  # (T, S)

    # skip over a blank allowed only into a label that differs from the label two back
    can_skip = np.zeros(S, dtype=bool)
    can_skip[3::2] = labels[3::2] != labels[1:-2:2]

    score = np.full(S, NEG_INF)
    score[0] = emit[0, 0]
    score[1] = emit[0, 1]
    back = np.zeros((T, S), dtype=np.int8)  # 0 stay, 1 from s-1, 2 from s-2

    for t in range(1, T):
        stay = score
        prev1 = np.concatenate(([NEG_INF], score[:-1]))
        prev2 = np.concatenate(([NEG_INF, NEG_INF], score[:-2]))
        prev2 = np.where(can_skip, prev2, NEG_INF)
        # lowest predecessor index first, strict > keeps earlier choice on ties
        best = prev2
        choice = np.full(S, 2, dtype=np.int8)
        upd = prev1 > best
        best = np.where(upd, prev1, best)
        choice[upd] = 1
        upd = stay > best
        best = np.where(upd, stay, best)
        choice[upd] = 0
        back[t] = choice
        score = best + emit[t]

    state = S - 2 if score[S - 2] >= score[S - 1] else S - 1
    log_prob = float(score[state])
    if log_prob == NEG_INF:
        raise AlignmentError(f"no finite-probability path for {s!r}; smooth the posteriors first")
    path = [0] * T
    for t in range(T - 1, -1, -1):
        path[t] = state
        state -= int(back[t, state])
    states = tuple(int(labels[k]) for k in path)
    positions = tuple(sources[k] for k in path)
    return FrameAlignment(states, log_prob, positions)


def alignment_log_prob(states, logP: np.ndarray) -> float:
    """Sum of per-frame log posteriors along a state path."""
    logP = np.asarray(logP)
    return float(logP[np.arange(len(states)), list(states)].sum())
