"""Selective revision of frame posteriors toward aligned service characters."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .core import DEFAULT_VOCAB, FrameAlignment, FramePosteriors, Vocabulary


@dataclass(frozen=True)
class MergeParams:
    """Gate threshold ``psi``, service weight ``omega`` and blank weight ``gamma``."""

    psi: float = 0.01
    omega: float = 0.5
    gamma: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.psi:
            raise ValueError(f"psi must be positive, got {self.psi}")
        if not 0.0 <= self.omega <= 1.0:
            raise ValueError(f"omega must lie in [0, 1], got {self.omega}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")


def word_index_map(s: str) -> List[int]:
    """Word index of every character of ``s``; a space belongs to the word before it."""
    out = []
    w = 0
    for i, c in enumerate(s):
        if c == " " and i > 0 and s[i - 1] != " ":
            out.append(w)
            w += 1
        elif c == " ":
            out.append(max(w - 1, 0))
        else:
            out.append(w)
    return out


def frame_weights(
    A: FrameAlignment,
    s: str,
    confidences: Optional[Sequence[float]],
    params: MergeParams,
    blank: int = 0,
) -> np.ndarray:
    """Per-frame mixing weight: ``gamma`` on blank frames, else ``omega`` times word confidence."""
    words = word_index_map(s)
    n_words = (words[-1] + 1) if words else 0
    confs = [1.0] * n_words if confidences is None or len(confidences) == 0 else list(confidences)
    if len(confs) != n_words:
        raise ValueError(f"{n_words} words but {len(confs)} confidences")
    w = np.empty(len(A.states))
    for t, (state, pos) in enumerate(zip(A.states, A.source_char_positions)):
        if state == blank or pos is None:
            w[t] = params.gamma
        else:
            w[t] = params.omega * confs[words[pos]]
    return w


def revise(
    P: FramePosteriors,
    A: FrameAlignment,
    s: str,
    confidences: Optional[Sequence[float]],
    params: MergeParams,
    vocab: Vocabulary = DEFAULT_VOCAB,
) -> FramePosteriors:
    """Boost each frame's aligned service character where the local model half-hears it.

    A frame ``t`` is revised only when ``psi < P_t[S_t] < max_c P_t[c]``; the
    row then becomes ``(1 - w_t) P_t + w_t onehot(S_t)``.  Rows failing the
    gate are copied unchanged.  ``P`` must be the unsmoothed matrix.
    """
    probs = np.asarray(P.probs, dtype=np.float64)
    T = probs.shape[0]
    if len(A.states) != T:
        raise ValueError(f"alignment has {len(A.states)} frames, posteriors have {T}")
    states = np.asarray(A.states, dtype=np.int64)
    rows = np.arange(T)
    aligned = probs[rows, states]
    gate = (aligned > params.psi) & (aligned < probs.max(axis=1))
    out = probs.copy()
    if np.any(gate):
        w = frame_weights(A, s, confidences, params, vocab.blank_index)[gate]
        g_rows = rows[gate]
        mixed = (1.0 - w)[:, None] * probs[g_rows]
        mixed[np.arange(len(g_rows)), states[gate]] += w
        out[g_rows] = mixed
    out.setflags(write=False)
    return FramePosteriors(P.utterance_id, out)
