"""Shared domain types: the character vocabulary, posterior matrices and hypotheses."""

from __future__ import annotations

import re
import string
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

BLANK = "_"
SPACE = " "
APOSTROPHE = "'"

INPUT_ROW_TOL = 1e-4
# rows closer than this to 1 are left untouched so validation is idempotent
_RENORM_SKIP = 1e-12


class PosteriorError(ValueError):
    """Posterior matrix failed validation."""


class HypothesisError(ValueError):
    """Hypothesis transcript and confidences are inconsistent."""


@dataclass(frozen=True)
class Vocabulary:
    symbols: Tuple[str, ...]
    blank_index: int = 0

    def __post_init__(self):
        if not 0 <= self.blank_index < len(self.symbols):
            raise ValueError(f"blank_index {self.blank_index} out of range")
        if self.symbols[self.blank_index] != BLANK or self.symbols.count(BLANK) != 1:
            raise ValueError("blank must appear exactly once, at blank_index")
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError("duplicate symbols in vocabulary")
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(self.symbols)})

    def __len__(self) -> int:
        return len(self.symbols)

    def index(self, symbol: str) -> int:
        return self._index[symbol]

    def symbol(self, i: int) -> str:
        return self.symbols[i]

    def __contains__(self, symbol: str) -> bool:
        return symbol in self._index

    @property
    def space_index(self) -> int:
        """Index of the space symbol, or -1 if the vocabulary has none."""
        return self._index.get(SPACE, -1)

    def encode(self, text: str) -> List[int]:
        return [self._index[c] for c in text]

    def decode(self, ids: Sequence[int]) -> str:
        return "".join(self.symbols[i] for i in ids)

    def as_string(self) -> str:
        return "".join(self.symbols)

    @classmethod
    def from_string(cls, s: str) -> "Vocabulary":
        return cls(tuple(s), s.index(BLANK))


#: blank, a-z, apostrophe, space; blank at index 0
DEFAULT_VOCAB = Vocabulary((BLANK,) + tuple(string.ascii_lowercase) + (APOSTROPHE, SPACE), 0)

_TEXT_CHARS = set(string.ascii_lowercase) | {APOSTROPHE}
_WS = re.compile(r"\s+")


def normalize_text(raw: str) -> str:
    """Lowercase, drop out-of-vocabulary characters and collapse whitespace."""
    lowered = _WS.sub(" ", raw.lower())
    kept = "".join(c for c in lowered if c in _TEXT_CHARS or c == " ")
    return " ".join(kept.split())


@dataclass(frozen=True)
class FramePosteriors:
    utterance_id: str
    probs: np.ndarray  # (T, V) float64

    @property
    def T(self) -> int:
        return self.probs.shape[0]

    @property
    def V(self) -> int:
        return self.probs.shape[1]

    def __eq__(self, other):
        if not isinstance(other, FramePosteriors):
            return NotImplemented
        return (
            self.utterance_id == other.utterance_id
            and self.probs.shape == other.probs.shape
            and bool(np.array_equal(self.probs, other.probs))
        )

    __hash__ = None


def validate_posteriors(P: FramePosteriors, vocab: Vocabulary = DEFAULT_VOCAB) -> FramePosteriors:
    """Check shape, sign and row sums of ``P``; return it with rows renormalized.

    Rows must already sum to 1 within ``1e-4``.  The result is read-only and
    applying the function again returns bitwise-identical values.
    """
    probs = np.asarray(P.probs, dtype=np.float64)
    if probs.ndim != 2:
        raise PosteriorError(f"posteriors must be 2-D, got shape {probs.shape}")
    if probs.shape[1] != len(vocab):
        raise PosteriorError(
            f"posterior width {probs.shape[1]} does not match vocabulary size {len(vocab)}"
        )
    if not np.all(np.isfinite(probs)):
        raise PosteriorError("posteriors contain non-finite entries")
    if np.any(probs < 0):
        raise PosteriorError("posteriors contain negative entries")
    sums = probs.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > INPUT_ROW_TOL)
    if bad.size:
        t = int(bad[0])
        raise PosteriorError(f"row {t} sums to {sums[t]!r}, outside 1 +/- {INPUT_ROW_TOL}")
    out = probs.copy()
    fix = np.abs(sums - 1.0) > _RENORM_SKIP
    if np.any(fix):
        out[fix] /= sums[fix, None]
    out.setflags(write=False)
    return FramePosteriors(P.utterance_id, out)


def _check_confidences(transcript: str, confs: Optional[Sequence[float]]) -> Tuple[float, ...]:
    words = transcript.split(" ") if transcript else []
    if transcript and (transcript != transcript.strip() or "  " in transcript):
        raise HypothesisError(f"transcript has stray whitespace: {transcript!r}")
    if confs is None:
        return tuple(1.0 for _ in words)
    confs = tuple(float(c) for c in confs)
    if len(confs) != len(words):
        raise HypothesisError(
            f"{len(words)} words but {len(confs)} confidences in {transcript!r}"
        )
    for c in confs:
        if not 0.0 <= c <= 1.0:
            raise HypothesisError(f"confidence {c} outside [0, 1]")
    return confs


@dataclass(frozen=True)
class ServiceHypothesis:
    """Black-box service output: transcript, per-word confidences, optional N-best."""

    transcript: str
    word_confidences: Tuple[float, ...] = ()
    nbest: Optional[Tuple[Tuple[str, float], ...]] = None

    def __post_init__(self):
        confs = self.word_confidences if self.word_confidences or not self.transcript else None
        object.__setattr__(self, "word_confidences", _check_confidences(self.transcript, confs))
        if self.nbest is not None:
            object.__setattr__(
                self, "nbest", tuple((str(t), float(s)) for t, s in self.nbest)
            )

    @property
    def words(self) -> List[str]:
        return self.transcript.split()

    @classmethod
    def from_raw(cls, raw: str, confidences=None, nbest=None) -> "ServiceHypothesis":
        """Build from an unnormalized service transcript.

        Confidences are kept per surviving word; words that normalize away
        entirely lose their confidence.
        """
        kept_words, kept_confs = [], []
        raw_words = raw.split()
        if confidences is not None and len(confidences) != len(raw_words):
            raise HypothesisError("confidence count does not match raw word count")
        for i, w in enumerate(raw_words):
            nw = normalize_text(w)
            if not nw:
                continue
            for piece in nw.split():
                kept_words.append(piece)
                kept_confs.append(1.0 if confidences is None else float(confidences[i]))
        if nbest is not None:
            nbest = tuple((normalize_text(t), float(s)) for t, s in nbest)
        return cls(" ".join(kept_words), tuple(kept_confs), nbest)


@dataclass(frozen=True)
class LocalHypothesis:
    transcript: str
    word_confidences: Tuple[float, ...] = ()

    def __post_init__(self):
        confs = self.word_confidences if self.word_confidences or not self.transcript else None
        object.__setattr__(self, "word_confidences", _check_confidences(self.transcript, confs))

    @property
    def words(self) -> List[str]:
        return self.transcript.split()


@dataclass(frozen=True)
class FrameAlignment:
    """Best frame-level expansion of a transcript.

    ``source_char_positions[t]`` is the index into the transcript of the
    character emitted at frame ``t``, or ``None`` for blank frames.
    """

    states: Tuple[int, ...]
    log_prob: float
    source_char_positions: Tuple[Optional[int], ...] = field(default=())

    def __len__(self) -> int:
        return len(self.states)
