"""End-to-end service-guided decoding: align, revise, beam-decode."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .align import AlignmentError, min_frames, smooth, viterbi_align
from .core import (
    DEFAULT_VOCAB,
    FrameAlignment,
    FramePosteriors,
    ServiceHypothesis,
    Vocabulary,
    normalize_text,
)
from .decode import BeamParams, beam_decode
from .lm import NGramLM
from .merge import MergeParams, revise


@dataclass(frozen=True)
class MergeResult:
    transcript: str
    score: float
    fallback: bool = False
    reason: str = ""
    alignment: Optional[FrameAlignment] = None
    revised: Optional[FramePosteriors] = None


def revise_with_service(
    P: FramePosteriors,
    svc: ServiceHypothesis,
    params: MergeParams,
    vocab: Vocabulary = DEFAULT_VOCAB,
    alignment: Optional[FrameAlignment] = None,
):
    """Return ``(revised P, alignment, fallback reason)``.

    The reason is empty on success; on fallback the original ``P`` comes
    back unchanged.  A precomputed ``alignment`` skips the Viterbi pass.
    """
    text = normalize_text(svc.transcript)
    if not text:
        return P, None, "empty service transcript"
    if P.T < min_frames(text):
        return P, None, f"{P.T} frames cannot carry {len(text)}-character service transcript"
    confs = svc.word_confidences
    if text != svc.transcript:
        confs = ServiceHypothesis.from_raw(svc.transcript, svc.word_confidences or None).word_confidences
    if alignment is None:
        try:
            alignment = viterbi_align(text, smooth(P), vocab)
        except AlignmentError as e:
            return P, None, str(e)
    return revise(P, alignment, text, confs, params, vocab), alignment, ""


def finemerge(
    P: FramePosteriors,
    svc: ServiceHypothesis,
    params: MergeParams,
    beam: BeamParams,
    lm: Optional[NGramLM],
    vocab: Vocabulary = DEFAULT_VOCAB,
    alignment: Optional[FrameAlignment] = None,
) -> MergeResult:
    """Decode ``P`` after revising it toward the service transcript.

    Falls back to plain local decoding (flagged in the result) when the
    service transcript is empty or too long to align.
    """
    revised, A, reason = revise_with_service(P, svc, params, vocab, alignment)
    best, score = beam_decode(revised, lm, beam, vocab)[0]
    return MergeResult(
        transcript=normalize_text(best),
        score=score,
        fallback=bool(reason),
        reason=reason,
        alignment=A,
        revised=revised if not reason else None,
    )


def local_decode(
    P: FramePosteriors, lm: Optional[NGramLM], beam: BeamParams, vocab: Vocabulary = DEFAULT_VOCAB
) -> str:
    return normalize_text(beam_decode(P, lm, beam, vocab)[0][0])
