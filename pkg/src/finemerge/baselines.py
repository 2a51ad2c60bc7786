"""Comparison combiners: two-system ROVER (word and character level) and N-best LM rescoring."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

from .lm import NGramLM, lm_logprob
from .metrics import DEL, INS, edit_distance

Hyp = Union[Tuple[str, Sequence[float]], object]


@dataclass(frozen=True)
class RoverParams:
    conf_null: float = 0.45
    prefer_on_tie: str = "service"

    def __post_init__(self):
        if not 0.0 <= self.conf_null <= 1.0:
            raise ValueError(f"conf_null must lie in [0, 1], got {self.conf_null}")
        if self.prefer_on_tie not in ("service", "local"):
            raise ValueError("prefer_on_tie must be 'service' or 'local'")


def _unpack(h: Hyp) -> Tuple[List[str], List[float]]:
    if isinstance(h, tuple):
        text, confs = h
    else:
        text, confs = h.transcript, h.word_confidences
    words = text.split()
    confs = list(confs) if confs else [1.0] * len(words)
    if len(confs) != len(words):
        raise ValueError(f"{len(words)} words but {len(confs)} confidences")
    return words, confs


def _vote(a_tokens, a_conf, b_tokens, b_conf, params: RoverParams) -> List[str]:
    _, ops = edit_distance(a_tokens, b_tokens)
    out = []
    i = j = 0
    a_wins_ties = params.prefer_on_tie == "service"
    for op in ops:
        if op == DEL:
            cand_a, ca = a_tokens[i], a_conf[i]
            cand_b, cb = None, params.conf_null
            i += 1
        elif op == INS:
            cand_a, ca = None, params.conf_null
            cand_b, cb = b_tokens[j], b_conf[j]
            j += 1
        else:
            cand_a, ca = a_tokens[i], a_conf[i]
            cand_b, cb = b_tokens[j], b_conf[j]
            i, j = i + 1, j + 1
        if cand_a == cand_b:
            win = cand_a
        elif ca > cb or (ca == cb and a_wins_ties):
            win = cand_a
        else:
            win = cand_b
        if win is not None:
            out.append(win)
    return out


def rover_words(service: Hyp, local: Hyp, params: RoverParams = RoverParams()) -> str:
    """Align the two word sequences by edit distance and keep the more confident word per slot.

    A word facing a gap competes with ``params.conf_null``; a winning gap
    emits nothing.
    """
    aw, ac = _unpack(service)
    bw, bc = _unpack(local)
    return " ".join(_vote(aw, ac, bw, bc, params))


def _char_stream(words: List[str], confs: List[float]) -> Tuple[List[str], List[float]]:
    chars, cc = [], []
    for k, (w, c) in enumerate(zip(words, confs)):
        chars.extend(w)
        cc.extend([c] * len(w))
        if k < len(words) - 1:
            chars.append(" ")
            cc.append(c)
    return chars, cc


def rover_chars(service: Hyp, local: Hyp, params: RoverParams = RoverParams()) -> str:
    """Character-level variant: spaces are tokens, each character carries its word's confidence."""
    a, ac = _char_stream(*_unpack(service))
    b, bc = _char_stream(*_unpack(local))
    return " ".join("".join(_vote(a, ac, b, bc, params)).split())


def rescore_nbest(svc, lm: NGramLM, lam: float = 1.0) -> str:
    """Pick the N-best entry maximizing ``lam * service_score + LM log score``.

    Ties go to the earlier entry in the service's ranking.
    """
    nbest = svc.nbest if svc.nbest is not None else None
    if not nbest:
        raise ValueError("service hypothesis carries no N-best list")
    best: Optional[Tuple[float, int, str]] = None
    for rank, (text, score) in enumerate(nbest):
        total = lam * score + lm_logprob(lm, text.split())
        if best is None or total > best[0]:
            best = (total, rank, text)
    return best[2]
