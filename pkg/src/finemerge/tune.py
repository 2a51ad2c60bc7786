"""Validation-set grid search for decoder, merge and baseline parameters.

Tuning runs in two stages: the LM weight and word bonus are picked on
local-only decoding, then (psi, omega, gamma) are picked for the merged
decoder with those frozen.  ROVER's null confidence and the rescoring
weight are tuned separately.  Every grid point is evaluated exhaustively;
ties go to the first point in grid order.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

from .align import AlignmentError, min_frames, smooth, viterbi_align
from .baselines import RoverParams, rescore_nbest, rover_words
from .core import DEFAULT_VOCAB, Vocabulary, normalize_text
from .decode import BeamParams, beam_decode, local_confidences
from .lm import NGramLM
from .merge import MergeParams
from .metrics import wer
from .pipeline import revise_with_service

# pruned search used by the benchmark; the exact default (width 100, no pruning) is far slower
SEARCH_BEAM = BeamParams(width=8, alpha=1.0, beta=0.0, token_min_logp=-4.0, prune_margin=6.0)


@dataclass(frozen=True)
class TuneGrids:
    psi: Tuple[float, ...] = (1e-4, 1e-3, 1e-2, 0.05, 0.1)
    omega: Tuple[float, ...] = (0.1, 0.3, 0.5, 0.7, 0.9)
    gamma: Tuple[float, ...] = (0.05, 0.1, 0.2, 0.4)
    alpha: Tuple[float, ...] = (0.5, 1.0, 1.5, 2.0)
    beta: Tuple[float, ...] = (0.0, 0.5, 1.0, 1.5)
    conf_null: Tuple[float, ...] = (0.3, 0.45, 0.6)
    lam: Tuple[float, ...] = (0.5, 1.0, 2.0, 4.0)

    def __post_init__(self):
        for name, values in asdict(self).items():
            if not values:
                raise ValueError(f"grid for {name} is empty")

    @classmethod
    def from_dict(cls, d: dict) -> "TuneGrids":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown grid names: {sorted(unknown)}")
        return cls(**{k: tuple(float(x) for x in v) for k, v in d.items()})


@dataclass(frozen=True)
class TunedParams:
    merge: MergeParams = MergeParams()
    beam: BeamParams = SEARCH_BEAM
    rover: RoverParams = RoverParams()
    rescore_lambda: float = 1.0

    def to_dict(self) -> dict:
        return {
            "merge": asdict(self.merge),
            "beam": asdict(self.beam),
            "rover": asdict(self.rover),
            "rescore": {"lambda": self.rescore_lambda},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TunedParams":
        return cls(
            merge=MergeParams(**d.get("merge", {})),
            beam=BeamParams(**d.get("beam", asdict(SEARCH_BEAM))),
            rover=RoverParams(**d.get("rover", {})),
            rescore_lambda=float(d.get("rescore", {}).get("lambda", 1.0)),
        )


@dataclass
class TuneResult:
    params: TunedParams
    objective: float  # merged-decoder WER at the chosen point
    local_wer: float
    service_wer: float
    trace: List[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "objective": self.objective,
            "local_wer": self.local_wer,
            "service_wer": self.service_wer,
            "trace": self.trace,
        }


# --- per-utterance work (runs in worker processes) ----------------------------


def _align_or_none(P, svc, vocab):
    text = normalize_text(svc.transcript)
    if not text or P.T < min_frames(text):
        return None
    try:
        return viterbi_align(text, smooth(P), vocab)
    except AlignmentError:
        return None


def _local_chunk(args) -> List[List[str]]:
    items, lm, beams, vocab = args
    # out[k][i]: hypothesis of utterance i at grid point k
    out = [[] for _ in beams]
    for it in items:
        for k, bp in enumerate(beams):
            out[k].append(normalize_text(beam_decode(it.posteriors, lm, bp, vocab)[0][0]))
    return out


def _merge_chunk(args) -> List[List[str]]:
    items, lm, beam, merges, vocab = args
    out = [[] for _ in merges]
    for it in items:
        P = it.posteriors
        A = _align_or_none(P, it.service, vocab)
        memo: Dict[bytes, str] = {}
        for k, mp in enumerate(merges):
            revised, _, _ = revise_with_service(P, it.service, mp, vocab, A) if A is not None else (P, None, "")
            key = revised.probs.tobytes()
            hyp = memo.get(key)
            if hyp is None:
                hyp = memo[key] = normalize_text(beam_decode(revised, lm, beam, vocab)[0][0])
            out[k].append(hyp)
    return out


def _chunks(items: Sequence, jobs: int) -> List[Sequence]:
    n = max(1, min(jobs, len(items)))
    size = -(-len(items) // n)
    return [items[i:i + size] for i in range(0, len(items), size)]


def _run(fn, items: Sequence, payload: tuple, n_points: int, jobs: int) -> List[List[str]]:
    """Evaluate every grid point on every item; results are in item order regardless of ``jobs``."""
    parts = [(chunk,) + payload for chunk in _chunks(items, jobs)]
    if jobs > 1 and len(parts) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(fn, parts))
    else:
        results = [fn(p) for p in parts]
    return [[h for res in results for h in res[k]] for k in range(n_points)]


def _argmin(scores: Sequence[float]) -> int:
    best = 0
    for i, s in enumerate(scores):
        if s < scores[best]:
            best = i
    return best


def grid_search(
    val: Sequence,
    lm: Optional[NGramLM],
    grids: TuneGrids = TuneGrids(),
    base_beam: BeamParams = SEARCH_BEAM,
    jobs: int = 1,
    vocab: Vocabulary = DEFAULT_VOCAB,
) -> TuneResult:
    """Tune on utterances carrying ``reference``, ``posteriors`` and ``service``.

    Returns the chosen parameters, the merged-decoder WER they achieve and
    one trace row per evaluated grid point.
    """
    val = list(val)
    if not val:
        raise ValueError("validation set is empty")
    refs = [it.reference for it in val]
    trace: List[dict] = []

    # stage 1: LM weight and word bonus on local-only decoding
    ab = list(itertools.product(grids.alpha, grids.beta))
    beams = [replace(base_beam, alpha=a, beta=b) for a, b in ab]
    local_hyps = _run(_local_chunk, val, (lm, beams, vocab), len(beams), jobs)
    local_scores = [wer(refs, h) for h in local_hyps]
    for (a, b), s in zip(ab, local_scores):
        trace.append({"stage": "local", "alpha": a, "beta": b, "wer": s})
    k = _argmin(local_scores)
    beam = beams[k]
    best_local = local_hyps[k]

    # stage 2: merge parameters with the decoder frozen
    pts = list(itertools.product(grids.psi, grids.omega, grids.gamma))
    merges = [MergeParams(psi=p, omega=o, gamma=g) for p, o, g in pts]
    merge_hyps = _run(_merge_chunk, val, (lm, beam, merges, vocab), len(merges), jobs)
    merge_scores = [wer(refs, h) for h in merge_hyps]
    for (p, o, g), s in zip(pts, merge_scores):
        trace.append({"stage": "merge", "psi": p, "omega": o, "gamma": g, "wer": s})
    m = _argmin(merge_scores)

    # ROVER null confidence, using the tuned local decoder's output
    local_h = [local_confidences(it.posteriors, h, vocab) for it, h in zip(val, best_local)]
    rover_scores = []
    for c in grids.conf_null:
        rp = RoverParams(conf_null=c)
        s = wer(refs, [rover_words(it.service, lh, rp) for it, lh in zip(val, local_h)])
        rover_scores.append(s)
        trace.append({"stage": "rover", "conf_null": c, "wer": s})
    r = _argmin(rover_scores)

    # N-best rescoring weight (only when the service supplied alternatives)
    lam = 1.0
    if lm is not None and all(it.service.nbest for it in val):
        lam_scores = []
        for x in grids.lam:
            s = wer(refs, [rescore_nbest(it.service, lm, x) for it in val])
            lam_scores.append(s)
            trace.append({"stage": "rescore", "lambda": x, "wer": s})
        lam = grids.lam[_argmin(lam_scores)]

    params = TunedParams(
        merge=merges[m], beam=beam, rover=RoverParams(conf_null=grids.conf_null[r]), rescore_lambda=lam
    )
    return TuneResult(
        params=params,
        objective=merge_scores[m],
        local_wer=local_scores[k],
        service_wer=wer(refs, [normalize_text(it.service.transcript) for it in val]),
        trace=trace,
    )
