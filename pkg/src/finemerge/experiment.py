"""End-to-end synthetic benchmark: generate, train the LM, tune on val, score the test split."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

from .baselines import rescore_nbest, rover_chars, rover_words
from .core import DEFAULT_VOCAB, Vocabulary, normalize_text
from .decode import BeamParams, greedy_decode, local_confidences
from .lm import NGramLM, train_trigram
from .metrics import cer, wer
from .pipeline import finemerge, local_decode
from .synth import SynthConfig, gen_dataset
from .tune import SEARCH_BEAM, TunedParams, TuneGrids, _chunks, grid_search

METHODS = ("local", "service", "rover", "rescore", "finemerge")


@dataclass
class TestOutputs:
    """Per-utterance outputs of every method, plus the pre-LM greedy strings used for CER."""

    ids: List[str] = field(default_factory=list)
    refs: List[str] = field(default_factory=list)
    hyps: Dict[str, List[str]] = field(default_factory=lambda: {m: [] for m in METHODS})
    greedy_local: List[str] = field(default_factory=list)
    greedy_revised: List[str] = field(default_factory=list)
    rover_chars: List[str] = field(default_factory=list)

    def extend(self, other: "TestOutputs") -> None:
        self.ids += other.ids
        self.refs += other.refs
        for m in METHODS:
            self.hyps[m] += other.hyps[m]
        self.greedy_local += other.greedy_local
        self.greedy_revised += other.greedy_revised
        self.rover_chars += other.rover_chars


def evaluate_utterances(items: Sequence, lm: Optional[NGramLM], params: TunedParams,
                        vocab: Vocabulary = DEFAULT_VOCAB) -> TestOutputs:
    out = TestOutputs()
    for it in items:
        P, svc = it.posteriors, it.service
        out.ids.append(it.id)
        out.refs.append(it.reference)
        loc = local_decode(P, lm, params.beam, vocab)
        lh = local_confidences(P, loc, vocab)
        res = finemerge(P, svc, params.merge, params.beam, lm, vocab)
        out.hyps["local"].append(loc)
        out.hyps["service"].append(normalize_text(svc.transcript))
        out.hyps["rover"].append(rover_words(svc, lh, params.rover))
        out.hyps["rescore"].append(rescore_nbest(svc, lm, params.rescore_lambda) if svc.nbest and lm else
                                   normalize_text(svc.transcript))
        out.hyps["finemerge"].append(res.transcript)
        g = normalize_text(greedy_decode(P, vocab))
        out.greedy_local.append(g)
        out.greedy_revised.append(normalize_text(greedy_decode(res.revised, vocab)) if res.revised is not None else g)
        out.rover_chars.append(rover_chars(svc, lh, params.rover))
    return out


def _eval_chunk(args) -> TestOutputs:
    return evaluate_utterances(*args)


def evaluate_test(items: Sequence, lm, params: TunedParams, jobs: int = 1,
                  vocab: Vocabulary = DEFAULT_VOCAB) -> TestOutputs:
    parts = [(chunk, lm, params, vocab) for chunk in _chunks(list(items), jobs)]
    if jobs > 1 and len(parts) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_eval_chunk, parts))
    else:
        results = [_eval_chunk(p) for p in parts]
    out = TestOutputs()
    for r in results:
        out.extend(r)
    return out


def score_outputs(out: TestOutputs) -> dict:
    refs = out.refs
    table = {m: {"wer": wer(refs, out.hyps[m]), "cer": cer(refs, out.hyps[m])} for m in METHODS}
    pre_lm = {
        "local_greedy": cer(refs, out.greedy_local),
        "service": table["service"]["cer"],
        "rover_chars": cer(refs, out.rover_chars),
        "finemerge_greedy": cer(refs, out.greedy_revised),
    }
    return {"wer_cer": table, "pre_lm_cer": pre_lm}


def run_benchmark(
    cfg: SynthConfig = SynthConfig(),
    n: int = 20000,
    jobs: int = 1,
    grids: TuneGrids = TuneGrids(),
    base_beam: BeamParams = SEARCH_BEAM,
    n_test: Optional[int] = 2000,
    n_val: Optional[int] = None,
    log=None,
) -> dict:
    """Full pipeline on a synthetic corpus of ``n`` sentences; returns a JSON-ready report."""
    say = log or (lambda msg: None)
    timings = {}
    t0 = time.perf_counter()
    ds = gen_dataset(cfg, n)
    timings["synth"] = time.perf_counter() - t0
    say(f"synth: {len(ds.train)} train / {len(ds.val)} val / {len(ds.test)} test")

    t0 = time.perf_counter()
    lm = train_trigram(u.reference for u in ds.train)
    timings["lm"] = time.perf_counter() - t0

    val = ds.val[:n_val] if n_val else ds.val
    t0 = time.perf_counter()
    tuned = grid_search(val, lm, grids, base_beam, jobs=jobs)
    timings["tune"] = time.perf_counter() - t0
    say(f"tune: merged WER {tuned.objective:.4f} (local {tuned.local_wer:.4f}, service {tuned.service_wer:.4f})")

    test = ds.test[:n_test] if n_test else ds.test
    t0 = time.perf_counter()
    out = evaluate_test(test, lm, tuned.params, jobs=jobs)
    timings["test"] = time.perf_counter() - t0
    scores = score_outputs(out)
    timings["total"] = sum(timings.values())
    return {
        "seed": cfg.seed,
        "n": n,
        "sizes": {"train": len(ds.train), "val": len(val), "test": len(test)},
        "tuned": tuned.to_dict(),
        "test": scores,
        "timings": timings,
    }
