"""Command-line interface.

Exit status is 0 on success, 1 when the input is unusable (missing or
malformed files, bad parameters) and 2 on an internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from pathlib import Path
from typing import Dict, List, Optional

from . import io as fio
from .align import AlignmentError, smooth, viterbi_align
from .baselines import RoverParams, rescore_nbest, rover_chars, rover_words
from .core import DEFAULT_VOCAB, HypothesisError, PosteriorError, normalize_text, validate_posteriors
from .decode import beam_decode, greedy_decode, local_confidences
from .lm import LMFormatError, read_corpus, read_lm, save_lm, train_trigram
from .metrics import aligned_diff, cer, per_word_error_reduction, wer
from .pipeline import finemerge
from .synth import SynthConfig, SynthConfigError, gen_dataset
from .tune import TunedParams, TuneGrids, grid_search

DEFAULT_SEED = 7


class InputError(Exception):
    """Raised for user-facing input problems (exit status 1)."""


INPUT_ERRORS = (
    InputError,
    fio.FormatError,
    LMFormatError,
    PosteriorError,
    HypothesisError,
    SynthConfigError,
    AlignmentError,
    OSError,
    json.JSONDecodeError,
    ValueError,  # parameter validation in the dataclasses
)


# --- shared loading helpers ------------------------------------------------------


def _params(args) -> TunedParams:
    return fio.read_params(args.params) if args.params else TunedParams()


def _lm(args, required: bool = False):
    if args.lm:
        return read_lm(args.lm)
    if required:
        raise InputError("this command needs --lm")
    return None


def _posteriors(path) -> list:
    return [validate_posteriors(P) for P in fio.read_posteriors(path)]


def _hyps(path) -> Dict[str, object]:
    res = fio.read_hypotheses(path)
    if not res.ok:
        for e in res.errors:
            print(f"{path}:{e.line}: {e.message}", file=sys.stderr)
        raise InputError(f"{path}: {len(res.errors)} malformed line(s)")
    return res.as_dict()


def _paired(posts: list, hyps: Dict[str, object], what: str):
    for P in posts:
        if P.utterance_id not in hyps:
            raise InputError(f"no {what} for utterance {P.utterance_id!r}")
        yield P, hyps[P.utterance_id]


# --- subcommands -------------------------------------------------------------------


def cmd_align(args) -> None:
    hyps = _hyps(args.hyps)
    rows = []
    for P, svc in _paired(_posteriors(args.posteriors), hyps, "service hypothesis"):
        text = normalize_text(svc.transcript)
        logP = smooth(P)
        A = viterbi_align(text, logP, DEFAULT_VOCAB)
        probs = [float(P.probs[t, s]) for t, s in enumerate(A.states)]
        rows.append({
            "id": P.utterance_id,
            "states": "".join(DEFAULT_VOCAB.symbol(s) for s in A.states),
            "log_prob": A.log_prob,
            "probs": probs,
        })
    fio.write_jsonl(args.out, rows)


def cmd_decode(args) -> None:
    params = _params(args)
    lm = _lm(args)
    items = []
    for P in _posteriors(args.posteriors):
        if args.beam:
            text = normalize_text(beam_decode(P, lm, params.beam)[0][0])
        else:
            text = normalize_text(greedy_decode(P))
        items.append((P.utterance_id, local_confidences(P, text)))
    fio.write_hypotheses(args.out, items)


def cmd_merge(args) -> None:
    params = _params(args)
    lm = _lm(args)
    items = []
    for P, svc in _paired(_posteriors(args.posteriors), _hyps(args.hyps), "service hypothesis"):
        res = finemerge(P, svc, params.merge, params.beam, lm)
        if res.fallback:
            print(f"{P.utterance_id}: fell back to local decoding ({res.reason})", file=sys.stderr)
        # same line format as `decode`, confidences measured on the unrevised posteriors
        items.append((P.utterance_id, local_confidences(P, res.transcript)))
    fio.write_hypotheses(args.out, items)


def cmd_rover(args) -> None:
    params = _params(args)
    rp = params.rover if args.conf_null is None else RoverParams(args.conf_null, params.rover.prefer_on_tie)
    svc = _hyps(args.hyps)
    local = _hyps(args.local)
    combine = rover_words if args.mode == "word" else rover_chars
    items = []
    for uid, s in svc.items():
        if uid not in local:
            raise InputError(f"no local hypothesis for utterance {uid!r}")
        items.append((uid, combine(s, local[uid], rp)))
    fio.write_transcripts(args.out, items)


def cmd_rescore(args) -> None:
    params = _params(args)
    lm = _lm(args, required=True)
    lam = params.rescore_lambda if args.lam is None else args.lam
    items = []
    for uid, svc in _hyps(args.hyps).items():
        if not svc.nbest:
            raise InputError(f"utterance {uid!r} has no N-best list")
        items.append((uid, rescore_nbest(svc, lm, lam)))
    fio.write_transcripts(args.out, items)


def cmd_eval(args) -> None:
    res = fio.read_references(args.refs)
    if not res.ok:
        e = res.errors[0]
        raise InputError(f"{args.refs}:{e.line}: {e.message}")
    refs = {k: normalize_text(v) for k, v in res.records}
    systems = {}
    for spec in args.hyp:
        name, sep, path = spec.partition("=")
        if not sep:
            name, path = Path(spec).stem, spec
        hyps = _hyps(path)
        missing = [k for k in refs if k not in hyps]
        if missing:
            raise InputError(f"{path}: missing hypotheses for {len(missing)} utterance(s), e.g. {missing[0]!r}")
        systems[name] = [normalize_text(hyps[k].transcript) for k in refs]
    ids = list(refs)
    ref_list = [refs[k] for k in ids]
    report = {"n_utterances": len(ids), "systems": {}}
    for name, hyps in systems.items():
        report["systems"][name] = {"wer": wer(ref_list, hyps), "cer": cer(ref_list, hyps)}
    names = list(systems)
    if len(names) >= 2:
        a, b = names[0], names[1]
        rows = per_word_error_reduction(ref_list, systems[a], systems[b], min_count=args.min_count)
        report["per_word"] = {
            "baseline": a,
            "system": b,
            "rows": [
                {"word": r.word, "count": r.count, "errors_baseline": r.err_a, "errors_system": r.err_b,
                 "reduction": r.reduction}
                for r in rows[: args.top]
            ],
        }
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    if args.diff:
        with open(args.diff, "w", encoding="utf-8") as f:
            for name, hyps in systems.items():
                for uid, r, h in zip(ids, ref_list, hyps):
                    if r == h:
                        continue
                    ra, ha, marks = aligned_diff(r, h)
                    f.write(f"{name} {uid}\n  REF: {ra}\n  HYP: {ha}\n       {marks}\n")


def cmd_tune(args) -> None:
    lm = _lm(args)
    grids = TuneGrids()
    if args.grids:
        grids = TuneGrids.from_dict(json.loads(Path(args.grids).read_text()))
    base = _params(args).beam
    val = fio.read_split(args.data, args.split)
    if not val or val[0].posteriors is None:
        raise InputError(f"split {args.split!r} of {args.data} has no posteriors")
    result = grid_search(val, lm, grids, base, jobs=args.jobs)
    fio.write_params(args.out, result.params)
    if args.trace:
        Path(args.trace).write_text(json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n")
    print(f"merged WER {result.objective:.4f}  local WER {result.local_wer:.4f}  "
          f"service WER {result.service_wer:.4f}")


def cmd_synth(args) -> None:
    cfg = SynthConfig()
    if args.config:
        cfg = SynthConfig.from_dict(json.loads(Path(args.config).read_text()))
    cfg.seed = args.seed
    cfg.validate()
    ds = gen_dataset(cfg, args.n)
    fio.write_dataset(args.out, ds, fmt=args.format)
    print(f"wrote {sum(len(v) for v in ds.splits.values())} utterances to {args.out}")


def cmd_lm_train(args) -> None:
    corpus = [normalize_text(s) for s in read_corpus(args.corpus)]
    lm = train_trigram(s for s in corpus if s)
    save_lm(lm, args.out)
    print(f"trained on {lm.n_sentences} sentences, {len(lm.vocabulary)} word types")


def cmd_bench(args) -> None:
    from .experiment import run_benchmark

    cfg = SynthConfig(seed=args.seed)
    report = run_benchmark(cfg, n=args.n, jobs=args.jobs, n_test=args.n_test,
                           log=lambda m: print(m, file=sys.stderr))
    if not args.trace:
        report["tuned"].pop("trace")
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)


# --- argument parsing ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--params", help="parameter file written by `tune`")
    common.add_argument("--lm", help="language model file written by `lm-train`")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help="random seed (default %(default)s)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes (default %(default)s)")
    common.add_argument("--format", choices=("binary", "json"), default="binary",
                        help="posterior file format to write (default %(default)s)")

    p = argparse.ArgumentParser(prog="finemerge", description="Service-guided CTC decoding toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help):
        sp = sub.add_parser(name, parents=[common], help=help)
        sp.set_defaults(func=fn)
        return sp

    sp = add("align", cmd_align, "force-align service transcripts onto posteriors")
    sp.add_argument("--posteriors", required=True)
    sp.add_argument("--hyps", required=True, help="service hypotheses (JSON lines)")
    sp.add_argument("--out", required=True)

    sp = add("decode", cmd_decode, "decode posteriors locally (greedy or beam)")
    sp.add_argument("--posteriors", required=True)
    sp.add_argument("--beam", action="store_true", help="LM-fused prefix beam search instead of greedy")
    sp.add_argument("--out", required=True)

    sp = add("merge", cmd_merge, "service-guided decoding")
    sp.add_argument("--posteriors", required=True)
    sp.add_argument("--hyps", required=True, help="service hypotheses (JSON lines)")
    sp.add_argument("--out", required=True)

    sp = add("rover", cmd_rover, "confidence-voted combination of two hypotheses")
    sp.add_argument("--hyps", required=True, help="service hypotheses (JSON lines)")
    sp.add_argument("--local", required=True, help="local hypotheses with confidences (JSON lines)")
    sp.add_argument("--mode", choices=("word", "char"), default="word")
    sp.add_argument("--conf-null", type=float, dest="conf_null")
    sp.add_argument("--out", required=True)

    sp = add("rescore", cmd_rescore, "rerank service N-best lists with the LM")
    sp.add_argument("--hyps", required=True)
    sp.add_argument("--lambda", type=float, dest="lam")
    sp.add_argument("--out", required=True)

    sp = add("eval", cmd_eval, "WER/CER and per-word error report")
    sp.add_argument("--refs", required=True)
    sp.add_argument("--hyp", action="append", required=True, metavar="NAME=FILE",
                    help="hypothesis file; repeat per system (first two feed the per-word table)")
    sp.add_argument("--min-count", type=int, default=5, dest="min_count")
    sp.add_argument("--top", type=int, default=20)
    sp.add_argument("--out")
    sp.add_argument("--diff", help="write aligned diffs of erroneous utterances here")

    sp = add("tune", cmd_tune, "grid-search parameters on a validation split")
    sp.add_argument("--data", required=True, help="dataset directory written by `synth`")
    sp.add_argument("--split", default="val")
    sp.add_argument("--grids", help="JSON object overriding grid value lists")
    sp.add_argument("--out", required=True)
    sp.add_argument("--trace")

    sp = add("synth", cmd_synth, "generate a seeded synthetic dataset directory")
    sp.add_argument("--n", type=int, default=2000, help="number of sentences (default %(default)s)")
    sp.add_argument("--config", help="JSON generator settings")
    sp.add_argument("--out", required=True)

    sp = add("lm-train", cmd_lm_train, "train a trigram LM on a sentence file")
    sp.add_argument("--corpus", required=True)
    sp.add_argument("--out", required=True)

    sp = add("bench", cmd_bench, "run the full synthetic benchmark")
    sp.add_argument("--n", type=int, default=20000)
    sp.add_argument("--n-test", type=int, default=2000, dest="n_test")
    sp.add_argument("--trace", action="store_true", help="include the tuning trace in the report")
    sp.add_argument("--out")
    return p


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors; those count as bad input here
        return 1 if e.code == 2 else (e.code or 0)
    print(f"seed: {args.seed}", file=sys.stderr)
    if args.jobs < 1:
        print("error: --jobs must be at least 1", file=sys.stderr)
        return 1
    try:
        args.func(args)
    except INPUT_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception:
        traceback.print_exc()
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
