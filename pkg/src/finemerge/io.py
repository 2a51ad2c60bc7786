"""File formats: posterior dumps, hypothesis/reference JSON lines, parameter files, datasets."""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .core import DEFAULT_VOCAB, FramePosteriors, LocalHypothesis, ServiceHypothesis, Vocabulary

PathLike = Union[str, Path]

POSTERIOR_MAGIC = b"FMPB"
POSTERIOR_VERSION = 1
PARAMS_VERSION = 1


class FormatError(ValueError):
    """Input file is malformed."""


# --- posteriors ----------------------------------------------------------------


def _pack_str(s: str) -> bytes:
    b = s.encode("utf-8")
    return struct.pack("<I", len(b)) + b


def encode_posteriors(P: FramePosteriors, vocab: Vocabulary = DEFAULT_VOCAB) -> bytes:
    """One binary record: magic, u16 version, id, u32 T, u32 V, vocabulary, f32 rows."""
    probs = np.asarray(P.probs)
    T, V = probs.shape
    if V != len(vocab):
        raise FormatError(f"matrix width {V} does not match vocabulary size {len(vocab)}")
    return b"".join(
        [
            POSTERIOR_MAGIC,
            struct.pack("<H", POSTERIOR_VERSION),
            _pack_str(P.utterance_id),
            struct.pack("<II", T, V),
            _pack_str(vocab.as_string()),
            probs.astype("<f4").tobytes(order="C"),
        ]
    )


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError(f"truncated posterior file while reading {what}")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str, what: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))

    def string(self, what: str) -> str:
        (n,) = self.unpack("<I", what + " length")
        return self.take(n, what).decode("utf-8")

    @property
    def done(self) -> bool:
        return self.pos >= len(self.data)


def decode_posteriors(data: bytes) -> List[Tuple[FramePosteriors, Vocabulary]]:
    """Parse a stream of concatenated binary records."""
    r = _Reader(data)
    out = []
    while not r.done:
        if r.take(4, "magic") != POSTERIOR_MAGIC:
            raise FormatError("bad magic: not a posterior file")
        (version,) = r.unpack("<H", "version")
        if version != POSTERIOR_VERSION:
            raise FormatError(f"unsupported posterior format version {version}")
        uid = r.string("utterance id")
        T, V = r.unpack("<II", "dimensions")
        vocab_str = r.string("vocabulary")
        if len(vocab_str) != V:
            raise FormatError(f"vocabulary has {len(vocab_str)} symbols but V={V}")
        raw = r.take(4 * T * V, f"{T}x{V} matrix")
        probs = np.frombuffer(raw, dtype="<f4").astype(np.float64).reshape(T, V)
        out.append((FramePosteriors(uid, probs), Vocabulary.from_string(vocab_str)))
    return out


def posteriors_to_json(P: FramePosteriors, vocab: Vocabulary = DEFAULT_VOCAB) -> dict:
    # values go through float32 so both encodings of a matrix load identically
    rows = np.asarray(P.probs).astype(np.float32).astype(np.float64).tolist()
    return {"id": P.utterance_id, "vocab": vocab.as_string(), "probs": rows}


def posteriors_from_json(obj: dict) -> Tuple[FramePosteriors, Vocabulary]:
    try:
        vocab = Vocabulary.from_string(obj["vocab"])
        probs = np.asarray(obj["probs"], dtype=np.float64)
        uid = str(obj["id"])
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"malformed posterior JSON: {e}") from None
    if probs.size == 0:
        probs = probs.reshape(0, len(vocab))
    if probs.ndim != 2 or probs.shape[1] != len(vocab):
        raise FormatError(f"matrix shape {probs.shape} does not match vocabulary size {len(vocab)}")
    probs = probs.astype(np.float32).astype(np.float64)
    return FramePosteriors(uid, probs), vocab


def write_posteriors(
    path: PathLike, items: Sequence[FramePosteriors], vocab: Vocabulary = DEFAULT_VOCAB, fmt: str = "binary"
) -> None:
    path = Path(path)
    if fmt == "binary":
        path.write_bytes(b"".join(encode_posteriors(P, vocab) for P in items))
    elif fmt == "json":
        path.write_text(json.dumps([posteriors_to_json(P, vocab) for P in items]) + "\n")
    else:
        raise ValueError(f"unknown posterior format {fmt!r}")


def read_posteriors(path: PathLike, vocab: Optional[Vocabulary] = DEFAULT_VOCAB) -> List[FramePosteriors]:
    """Load every matrix in a binary or JSON posterior file.

    The format is sniffed from the first bytes.  When ``vocab`` is given,
    each record's vocabulary must match it exactly.
    """
    data = Path(path).read_bytes()
    if data[:4] == POSTERIOR_MAGIC or not data.strip():
        records = decode_posteriors(data)
    else:
        try:
            obj = json.loads(data.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            raise FormatError(f"{path}: neither a binary nor a JSON posterior file") from None
        records = [posteriors_from_json(o) for o in (obj if isinstance(obj, list) else [obj])]
    out = []
    for P, v in records:
        if vocab is not None and v != vocab:
            raise FormatError(f"{P.utterance_id}: vocabulary {v.as_string()!r} does not match")
        out.append(P)
    return out


# --- hypotheses and references -------------------------------------------------


@dataclass
class LineError:
    line: int
    message: str


@dataclass
class JsonlResult:
    records: List[Tuple[str, object]]
    errors: List[LineError]

    @property
    def ok(self) -> bool:
        return not self.errors

    def as_dict(self) -> Dict[str, object]:
        return dict(self.records)


def _hyp_from_obj(obj: dict) -> ServiceHypothesis:
    text = obj["transcript"]
    if not isinstance(text, str):
        raise TypeError("transcript must be a string")
    confs = obj.get("word_confidences")
    nbest = obj.get("nbest")
    if nbest is not None:
        nbest = tuple((e["transcript"], float(e["score"])) for e in nbest)
    if text != " ".join(text.split()) or text != text.lower():
        return ServiceHypothesis.from_raw(text, confs, nbest)
    return ServiceHypothesis(text, tuple(confs) if confs else (), nbest)


def _read_jsonl(path: PathLike, parse) -> JsonlResult:
    records, errors = [], []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                if not isinstance(obj, dict):
                    raise TypeError("line is not a JSON object")
                records.append((str(obj["id"]), parse(obj)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                errors.append(LineError(lineno, f"{type(e).__name__}: {e}"))
    return JsonlResult(records, errors)


def read_hypotheses(path: PathLike) -> JsonlResult:
    """Parse ``{id, transcript, word_confidences?, nbest?}`` lines; bad lines are collected, not raised."""
    return _read_jsonl(path, _hyp_from_obj)


def read_references(path: PathLike) -> JsonlResult:
    def parse(obj):
        text = obj["transcript"]
        if not isinstance(text, str):
            raise TypeError("transcript must be a string")
        return text

    return _read_jsonl(path, parse)


def hypothesis_to_obj(uid: str, h) -> dict:
    obj = {"id": uid, "transcript": h.transcript}
    if isinstance(h, (ServiceHypothesis, LocalHypothesis)) and h.word_confidences:
        obj["word_confidences"] = list(h.word_confidences)
    nbest = getattr(h, "nbest", None)
    if nbest is not None:
        obj["nbest"] = [{"transcript": t, "score": s} for t, s in nbest]
    return obj


def write_jsonl(path: PathLike, objs: Iterable[dict]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for o in objs:
            f.write(json.dumps(o, sort_keys=True) + "\n")


def write_hypotheses(path: PathLike, items: Iterable[Tuple[str, object]]) -> None:
    write_jsonl(path, (hypothesis_to_obj(uid, h) for uid, h in items))


def write_references(path: PathLike, items: Iterable[Tuple[str, str]]) -> None:
    write_jsonl(path, ({"id": uid, "transcript": t} for uid, t in items))


def write_transcripts(path: PathLike, items: Iterable[Tuple[str, str]]) -> None:
    """Plain decoded outputs, in the hypothesis line format without confidences."""
    write_references(path, items)


# --- parameter files -------------------------------------------------------------


def write_params(path: PathLike, params) -> None:
    """Versioned JSON holding tuned merge, beam, ROVER and rescoring settings."""
    obj = {"format": "finemerge-params", "version": PARAMS_VERSION, **params.to_dict()}
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def read_params(path: PathLike):
    from .tune import TunedParams

    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatError(f"{path}: not a JSON parameter file ({e})") from None
    if not isinstance(obj, dict) or obj.get("format") != "finemerge-params":
        raise FormatError(f"{path}: not a parameter file")
    if obj.get("version") != PARAMS_VERSION:
        raise FormatError(f"{path}: unsupported parameter file version {obj.get('version')}")
    try:
        return TunedParams.from_dict(obj)
    except (TypeError, ValueError) as e:
        raise FormatError(f"{path}: bad parameter values ({e})") from None


# --- dataset directories ---------------------------------------------------------
#
# <dir>/config.json               generator settings
# <dir>/<split>.refs.jsonl        references (every split)
# <dir>/<split>.service.jsonl     service hypotheses (splits with acoustics)
# <dir>/<split>.post.bin|.json    local posteriors (same splits)
# <dir>/train.txt                 training sentences, one per line, for lm-train


def write_dataset(root: PathLike, ds, fmt: str = "binary", vocab: Vocabulary = DEFAULT_VOCAB) -> None:
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    (root / "config.json").write_text(json.dumps(ds.config.to_dict(), indent=2, sort_keys=True) + "\n")
    for name, utts in ds.splits.items():
        write_references(root / f"{name}.refs.jsonl", ((u.id, u.reference) for u in utts))
        if utts and utts[0].posteriors is not None:
            write_hypotheses(root / f"{name}.service.jsonl", ((u.id, u.service) for u in utts))
            ext = "bin" if fmt == "binary" else "json"
            write_posteriors(root / f"{name}.post.{ext}", [u.posteriors for u in utts], vocab, fmt)
    with open(root / "train.txt", "w", encoding="utf-8") as f:
        for u in ds.train:
            f.write(u.reference + "\n")


def _posterior_file(root: Path, split: str) -> Optional[Path]:
    for ext in ("bin", "json"):
        p = root / f"{split}.post.{ext}"
        if p.exists():
            return p
    return None


def _require(result: JsonlResult, path: Path) -> Dict[str, object]:
    if not result.ok:
        e = result.errors[0]
        raise FormatError(f"{path}:{e.line}: {e.message}")
    return result.as_dict()


def read_split(root: PathLike, split: str, vocab: Vocabulary = DEFAULT_VOCAB) -> list:
    """Load one split of a dataset directory as utterances, in reference-file order."""
    from .synth import Utterance

    root = Path(root)
    ref_path = root / f"{split}.refs.jsonl"
    res = read_references(ref_path)
    refs = _require(res, ref_path)
    post_path = _posterior_file(root, split)
    if post_path is None:
        return [Utterance(uid, ref) for uid, ref in res.records]
    posts = {P.utterance_id: P for P in read_posteriors(post_path, vocab)}
    svc_path = root / f"{split}.service.jsonl"
    svcs = _require(read_hypotheses(svc_path), svc_path)
    out = []
    for uid, ref in refs.items():
        if uid not in posts or uid not in svcs:
            raise FormatError(f"utterance {uid!r} lacks posteriors or a service hypothesis")
        out.append(Utterance(uid, ref, posts[uid], svcs[uid]))
    return out
