"""Word trigram language model with stupid backoff."""

from __future__ import annotations

import io
import math
import struct
from collections import Counter
from pathlib import Path
from typing import BinaryIO, Dict, Iterable, List, Sequence, Tuple, Union

BOS = "<s>"
EOS = "</s>"

MAGIC = b"FMLM"
FORMAT_VERSION = 1

Context = Tuple[str, ...]


class LMFormatError(ValueError):
    pass


class NGramLM:
    """Trigram counts scored with stupid backoff.

    Scores are natural-log.  An observed n-gram scores ``c(ctx w) / c(ctx)``;
    otherwise the context is shortened and a factor ``backoff`` applied per
    step, down to the unigram relative frequency.  Every score is clamped
    from below at ``log(floor)``.
    """

    order = 3

    def __init__(
        self,
        counts: Dict[Context, int],
        n_sentences: int,
        backoff: float = 0.4,
        floor: float = 1e-7,
    ):
        self._counts = dict(counts)
        self.n_sentences = n_sentences
        self.backoff = backoff
        self.floor = floor
        self.log_floor = math.log(floor)
        self.n_tokens = sum(c for k, c in self._counts.items() if len(k) == 1)
        self._cache: Dict[Tuple[Context, str], float] = {}
        self._prefixes = None

    @property
    def counts(self) -> Dict[Context, int]:
        return dict(self._counts)

    @property
    def vocabulary(self) -> List[str]:
        return sorted(k[0] for k in self._counts if len(k) == 1)

    def is_word_prefix(self, partial: str) -> bool:
        """Whether ``partial`` can still grow into an in-vocabulary word."""
        if self._prefixes is None:
            pre = set()
            for k in self._counts:
                if len(k) == 1:
                    w = k[0]
                    pre.update(w[:i] for i in range(1, len(w) + 1))
            self._prefixes = frozenset(pre)
        return partial in self._prefixes

    def count(self, ngram: Context) -> int:
        if ngram == (BOS,):
            return self.n_sentences
        return self._counts.get(ngram, 0)

    def score(self, context: Sequence[str], word: str) -> float:
        """Log score of ``word`` after ``context`` (only the last two words matter)."""
        ctx = tuple(context)[-(self.order - 1):]
        key = (ctx, word)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        mult = 1.0
        val = 0.0
        while True:
            if ctx:
                num = self._counts.get(ctx + (word,), 0)
                if num:
                    val = mult * num / self.count(ctx)
                    break
                ctx = ctx[1:]
                mult *= self.backoff
            else:
                num = self._counts.get((word,), 0)
                val = mult * num / self.n_tokens if num else 0.0
                break
        out = max(math.log(val), self.log_floor) if val > 0 else self.log_floor
        self._cache[key] = out
        return out

    # incremental scoring: state is the trailing context tuple
    def begin(self) -> Context:
        return (BOS,)

    def advance(self, state: Context, word: str) -> Tuple[Context, float]:
        lp = self.score(state, word)
        return (state + (word,))[-(self.order - 1):], lp

    def finish(self, state: Context) -> float:
        return self.score(state, EOS)

    def __eq__(self, other):
        if not isinstance(other, NGramLM):
            return NotImplemented
        return (
            self._counts == other._counts
            and self.n_sentences == other.n_sentences
            and self.backoff == other.backoff
            and self.floor == other.floor
        )

    __hash__ = None


def train_trigram(
    corpus: Iterable[str], backoff: float = 0.4, floor: float = 1e-7
) -> NGramLM:
    """Count unigrams to trigrams over whitespace-tokenized sentences.

    Each sentence is padded with one ``<s>`` and one ``</s>``.  ``<s>`` is
    never counted as a unigram token.
    """
    counts: Counter = Counter()
    n = 0
    for sent in corpus:
        words = sent.split()
        toks = [BOS] + words + [EOS]
        n += 1
        for i in range(1, len(toks)):
            counts[(toks[i],)] += 1
            counts[(toks[i - 1], toks[i])] += 1
            if i >= 2:
                counts[(toks[i - 2], toks[i - 1], toks[i])] += 1
    if n == 0:
        raise ValueError("cannot train a language model on an empty corpus")
    return NGramLM(dict(counts), n, backoff, floor)


def lm_logprob(lm: NGramLM, words: Sequence[str]) -> float:
    """Log score of a whole sentence, including the end-of-sentence transition."""
    state = lm.begin()
    total = 0.0
    for w in words:
        state, lp = lm.advance(state, w)
        total += lp
    return total + lm.finish(state)


# --- serialization -----------------------------------------------------------


def _put_str(buf: BinaryIO, s: str) -> None:
    b = s.encode("utf-8")
    buf.write(struct.pack("<I", len(b)))
    buf.write(b)


def _get(buf: BinaryIO, fmt: str):
    size = struct.calcsize(fmt)
    raw = buf.read(size)
    if len(raw) != size:
        raise LMFormatError("truncated language model file")
    return struct.unpack(fmt, raw)


def _get_str(buf: BinaryIO) -> str:
    (n,) = _get(buf, "<I")
    raw = buf.read(n)
    if len(raw) != n:
        raise LMFormatError("truncated language model file")
    return raw.decode("utf-8")


def dump_lm(lm: NGramLM) -> bytes:
    """Serialize: magic, u16 version, params, word table, then one table per order."""
    words = sorted({w for k in lm._counts for w in k} | {BOS})
    index = {w: i for i, w in enumerate(words)}
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<H", FORMAT_VERSION))
    buf.write(struct.pack("<ddQ", lm.backoff, lm.floor, lm.n_sentences))
    buf.write(struct.pack("<I", len(words)))
    for w in words:
        _put_str(buf, w)
    for n in (1, 2, 3):
        table = sorted((tuple(index[w] for w in k), c) for k, c in lm._counts.items() if len(k) == n)
        buf.write(struct.pack("<I", len(table)))
        fmt = "<" + "I" * n + "Q"
        for ids, c in table:
            buf.write(struct.pack(fmt, *ids, c))
    return buf.getvalue()


def load_lm(data: bytes) -> NGramLM:
    buf = io.BytesIO(data)
    if buf.read(4) != MAGIC:
        raise LMFormatError("bad magic: not a language model file")
    (version,) = _get(buf, "<H")
    if version != FORMAT_VERSION:
        raise LMFormatError(f"unsupported language model format version {version}")
    backoff, floor, n_sent = _get(buf, "<ddQ")
    (nw,) = _get(buf, "<I")
    words = [_get_str(buf) for _ in range(nw)]
    counts: Dict[Context, int] = {}
    for n in (1, 2, 3):
        (rows,) = _get(buf, "<I")
        fmt = "<" + "I" * n + "Q"
        for _ in range(rows):
            vals = _get(buf, fmt)
            try:
                key = tuple(words[i] for i in vals[:n])
            except IndexError:
                raise LMFormatError("word index out of range") from None
            counts[key] = vals[n]
    if buf.read(1):
        raise LMFormatError("trailing bytes after language model tables")
    return NGramLM(counts, n_sent, backoff, floor)


def save_lm(lm: NGramLM, path: Union[str, Path]) -> None:
    Path(path).write_bytes(dump_lm(lm))


def read_lm(path: Union[str, Path]) -> NGramLM:
    return load_lm(Path(path).read_bytes())


def read_corpus(path: Union[str, Path]) -> List[str]:
    """One sentence per line, UTF-8; blank lines are skipped."""
    with open(path, encoding="utf-8") as f:
        return [line.strip() for line in f if line.strip()]
