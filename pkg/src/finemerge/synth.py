"""Seeded synthetic accent benchmark.

A "local" model is simulated as noisy frame posteriors that occasionally
mishear a character; a "service" returns clean-sounding transcripts that
carry systematic accent confusions (t/d, v/w, th/d) and homophone swaps.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .core import DEFAULT_VOCAB, FramePosteriors, ServiceHypothesis, Vocabulary

SPLIT_RATIOS = (("train", 0.85), ("val", 0.05), ("test", 0.10))

WORDS = tuple(
    """
    a about after again all also always an and another any are around as at away
    back be because been before being best better between big both boy brief but by
    call called came can car children city come could country cut day did different
    do does done don't down during each early earth end even every everyone eye
    face family far father feet few find finds first five food for form found four
    friend from gave get girl give go going good got great had hand hard has have
    he head hear heard help her here herself high him his home house how however i
    idea if important in into is it it's its just keep kind know land large last
    late left let life light like line little live long look made make man many
    may me men might mind more most mother move much must my name near need never
    new next night no not now number of off often old on once one only open or other
    our out over own page paper part people picture place plant play point posted
    put question quickly read real right river road run said same saw say school sea
    second see seemed sentence set she should show side since small so some
    something sometimes song soon sound spell stand start state still stop story
    study such sun take talk tell than that the their them then there these they
    thing think this those thought three through time to toasted together too took
    tree try turn two under until up us use very walk want was watch water way we
    weather well went were what when where which while white who why will wind with
    without word work world would write year years you young your
    """.split()
)

HOMOPHONES = {
    "were": "where", "where": "were", "their": "there", "there": "their",
    "to": "two", "two": "to", "too": "to", "for": "four", "four": "for",
    "right": "write", "write": "right", "know": "no", "no": "know", "by": "buy",
    "see": "sea", "sea": "see", "here": "hear", "hear": "here", "one": "won",
    "new": "knew", "its": "it's", "it's": "its", "which": "witch", "weather": "whether",
    "whether": "weather", "wind": "wined", "would": "wood", "read": "red",
}

# substitutes a misheard character is confused with; "_" is the blank
LOCAL_CONFUSIONS = {
    "a": "eou", "e": "aio", "i": "ey", "o": "aua", "u": "oa", "y": "ie",
    "b": "pd", "p": "bt", "d": "tb", "t": "dk", "g": "kc", "k": "gc", "c": "ks",
    "m": "n", "n": "m", "l": "r", "r": "l", "s": "zc", "z": "s", "f": "v",
    "v": "fb", "w": "uv", "h": "_", "j": "g", "q": "k", "x": "s", "'": "_",
    " ": "_",
}

SERVICE_CONFUSIONS = (("th", "d", 0.25), ("t", "d", 0.3), ("d", "t", 0.1), ("v", "w", 0.3), ("w", "v", 0.3))


class SynthConfigError(ValueError):
    pass


@dataclass
class SynthConfig:
    seed: int = 7
    words: Tuple[str, ...] = WORDS
    corpus: Optional[Tuple[str, ...]] = None  # fixed sentence pool instead of the Markov chain
    min_words: int = 4
    max_words: int = 9
    successors: int = 12
    dwell_min: int = 1
    dwell_max: int = 3
    blank_prob: float = 0.3
    local_noise: float = 0.25
    noise_concentration: float = 0.1
    local_error_rate: float = 0.07
    local_keep: Tuple[float, float] = (0.01, 0.25)
    local_confusions: Dict[str, str] = field(default_factory=lambda: dict(LOCAL_CONFUSIONS))
    service_confusions: Tuple[Tuple[str, str, float], ...] = SERVICE_CONFUSIONS
    homophones: Dict[str, str] = field(default_factory=lambda: dict(HOMOPHONES))
    homophone_rate: float = 0.3
    conf_clean: float = 0.88
    conf_error: float = 0.65
    conf_concentration: float = 6.0
    nbest: int = 4

    def validate(self, vocab: Vocabulary = DEFAULT_VOCAB) -> None:
        probs = [self.blank_prob, self.local_noise, self.local_error_rate, self.homophone_rate,
                 self.conf_clean, self.conf_error, *self.local_keep]
        probs += [p for _, _, p in self.service_confusions]
        if any(not 0.0 <= p <= 1.0 for p in probs):
            raise SynthConfigError("probabilities must lie in [0, 1]")
        if self.dwell_min < 1 or self.dwell_max < self.dwell_min:
            raise SynthConfigError("need 1 <= dwell_min <= dwell_max")
        if self.min_words < 1 or self.max_words < self.min_words:
            raise SynthConfigError("need 1 <= min_words <= max_words")
        if self.nbest < 1 or self.conf_concentration <= 0 or self.noise_concentration <= 0:
            raise SynthConfigError("nbest and concentrations must be positive")
        symbols = set(vocab.symbols)
        for w in self.words + tuple(self.homophones) + tuple(self.homophones.values()):
            if not w or any(c not in symbols or c in " _" for c in w):
                raise SynthConfigError(f"word {w!r} is not spellable in the vocabulary")
        for src, subs in self.local_confusions.items():
            if src not in symbols or any(c not in symbols for c in subs):
                raise SynthConfigError(f"bad local confusion entry {src!r}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["words"] = list(self.words)
        d["corpus"] = list(self.corpus) if self.corpus is not None else None
        d["local_keep"] = list(self.local_keep)
        d["service_confusions"] = [list(x) for x in self.service_confusions]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SynthConfig":
        d = dict(d)
        if "words" in d:
            d["words"] = tuple(d["words"])
        if d.get("corpus") is not None:
            d["corpus"] = tuple(d["corpus"])
        if "local_keep" in d:
            d["local_keep"] = tuple(d["local_keep"])
        if "service_confusions" in d:
            d["service_confusions"] = tuple(tuple(x) for x in d["service_confusions"])
        return cls(**d)


@dataclass(frozen=True)
class Utterance:
    id: str
    reference: str
    posteriors: Optional[FramePosteriors] = None
    service: Optional[ServiceHypothesis] = None


@dataclass
class SynthDataset:
    config: SynthConfig
    splits: Dict[str, List[Utterance]]

    @property
    def train(self) -> List[Utterance]:
        return self.splits["train"]

    @property
    def val(self) -> List[Utterance]:
        return self.splits["val"]

    @property
    def test(self) -> List[Utterance]:
        return self.splits["test"]


# --- sentences ---------------------------------------------------------------


def _sentences(cfg: SynthConfig, n: int) -> List[str]:
    """``n`` distinct sentences from a seeded word bigram chain (or the fixed corpus)."""
    rng = np.random.default_rng([cfg.seed, 0])
    if cfg.corpus is not None:
        pool = list(dict.fromkeys(" ".join(s.split()) for s in cfg.corpus if s.split()))
        if len(pool) < n:
            raise SynthConfigError(f"corpus has {len(pool)} distinct sentences, need {n}")
        order = rng.permutation(len(pool))[:n]
        return [pool[i] for i in order]
    words = list(cfg.words)
    W = len(words)
    k = min(cfg.successors, W)
    succ = [rng.choice(W, size=k, replace=False) for _ in range(W)]
    succ_p = [rng.dirichlet(np.ones(k)) for _ in range(W)]
    start_p = rng.dirichlet(np.full(W, 0.5))
    seen = {}
    attempts = 0
    while len(seen) < n:
        attempts += 1
        if attempts > 50 * n + 1000:
            raise SynthConfigError("word list too small to produce enough distinct sentences")
        length = int(rng.integers(cfg.min_words, cfg.max_words + 1))
        w = int(rng.choice(W, p=start_p))
        out = [words[w]]
        for _ in range(length - 1):
            w = int(succ[w][rng.choice(k, p=succ_p[w])])
            out.append(words[w])
        seen.setdefault(" ".join(out), None)
    return list(seen)


def split_sizes(n: int) -> Dict[str, int]:
    n_train = int(round(n * SPLIT_RATIOS[0][1]))
    n_val = int(round(n * SPLIT_RATIOS[1][1]))
    return {"train": n_train, "val": n_val, "test": n - n_train - n_val}


# --- local posteriors --------------------------------------------------------


def _frame_path(text: str, cfg: SynthConfig, rng: np.random.Generator) -> List[Tuple[Optional[int], int]]:
    """(character position or None for blank, dwell) runs covering the utterance."""
    runs: List[Tuple[Optional[int], int]] = []

    def dwell():
        return int(rng.integers(cfg.dwell_min, cfg.dwell_max + 1))

    if rng.random() < cfg.blank_prob:
        runs.append((None, dwell()))
    for i, ch in enumerate(text):
        if i > 0 and (text[i - 1] == ch or rng.random() < cfg.blank_prob):
            runs.append((None, dwell()))
        runs.append((i, dwell()))
    if rng.random() < cfg.blank_prob:
        runs.append((None, dwell()))
    return runs


def simulate_posteriors(
    uid: str, text: str, cfg: SynthConfig, rng: np.random.Generator, vocab: Vocabulary = DEFAULT_VOCAB
) -> FramePosteriors:
    """Frame posteriors for ``text``: a dominant path symbol plus leaked noise.

    Each character is misheard with probability ``local_error_rate``; its
    frames then peak on a confusable substitute while the true character
    keeps a share drawn from ``local_keep``.
    """
    runs = _frame_path(text, cfg, rng)
    V = len(vocab)
    T = sum(d for _, d in runs)
    probs = np.zeros((T, V))
    blank = vocab.blank_index
    eps = cfg.local_noise
    t = 0
    for pos, d in runs:
        if pos is None:
            probs[t:t + d, blank] = 1.0 - eps
        else:
            ch = text[pos]
            true = vocab.index(ch)
            subs = cfg.local_confusions.get(ch, "")
            if subs and rng.random() < cfg.local_error_rate:
                sub = vocab.index(subs[int(rng.integers(len(subs)))])
                keep = rng.uniform(*cfg.local_keep)
                probs[t:t + d, sub] = (1.0 - eps) * (1.0 - keep)
                probs[t:t + d, true] += (1.0 - eps) * keep
            else:
                probs[t:t + d, true] = 1.0 - eps
        t += d
    if eps > 0:
        probs += eps * rng.dirichlet(np.full(V, cfg.noise_concentration), size=T)
    # stored at float32 precision so the binary format round-trips exactly
    probs = probs.astype(np.float32).astype(np.float64)
    probs.setflags(write=False)
    return FramePosteriors(uid, probs)


# --- service -----------------------------------------------------------------


def _confuse_word(word: str, cfg: SynthConfig, rng: np.random.Generator) -> str:
    out = []
    i = 0
    while i < len(word):
        for src, dst, p in cfg.service_confusions:
            if word.startswith(src, i) and rng.random() < p:
                out.append(dst)
                i += len(src)
                break
        else:
            out.append(word[i])
            i += 1
    return "".join(out)


def _perturb_word(word: str, cfg: SynthConfig, rng: np.random.Generator) -> str:
    if word in cfg.homophones and rng.random() < cfg.homophone_rate:
        return cfg.homophones[word]
    return _confuse_word(word, cfg, rng)


def _confidence(ok: bool, cfg: SynthConfig, rng: np.random.Generator) -> float:
    mean = cfg.conf_clean if ok else cfg.conf_error
    k = cfg.conf_concentration
    return float(np.round(rng.beta(mean * k, (1.0 - mean) * k), 4))


def simulate_service(text: str, cfg: SynthConfig, rng: np.random.Generator) -> ServiceHypothesis:
    """Accent-confused transcript with per-word confidences and a synthetic N-best list."""
    ref_words = text.split()
    hyp = [_perturb_word(w, cfg, rng) for w in ref_words]
    confs = [_confidence(h == r, cfg, rng) for h, r in zip(hyp, ref_words)]
    top = " ".join(hyp)
    nbest = [(top, 0.0)]
    seen = {top}
    wrong = [i for i, (h, r) in enumerate(zip(hyp, ref_words)) if h != r]
    for _ in range(4 * cfg.nbest):
        if len(nbest) >= cfg.nbest:
            break
        alt = list(hyp)
        if wrong and rng.random() < 0.5:
            i = wrong[int(rng.integers(len(wrong)))]
            alt[i] = ref_words[i]
        else:
            i = int(rng.integers(len(alt)))
            alt[i] = _perturb_word(alt[i], cfg, rng)
        s = " ".join(alt)
        if s not in seen:
            seen.add(s)
            nbest.append((s, -float(np.round(rng.uniform(0.2, 3.0), 4))))
    nbest = [nbest[0]] + sorted(nbest[1:], key=lambda x: -x[1])
    return ServiceHypothesis(top, tuple(confs), tuple(nbest))


# --- dataset -----------------------------------------------------------------


def gen_dataset(
    cfg: SynthConfig,
    n: int,
    acoustic_splits: Sequence[str] = ("val", "test"),
    vocab: Vocabulary = DEFAULT_VOCAB,
) -> SynthDataset:
    """Generate ``n`` distinct utterances split 85/5/10 into train/val/test.

    Utterances in ``acoustic_splits`` get simulated posteriors and service
    output; the rest carry only their reference (train sentences feed the
    language model).  Each utterance draws from its own seeded stream, so
    the result depends only on ``cfg`` and ``n``.
    """
    cfg.validate(vocab)
    if n < 1:
        raise SynthConfigError("n must be positive")
    sentences = _sentences(cfg, n)
    sizes = split_sizes(n)
    splits: Dict[str, List[Utterance]] = {}
    start = 0
    for s_idx, (name, _) in enumerate(SPLIT_RATIOS):
        utts = []
        for j, text in enumerate(sentences[start:start + sizes[name]]):
            uid = f"{name}-{j:06d}"
            if name in acoustic_splits:
                rng = np.random.default_rng([cfg.seed, 1, s_idx, j])
                P = simulate_posteriors(uid, text, cfg, rng, vocab)
                svc = simulate_service(text, cfg, rng)
                utts.append(Utterance(uid, text, P, svc))
            else:
                utts.append(Utterance(uid, text))
        splits[name] = utts
        start += sizes[name]
    return SynthDataset(cfg, splits)
