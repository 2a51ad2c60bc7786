import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from finemerge import DEFAULT_VOCAB, FramePosteriors, Vocabulary  # noqa: E402


def small_vocab(V: int) -> Vocabulary:
    """Blank plus the first V-1 letters."""
    return Vocabulary(("_",) + tuple("abcdefghij"[: V - 1]), 0)


def random_posteriors(rng, T, V, concentration=0.7, uid="u"):
    return FramePosteriors(uid, rng.dirichlet(np.full(V, concentration), size=T))


def onehot_posteriors(path: str, vocab: Vocabulary = DEFAULT_VOCAB, uid="u") -> FramePosteriors:
    probs = np.zeros((len(path), len(vocab)))
    for t, ch in enumerate(path):
        probs[t, vocab.index(ch)] = 1.0
    return FramePosteriors(uid, probs)


@pytest.fixture(scope="session")
def small_dataset():
    from finemerge.synth import SynthConfig, gen_dataset

    return gen_dataset(SynthConfig(seed=3), 600)


@pytest.fixture(scope="session")
def small_lm(small_dataset):
    from finemerge.lm import train_trigram

    return train_trigram(u.reference for u in small_dataset.train)


# acceptance criteria record one line each; they are echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
