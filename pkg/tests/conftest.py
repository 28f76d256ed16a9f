import numpy as np
import pytest

from siamtext.corpus import LabeledCorpus, SynthClassSpec, generate_synthetic_corpus
from siamtext.featurizer import SentenceEncoding
from siamtext.net import NetConfig, init_params

SMALL = NetConfig(vocab_size=12, embed_dim=3, hidden_dim=4, output_dim=6, seed=1)


def random_small_params(rng, config=SMALL, scale=0.8):
    """Double-precision params with every entry random (biases included)."""
    params = init_params(config, dtype=np.float64)
    for arr in params.arrays().values():
        arr[...] = rng.normal(0.0, scale, arr.shape)
    return params


def random_encoding(rng, vocab_size=12, max_len=5):
    n = int(rng.integers(1, max_len + 1))
    return SentenceEncoding(tuple(int(i) for i in rng.integers(0, vocab_size, n)), n)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def two_class_corpus() -> LabeledCorpus:
    spec = {
        "x": SynthClassSpec("abcd", 20, 5, 9),
        "y": SynthClassSpec("wxyz", 20, 5, 9),
    }
    return generate_synthetic_corpus(spec, seed=5)


ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
