"""Synthetic cross-lingual transfer experiment.

A "rich" language (2000 sentences) and a "poor" one (100 sentences) share
class-conditional character alphabets, so their class trigram statistics
are related, but each has its own noise characters. Training the poor
language against the rich one is compared with training it alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from siamtext.classify import build_reference_set, evaluate
from siamtext.corpus import LabeledCorpus, SynthClassSpec, build_pairs, generate_synthetic_corpus, split_corpus
from siamtext.featurizer import build_vocabulary, encode_corpus
from siamtext.net import NetConfig, init_params
from siamtext.train import TrainConfig, train

CLASS_ALPHABETS = {"a": "abcdefgh", "b": "ghijklmn", "c": "mnopqrst"}
RICH_NOISE = "abcdefghijklmnopqrstuvwx"
POOR_NOISE = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"


def rich_spec(total: int = 2000) -> dict[str, SynthClassSpec]:
    counts = _balanced(total, len(CLASS_ALPHABETS))
    return {
        lab: SynthClassSpec(alpha, n, 10, 20, RICH_NOISE, 0.2)
        for (lab, alpha), n in zip(sorted(CLASS_ALPHABETS.items()), counts)
    }


def poor_spec(total: int = 100) -> dict[str, SynthClassSpec]:
    counts = _balanced(total, len(CLASS_ALPHABETS))
    return {
        lab: SynthClassSpec(alpha, n, 8, 16, POOR_NOISE, 0.15)
        for (lab, alpha), n in zip(sorted(CLASS_ALPHABETS.items()), counts)
    }


def _balanced(total: int, k: int) -> list[int]:
    return [total // k + (1 if i < total % k else 0) for i in range(k)]


@dataclass(frozen=True)
class RunSettings:
    epochs: int = 10
    positives_per_left: int = 10
    per_class: int = 100
    margin: float = 0.5
    learning_rate: float = 1e-3
    batch_size: int = 32


def paired_accuracy(
    left_train: LabeledCorpus,
    right: LabeledCorpus | None,
    test: LabeledCorpus,
    seed: int,
    settings: RunSettings = RunSettings(),
) -> float:
    """Train on left-right pairs and score ``test`` against references from ``right``.

    ``right=None`` trains monolingually on ``left_train`` and draws the
    references from it.
    """
    corpora = [left_train] if right is None else [left_train, right]
    vocab = build_vocabulary(corpora)
    left = encode_corpus(left_train, vocab)
    right_enc = left if right is None else encode_corpus(right, vocab)
    dataset = build_pairs(left, right_enc, 1, seed, positives_per_left=settings.positives_per_left)
    params = init_params(NetConfig(vocab.size, seed=seed))
    cfg = TrainConfig(
        batch_size=settings.batch_size,
        epochs=settings.epochs,
        learning_rate=settings.learning_rate,
        seed=seed,
        margin=settings.margin,
    )
    params, _ = train(params, dataset, cfg)
    refs = build_reference_set(params, right_enc, settings.per_class, seed)
    return evaluate(params, refs, encode_corpus(test, vocab), tau=settings.margin).accuracy


def rich_rich_accuracy(seed: int = 0, settings: RunSettings = RunSettings(epochs=3, positives_per_left=3)) -> float:
    rich = generate_synthetic_corpus(rich_spec(), seed)
    train_part, test_part = split_corpus(rich, 0.2, seed)
    return paired_accuracy(train_part, None, test_part, seed, settings)


def transfer_comparison(seeds=range(5), settings: RunSettings = RunSettings()) -> dict[str, np.ndarray]:
    """Held-out poor-language accuracy for poor-rich vs poor-poor training, per seed."""
    rich = generate_synthetic_corpus(rich_spec(), 1)
    paired, mono = [], []
    for seed in seeds:
        poor = generate_synthetic_corpus(poor_spec(), 100 + seed)
        poor_train, poor_test = split_corpus(poor, 0.3, seed)
        paired.append(paired_accuracy(poor_train, rich, poor_test, seed, settings))
        mono.append(paired_accuracy(poor_train, None, poor_test, seed, settings))
    return {"poor_rich": np.array(paired), "poor_poor": np.array(mono)}
