"""Labeled corpora, stratified splitting, pair construction and synthetic data."""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Mapping, Sequence

import numpy as np

if TYPE_CHECKING:
    from siamtext.featurizer import EncodedCorpus, SentenceEncoding


class CorpusError(ValueError):
    """Malformed or unusable corpus data."""


@dataclass(frozen=True)
class LabeledSentence:
    text: str
    label: str

    def __post_init__(self):
        if not self.text.strip():
            raise CorpusError("sentence text is empty")
        if not self.label:
            raise CorpusError("sentence label is empty")


@dataclass(frozen=True)
class LabeledCorpus:
    sentences: tuple[LabeledSentence, ...]

    def __post_init__(self):
        object.__setattr__(self, "sentences", tuple(self.sentences))

    @classmethod
    def from_pairs(cls, pairs: Sequence[tuple[str, str]]) -> "LabeledCorpus":
        return cls(tuple(LabeledSentence(t, l) for t, l in pairs))

    @property
    def label_set(self) -> frozenset[str]:
        return frozenset(s.label for s in self.sentences)

    def __len__(self) -> int:
        return len(self.sentences)

    def label_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for s in self.sentences:
            counts[s.label] = counts.get(s.label, 0) + 1
        return counts

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for s in self.sentences:
                if "\t" in s.text or "\n" in s.text:
                    raise CorpusError(f"text contains tab or newline: {s.text!r}")
                fh.write(f"{s.text}\t{s.label}\n")


def load_labeled_corpus(path) -> LabeledCorpus:
    """Read a ``text<TAB>label`` file; blank lines are skipped, text is trimmed."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"corpus file not found: {path}")
    sentences = []
    with open(path, encoding="utf-8", newline="\n") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) != 2:
                raise CorpusError(
                    f"{path}:{lineno}: expected 2 tab-separated fields, got {len(fields)}"
                )
            text, label = fields[0].strip(), fields[1].strip()
            try:
                sentences.append(LabeledSentence(text, label))
            except CorpusError as exc:
                raise CorpusError(f"{path}:{lineno}: {exc}") from None
    if not sentences:
        raise CorpusError(f"{path}: corpus is empty")
    return LabeledCorpus(tuple(sentences))


def split_corpus(
    corpus: LabeledCorpus, test_fraction: float, seed: int
) -> tuple[LabeledCorpus, LabeledCorpus]:
    """Stratified train/test split, deterministic given ``seed``.

    Each label contributes ``round(n * test_fraction)`` sentences to the
    test half, clamped to ``[1, n - 1]``. Both halves keep input order.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    groups: dict[str, list[int]] = {}
    for i, s in enumerate(corpus.sentences):
        groups.setdefault(s.label, []).append(i)
    too_small = sorted(label for label, idx in groups.items() if len(idx) < 2)
    if too_small:
        raise CorpusError(f"labels with fewer than 2 sentences: {', '.join(too_small)}")
    rng = np.random.default_rng(seed)
    test_idx: set[int] = set()
    for label in sorted(groups):
        idx = groups[label]
        n_test = min(max(int(round(len(idx) * test_fraction)), 1), len(idx) - 1)
        chosen = rng.permutation(len(idx))[:n_test]
        test_idx.update(idx[j] for j in chosen)
    train = tuple(s for i, s in enumerate(corpus.sentences) if i not in test_idx)
    test = tuple(s for i, s in enumerate(corpus.sentences) if i in test_idx)
    return LabeledCorpus(train), LabeledCorpus(test)


@dataclass(frozen=True)
class PairSample:
    left: "SentenceEncoding"
    right: "SentenceEncoding"
    y: int
    left_label: str = ""
    right_label: str = ""
    left_id: int = -1
    right_id: int = -1

    def __post_init__(self):
        if self.y not in (-1, 1):
            raise ValueError(f"pair label must be -1 or +1, got {self.y}")


@dataclass(frozen=True)
class PairDataset:
    pairs: tuple[PairSample, ...]
    positive_count: int = field(init=False)
    negative_count: int = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(self.pairs))
        pos = sum(1 for p in self.pairs if p.y == 1)
        object.__setattr__(self, "positive_count", pos)
        object.__setattr__(self, "negative_count", len(self.pairs) - pos)

    def __len__(self) -> int:
        return len(self.pairs)

    @property
    def trainable(self) -> bool:
        return self.positive_count > 0 and self.negative_count > 0


def build_pairs(
    left_corpus: "EncodedCorpus",
    right_corpus: "EncodedCorpus",
    negatives_per_positive: int = 1,
    seed: int = 0,
    positives_per_left: int = 1,
) -> PairDataset:
    """Pair every left sentence with same-label (+1) and other-label (-1) right sentences.

    For each left sentence, ``positives_per_left`` same-label right sentences
    are drawn without replacement, then ``negatives_per_positive`` times as
    many different-label right sentences. Draws are truncated to what is
    available. When ``left_corpus is right_corpus`` a sentence is never
    paired with itself.
    """
    if negatives_per_positive < 1 or positives_per_left < 1:
        raise ValueError("negatives_per_positive and positives_per_left must be >= 1")
    if len(left_corpus) == 0 or len(right_corpus) == 0:
        raise CorpusError("both corpora must be non-empty")
    right_groups = right_corpus.indices_by_label()
    if len(right_groups) < 2:
        raise CorpusError("right corpus has a single label; no negative pairs are possible")
    missing = sorted(left_corpus.label_set - set(right_groups))
    if missing:
        raise CorpusError(f"left labels absent from right corpus: {', '.join(missing)}")
    monolingual = left_corpus is right_corpus
    all_right = np.arange(len(right_corpus))
    right_labels = np.asarray(right_corpus.labels, dtype=object)

    rng = np.random.default_rng(seed)
    pairs: list[PairSample] = []
    for i, (enc, label) in enumerate(zip(left_corpus.encodings, left_corpus.labels)):
        same = np.asarray(right_groups[label])
        if monolingual:
            same = same[same != i]
        if same.size == 0:
            raise CorpusError(f"label {label!r} has no partner sentence for a positive pair")
        other = all_right[right_labels != label]
        n_pos = min(positives_per_left, same.size)
        pos_ids = rng.choice(same, size=n_pos, replace=False)
        neg_ids = rng.choice(other, size=min(n_pos * negatives_per_positive, other.size), replace=False)
        for j in pos_ids:
            pairs.append(PairSample(enc, right_corpus.encodings[j], 1, label, label, i, int(j)))
        for j in neg_ids:
            pairs.append(
                PairSample(enc, right_corpus.encodings[j], -1, label, right_corpus.labels[j], i, int(j))
            )
    return PairDataset(tuple(pairs))


@dataclass(frozen=True)
class SynthClassSpec:
    """Character distribution for one synthetic class.

    Each character is drawn uniformly from ``alphabet``, or from ``noise``
    with probability ``noise_rate``.
    """

    alphabet: str
    count: int
    min_length: int
    max_length: int
    noise: str = ""
    noise_rate: float = 0.0

    def __post_init__(self):
        if not self.alphabet:
            raise CorpusError("class alphabet is empty")
        if self.count < 1:
            raise CorpusError("class count must be >= 1")
        if not 1 <= self.min_length <= self.max_length:
            raise CorpusError("need 1 <= min_length <= max_length")
        if not 0.0 <= self.noise_rate <= 1.0:
            raise CorpusError("noise_rate must lie in [0, 1]")
        if self.noise_rate > 0 and not self.noise:
            raise CorpusError("noise_rate > 0 requires a noise alphabet")
        if any(ch.isspace() for ch in self.alphabet + self.noise):
            raise CorpusError("alphabets may not contain whitespace")


def generate_synthetic_corpus(classes: Mapping[str, SynthClassSpec], seed: int) -> LabeledCorpus:
    """Draw a shuffled labeled corpus from per-class character distributions."""
    if len(classes) < 2:
        raise CorpusError("a synthetic corpus needs at least 2 classes")
    rng = np.random.default_rng(seed)
    sentences = []
    for label in sorted(classes):
        spec = classes[label]
        alphabet = np.array(list(spec.alphabet))
        noise = np.array(list(spec.noise)) if spec.noise else alphabet
        for _ in range(spec.count):
            n = int(rng.integers(spec.min_length, spec.max_length + 1))
            chars = alphabet[rng.integers(0, alphabet.size, size=n)]
            if spec.noise_rate > 0:
                flip = rng.random(n) < spec.noise_rate
                chars[flip] = noise[rng.integers(0, noise.size, size=int(flip.sum()))]
            sentences.append(LabeledSentence("".join(chars), label))
    order = rng.permutation(len(sentences))
    return LabeledCorpus(tuple(sentences[k] for k in order))


def load_synth_spec(path) -> dict[str, dict[str, SynthClassSpec]]:
    """Parse a synthetic-corpus spec file into ``{language: {label: spec}}``.

    The file is INI-style with one section per class. A section named
    ``lang/label`` belongs to language ``lang``; a bare ``label`` belongs to
    the language ``corpus``. Keys: ``alphabet``, ``count``, ``min_length``,
    ``max_length`` and optionally ``noise``, ``noise_rate``::

        [rich/pos]
        alphabet = abcdef
        count = 100
        min_length = 10
        max_length = 20
    """
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    if not parser.read(path, encoding="utf-8"):
        raise FileNotFoundError(f"synthetic spec not found: {path}")
    out: dict[str, dict[str, SynthClassSpec]] = {}
    for section in parser.sections():
        lang, _, label = section.rpartition("/")
        lang = lang or "corpus"
        sec = parser[section]
        for key in ("alphabet", "count", "min_length", "max_length"):
            if key not in sec:
                raise CorpusError(f"{path}: section [{section}] lacks key {key!r}")
        try:
            spec = SynthClassSpec(
                alphabet=sec["alphabet"],
                count=sec.getint("count"),
                min_length=sec.getint("min_length"),
                max_length=sec.getint("max_length"),
                noise=sec.get("noise", ""),
                noise_rate=sec.getfloat("noise_rate", 0.0),
            )
        except ValueError as exc:
            raise CorpusError(f"{path}: section [{section}]: {exc}") from None
        out.setdefault(lang, {})[label] = spec
    if not out:
        raise CorpusError(f"{path}: no class sections")
    return out
