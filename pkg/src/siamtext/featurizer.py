"""Character-trigram featurization.

A sentence becomes an ordered sequence of trigram indices. The whole
trimmed sentence (spaces included, case preserved) is wrapped in two
reserved sentinel code points before windowing, so even a one-character
sentence yields one trigram.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from siamtext.corpus import LabeledCorpus

BOS = "\x02"
EOS = "\x03"
UNK_INDEX = 0

_ESCAPES = {"\\": "\\\\", "\t": "\\t", "\n": "\\n", "\r": "\\r"}
_UNESCAPES = {"\\": "\\", "t": "\t", "n": "\n", "r": "\r"}


class SegmenterError(RuntimeError):
    """Raised when an external segmenter fails on a sentence."""


def extract_trigrams(text: str) -> list[str]:
    """Return the sentinel-padded character trigrams of ``text`` in order.

    The number of trigrams equals the code-point count of the trimmed text.
    """
    body = text.strip()
    if not body:
        raise ValueError("cannot extract trigrams from empty text")
    if BOS in body or EOS in body:
        raise ValueError("text contains a reserved sentinel code point")
    padded = BOS + body + EOS
    return [padded[i : i + 3] for i in range(len(padded) - 2)]


def segment_hook(text: str, segmenter: Callable[[str], str] | None = None) -> str:
    """Apply an optional external morpheme segmenter before featurization."""
    if segmenter is None:
        return text
    try:
        out = segmenter(text)
    except Exception as exc:
        raise SegmenterError(f"segmenter failed on {text[:40]!r}: {exc}") from exc
    if not isinstance(out, str):
        raise SegmenterError(f"segmenter returned {type(out).__name__}, expected str")
    return out


class TrigramVocabulary:
    """Bijection between trigram strings and indices ``1..size-1``.

    Index 0 is reserved for unknown trigrams and maps to no string.
    """

    def __init__(self, trigrams: Sequence[str]):
        self.trigrams: list[str | None] = [None, *trigrams]
        self.index_of: dict[str, int] = {}
        for i, tri in enumerate(trigrams, start=1):
            if tri in self.index_of:
                raise ValueError(f"duplicate trigram {tri!r} in vocabulary")
            self.index_of[tri] = i
        self.unk_index = UNK_INDEX

    @property
    def size(self) -> int:
        return len(self.trigrams)

    def __len__(self) -> int:
        return self.size

    def __eq__(self, other: object) -> bool:
        return isinstance(other, TrigramVocabulary) and self.trigrams == other.trigrams

    def lookup(self, trigram: str) -> int:
        return self.index_of.get(trigram, UNK_INDEX)

    def save(self, path) -> None:
        """Write one escaped trigram per line; line ``i`` holds index ``i``."""
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for tri in self.trigrams[1:]:
                fh.write(escape_trigram(tri) + "\n")

    @classmethod
    def load(cls, path) -> "TrigramVocabulary":
        with open(path, encoding="utf-8", newline="\n") as fh:
            lines = fh.read().split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        return cls([unescape_trigram(line) for line in lines])


def escape_trigram(tri: str) -> str:
    return "".join(_ESCAPES.get(ch, ch) for ch in tri)


def unescape_trigram(line: str) -> str:
    out = []
    chars = iter(line)
    for ch in chars:
        if ch == "\\":
            nxt = next(chars, None)
            if nxt not in _UNESCAPES:
                raise ValueError(f"bad escape sequence in vocabulary line {line!r}")
            out.append(_UNESCAPES[nxt])
        else:
            out.append(ch)
    return "".join(out)


def build_vocabulary(
    corpora: Iterable[LabeledCorpus],
    min_count: int = 1,
    segmenter: Callable[[str], str] | None = None,
) -> TrigramVocabulary:
    """Build one joint vocabulary over every given corpus.

    Trigrams seen at least ``min_count`` times are kept, ordered by
    descending count with lexicographic tie-breaking.
    """
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts: Counter[str] = Counter()
    n_sentences = 0
    for corpus in corpora:
        for sent in corpus.sentences:
            counts.update(extract_trigrams(segment_hook(sent.text, segmenter)))
            n_sentences += 1
    if n_sentences == 0:
        raise ValueError("cannot build a vocabulary from empty corpora")
    kept = [tri for tri, n in counts.items() if n >= min_count]
    kept.sort(key=lambda tri: (-counts[tri], tri))
    return TrigramVocabulary(kept)


@dataclass(frozen=True)
class SentenceEncoding:
    indices: tuple[int, ...]
    source_length: int

    def __post_init__(self):
        if not self.indices:
            raise ValueError("sentence encoding must be non-empty")

    def __len__(self) -> int:
        return len(self.indices)

    def reversed(self) -> "SentenceEncoding":
        return SentenceEncoding(self.indices[::-1], self.source_length)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=np.intp)


def encode(
    text: str,
    vocab: TrigramVocabulary,
    segmenter: Callable[[str], str] | None = None,
) -> SentenceEncoding:
    text = segment_hook(text, segmenter)
    trigrams = extract_trigrams(text)
    return SentenceEncoding(
        tuple(vocab.lookup(tri) for tri in trigrams), source_length=len(text.strip())
    )


@dataclass(frozen=True)
class EncodedCorpus:
    """Sentence encodings aligned with their labels."""

    encodings: tuple[SentenceEncoding, ...]
    labels: tuple[str, ...]

    def __post_init__(self):
        if len(self.encodings) != len(self.labels):
            raise ValueError("encodings and labels differ in length")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def label_set(self) -> frozenset[str]:
        return frozenset(self.labels)

    def indices_by_label(self) -> dict[str, list[int]]:
        groups: dict[str, list[int]] = {}
        for i, label in enumerate(self.labels):
            groups.setdefault(label, []).append(i)
        return groups


def encode_corpus(
    corpus: LabeledCorpus,
    vocab: TrigramVocabulary,
    segmenter: Callable[[str], str] | None = None,
) -> EncodedCorpus:
    return EncodedCorpus(
        tuple(encode(s.text, vocab, segmenter) for s in corpus.sentences),
        tuple(s.label for s in corpus.sentences),
    )
