"""Reference-set voting classifier and evaluation metrics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from siamtext.featurizer import EncodedCorpus, SentenceEncoding
from siamtext.net import ModelParams, encode_sentence, project

# Projections are ReLU outputs, so every cosine is >= 0 and a zero threshold
# would count nearly every reference as a match. The default is the
# training margin, the level below which negatives are pushed.
DEFAULT_TAU = 0.5


@dataclass(frozen=True)
class ReferenceSet:
    """Projected reference vectors per class, with their source sentence ids."""

    vectors: dict[str, np.ndarray]  # label -> [n_refs, d]
    ids: dict[str, tuple[int, ...]]
    per_class_count: int = 100

    def __post_init__(self):
        if not self.vectors:
            raise ValueError("reference set is empty")
        for label, vecs in self.vectors.items():
            if len(vecs) == 0:
                raise ValueError(f"class {label!r} has no references")

    @property
    def labels(self) -> list[str]:
        return sorted(self.vectors)


def build_reference_set(
    params: ModelParams, corpus: EncodedCorpus, per_class: int = 100, seed: int = 0
) -> ReferenceSet:
    """Sample up to ``per_class`` sentences per class and project them.

    Classes with fewer sentences contribute all of them.
    """
    if per_class < 1:
        raise ValueError("per_class must be >= 1")
    groups = corpus.indices_by_label()
    if not groups:
        raise ValueError("reference corpus is empty")
    rng = np.random.default_rng(seed)
    vectors, ids = {}, {}
    for label in sorted(groups):
        idx = np.asarray(groups[label])
        chosen = np.sort(rng.choice(idx, size=min(per_class, idx.size), replace=False))
        ids[label] = tuple(int(i) for i in chosen)
        vectors[label] = project(params, [corpus.encodings[i] for i in chosen]).astype(np.float64)
    return ReferenceSet(vectors, ids, per_class)


def _cosines(s: np.ndarray, refs: np.ndarray, eps: float = 1e-8) -> np.ndarray:
    ns = max(float(np.linalg.norm(s)), eps)
    nr = np.maximum(np.linalg.norm(refs, axis=1), eps)
    return np.clip(refs @ s / (nr * ns), -1.0, 1.0)


def vote(s: np.ndarray, refs: ReferenceSet, tau: float = DEFAULT_TAU, mode: str = "votes"):
    """Predict a label from a projected vector.

    ``mode="votes"`` counts references with cosine above ``tau`` and breaks
    ties by mean cosine, then by the smallest label. ``mode="mean"`` ranks
    classes by mean cosine alone.
    """
    if mode not in ("votes", "mean"):
        raise ValueError(f"unknown mode {mode!r}")
    s = np.asarray(s, dtype=np.float64)
    counts, means = {}, {}
    for label in refs.labels:
        cos = _cosines(s, refs.vectors[label])
        counts[label] = int(np.sum(cos > tau))
        means[label] = float(cos.mean())
    if mode == "votes":
        key = lambda lab: (-counts[lab], -means[lab], lab)
    else:
        key = lambda lab: (-means[lab], lab)
    best = min(refs.labels, key=key)
    return best, {"match_counts": counts, "mean_similarity": means}


def classify(
    params: ModelParams, refs: ReferenceSet, enc: SentenceEncoding, tau: float = DEFAULT_TAU, mode: str = "votes"
):
    """Encode one sentence and vote against ``refs``. Returns ``(label, diagnostics)``."""
    s, _ = encode_sentence(params, enc)
    return vote(s, refs, tau, mode)


@dataclass
class Metrics:
    labels: list[str]
    confusion: np.ndarray  # rows: true label, columns: predicted label
    accuracy: float
    precision: dict[str, float]
    recall: dict[str, float]
    f1: dict[str, float]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    zero_division: list[str] = field(default_factory=list)

    def as_lines(self) -> list[tuple[str, float]]:
        rows = [("accuracy", self.accuracy)]
        rows += [("macro_precision", self.macro_precision), ("macro_recall", self.macro_recall), ("macro_f1", self.macro_f1)]
        for lab in self.labels:
            rows += [(f"precision[{lab}]", self.precision[lab]), (f"recall[{lab}]", self.recall[lab]), (f"f1[{lab}]", self.f1[lab])]
        return rows

    def to_tsv(self) -> str:
        return "".join(f"{name}\t{value:.6f}\n" for name, value in self.as_lines())

    def confusion_grid(self) -> str:
        width = max(8, *(len(l) for l in self.labels))
        head = "true\\pred".ljust(width) + "".join(l.rjust(width + 1) for l in self.labels)
        lines = [head]
        for lab, row in zip(self.labels, self.confusion):
            lines.append(lab.ljust(width) + "".join(str(int(v)).rjust(width + 1) for v in row))
        return "\n".join(lines) + "\n"

    def table(self) -> str:
        out = [f"accuracy  {self.accuracy:.4f}", "", f"{'class':<16}{'P':>8}{'R':>8}{'F1':>8}{'n':>8}"]
        support = self.confusion.sum(axis=1)
        for k, lab in enumerate(self.labels):
            out.append(f"{lab:<16}{self.precision[lab]:>8.4f}{self.recall[lab]:>8.4f}{self.f1[lab]:>8.4f}{int(support[k]):>8d}")
        out.append(f"{'macro':<16}{self.macro_precision:>8.4f}{self.macro_recall:>8.4f}{self.macro_f1:>8.4f}{int(support.sum()):>8d}")
        if self.zero_division:
            out.append(f"zero-division (scored 0): {', '.join(self.zero_division)}")
        return "\n".join(out) + "\n"


def metrics_from_predictions(y_true: Sequence[str], y_pred: Sequence[str], labels: Sequence[str]) -> Metrics:
    """Confusion matrix, accuracy and per-class / macro P, R, F1.

    An undefined ratio scores 0 and its class is listed in ``zero_division``.
    """
    labels = sorted(labels)
    pos = {lab: k for k, lab in enumerate(labels)}
    unknown = sorted(set(y_true) - set(labels))
    if unknown:
        raise ValueError(f"labels not among the reference classes: {', '.join(unknown)}")
    if len(y_true) != len(y_pred) or not y_true:
        raise ValueError("need equal, non-zero numbers of true and predicted labels")
    conf = np.zeros((len(labels), len(labels)), dtype=np.int64)
    np.add.at(conf, ([pos[t] for t in y_true], [pos[p] for p in y_pred]), 1)
    tp = np.diag(conf)
    pred_tot = conf.sum(axis=0)
    true_tot = conf.sum(axis=1)
    prec, rec, f1, flagged = {}, {}, {}, []
    for k, lab in enumerate(labels):
        bad = False
        if pred_tot[k]:
            p = tp[k] / pred_tot[k]
        else:
            p, bad = 0.0, True
        if true_tot[k]:
            r = tp[k] / true_tot[k]
        else:
            r, bad = 0.0, True
        f = 2 * p * r / (p + r) if p + r > 0 else 0.0
        if bad:
            flagged.append(lab)
        prec[lab], rec[lab], f1[lab] = float(p), float(r), float(f)
    return Metrics(
        labels=labels,
        confusion=conf,
        accuracy=float(tp.sum() / conf.sum()),
        precision=prec,
        recall=rec,
        f1=f1,
        macro_precision=float(np.mean([prec[l] for l in labels])),
        macro_recall=float(np.mean([rec[l] for l in labels])),
        macro_f1=float(np.mean([f1[l] for l in labels])),
        zero_division=flagged,
    )


def predict_many(
    params: ModelParams, refs: ReferenceSet, encodings: Sequence[SentenceEncoding], tau: float = DEFAULT_TAU, mode: str = "votes"
) -> list[str]:
    S = project(params, list(encodings))
    return [vote(s, refs, tau, mode)[0] for s in S]


def evaluate(
    params: ModelParams, refs: ReferenceSet, test_corpus: EncodedCorpus, tau: float = DEFAULT_TAU, mode: str = "votes"
) -> Metrics:
    unseen = sorted(test_corpus.label_set - set(refs.labels))
    if unseen:
        raise ValueError(f"test labels without references: {', '.join(unseen)}")
    preds = predict_many(params, refs, test_corpus.encodings, tau, mode)
    return metrics_from_predictions(list(test_corpus.labels), preds, refs.labels)
