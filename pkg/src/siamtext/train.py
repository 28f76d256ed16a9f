"""Minibatch training of the shared encoder and the checkpoint file format."""

from __future__ import annotations

import json
import logging
import struct
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from siamtext.corpus import PairDataset, PairSample
from siamtext.featurizer import TrigramVocabulary
from siamtext.grad import Gradients, backward
from siamtext.loss import LossConfig, pair_losses_and_grads
from siamtext.net import ModelParams, NetConfig, encode_batch

log = logging.getLogger(__name__)


class NumericalAbort(FloatingPointError):
    """Training produced a non-finite loss or parameter."""


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 32
    epochs: int = 10
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    adam_epsilon: float = 1e-8
    clip_norm: float | None = 5.0
    seed: int = 0
    margin: float = 0.5
    threads: int = 1

    def __post_init__(self):
        if self.batch_size < 1 or self.epochs < 1 or self.threads < 1:
            raise ValueError("batch_size, epochs and threads must be >= 1")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be non-negative")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.clip_norm is not None and not self.clip_norm > 0:
            raise ValueError("clip_norm must be positive or None")

    @property
    def loss_config(self) -> LossConfig:
        return LossConfig(margin=self.margin)


@dataclass
class TrainReport:
    epoch_sum_loss: list[float] = field(default_factory=list)
    epoch_mean_loss: list[float] = field(default_factory=list)
    epoch_seconds: list[float] = field(default_factory=list)
    checksum: str = ""

    def loss_log(self) -> str:
        """One ``epoch<TAB>sum_loss<TAB>mean_loss`` line per epoch."""
        return "".join(
            f"{k}\t{total:.9g}\t{mean:.9g}\n"
            for k, (total, mean) in enumerate(zip(self.epoch_sum_loss, self.epoch_mean_loss), start=1)
        )


def params_checksum(params: ModelParams) -> str:
    crc = 0
    for arr in params.arrays().values():
        crc = zlib.crc32(np.ascontiguousarray(arr, dtype="<f4").tobytes(), crc)
    return f"{crc:08x}"


class SGD:
    def __init__(self, lr: float):
        self.lr = lr

    def step(self, params: ModelParams, grads: Gradients) -> None:
        for name, p in params.arrays().items():
            p -= self.lr * getattr(grads, name)


class Adam:
    def __init__(self, params: ModelParams, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.arrays().items()}
        self.v = {k: np.zeros_like(v) for k, v in params.arrays().items()}
        self.t = 0

    def step(self, params: ModelParams, grads: Gradients) -> None:
        self.t += 1
        corr1 = 1 - self.beta1**self.t
        corr2 = 1 - self.beta2**self.t
        step = self.lr * np.sqrt(corr2) / corr1
        for name, p in params.arrays().items():
            g = getattr(grads, name)
            m, v = self.m[name], self.v[name]
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            p -= (step * m / (np.sqrt(v) + self.eps)).astype(p.dtype)


def clip_by_global_norm(grads: Gradients, max_norm: float | None) -> float:
    norm = grads.global_norm()
    if max_norm is not None and norm > max_norm:
        grads.scale_(max_norm / norm)
    return norm


def pair_gradients(
    params: ModelParams, pairs: list[PairSample], loss_cfg: LossConfig
) -> tuple[np.ndarray, Gradients]:
    """Per-pair losses and the summed gradient over both branches of every pair."""
    B = len(pairs)
    S, cache = encode_batch(params, [p.left for p in pairs] + [p.right for p in pairs])
    y = np.array([p.y for p in pairs])
    losses, g1, g2 = pair_losses_and_grads(S[:B], S[B:], y, loss_cfg)
    if not np.isfinite(losses).all():
        return losses, Gradients.zeros_like(params)
    return losses, backward(params, cache, np.concatenate([g1, g2], axis=0))


def _batch_gradients(params, pairs, loss_cfg, pool):
    if pool is None or len(pairs) < 2:
        return pair_gradients(params, pairs, loss_cfg)
    n = pool._max_workers
    chunks = [pairs[k::n] for k in range(n) if pairs[k::n]]
    results = list(pool.map(lambda ch: pair_gradients(params, ch, loss_cfg), chunks))
    losses = np.concatenate([r[0] for r in results])
    grads = results[0][1]
    for _, g in results[1:]:
        grads += g
    return losses, grads


def train(
    params: ModelParams, dataset: PairDataset, cfg: TrainConfig
) -> tuple[ModelParams, TrainReport]:
    """Minimize the summed pair loss over ``cfg.epochs`` shuffled epochs.

    Each batch contributes one optimizer step on its clipped, summed
    gradient. The input ``params`` are not modified. A batch size larger
    than the dataset is reduced to the dataset size.
    """
    if len(dataset) == 0:
        raise ValueError("empty pair dataset")
    if not dataset.trainable:
        raise ValueError("dataset needs both positive and negative pairs")
    max_index = max(max(max(p.left.indices), max(p.right.indices)) for p in dataset.pairs)
    if max_index >= params.vocab_size:
        raise ValueError("dataset indices exceed the model vocabulary")
    params = params.copy()
    loss_cfg = cfg.loss_config
    if cfg.optimizer == "adam":
        opt = Adam(params, cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_epsilon)
    else:
        opt = SGD(cfg.learning_rate)
    rng = np.random.default_rng(cfg.seed)
    n = len(dataset)
    batch_size = min(cfg.batch_size, n)
    report = TrainReport()
    pool = ThreadPoolExecutor(cfg.threads) if cfg.threads > 1 else None
    batch_index = 0
    try:
        for epoch in range(cfg.epochs):
            start = time.perf_counter()
            order = rng.permutation(n)
            total = 0.0
            for k in range(0, n, batch_size):
                batch = [dataset.pairs[j] for j in order[k : k + batch_size]]
                losses, grads = _batch_gradients(params, batch, loss_cfg, pool)
                if not np.isfinite(losses).all():
                    raise NumericalAbort(f"non-finite loss in batch {batch_index} (epoch {epoch + 1})")
                total += float(np.sum(losses, dtype=np.float64))
                clip_by_global_norm(grads, cfg.clip_norm)
                opt.step(params, grads)
                if not params.is_finite():
                    raise NumericalAbort(f"non-finite parameters after batch {batch_index} (epoch {epoch + 1})")
                batch_index += 1
            report.epoch_sum_loss.append(total)
            report.epoch_mean_loss.append(total / n)
            report.epoch_seconds.append(time.perf_counter() - start)
            log.info("epoch %d sum_loss=%.6f mean_loss=%.6f", epoch + 1, total, total / n)
    finally:
        if pool is not None:
            pool.shutdown()
    report.checksum = params_checksum(params)
    return params, report


# Checkpoint layout (all integers little-endian):
#   magic[8] | version u8 | header_len u32 | header JSON (utf-8)
#   | float32 arrays in ModelParams field order | crc32 u32 of all preceding bytes
MAGIC = b"SIAMTXT\x00"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    """Base class for unreadable checkpoints."""


class BadMagicError(CheckpointError):
    pass


class VersionMismatchError(CheckpointError):
    pass


class TruncatedCheckpointError(CheckpointError):
    pass


class ChecksumError(CheckpointError):
    pass


def save_checkpoint(params: ModelParams, vocab: TrigramVocabulary, configs: dict, path) -> None:
    """Write params, vocabulary and a JSON-serializable ``configs`` dict."""
    arrays = params.arrays()
    header = {
        "configs": {k: asdict(v) if hasattr(v, "__dataclass_fields__") else v for k, v in configs.items()},
        "arrays": [[name, list(arr.shape)] for name, arr in arrays.items()],
        "vocab": vocab.trigrams[1:],
    }
    header_bytes = json.dumps(header, sort_keys=True, ensure_ascii=False).encode("utf-8")
    body = bytearray(MAGIC)
    body += struct.pack("<BI", FORMAT_VERSION, len(header_bytes))
    body += header_bytes
    for arr in arrays.values():
        body += np.ascontiguousarray(arr, dtype="<f4").tobytes()
    body += struct.pack("<I", zlib.crc32(body))
    Path(path).write_bytes(bytes(body))


def load_checkpoint(path) -> tuple[ModelParams, TrigramVocabulary, dict]:
    data = Path(path).read_bytes()
    if data[: len(MAGIC)] != MAGIC:
        raise BadMagicError(f"{path}: not a checkpoint file")
    pos = len(MAGIC)
    if len(data) < pos + 5:
        raise TruncatedCheckpointError(f"{path}: truncated header")
    version, header_len = struct.unpack_from("<BI", data, pos)
    if version != FORMAT_VERSION:
        raise VersionMismatchError(f"{path}: format version {version}, expected {FORMAT_VERSION}")
    pos += 5
    if len(data) < pos + header_len:
        raise TruncatedCheckpointError(f"{path}: truncated header")
    try:
        header = json.loads(data[pos : pos + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ChecksumError(f"{path}: corrupt header ({exc})") from None
    pos += header_len
    arrays = {}
    for name, shape in header["arrays"]:
        nbytes = 4 * int(np.prod(shape, dtype=np.int64))
        if len(data) < pos + nbytes:
            raise TruncatedCheckpointError(f"{path}: truncated inside array {name}")
        arrays[name] = np.frombuffer(data, dtype="<f4", count=nbytes // 4, offset=pos).reshape(shape).astype(np.float32)
        pos += nbytes
    if len(data) < pos + 4:
        raise TruncatedCheckpointError(f"{path}: missing checksum")
    if len(data) > pos + 4:
        raise ChecksumError(f"{path}: trailing bytes after checksum")
    (stored,) = struct.unpack_from("<I", data, pos)
    if zlib.crc32(data[:pos]) != stored:
        raise ChecksumError(f"{path}: checksum mismatch")
    if tuple(arrays) != ModelParams.field_names():
        raise CheckpointError(f"{path}: unexpected array layout {list(arrays)}")
    return ModelParams(**arrays), TrigramVocabulary(header["vocab"]), header["configs"]


def net_config_from(configs: dict) -> NetConfig:
    return NetConfig(**configs["net"])
