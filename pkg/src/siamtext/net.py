"""Shared Bi-LSTM encoder with a ReLU dense projection.

The gate blocks of every ``4H``-row matrix are stacked in the order
input, forget, output, candidate. One :class:`ModelParams` instance is the
whole parameter set; both siamese branches call the same functions on it.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Sequence

import numpy as np

from siamtext.featurizer import SentenceEncoding

DIRECTIONS = ("fwd", "bwd")


@dataclass(frozen=True)
class NetConfig:
    vocab_size: int
    embed_dim: int = 64
    hidden_dim: int = 64
    output_dim: int = 128
    init_scale: float = 1.0
    seed: int = 0

    def __post_init__(self):
        for name in ("vocab_size", "embed_dim", "hidden_dim", "output_dim"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not self.init_scale > 0:
            raise ValueError("init_scale must be positive")


@dataclass
class ModelParams:
    """The single shared parameter set.

    Field order here is the serialization order of checkpoints.
    """

    embedding: np.ndarray  # [V, E]
    W_fwd: np.ndarray  # [4H, E]
    U_fwd: np.ndarray  # [4H, H]
    b_fwd: np.ndarray  # [4H]
    W_bwd: np.ndarray
    U_bwd: np.ndarray
    b_bwd: np.ndarray
    W_out: np.ndarray  # [d, 2H]
    b_out: np.ndarray  # [d]

    @classmethod
    def field_names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))

    def arrays(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in self.field_names()}

    @property
    def dtype(self):
        return self.embedding.dtype

    @property
    def hidden_dim(self) -> int:
        return self.U_fwd.shape[1]

    @property
    def vocab_size(self) -> int:
        return self.embedding.shape[0]

    def direction(self, which: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return getattr(self, f"W_{which}"), getattr(self, f"U_{which}"), getattr(self, f"b_{which}")

    def copy(self):
        return type(self)(**{k: v.copy() for k, v in self.arrays().items()})

    def astype(self, dtype):
        return type(self)(**{k: v.astype(dtype) for k, v in self.arrays().items()})

    def is_finite(self) -> bool:
        return all(np.isfinite(v).all() for v in self.arrays().values())

    def bitwise_equal(self, other: "ModelParams") -> bool:
        return all(
            a.dtype == b.dtype and a.shape == b.shape and a.tobytes() == b.tobytes()
            for a, b in zip(self.arrays().values(), other.arrays().values())
        )


def param_shapes(config: NetConfig) -> dict[str, tuple[int, ...]]:
    V, E, H, d = config.vocab_size, config.embed_dim, config.hidden_dim, config.output_dim
    shapes = {"embedding": (V, E)}
    for which in DIRECTIONS:
        shapes[f"W_{which}"] = (4 * H, E)
        shapes[f"U_{which}"] = (4 * H, H)
        shapes[f"b_{which}"] = (4 * H,)
    shapes["W_out"] = (d, 2 * H)
    shapes["b_out"] = (d,)
    return shapes


def init_params(config: NetConfig, dtype=np.float32) -> ModelParams:
    """Uniform ``[-s, s] / sqrt(fan_in)`` weights, zero biases, forget bias 1.

    The embedding is the input matrix of a one-hot vector, so its fan-in
    is the vocabulary size.
    """
    rng = np.random.default_rng(config.seed)
    H = config.hidden_dim
    arrays = {}
    for name, shape in param_shapes(config).items():
        if name.startswith("b_"):
            arr = np.zeros(shape)
            if name != "b_out":
                arr[H : 2 * H] = 1.0
        else:
            fan_in = shape[0] if name == "embedding" else shape[1]
            bound = config.init_scale / np.sqrt(fan_in)
            arr = rng.uniform(-bound, bound, size=shape)
        arrays[name] = arr.astype(dtype)
    return ModelParams(**arrays)


def sigmoid(x: np.ndarray) -> np.ndarray:
    # split form avoids overflow in exp for large |x|
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _gates(z: np.ndarray, H: int) -> np.ndarray:
    acts = np.empty_like(z)
    acts[..., : 3 * H] = sigmoid(z[..., : 3 * H])
    acts[..., 3 * H :] = np.tanh(z[..., 3 * H :])
    return acts


def lstm_step(W, U, b, x, h_prev, c_prev):
    """One LSTM step. Works on single vectors or on row-batches.

    Returns ``(h, c)``.
    """
    h, c, _ = _lstm_step(W, U, b, np.asarray(x), np.asarray(h_prev), np.asarray(c_prev))
    return h, c


def _lstm_step(W, U, b, x, h_prev, c_prev):
    H = U.shape[1]
    if W.shape != (4 * H, x.shape[-1]) or U.shape != (4 * H, H) or b.shape != (4 * H,):
        raise ValueError("LSTM parameter shapes do not agree with the input")
    if h_prev.shape[-1] != H or c_prev.shape[-1] != H:
        raise ValueError(f"state size must be {H}")
    z = x @ W.T + h_prev @ U.T + b
    acts = _gates(z, H)
    i, f, o, g = acts[..., :H], acts[..., H : 2 * H], acts[..., 2 * H : 3 * H], acts[..., 3 * H :]
    c = f * c_prev + i * g
    h = o * np.tanh(c)
    return h, c, acts


@dataclass
class DirectionCache:
    index: np.ndarray  # [T, B] embedding rows fed at each step
    mask: np.ndarray  # [T, B] bool, False on padding steps
    x: np.ndarray  # [T, B, E]
    acts: np.ndarray  # [T, B, 4H] gate activations i, f, o, g
    h: np.ndarray  # [T+1, B, H], h[0] = 0
    c: np.ndarray  # [T+1, B, H], c[0] = 0
    tanh_c: np.ndarray  # [T, B, H]


@dataclass
class ForwardCache:
    directions: dict[str, DirectionCache]
    lengths: np.ndarray  # [B]
    concat: np.ndarray  # [B, 2H] = [fw, bw]
    pre: np.ndarray  # [B, d] dense pre-activation
    s: np.ndarray  # [B, d]
    single: bool = False

    @property
    def fw(self) -> np.ndarray:
        H = self.concat.shape[-1] // 2
        return self.concat[..., :H]

    @property
    def bw(self) -> np.ndarray:
        H = self.concat.shape[-1] // 2
        return self.concat[..., H:]


def _padded(seqs: Sequence[np.ndarray], T: int) -> tuple[np.ndarray, np.ndarray]:
    index = np.zeros((T, len(seqs)), dtype=np.intp)
    mask = np.zeros((T, len(seqs)), dtype=bool)
    for b, seq in enumerate(seqs):
        index[: len(seq), b] = seq
        mask[: len(seq), b] = True
    return index, mask


def _run_direction(params: ModelParams, which: str, index: np.ndarray, mask: np.ndarray) -> DirectionCache:
    W, U, bias = params.direction(which)
    T, B = index.shape
    H = params.hidden_dim
    dtype = params.dtype
    x = params.embedding[index]
    acts = np.empty((T, B, 4 * H), dtype=dtype)
    h = np.zeros((T + 1, B, H), dtype=dtype)
    c = np.zeros((T + 1, B, H), dtype=dtype)
    tanh_c = np.empty((T, B, H), dtype=dtype)
    for t in range(T):
        h_new, c_new, acts[t] = _lstm_step(W, U, bias, x[t], h[t], c[t])
        tanh_c[t] = np.tanh(c_new)
        m = mask[t]
        if m.all():
            h[t + 1], c[t + 1] = h_new, c_new
        else:
            # padded rows carry their state forward unchanged
            h[t + 1] = np.where(m[:, None], h_new, h[t])
            c[t + 1] = np.where(m[:, None], c_new, c[t])
    return DirectionCache(index, mask, x, acts, h, c, tanh_c)


def encode_batch(params: ModelParams, encodings: Sequence[SentenceEncoding]) -> tuple[np.ndarray, ForwardCache]:
    """Project a batch of sentences to ``s = relu(W_out [fw, bw] + b_out)``.

    ``fw`` is the last hidden state of the forward pass; ``bw`` is the last
    hidden state of the backward pass over the reversed sequence.
    Returns ``s`` with shape ``[B, d]`` and the cache needed by BPTT.
    """
    if not encodings:
        raise ValueError("empty batch")
    seqs = []
    V = params.vocab_size
    for enc in encodings:
        seq = enc.as_array() if isinstance(enc, SentenceEncoding) else np.asarray(enc, dtype=np.intp)
        if seq.size == 0:
            raise ValueError("cannot encode an empty sequence")
        if seq.min() < 0 or seq.max() >= V:
            raise ValueError(f"trigram index out of range for vocabulary of size {V}")
        seqs.append(seq)
    lengths = np.array([len(s) for s in seqs])
    T = int(lengths.max())
    caches = {}
    finals = []
    for which in DIRECTIONS:
        ordered = seqs if which == "fwd" else [s[::-1] for s in seqs]
        index, mask = _padded(ordered, T)
        cache = _run_direction(params, which, index, mask)
        caches[which] = cache
        finals.append(cache.h[T])
    concat = np.concatenate(finals, axis=1)
    pre = concat @ params.W_out.T + params.b_out
    s = np.maximum(pre, 0)
    return s, ForwardCache(caches, lengths, concat, pre, s)


def encode_sentence(params: ModelParams, enc: SentenceEncoding) -> tuple[np.ndarray, ForwardCache]:
    """Single-sentence form of :func:`encode_batch`; ``s`` has shape ``[d]``."""
    s, cache = encode_batch(params, [enc])
    cache.single = True
    return s[0], cache


def project(params: ModelParams, encodings: Sequence[SentenceEncoding], batch_size: int = 256) -> np.ndarray:
    """Projected vectors for many sentences, without keeping caches."""
    out = [encode_batch(params, encodings[k : k + batch_size])[0] for k in range(0, len(encodings), batch_size)]
    return np.concatenate(out, axis=0)
