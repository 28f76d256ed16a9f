"""Backpropagation through time for the encoder, plus a finite-difference oracle."""

from __future__ import annotations

from typing import Callable

import numpy as np

from siamtext.net import DIRECTIONS, DirectionCache, ForwardCache, ModelParams


class Gradients(ModelParams):
    """Gradient buffer mirroring every field of :class:`ModelParams`."""

    @classmethod
    def zeros_like(cls, params: ModelParams) -> "Gradients":
        return cls(**{k: np.zeros_like(v) for k, v in params.arrays().items()})

    def __add__(self, other: "Gradients") -> "Gradients":
        return Gradients(**{k: v + getattr(other, k) for k, v in self.arrays().items()})

    def __iadd__(self, other: "Gradients") -> "Gradients":
        for k, v in self.arrays().items():
            v += getattr(other, k)
        return self

    def scale_(self, factor: float) -> None:
        for v in self.arrays().values():
            v *= factor

    def global_norm(self) -> float:
        return float(np.sqrt(sum(float(np.sum(np.square(v, dtype=np.float64))) for v in self.arrays().values())))

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(v))) for v in self.arrays().values())


def _backward_direction(
    W: np.ndarray, U: np.ndarray, cache: DirectionCache, dh_final: np.ndarray, grads: Gradients, which: str
) -> None:
    T = cache.index.shape[0]
    H = U.shape[1]
    dW = getattr(grads, f"W_{which}")
    dU = getattr(grads, f"U_{which}")
    db = getattr(grads, f"b_{which}")
    dh = dh_final.copy()
    dc = np.zeros_like(dh)
    dx = np.empty_like(cache.x)
    for t in range(T - 1, -1, -1):
        m = cache.mask[t][:, None]
        acts = cache.acts[t]
        i, f, o, g = acts[:, :H], acts[:, H : 2 * H], acts[:, 2 * H : 3 * H], acts[:, 3 * H :]
        tc = cache.tanh_c[t]
        dh_step = np.where(m, dh, 0)
        dc_t = np.where(m, dc, 0) + dh_step * o * (1 - tc * tc)
        dz = np.empty_like(acts)
        dz[:, :H] = dc_t * g * i * (1 - i)
        dz[:, H : 2 * H] = dc_t * cache.c[t] * f * (1 - f)
        dz[:, 2 * H : 3 * H] = dh_step * tc * o * (1 - o)
        dz[:, 3 * H :] = dc_t * i * (1 - g * g)
        dW += dz.T @ cache.x[t]
        dU += dz.T @ cache.h[t]
        db += dz.sum(axis=0)
        dx[t] = dz @ W
        # padded steps pass state gradients straight through
        dh = np.where(m, dz @ U, dh)
        dc = np.where(m, dc_t * f, dc)
    np.add.at(grads.embedding, cache.index[cache.mask], dx[cache.mask])


def backward(params: ModelParams, cache: ForwardCache, grad_s: np.ndarray) -> Gradients:
    """Gradient of ``sum(grad_s * s)`` with respect to every shared parameter.

    ``grad_s`` has the shape of the ``s`` returned alongside ``cache``.
    Contributions of every sentence in the batch (both branches of every
    pair) are summed into one buffer.
    """
    grad_s = np.asarray(grad_s, dtype=params.dtype)
    if cache.single:
        grad_s = grad_s[None, :]
    if grad_s.shape != cache.s.shape:
        raise ValueError(f"grad_s shape {grad_s.shape} does not match cache output {cache.s.shape}")
    H = params.hidden_dim
    if cache.concat.shape[1] != 2 * H or params.W_out.shape[0] != cache.s.shape[1]:
        raise ValueError("cache was not produced with these parameters")
    grads = Gradients.zeros_like(params)
    d_pre = np.where(cache.pre > 0, grad_s, 0)
    grads.W_out += d_pre.T @ cache.concat
    grads.b_out += d_pre.sum(axis=0)
    d_concat = d_pre @ params.W_out
    for k, which in enumerate(DIRECTIONS):
        W, U, _ = params.direction(which)
        _backward_direction(W, U, cache.directions[which], d_concat[:, k * H : (k + 1) * H], grads, which)
    return grads


def finite_difference_grad(
    loss_fn: Callable[[ModelParams], float], params: ModelParams, epsilon: float = 1e-5
) -> Gradients:
    """Central-difference gradient of ``loss_fn`` at ``params``.

    Every entry is perturbed in place and restored to its exact original
    value afterwards.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    grads = Gradients.zeros_like(params)
    for name, arr in params.arrays().items():
        out = getattr(grads, name)
        flat = arr.reshape(-1)
        out_flat = out.reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + epsilon
            plus = loss_fn(params)
            flat[k] = orig - epsilon
            minus = loss_fn(params)
            flat[k] = orig
            if not (np.isfinite(plus) and np.isfinite(minus)):
                raise FloatingPointError(f"non-finite loss when perturbing {name}[{k}]")
            out_flat[k] = (plus - minus) / (2 * epsilon)
    return grads
