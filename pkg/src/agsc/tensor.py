"""Dense float64 kernels shared by the model, the trainer and the probes.

Every function takes and returns ``numpy.ndarray`` objects of dtype float64.
Vector kernels operate along the last axis so they broadcast over batch and
sequence dimensions.
"""

from __future__ import annotations

import numpy as np
from scipy.special import erf

SQRT2 = np.sqrt(2.0)
INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


class ShapeError(ValueError):
    """Raised when kernel operands have incompatible shapes or indices."""


def _as_f64(x) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


def matmul(a, b) -> np.ndarray:
    """Matrix product of ``a[..., m, k]`` and ``b[k, n]`` (or batched ``b``)."""
    a = _as_f64(a)
    b = _as_f64(b)
    if a.ndim < 1 or b.ndim < 1:
        raise ShapeError("matmul needs at least 1-d operands")
    if a.shape[-1] != b.shape[-2 if b.ndim > 1 else 0]:
        raise ShapeError(f"inner dimensions differ: {a.shape} @ {b.shape}")
    return np.matmul(a, b)


def softmax(v) -> np.ndarray:
    v = _as_f64(v)
    shifted = v - v.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(v) -> np.ndarray:
    v = _as_f64(v)
    shifted = v - v.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def layer_norm(v, gain, bias, eps: float = 1e-5) -> np.ndarray:
    """Normalise the last axis to zero mean and unit variance, then scale and shift."""
    out, _ = layer_norm_fwd(v, gain, bias, eps)
    return out


def layer_norm_fwd(v, gain, bias, eps: float = 1e-5):
    """Layer norm that also returns ``(xhat, inv_std)`` for the backward pass."""
    v = _as_f64(v)
    gain = _as_f64(gain)
    bias = _as_f64(bias)
    if eps <= 0:
        raise ShapeError("eps must be positive")
    if gain.shape != v.shape[-1:] or bias.shape != v.shape[-1:]:
        raise ShapeError(f"gain/bias shape {gain.shape}/{bias.shape} vs input {v.shape}")
    mean = v.mean(axis=-1, keepdims=True)
    centred = v - mean
    var = (centred * centred).mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = centred * inv_std
    return xhat * gain + bias, (xhat, inv_std)


def layer_norm_bwd(dout, gain, xhat, inv_std):
    """Gradients ``(dx, dgain, dbias)``; dgain/dbias are summed over leading axes."""
    dxhat = dout * gain
    d = xhat.shape[-1]
    dx = inv_std * (
        dxhat
        - dxhat.sum(axis=-1, keepdims=True) / d
        - xhat * (dxhat * xhat).sum(axis=-1, keepdims=True) / d
    )
    lead = tuple(range(dout.ndim - 1))
    return dx, (dout * xhat).sum(axis=lead), dout.sum(axis=lead)


def gelu(v) -> np.ndarray:
    """Exact GELU, ``x * Phi(x)`` with the erf form of the normal CDF."""
    v = _as_f64(v)
    return 0.5 * v * (1.0 + erf(v / SQRT2))


def gelu_grad(v) -> np.ndarray:
    v = _as_f64(v)
    return 0.5 * (1.0 + erf(v / SQRT2)) + v * INV_SQRT_2PI * np.exp(-0.5 * v * v)


def cross_entropy(logits, target: int) -> float:
    """``-log softmax(logits)[target]`` for a single logit vector."""
    logits = _as_f64(logits)
    if logits.ndim != 1:
        raise ShapeError("cross_entropy expects a single logit vector")
    if not 0 <= target < logits.shape[0]:
        raise ShapeError(f"target {target} out of range for {logits.shape[0]} classes")
    return float(-log_softmax(logits)[target])
