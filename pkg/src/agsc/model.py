"""A small post-LN transformer whose hidden states can be recorded and overridden.

A *neuron* is one dimension of the hidden state a layer hands to the next:
layer 0 is the normalised embedding output and layer ``l >= 1`` is the output
of block ``l`` after its second residual layer norm. A model with ``L``
blocks and width ``d`` therefore has ``(L + 1) * d`` neurons per position.

Two modes share the architecture. ``alm`` uses a causal attention mask and
reads next-token logits; ``mlm`` attends bidirectionally and reads logits at
a mask token.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import tensor as T
from .vocab import NUMBERS, WORD_CLASSES, Vocabulary

MODES = ("alm", "mlm")
INIT_STD = 0.02


class ContractError(ValueError):
    """Out-of-range token, position or neuron."""


@dataclass(frozen=True)
class ModelConfig:
    mode: str
    n_layers: int
    hidden_dim: int
    n_heads: int
    ff_dim: int
    vocab_size: int
    max_len: int
    seed: int = 0
    use_features: bool = True
    ln_eps: float = 1e-5

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.n_layers < 1:
            raise ValueError("n_layers must be >= 1")
        if self.hidden_dim < 1 or self.hidden_dim % self.n_heads:
            raise ValueError("hidden_dim must be a positive multiple of n_heads")
        if min(self.ff_dim, self.vocab_size, self.max_len) < 1:
            raise ValueError("ff_dim, vocab_size and max_len must be positive")

    @property
    def n_neurons(self) -> int:
        return (self.n_layers + 1) * self.hidden_dim

    @property
    def head_dim(self) -> int:
        return self.hidden_dim // self.n_heads

    @property
    def causal(self) -> bool:
        return self.mode == "alm"

    def to_json(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_json(cls, data: dict) -> "ModelConfig":
        return cls(**data)


class NeuronId(NamedTuple):
    layer: int
    dim: int


@dataclass
class InterventionSpec:
    """Replace ``hidden[layer][position][dim]`` for every ``(layer, dim)`` key."""

    position: int
    overrides: dict[NeuronId, float] = field(default_factory=dict)


@dataclass
class ActivationCache:
    """Hidden states ``[layer, position, dim]`` from one forward pass."""

    hidden: np.ndarray

    def value(self, neuron: NeuronId, position: int) -> float:
        return float(self.hidden[neuron.layer, position, neuron.dim])

    def column(self, position: int) -> np.ndarray:
        """All ``(L + 1) x d`` neuron values at one position."""
        return self.hidden[:, position, :]


def param_shapes(config: ModelConfig) -> list[tuple[str, tuple[int, ...]]]:
    """Parameter names and shapes in the fixed serialisation order."""
    d, f, v = config.hidden_dim, config.ff_dim, config.vocab_size
    shapes = [("tok_emb", (v, d))]
    if config.use_features:
        shapes += [("num_emb", (len(NUMBERS), d)), ("cls_emb", (len(WORD_CLASSES), d))]
    shapes += [("pos_emb", (config.max_len, d)), ("emb_ln_g", (d,)), ("emb_ln_b", (d,))]
    for i in range(1, config.n_layers + 1):
        p = f"layers.{i}."
        shapes += [
            (p + "qkv_w", (d, 3 * d)),
            (p + "qkv_b", (3 * d,)),
            (p + "out_w", (d, d)),
            (p + "out_b", (d,)),
            (p + "ln1_g", (d,)),
            (p + "ln1_b", (d,)),
            (p + "ff_in_w", (d, f)),
            (p + "ff_in_b", (f,)),
            (p + "ff_out_w", (f, d)),
            (p + "ff_out_b", (d,)),
            (p + "ln2_g", (d,)),
            (p + "ln2_b", (d,)),
        ]
    shapes.append(("out_bias", (v,)))
    return shapes


def random_init_params(config: ModelConfig) -> dict[str, np.ndarray]:
    """Gaussian init with std 0.02; layer-norm gains 1 and every bias 0."""
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 0x1A17]))
    params = {}
    for name, shape in param_shapes(config):
        leaf = name.rsplit(".", 1)[-1]
        if leaf.endswith("_g"):
            params[name] = np.ones(shape)
        elif leaf.endswith("_b") or leaf == "out_bias":
            params[name] = np.zeros(shape)
        else:
            params[name] = rng.normal(0.0, INIT_STD, size=shape)
    return params


class Patch(NamedTuple):
    """Batched override at one layer: rows ``b`` set ``h[b, position, mask[b]] = values[b]``."""

    position: int
    mask: np.ndarray  # [B, d] bool
    values: np.ndarray  # [B, d] or [d]


class Model:
    """Weights plus vocabulary; immutable by convention once built."""

    def __init__(self, config: ModelConfig, params: dict[str, np.ndarray], vocab: Vocabulary, meta: dict | None = None):
        if len(vocab) != config.vocab_size:
            raise ValueError(f"vocabulary has {len(vocab)} tokens, config says {config.vocab_size}")
        expected = dict(param_shapes(config))
        if set(params) != set(expected):
            raise ValueError("parameter names do not match the config")
        for name, shape in expected.items():
            if params[name].shape != shape:
                raise ValueError(f"{name}: shape {params[name].shape}, expected {shape}")
        self.config = config
        self.params = params
        self.vocab = vocab
        self.meta = dict(meta or {})
        self._number = vocab.number_array
        self._class = vocab.class_array

    @classmethod
    def random_init(cls, config: ModelConfig, vocab: Vocabulary) -> "Model":
        return cls(config, random_init_params(config), vocab, {"init": "random", "seed": config.seed})

    # ------------------------------------------------------------------ pieces

    def input_embedding(self, ids: np.ndarray) -> np.ndarray:
        p = self.params
        x = p["tok_emb"][ids]
        if self.config.use_features:
            x = x + p["num_emb"][self._number[ids]] + p["cls_emb"][self._class[ids]]
        return x + p["pos_emb"][: ids.shape[-1]]

    def output_matrix(self) -> np.ndarray:
        """Tied output embeddings, one row per vocabulary token."""
        p = self.params
        w = p["tok_emb"]
        if self.config.use_features:
            w = w + p["num_emb"][self._number] + p["cls_emb"][self._class]
        return w

    def embed(self, ids: np.ndarray) -> np.ndarray:
        p = self.params
        return T.layer_norm(self.input_embedding(ids), p["emb_ln_g"], p["emb_ln_b"], self.config.ln_eps)

    def _attn_bias(self, n: int) -> np.ndarray | None:
        if not self.config.causal:
            return None
        return np.triu(np.full((n, n), -np.inf), k=1)

    def block(self, layer: int, h: np.ndarray) -> np.ndarray:
        """Block ``layer`` (1-based) applied to ``h[B, T, d]``."""
        cfg, p, pre = self.config, self.params, f"layers.{layer}."
        B, n, d = h.shape
        H, dh = cfg.n_heads, cfg.head_dim
        qkv = T.matmul(h, p[pre + "qkv_w"]) + p[pre + "qkv_b"]
        q, k, v = (qkv[..., i * d : (i + 1) * d].reshape(B, n, H, dh).transpose(0, 2, 1, 3) for i in range(3))
        scores = np.matmul(q, k.transpose(0, 1, 3, 2)) / math.sqrt(dh)
        bias = self._attn_bias(n)
        if bias is not None:
            scores = scores + bias
        ctx = np.matmul(T.softmax(scores), v).transpose(0, 2, 1, 3).reshape(B, n, d)
        x = T.layer_norm(h + T.matmul(ctx, p[pre + "out_w"]) + p[pre + "out_b"], p[pre + "ln1_g"], p[pre + "ln1_b"], cfg.ln_eps)
        ff = T.matmul(T.gelu(T.matmul(x, p[pre + "ff_in_w"]) + p[pre + "ff_in_b"]), p[pre + "ff_out_w"]) + p[pre + "ff_out_b"]
        return T.layer_norm(x + ff, p[pre + "ln2_g"], p[pre + "ln2_b"], cfg.ln_eps)

    def logits(self, h: np.ndarray) -> np.ndarray:
        return T.matmul(h, self.output_matrix().T) + self.params["out_bias"]

    # ------------------------------------------------------------------ runs

    def run(
        self,
        ids: np.ndarray | None = None,
        *,
        start_layer: int = 0,
        hidden: np.ndarray | None = None,
        patches: dict[int, Patch] | None = None,
        keep_hidden: bool = False,
    ):
        """Batched forward returning the final hidden state ``[B, T, d]``.

        ``hidden`` gives the layer-``start_layer`` states in place of token
        ids (required when ``start_layer > 0``); patches for that
        layer are applied again, which is idempotent. With ``keep_hidden``
        the return value is ``(final, stack)`` where ``stack`` is
        ``[B, L + 1 - start_layer, T, d]``.
        """
        patches = patches or {}
        if hidden is not None:
            h = np.array(hidden, dtype=np.float64, copy=True)
        elif start_layer == 0:
            h = self.embed(np.atleast_2d(np.asarray(ids, dtype=np.int64)))
        else:
            raise ValueError("hidden states are required when start_layer > 0")
        stack = []
        for layer in range(start_layer, self.config.n_layers + 1):
            if layer > start_layer:
                h = self.block(layer, h)
            patch = patches.get(layer)
            if patch is not None:
                col = h[:, patch.position, :]
                h[:, patch.position, :] = np.where(patch.mask, patch.values, col)
            if keep_hidden:
                stack.append(h)
        if keep_hidden:
            return h, np.stack(stack, axis=1)
        return h

    def _check_tokens(self, ids: np.ndarray) -> None:
        if ids.ndim != 1 or ids.size == 0:
            raise ContractError("expected a non-empty 1-d token sequence")
        if ids.size > self.config.max_len:
            raise ContractError(f"sequence length {ids.size} exceeds max_len {self.config.max_len}")
        if ids.min() < 0 or ids.max() >= self.config.vocab_size:
            raise ContractError("token id out of range")

    def intervention_patches(self, intervention: InterventionSpec, seq_len: int) -> dict[int, Patch]:
        L, d = self.config.n_layers, self.config.hidden_dim
        if not 0 <= intervention.position < seq_len:
            raise ContractError(f"intervention position {intervention.position} outside sequence of {seq_len}")
        by_layer: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        for (layer, dim), value in intervention.overrides.items():
            if not (0 <= layer <= L and 0 <= dim < d):
                raise ContractError(f"neuron ({layer}, {dim}) outside {L + 1} layers x {d} dims")
            mask, values = by_layer.setdefault(layer, (np.zeros((1, d), bool), np.zeros((1, d))))
            mask[0, dim] = True
            values[0, dim] = value
        return {layer: Patch(intervention.position, m, v) for layer, (m, v) in by_layer.items()}

    def forward(self, tokens, query_position: int, intervention: InterventionSpec | None = None):
        """Single-sequence forward: ``(logits[V] at query_position, ActivationCache)``."""
        ids = np.asarray(tokens, dtype=np.int64)
        self._check_tokens(ids)
        if not 0 <= query_position < ids.size:
            raise ContractError(f"query position {query_position} outside sequence of {ids.size}")
        patches = self.intervention_patches(intervention, ids.size) if intervention else None
        final, stack = self.run(ids[None, :], patches=patches, keep_hidden=True)
        return self.logits(final[0, query_position]), ActivationCache(stack[0])

    def token_logprob(self, logits: np.ndarray, token: int) -> float:
        return token_probability(logits, token)[1]


def token_probability(logits: np.ndarray, token: int) -> tuple[float, float]:
    """``(p, log p)`` of ``token`` under ``softmax(logits)``."""
    logits = np.asarray(logits, dtype=np.float64)
    if not 0 <= token < logits.shape[-1]:
        raise ContractError(f"token {token} out of range for {logits.shape[-1]} logits")
    logp = float(T.log_softmax(logits)[token])
    return float(T.softmax(logits)[token]), logp


def random_init_weights(config: ModelConfig, vocab: Vocabulary | None = None) -> Model:
    """Untrained model for the random-initialisation baseline."""
    return Model.random_init(config, vocab or Vocabulary.synthetic(config.vocab_size))


# ---------------------------------------------------------------------- training pass


def loss_and_grads(model: Model, ids: np.ndarray, targets: np.ndarray, out_ids: np.ndarray | None = None):
    """Mean cross-entropy over positions with ``targets >= 0`` and its gradients.

    ``ids`` and ``targets`` are ``[B, T]``. ``out_ids`` restricts the softmax
    to a subset of output tokens (targets are given as full-vocabulary ids).
    Returns ``(loss, grads)`` with ``grads`` keyed like ``model.params``.
    """
    cfg, p = model.config, model.params
    B, n = ids.shape
    d, H, dh, eps = cfg.hidden_dim, cfg.n_heads, cfg.head_dim, cfg.ln_eps
    grads = {k: np.zeros_like(v) for k, v in p.items()}

    x_in = model.input_embedding(ids)
    h, (xh0, is0) = T.layer_norm_fwd(x_in, p["emb_ln_g"], p["emb_ln_b"], eps)
    bias = model._attn_bias(n)
    caches = []
    for layer in range(1, cfg.n_layers + 1):
        pre = f"layers.{layer}."
        qkv = h @ p[pre + "qkv_w"] + p[pre + "qkv_b"]
        q, k, v = (qkv[..., i * d : (i + 1) * d].reshape(B, n, H, dh).transpose(0, 2, 1, 3) for i in range(3))
        scores = np.matmul(q, k.transpose(0, 1, 3, 2)) / math.sqrt(dh)
        if bias is not None:
            scores = scores + bias
        att = T.softmax(scores)
        ctx = np.matmul(att, v).transpose(0, 2, 1, 3).reshape(B, n, d)
        x, ln1 = T.layer_norm_fwd(h + ctx @ p[pre + "out_w"] + p[pre + "out_b"], p[pre + "ln1_g"], p[pre + "ln1_b"], eps)
        u = x @ p[pre + "ff_in_w"] + p[pre + "ff_in_b"]
        g = T.gelu(u)
        h_next, ln2 = T.layer_norm_fwd(x + g @ p[pre + "ff_out_w"] + p[pre + "ff_out_b"], p[pre + "ln2_g"], p[pre + "ln2_b"], eps)
        caches.append((h, q, k, v, att, ctx, x, ln1, u, g, ln2))
        h = h_next

    rows, cols = np.nonzero(targets >= 0)
    if rows.size == 0:
        raise ValueError("no target positions in batch")
    hs = h[rows, cols]
    w_full = model.output_matrix()
    if out_ids is None:
        out_ids = np.arange(cfg.vocab_size)
        tgt = targets[rows, cols]
    else:
        lookup = np.full(cfg.vocab_size, -1, dtype=np.int64)
        lookup[out_ids] = np.arange(out_ids.size)
        tgt = lookup[targets[rows, cols]]
        if (tgt < 0).any():
            raise ValueError("target token outside the output subset")
    logits = hs @ w_full[out_ids].T + p["out_bias"][out_ids]
    logp = T.log_softmax(logits)
    N = rows.size
    loss = float(-logp[np.arange(N), tgt].mean())

    dlogits = np.exp(logp)
    dlogits[np.arange(N), tgt] -= 1.0
    dlogits /= N
    np.add.at(grads["out_bias"], out_ids, dlogits.sum(axis=0))
    dw_full = np.zeros_like(w_full)
    dw_full[out_ids] = dlogits.T @ hs
    dh_ = np.zeros_like(h)
    np.add.at(dh_, (rows, cols), dlogits @ w_full[out_ids])

    for layer in range(cfg.n_layers, 0, -1):
        pre = f"layers.{layer}."
        h_in, q, k, v, att, ctx, x, ln1, u, g, ln2 = caches[layer - 1]
        dr2, grads[pre + "ln2_g"], grads[pre + "ln2_b"] = T.layer_norm_bwd(dh_, p[pre + "ln2_g"], *ln2)
        grads[pre + "ff_out_w"] = g.reshape(-1, g.shape[-1]).T @ dr2.reshape(-1, d)
        grads[pre + "ff_out_b"] = dr2.sum(axis=(0, 1))
        du = (dr2 @ p[pre + "ff_out_w"].T) * T.gelu_grad(u)
        grads[pre + "ff_in_w"] = x.reshape(-1, d).T @ du.reshape(-1, du.shape[-1])
        grads[pre + "ff_in_b"] = du.sum(axis=(0, 1))
        dx = dr2 + du @ p[pre + "ff_in_w"].T
        dr1, grads[pre + "ln1_g"], grads[pre + "ln1_b"] = T.layer_norm_bwd(dx, p[pre + "ln1_g"], *ln1)
        grads[pre + "out_w"] = ctx.reshape(-1, d).T @ dr1.reshape(-1, d)
        grads[pre + "out_b"] = dr1.sum(axis=(0, 1))
        dctx = (dr1 @ p[pre + "out_w"].T).reshape(B, n, H, dh).transpose(0, 2, 1, 3)
        datt = np.matmul(dctx, v.transpose(0, 1, 3, 2))
        dv = np.matmul(att.transpose(0, 1, 3, 2), dctx)
        dscores = att * (datt - (datt * att).sum(axis=-1, keepdims=True)) / math.sqrt(dh)
        dq = np.matmul(dscores, k)
        dk = np.matmul(dscores.transpose(0, 1, 3, 2), q)
        dqkv = np.concatenate([t.transpose(0, 2, 1, 3).reshape(B, n, d) for t in (dq, dk, dv)], axis=-1)
        grads[pre + "qkv_w"] = h_in.reshape(-1, d).T @ dqkv.reshape(-1, 3 * d)
        grads[pre + "qkv_b"] = dqkv.sum(axis=(0, 1))
        dh_ = dr1 + dqkv @ p[pre + "qkv_w"].T

    dx_in, grads["emb_ln_g"], grads["emb_ln_b"] = T.layer_norm_bwd(dh_, p["emb_ln_g"], xh0, is0)
    grads["pos_emb"][:n] = dx_in.sum(axis=0)
    dtok = dw_full.copy()
    np.add.at(dtok, ids.ravel(), dx_in.reshape(-1, d))
    grads["tok_emb"] = dtok
    if cfg.use_features:
        dnum, dcls = grads["num_emb"], grads["cls_emb"]
        np.add.at(dnum, model._number, dw_full)
        np.add.at(dcls, model._class, dw_full)
        flat_ids = ids.ravel()
        np.add.at(dnum, model._number[flat_ids], dx_in.reshape(-1, d))
        np.add.at(dcls, model._class[flat_ids], dx_in.reshape(-1, d))
    return loss, grads
