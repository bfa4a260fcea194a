"""Adam training loop for the toy transformer (next-token or masked-token loss)."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericalError
from .model import Model, ModelConfig, loss_and_grads, random_init_params
from .vocab import BOS, MASK, Vocabulary

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainHyper:
    lr: float = 1e-3
    betas: tuple[float, float] = (0.9, 0.999)
    adam_eps: float = 1e-8
    batch_size: int = 64
    steps: int = 2000
    mask_rate: float = 0.15
    warmup_frac: float = 0.05
    clip_norm: float = 1.0


def _buckets(corpus: list[np.ndarray]) -> list[np.ndarray]:
    by_len: dict[int, list[np.ndarray]] = {}
    for seq in corpus:
        by_len.setdefault(len(seq), []).append(seq)
    return [np.stack(by_len[n]) for n in sorted(by_len)]


def lr_at(step: int, hyper: TrainHyper) -> float:
    """Linear warmup over the first ``warmup_frac`` of steps, then linear decay to zero."""
    warm = max(1, round(hyper.warmup_frac * hyper.steps))
    if step < warm:
        return hyper.lr * (step + 1) / warm
    return hyper.lr * max(0.0, (hyper.steps - step) / max(1, hyper.steps - warm))


def make_batch(seqs: np.ndarray, mode: str, rng: np.random.Generator, mask_id: int, mask_rate: float):
    """Inputs and targets (``-1`` = ignored) for one same-length batch."""
    if mode == "alm":
        targets = np.full(seqs.shape, -1, dtype=np.int64)
        targets[:, :-1] = seqs[:, 1:]
        return seqs, targets
    B, n = seqs.shape
    chosen = rng.random((B, n)) < mask_rate
    chosen[:, 0] = False
    forced = rng.integers(1, n, size=B) if n > 1 else np.zeros(B, dtype=np.int64)
    chosen[np.arange(B), forced] |= ~chosen.any(axis=1)
    inputs = np.where(chosen, mask_id, seqs)
    return inputs, np.where(chosen, seqs, -1)


def train(
    config: ModelConfig,
    corpus,
    vocab: Vocabulary,
    hyper: TrainHyper = TrainHyper(),
    *,
    restrict_outputs: bool = True,
) -> Model:
    """Train from a fresh random initialisation; deterministic given ``config.seed``.

    ``corpus`` holds token sequences (strings or ids). With
    ``restrict_outputs`` the softmax only ranges over tokens that occur in the
    corpus, so embeddings of words absent from training are never updated.
    """
    seqs = [vocab.ids(s) if len(s) and isinstance(s[0], str) else np.asarray(s, dtype=np.int64) for s in corpus]
    if not seqs:
        raise DataError("training corpus is empty")
    if max(len(s) for s in seqs) > config.max_len:
        raise DataError(f"corpus sentence longer than max_len={config.max_len}")
    buckets = _buckets(seqs)
    weights = np.array([len(b) for b in buckets], dtype=np.float64)
    weights /= weights.sum()

    out_ids = None
    if restrict_outputs:
        seen = np.unique(np.concatenate(seqs))
        seen = seen[seen != vocab.id(BOS)]
        out_ids = seen

    params = random_init_params(config)
    model = Model(config, params, vocab)
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, 0x7A11]))
    b1, b2 = hyper.betas
    m1 = {k: np.zeros_like(v) for k, v in params.items()}
    m2 = {k: np.zeros_like(v) for k, v in params.items()}
    mask_id = vocab.id(MASK) if MASK in vocab else -1
    history = []
    loss = float("nan")
    for step in range(hyper.steps):
        bucket = buckets[rng.choice(len(buckets), p=weights)]
        pick = rng.choice(len(bucket), size=min(hyper.batch_size, len(bucket)), replace=False)
        inputs, targets = make_batch(bucket[np.sort(pick)], config.mode, rng, mask_id, hyper.mask_rate)
        loss, grads = loss_and_grads(model, inputs, targets, out_ids)
        if not np.isfinite(loss):
            raise NumericalError(f"non-finite loss {loss} at step {step} (lr={lr_at(step, hyper):.3g})")
        norm = np.sqrt(sum(float((g * g).sum()) for g in grads.values()))
        scale = min(1.0, hyper.clip_norm / norm) if norm > 0 else 1.0
        lr = lr_at(step, hyper)
        t = step + 1
        for k, g in grads.items():
            g = g * scale
            m1[k] = b1 * m1[k] + (1 - b1) * g
            m2[k] = b2 * m2[k] + (1 - b2) * g * g
            if lr:
                params[k] -= lr * (m1[k] / (1 - b1**t)) / (np.sqrt(m2[k] / (1 - b2**t)) + hyper.adam_eps)
        if step % 100 == 0 or step == hyper.steps - 1:
            history.append([step, loss])
            log.info("step %d/%d loss %.4f", step + 1, hyper.steps, loss)
    model.meta = {
        "init": "trained",
        "seed": config.seed,
        "steps": hyper.steps,
        "final_loss": loss,
        "loss_history": history,
        "hyper": {**hyper.__dict__, "betas": list(hyper.betas)},
    }
    return model
