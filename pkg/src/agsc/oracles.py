"""Independent reference computations used to cross-check the fast paths.

``naive_forward`` re-derives the transformer from the raw parameter arrays
with explicit per-position loops and no batching, so it shares no code with
:class:`agsc.model.Model` beyond the parameter dictionary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mediation import EffectTable, Query, all_neuron_nies, build_query, sparsity_sweep, total_effect
from .model import Model, Patch


def _ln(x, g, b, eps):
    mu = sum(x) / len(x)
    var = sum((xi - mu) ** 2 for xi in x) / len(x)
    s = 1.0 / math.sqrt(var + eps)
    return np.array([(xi - mu) * s * gi + bi for xi, gi, bi in zip(x, g, b)])


def _gelu(x):
    return np.array([0.5 * v * (1.0 + math.erf(v / math.sqrt(2.0))) for v in x])


def naive_forward(model: Model, ids, override=None) -> tuple[np.ndarray, list]:
    """Logits at every position and the per-layer hidden states.

    ``override`` is ``(layer, position, dims, values)``; the listed dims of
    that layer's output at that position are replaced before use.
    """
    cfg, p, vocab = model.config, model.params, model.vocab
    n, d, H = len(ids), cfg.hidden_dim, cfg.n_heads
    dh = d // H
    eps = cfg.ln_eps

    def apply(layer, hs):
        if override is not None and override[0] == layer:
            _, pos, dims, vals = override
            hs[pos] = hs[pos].copy()
            for dim, val in zip(dims, vals):
                hs[pos][dim] = val
        return hs

    def feat(t):
        e = p["tok_emb"][t].copy()
        if cfg.use_features:
            e = e + p["num_emb"][vocab.number[t]] + p["cls_emb"][vocab.word_class[t]]
        return e

    hs = [_ln(feat(t) + p["pos_emb"][i], p["emb_ln_g"], p["emb_ln_b"], eps) for i, t in enumerate(ids)]
    hs = apply(0, hs)
    layers = [list(hs)]
    for layer in range(1, cfg.n_layers + 1):
        pre = f"layers.{layer}."
        qkv = [h @ p[pre + "qkv_w"] + p[pre + "qkv_b"] for h in hs]
        new = []
        for i in range(n):
            ctx = np.zeros(d)
            for head in range(H):
                sl = slice(head * dh, (head + 1) * dh)
                q = qkv[i][:d][sl]
                visible = range(i + 1) if cfg.causal else range(n)
                scores = [float(np.dot(q, qkv[j][d : 2 * d][sl])) / math.sqrt(dh) for j in visible]
                top = max(scores)
                w = [math.exp(s - top) for s in scores]
                z = sum(w)
                for wj, j in zip(w, visible):
                    ctx[sl] += (wj / z) * qkv[j][2 * d :][sl]
            x = _ln(hs[i] + ctx @ p[pre + "out_w"] + p[pre + "out_b"], p[pre + "ln1_g"], p[pre + "ln1_b"], eps)
            ff = _gelu(x @ p[pre + "ff_in_w"] + p[pre + "ff_in_b"]) @ p[pre + "ff_out_w"] + p[pre + "ff_out_b"]
            new.append(_ln(x + ff, p[pre + "ln2_g"], p[pre + "ln2_b"], eps))
        hs = apply(layer, new)
        layers.append(list(hs))
    out_w = np.array([feat(t) for t in range(cfg.vocab_size)])
    logits = np.array([out_w @ h + p["out_bias"] for h in hs])
    return logits, layers


def _naive_log_y(logits_row, q: Query) -> float:
    top = float(np.max(logits_row))
    lse = top + math.log(sum(math.exp(float(v) - top) for v in logits_row))
    return (float(logits_row[q.mismatch]) - lse) - (float(logits_row[q.match]) - lse)


def naive_nie_table(model: Model, stimuli, policy="subject") -> np.ndarray:
    """``[stimulus, neuron]`` NIE by three independent forwards per (stimulus, neuron)."""
    L, d = model.config.n_layers, model.config.hidden_dim
    out = np.empty((len(stimuli), (L + 1) * d))
    for si, s in enumerate(stimuli):
        q = build_query(model, s, policy)
        for layer in range(L + 1):
            for dim in range(d):
                null_logits, _ = naive_forward(model, q.null_ids.tolist())
                _, swap_layers = naive_forward(model, q.swap_ids.tolist())
                value = swap_layers[layer][q.position][dim]
                over_logits, _ = naive_forward(model, q.null_ids.tolist(), (layer, q.position, [dim], [value]))
                delta = _naive_log_y(over_logits[q.query], q) - _naive_log_y(null_logits[q.query], q)
                out[si, layer * d + dim] = math.expm1(delta)
    return out


def _log_normalise(v: np.ndarray) -> np.ndarray:
    top = v.max()
    return v - (top + np.log(np.exp(v - top).sum()))


@dataclass
class OracleResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def column_completeness(model: Model, stimuli, rel_tol: float = 1e-6, table: EffectTable | None = None) -> list[OracleResult]:
    """Full-column intervention reproduces the total effect, per stimulus and on the sweep endpoint."""
    stimuli = list(stimuli)
    te = total_effect(model, stimuli)
    d = model.config.hidden_dim
    curve = sparsity_sweep(model, stimuli, k_step=model.config.n_neurons, table=table, te=te)
    per = []
    for s, t in zip(stimuli, te.per_stimulus):
        q = build_query(model, s)
        _, swap_stack = model.run(q.swap_ids[None], keep_hidden=True)
        final, null_stack = model.run(q.null_ids[None], keep_hidden=True)
        patches = {layer: Patch(q.position, np.ones((1, d), bool), swap_stack[0, layer, q.position][None])
                   for layer in range(model.config.n_layers + 1)}
        out = model.run(q.null_ids[None], patches=patches)
        lp = model.logits(out[0, q.query])
        lp0 = model.logits(final[0, q.query])
        a, b = _log_normalise(lp), _log_normalise(lp0)
        nie = math.expm1((a[q.mismatch] - a[q.match]) - (b[q.mismatch] - b[q.match]))
        per.append(abs(nie - t) / max(abs(t), 1e-12))
    worst = max(per)
    end = curve.cumulative_nie[-1]
    rel_end = abs(end - te.te_mean) / max(abs(te.te_mean), 1e-12)
    return [
        OracleResult("column-completeness", worst <= rel_tol, f"max relative |NIE_all - TE| = {worst:.3g} over {len(per)} stimuli"),
        OracleResult("sweep-endpoint", rel_end <= rel_tol, f"relative |curve[-1] - TE| = {rel_end:.3g}"),
    ]


def naive_equivalence(model: Model, stimuli, tol: float = 1e-10) -> OracleResult:
    fast = all_neuron_nies(model, stimuli).values
    slow = naive_nie_table(model, list(stimuli))
    err = float(np.max(np.abs(fast - slow)))
    return OracleResult("naive-vs-batched", err <= tol, f"max |difference| = {err:.3g} over {fast.size} values")
