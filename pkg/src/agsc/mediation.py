"""Grammaticality ratios, natural indirect effects, total effects and sparsity sweeps.

All ratios live in log space. For a stimulus whose null prompt has subject
number ``n``, ``log_y = log p(v_mismatch) - log p(v_match)`` on both the null
and the swapped prompt, so a grammatical model has ``log_y_null < 0`` and
``log_y_swap > 0``. Relative changes ``y'/y - 1`` are ``expm1`` of log
differences.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import tensor as T
from .errors import NumericalError
from .model import ContractError, InterventionSpec, Model, NeuronId, Patch
from .stimuli.generate import Stimulus

POSITION_POLICIES = ("subject", "verb_slot")


# ---------------------------------------------------------------- prompts


@dataclass(frozen=True)
class Query:
    """Token ids for both prompts, the query index and the verb pair."""

    null_ids: np.ndarray
    swap_ids: np.ndarray
    query: int
    position: int
    match: int
    mismatch: int


def resolve_position(stimulus: Stimulus, mode: str, policy="subject") -> int:
    """Token index receiving interventions: ``subject``, ``verb_slot`` or an explicit int."""
    if isinstance(policy, (int, np.integer)) and not isinstance(policy, bool):
        return int(policy)
    if policy == "subject":
        return stimulus.subject_position
    if policy == "verb_slot":
        return stimulus.verb_slot - 1 if mode == "alm" else stimulus.verb_slot
    raise ContractError(f"unknown position policy {policy!r}")


def build_query(model: Model, stimulus: Stimulus, policy="subject") -> Query:
    """ALM reads the next-token distribution after the prefix ending before the
    verb slot; MLM reads the full sequence at the mask token."""
    mode = model.config.mode
    vocab = model.vocab
    try:
        null = vocab.ids(stimulus.tokens_null)
        swap = vocab.ids(stimulus.tokens_swap)
        match, mismatch = vocab.id(stimulus.v_match), vocab.id(stimulus.v_mismatch)
    except KeyError as exc:
        raise ContractError(f"{stimulus.id}: {exc.args[0]}") from None
    if mode == "alm":
        null, swap = null[: stimulus.verb_slot], swap[: stimulus.verb_slot]
        q = stimulus.verb_slot - 1
    else:
        q = stimulus.verb_slot
    if q < 0:
        raise ContractError(f"{stimulus.id}: empty prefix")
    pos = resolve_position(stimulus, mode, policy)
    if not 0 <= pos < null.size:
        raise ContractError(f"{stimulus.id}: intervention position {pos} outside the {null.size}-token prompt")
    return Query(null, swap, q, pos, match, mismatch)


def _log_y(logits: np.ndarray, match: int, mismatch: int) -> np.ndarray:
    lp = T.log_softmax(logits)
    return lp[..., mismatch] - lp[..., match]


# ---------------------------------------------------------------- single-stimulus API


@dataclass(frozen=True)
class GrammaticalityRatio:
    log_y: float

    @property
    def value(self) -> float:
        return math.exp(self.log_y)


def response_ratio(model: Model, stimulus: Stimulus, variant: str = "null",
                   intervention: InterventionSpec | None = None) -> GrammaticalityRatio:
    """``p(v_mismatch | u) / p(v_match | u)`` on the null or swapped prompt."""
    if variant not in ("null", "swap"):
        raise ValueError(f"variant must be 'null' or 'swap', got {variant!r}")
    q = build_query(model, stimulus)
    ids = q.null_ids if variant == "null" else q.swap_ids
    logits, _ = model.forward(ids, q.query, intervention)
    log_y = float(_log_y(logits, q.match, q.mismatch))
    if not math.isfinite(log_y):
        raise NumericalError(f"{stimulus.id}: non-finite log ratio")
    return GrammaticalityRatio(log_y)


def stimulus_nie(model: Model, stimulus: Stimulus, neuron: NeuronId, policy="subject") -> float:
    """Per-stimulus NIE of one neuron via plain forwards with a single override."""
    q = build_query(model, stimulus, policy)
    null_logits, _ = model.forward(q.null_ids, q.query)
    _, swap_cache = model.forward(q.swap_ids, q.query)
    spec = InterventionSpec(q.position, {NeuronId(*neuron): swap_cache.value(NeuronId(*neuron), q.position)})
    over_logits, _ = model.forward(q.null_ids, q.query, spec)
    return float(np.expm1(_log_y(over_logits, q.match, q.mismatch) - _log_y(null_logits, q.match, q.mismatch)))


@dataclass
class EffectRecord:
    neuron: NeuronId
    structure: str
    language: str
    word_variant: str
    nie_mean: float
    nie_per_stimulus: list
    n_stimuli: int


def _labels(stimuli) -> tuple[str, str, str]:
    s = stimuli[0]
    return s.structure, s.language, s.word_variant


def neuron_nie(model: Model, stimuli, neuron: NeuronId, policy="subject") -> EffectRecord:
    stimuli = list(stimuli)
    if not stimuli:
        raise ValueError("no stimuli given")
    neuron = NeuronId(*neuron)
    if not (0 <= neuron.layer <= model.config.n_layers and 0 <= neuron.dim < model.config.hidden_dim):
        raise ContractError(f"neuron {tuple(neuron)} out of range")
    values = [stimulus_nie(model, s, neuron, policy) for s in stimuli]
    structure, language, variant = _labels(stimuli)
    return EffectRecord(neuron, structure, language, variant, float(np.mean(values)), values, len(values))


# ---------------------------------------------------------------- batched engine


@dataclass
class EffectTable:
    """Per-stimulus NIE for every neuron, ``values[stimulus, layer * d + dim]``."""

    language: str
    structure: str
    word_variant: str
    n_layers: int
    hidden_dim: int
    stimulus_ids: list
    values: np.ndarray
    log_y_null: np.ndarray = field(default=None)

    @property
    def n_neurons(self) -> int:
        return (self.n_layers + 1) * self.hidden_dim

    @property
    def n_stimuli(self) -> int:
        return len(self.stimulus_ids)

    @property
    def nie_mean(self) -> np.ndarray:
        return self.values.mean(axis=0)

    def by_layer(self) -> np.ndarray:
        """``nie_mean`` reshaped to ``[L + 1, d]``."""
        return self.nie_mean.reshape(self.n_layers + 1, self.hidden_dim)

    def neuron(self, index: int) -> NeuronId:
        return NeuronId(*divmod(int(index), self.hidden_dim))

    def record(self, neuron: NeuronId) -> EffectRecord:
        i = neuron.layer * self.hidden_dim + neuron.dim
        col = self.values[:, i]
        return EffectRecord(NeuronId(*neuron), self.structure, self.language, self.word_variant,
                            float(col.mean()), col.tolist(), self.n_stimuli)

    def subset(self, rows) -> "EffectTable":
        rows = np.asarray(rows, dtype=np.int64)
        return EffectTable(self.language, self.structure, self.word_variant, self.n_layers, self.hidden_dim,
                           [self.stimulus_ids[i] for i in rows], self.values[rows],
                           None if self.log_y_null is None else self.log_y_null[rows])

    @property
    def label(self) -> str:
        return f"{self.language}/{self.structure}/{self.word_variant}"


def _run_jobs(fn, items, jobs: int):
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _stimulus_row(model: Model, q: Query, chunk: int) -> tuple[np.ndarray, float]:
    L, d = model.config.n_layers, model.config.hidden_dim
    final, null_stack = model.run(q.null_ids[None], keep_hidden=True)
    _, swap_stack = model.run(q.swap_ids[None], keep_hidden=True)
    base = _log_y(model.logits(final[0, q.query]), q.match, q.mismatch)
    row = np.empty((L + 1) * d)
    for layer in range(L + 1):
        swap_col = swap_stack[0, layer, q.position]
        for lo in range(0, d, chunk):
            dims = np.arange(lo, min(d, lo + chunk))
            mask = np.zeros((dims.size, d), dtype=bool)
            mask[np.arange(dims.size), dims] = True
            hidden = np.repeat(null_stack[:, layer], dims.size, axis=0)
            patch = Patch(q.position, mask, swap_col[None, :])
            out = model.run(start_layer=layer, hidden=hidden, patches={layer: patch})
            log_y = _log_y(model.logits(out[:, q.query]), q.match, q.mismatch)
            row[layer * d + dims] = np.expm1(log_y - base)
    if not np.all(np.isfinite(row)):
        raise NumericalError("non-finite indirect effect")
    return row, float(base)


def all_neuron_nies(model: Model, stimuli, policy="subject", jobs: int = 1, chunk: int = 256) -> EffectTable:
    """NIE of every neuron for every stimulus.

    The null run's states up to a layer are reused and only the layers from
    the intervened one onward are recomputed, with one batch row per
    overridden neuron.
    """
    stimuli = list(stimuli)
    if not stimuli:
        raise ValueError("no stimuli given")
    queries = [build_query(model, s, policy) for s in stimuli]
    results = _run_jobs(lambda q: _stimulus_row(model, q, chunk), queries, jobs)
    structure, language, variant = _labels(stimuli)
    return EffectTable(
        language, structure, variant, model.config.n_layers, model.config.hidden_dim,
        [s.id for s in stimuli], np.stack([r[0] for r in results]), np.array([r[1] for r in results]),
    )


@dataclass
class TotalEffect:
    structure: str
    language: str
    te_mean: float
    per_stimulus: list
    log_y_null: list
    log_y_swap: list


def total_effect(model: Model, stimuli, jobs: int = 1) -> TotalEffect:
    """``y_swap / y_null - 1`` per stimulus with no interventions."""
    stimuli = list(stimuli)
    if not stimuli:
        raise ValueError("no stimuli given")

    def one(s):
        q = build_query(model, s)
        ln = _log_y(model.logits(model.run(q.null_ids[None])[0, q.query]), q.match, q.mismatch)
        ls = _log_y(model.logits(model.run(q.swap_ids[None])[0, q.query]), q.match, q.mismatch)
        return float(ln), float(ls)

    pairs = _run_jobs(one, stimuli, jobs)
    te = [float(np.expm1(s - n)) for n, s in pairs]
    if not all(math.isfinite(t) for t in te):
        raise NumericalError("non-finite total effect")
    structure, language, _ = _labels(stimuli)
    return TotalEffect(structure, language, float(np.mean(te)), te, [p[0] for p in pairs], [p[1] for p in pairs])


# ---------------------------------------------------------------- sparsity


@dataclass
class SparsityCurve:
    k_step: int
    n_neurons: int
    m_neurons: list
    cumulative_nie: list
    te_reference: float

    @property
    def pct_neurons(self) -> list:
        return [100.0 * m / self.n_neurons for m in self.m_neurons]


def default_k_step(hidden_dim: int) -> int:
    """One eighth of the layer width: 96 at width 768, 128 at width 1024."""
    return max(1, hidden_dim // 8)


def rank_neurons(nie_mean: np.ndarray) -> np.ndarray:
    """Neuron indices by descending mean NIE; ties keep (layer, dim) order."""
    return np.argsort(-np.asarray(nie_mean), kind="stable")


def _sweep_row(model: Model, q: Query, order: np.ndarray, counts: list) -> np.ndarray:
    L, d = model.config.n_layers, model.config.hidden_dim
    final, null_stack = model.run(q.null_ids[None], keep_hidden=True)
    _, swap_stack = model.run(q.swap_ids[None], keep_hidden=True)
    base = _log_y(model.logits(final[0, q.query]), q.match, q.mismatch)
    rank = np.empty(order.size, dtype=np.int64)
    rank[order] = np.arange(order.size)
    rank = rank.reshape(L + 1, d)
    m = np.asarray(counts)[:, None]
    patches = {
        layer: Patch(q.position, rank[layer][None, :] < m, swap_stack[0, layer, q.position][None, :])
        for layer in range(L + 1)
    }
    ids = np.repeat(q.null_ids[None], len(counts), axis=0)
    out = model.run(ids, patches=patches)
    return np.expm1(_log_y(model.logits(out[:, q.query]), q.match, q.mismatch) - base)


def sparsity_sweep(model: Model, stimuli, k_step: int | None = None, table: EffectTable | None = None,
                   te: TotalEffect | None = None, jobs: int = 1, policy="subject") -> SparsityCurve:
    """Cumulative NIE of the top ``k_step``, ``2 k_step``, ... neurons, ending at all of them.

    Neurons are ranked by the table's mean NIE; all chosen neurons take their
    swap-run values at the intervention position simultaneously.
    """
    stimuli = list(stimuli)
    n = model.config.n_neurons
    k_step = default_k_step(model.config.hidden_dim) if k_step is None else int(k_step)
    if not 1 <= k_step <= n:
        raise ValueError(f"k_step must lie in [1, {n}], got {k_step}")
    table = table if table is not None else all_neuron_nies(model, stimuli, policy, jobs)
    te = te if te is not None else total_effect(model, stimuli, jobs)
    order = rank_neurons(table.nie_mean)
    counts = list(range(k_step, n, k_step)) + [n]
    queries = [build_query(model, s, policy) for s in stimuli]
    rows = _run_jobs(lambda q: _sweep_row(model, q, order, counts), queries, jobs)
    curve = np.mean(np.stack(rows), axis=0)
    return SparsityCurve(k_step, n, counts, curve.tolist(), te.te_mean)


def sparsity_metrics(curve: SparsityCurve, rel_tol: float = 1e-9) -> tuple[float, float]:
    """``(pct_to_te, pct_to_max)``.

    ``pct_to_te`` is the smallest neuron percentage whose cumulative NIE
    reaches the total effect. A relative tolerance absorbs rounding at the
    last point, which equals the total effect by construction.
    """
    values = np.asarray(curve.cumulative_nie, dtype=np.float64)
    if values.size == 0:
        raise ValueError("empty curve")
    pct = curve.pct_neurons
    te = curve.te_reference
    slack = rel_tol * max(1.0, abs(te))
    hits = np.flatnonzero(values >= te - slack)
    if hits.size == 0:
        raise AssertionError("curve never reaches the total effect")
    return pct[int(hits[0])], pct[int(np.argmax(values))]


# ---------------------------------------------------------------- output


def _fmt(x: float) -> str:
    return repr(float(x))


def header_lines(seed: int, version: str) -> str:
    return f"# seed={seed} version={version}\n"


def effect_table_csv(table: EffectTable, seed: int = 0, version: str = "") -> str:
    buf = io.StringIO()
    buf.write(header_lines(seed, version))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["language", "structure", "word_variant", "layer", "dim", "nie_mean", "n_stimuli"])
    for i, v in enumerate(table.nie_mean):
        layer, dim = divmod(i, table.hidden_dim)
        w.writerow([table.language, table.structure, table.word_variant, layer, dim, _fmt(v), table.n_stimuli])
    return buf.getvalue()


def effect_detail_jsonl(table: EffectTable) -> str:
    lines = []
    for i, sid in enumerate(table.stimulus_ids):
        lines.append(json.dumps({"stimulus": sid, "language": table.language, "structure": table.structure,
                                 "word_variant": table.word_variant, "nie": [float(x) for x in table.values[i]]},
                                sort_keys=True))
    return "".join(line + "\n" for line in lines)


def read_effect_table(csv_path, detail_path) -> EffectTable:
    """Rebuild an :class:`EffectTable` from its CSV and JSON-lines detail."""
    rows = [r for r in csv.DictReader(line for line in Path(csv_path).read_text(encoding="utf-8").splitlines()
                                      if not line.startswith("#"))]
    if not rows:
        raise ValueError(f"{csv_path}: empty effect table")
    n_layers = max(int(r["layer"]) for r in rows)
    d = max(int(r["dim"]) for r in rows) + 1
    detail = [json.loads(line) for line in Path(detail_path).read_text(encoding="utf-8").splitlines() if line]
    values = np.array([rec["nie"] for rec in detail], dtype=np.float64)
    r0 = rows[0]
    return EffectTable(r0["language"], r0["structure"], r0["word_variant"], n_layers, d,
                       [rec["stimulus"] for rec in detail], values)


def curve_csv(curve: SparsityCurve, seed: int = 0, version: str = "") -> str:
    buf = io.StringIO()
    buf.write(header_lines(seed, version))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["m_neurons", "pct_neurons", "cumulative_nie", "te_reference"])
    for m, p, v in zip(curve.m_neurons, curve.pct_neurons, curve.cumulative_nie):
        w.writerow([m, _fmt(p), _fmt(v), _fmt(curve.te_reference)])
    return buf.getvalue()


def read_curve_csv(path, k_step: int | None = None) -> SparsityCurve:
    lines = [line for line in Path(path).read_text(encoding="utf-8").splitlines() if not line.startswith("#")]
    rows = list(csv.DictReader(lines))
    m = [int(r["m_neurons"]) for r in rows]
    n = m[-1]
    return SparsityCurve(k_step or m[0], n, m, [float(r["cumulative_nie"]) for r in rows], float(rows[0]["te_reference"]))
