"""Neuron selection, overlap statistics and per-layer contours over effect tables."""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .mediation import EffectTable, header_lines
from .model import NeuronId
from .montecarlo import overlap_counts
from .seeds import derive_seed


@dataclass(frozen=True)
class NeuronSet:
    label: str
    members: frozenset
    selection_rule: str

    def __len__(self) -> int:
        return len(self.members)

    def sorted(self) -> list[NeuronId]:
        return sorted(self.members)


def _means(effects) -> np.ndarray:
    """``[L + 1, d]`` mean NIE from an :class:`EffectTable` or an array."""
    if isinstance(effects, EffectTable):
        return effects.by_layer()
    arr = np.asarray(effects, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("effects must be an EffectTable or a [layers, dims] array")
    return arr


def _label(effects, label: str | None) -> str:
    if label is not None:
        return label
    return effects.label if isinstance(effects, EffectTable) else "effects"


def per_layer_count(fraction: float, hidden_dim: int) -> int:
    """``ceil(fraction * d)``, rounded first so that e.g. ``0.05 * 20`` gives 1, not 2."""
    if not 0.0 < fraction <= 1.0:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    return max(1, math.ceil(round(fraction * hidden_dim, 9)))


def _top(values: np.ndarray, k: int) -> np.ndarray:
    # stable sort on the negated values keeps index order among ties
    return np.argsort(-values, kind="stable")[:k]


def top_neurons_per_layer(effects, fraction: float = 0.05, label: str | None = None) -> list[NeuronSet]:
    """The ``ceil(fraction * d)`` highest-NIE neurons of every layer."""
    means = _means(effects)
    k = per_layer_count(fraction, means.shape[1])
    name = _label(effects, label)
    return [
        NeuronSet(f"{name}/layer{layer}", frozenset(NeuronId(layer, int(i)) for i in _top(means[layer], k)), "per_layer_fraction")
        for layer in range(means.shape[0])
    ]


def top_neurons_global(effects, n: int = 30, label: str | None = None) -> NeuronSet:
    """The ``n`` highest-NIE neurons from any layer; ties go to the lower (layer, dim)."""
    means = _means(effects)
    d = means.shape[1]
    if not 1 <= n <= means.size:
        raise ValueError(f"n must lie in [1, {means.size}], got {n}")
    idx = _top(means.ravel(), n)
    return NeuronSet(_label(effects, label), frozenset(NeuronId(*divmod(int(i), d)) for i in idx), "global_top_n")


def overlap_proportion(a: NeuronSet, b: NeuronSet) -> float:
    """``|a & b| / |a|``."""
    if len(a) == 0 or len(b) == 0:
        raise ValueError("overlap of an empty neuron set is undefined")
    if len(a) != len(b):
        warnings.warn(f"comparing sets of different sizes ({len(a)} vs {len(b)})", stacklevel=2)
    return len(a.members & b.members) / len(a)


def _log_comb(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def chance_overlap_probability(n_neurons: int, set_size: int) -> float:
    """Probability that two uniform random ``set_size``-subsets share at least one neuron."""
    if n_neurons < 1 or not 0 <= set_size <= n_neurons:
        raise ValueError(f"invalid counts n_neurons={n_neurons}, set_size={set_size}")
    if set_size == 0:
        return 0.0
    if 2 * set_size > n_neurons:
        return 1.0
    return -math.expm1(_log_comb(n_neurons - set_size, set_size) - _log_comb(n_neurons, set_size))


def expected_overlap(n_neurons: int, set_size: int) -> float:
    """Mean number of shared neurons between two random ``set_size``-subsets."""
    return set_size * set_size / n_neurons


def permutation_significance(a: NeuronSet, b: NeuronSet, n_neurons: int, iters: int = 10000, seed: int = 0) -> float:
    """One-sided p-value of the observed overlap under uniformly random sets.

    Reported as ``(r + 1) / (iters + 1)`` where ``r`` counts draws whose
    overlap is at least the observed one.
    """
    if iters < 1:
        raise ValueError("iters must be positive")
    if not len(a) or not len(b) or max(len(a), len(b)) > n_neurons:
        raise ValueError(f"degenerate set sizes {len(a)}, {len(b)} for {n_neurons} neurons")
    observed = len(a.members & b.members)
    counts = overlap_counts(n_neurons, len(a), len(b), iters, seed)
    r = int(np.count_nonzero(counts >= observed))
    return (r + 1) / (iters + 1)


# ---------------------------------------------------------------- contours


def layer_contour(effects, fraction: float = 0.05) -> np.ndarray:
    """Per layer, the mean NIE over that layer's top-``fraction`` neurons."""
    means = _means(effects)
    k = per_layer_count(fraction, means.shape[1])
    return np.array([means[layer][_top(means[layer], k)].mean() for layer in range(means.shape[0])])


def contour_series(table: EffectTable, attractor_numbers, fraction: float = 0.05) -> dict[str, np.ndarray]:
    """Pooled contour plus one series per attractor number present.

    ``attractor_numbers`` lists each stimulus's attractor number (or None) in
    table order.
    """
    attractor_numbers = list(attractor_numbers)
    if len(attractor_numbers) != table.n_stimuli:
        raise ValueError("one attractor number per stimulus is required")
    series = {"pooled": layer_contour(table, fraction)}
    for num in ("sg", "pl"):
        rows = [i for i, a in enumerate(attractor_numbers) if a == num]
        if rows:
            series[f"attractor_{num}"] = layer_contour(table.subset(rows), fraction)
    return series


def contour_csv(rows, seed: int = 0, version: str = "") -> str:
    """``rows`` are ``(language, structure, series, contour)`` tuples."""
    buf = io.StringIO()
    buf.write(header_lines(seed, version))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["language", "structure", "series", "layer", "mean_top_nie"])
    for language, structure, series, contour in rows:
        for layer, v in enumerate(contour):
            w.writerow([language, structure, series, layer, repr(float(v))])
    return buf.getvalue()


# ---------------------------------------------------------------- overlap matrices


@dataclass
class OverlapMatrix:
    labels: list
    values: np.ndarray
    p_values: np.ndarray
    chance_level: float
    n_neurons: int
    iters: int

    def to_csv(self, seed: int = 0, version: str = "") -> str:
        buf = io.StringIO()
        buf.write(header_lines(seed, version))
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["row", "column", "overlap", "p_value"])
        for i, a in enumerate(self.labels):
            for j, b in enumerate(self.labels):
                w.writerow([a, b, repr(float(self.values[i, j])), repr(float(self.p_values[i, j]))])
        return buf.getvalue()

    def to_json(self, seed: int = 0, version: str = "") -> str:
        doc = {
            "seed": seed,
            "version": version,
            "labels": list(self.labels),
            "values": self.values.tolist(),
            "p_values": self.p_values.tolist(),
            "chance_level": self.chance_level,
            "n_neurons": self.n_neurons,
            "iters": self.iters,
        }
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def overlap_matrix(sets, n_neurons: int, iters: int = 10000, seed: int = 0) -> OverlapMatrix:
    """Pairwise overlap proportions and permutation p-values.

    Each unordered pair gets its own random stream derived from ``seed`` and
    the pair's labels, so adding sets never changes existing p-values.
    """
    sets = list(sets)
    if len(sets) < 2:
        raise ValueError("an overlap matrix needs at least two sets")
    k = len(sets)
    values = np.eye(k)
    p = np.ones((k, k))
    for i in range(k):
        for j in range(i, k):
            if i != j:
                values[i, j] = overlap_proportion(sets[i], sets[j])
                values[j, i] = overlap_proportion(sets[j], sets[i])
            pair_seed = derive_seed(seed, "overlap", *sorted((sets[i].label, sets[j].label)))
            p[i, j] = p[j, i] = permutation_significance(sets[i], sets[j], n_neurons, iters, pair_seed)
    size = len(sets[0])
    return OverlapMatrix([s.label for s in sets], values, p, chance_overlap_probability(n_neurons, size), n_neurons, iters)
