import math

import numpy as np
import pytest

from agsc.mediation import (
    EffectTable,
    SparsityCurve,
    all_neuron_nies,
    build_query,
    curve_csv,
    default_k_step,
    effect_detail_jsonl,
    effect_table_csv,
    neuron_nie,
    rank_neurons,
    read_curve_csv,
    read_effect_table,
    resolve_position,
    response_ratio,
    sparsity_metrics,
    sparsity_sweep,
    stimulus_nie,
    total_effect,
)
from agsc.model import ContractError, InterventionSpec, Model, ModelConfig, NeuronId
from agsc.oracles import column_completeness, naive_nie_table
from agsc.stimuli import Stimulus

from conftest import perturbed_model


def uniform_model(vocab):
    m = Model.random_init(ModelConfig("alm", 2, 8, 2, 16, len(vocab), 16, seed=0), vocab)
    for k in ("tok_emb", "num_emb", "cls_emb", "out_bias"):
        m.params[k] = np.zeros_like(m.params[k])
    return m


# ---------------------------------------------------------------- ratios


def test_uniform_logits_give_zero(en_vocab, probe_stimuli):
    m = uniform_model(en_vocab)
    s = probe_stimuli["simple"][0]
    assert response_ratio(m, s, "null").log_y == 0.0
    assert response_ratio(m, s, "swap").value == 1.0
    assert total_effect(m, probe_stimuli["simple"][:5]).te_mean == 0.0


def test_trained_model_sign_convention(small_trained, probe_stimuli):
    stimuli = probe_stimuli["simple"][:40]
    null = [response_ratio(small_trained, s, "null").log_y for s in stimuli]
    swap = [response_ratio(small_trained, s, "swap").log_y for s in stimuli]
    assert np.mean(np.array(null) < 0) > 0.9
    assert np.mean(np.array(swap) > 0) > 0.9
    assert total_effect(small_trained, stimuli).te_mean > 0


def test_log_space_matches_linear_ratio(tiny_alm, probe_stimuli):
    for s in probe_stimuli["across_rc"][:10]:
        q = build_query(tiny_alm, s)
        logits, _ = tiny_alm.forward(q.null_ids, q.query)
        p = np.exp(logits - logits.max())
        p /= p.sum()
        linear = p[q.mismatch] / p[q.match]
        assert response_ratio(tiny_alm, s).value == pytest.approx(linear, rel=1e-10)


def test_ratio_roles_come_from_null_prompt(tiny_alm, probe_stimuli):
    s = probe_stimuli["simple"][0]
    f = s.flipped()
    assert response_ratio(tiny_alm, s, "swap").log_y == pytest.approx(-response_ratio(tiny_alm, f, "null").log_y, abs=1e-12)


def test_variant_and_vocabulary_errors(tiny_alm, probe_stimuli):
    s = probe_stimuli["simple"][0]
    with pytest.raises(ValueError):
        response_ratio(tiny_alm, s, "other")
    bad = Stimulus("x", "en", "simple", ("<bos>", "the", "zzz", "[MASK]", "."), ("<bos>", "the", "yyy", "[MASK]", "."),
                   2, None, 3, "sees", "see")
    with pytest.raises(ContractError):
        build_query(tiny_alm, bad)


def test_query_shapes(tiny_alm, tiny_mlm, probe_stimuli):
    s = probe_stimuli["across_pp"][0]
    qa = build_query(tiny_alm, s)
    assert qa.null_ids.size == s.verb_slot and qa.query == s.verb_slot - 1
    qm = build_query(tiny_mlm, s)
    assert qm.null_ids.size == len(s.tokens_null) and qm.query == s.verb_slot
    assert resolve_position(s, "alm", "verb_slot") == s.verb_slot - 1
    assert resolve_position(s, "mlm", "verb_slot") == s.verb_slot
    assert resolve_position(s, "alm", 1) == 1
    with pytest.raises(ContractError):
        build_query(tiny_alm, s, policy=50)
    with pytest.raises(ContractError):
        resolve_position(s, "alm", "object")


# ---------------------------------------------------------------- NIE


@pytest.mark.parametrize("mode", ["alm", "mlm"])
def test_null_intervention_is_zero(en_vocab, probe_stimuli, mode):
    m = perturbed_model(en_vocab, mode)
    s = probe_stimuli["across_pp"][3]
    q = build_query(m, s)
    base = response_ratio(m, s).log_y
    _, cache = m.forward(q.null_ids, q.query)
    for layer in range(m.config.n_layers + 1):
        for dim in range(m.config.hidden_dim):
            n = NeuronId(layer, dim)
            spec = InterventionSpec(q.position, {n: cache.value(n, q.position)})
            assert abs(math.expm1(response_ratio(m, s, "null", spec).log_y - base)) <= 1e-12


@pytest.mark.parametrize("mode", ["alm", "mlm"])
def test_batched_table_matches_naive_oracle(en_vocab, probe_stimuli, mode):
    m = perturbed_model(en_vocab, mode, seed=5)
    stimuli = [probe_stimuli[k][i] for k in ("simple", "across_pp", "across_rc") for i in (0, 1)][:5]
    table = all_neuron_nies(m, stimuli)
    assert table.values.shape == (5, (m.config.n_layers + 1) * m.config.hidden_dim)
    np.testing.assert_allclose(table.values, naive_nie_table(m, stimuli), atol=1e-10, rtol=0)
    assert np.abs(table.values).max() > 1e-3


def test_single_neuron_paths_agree(tiny_alm, probe_stimuli):
    stimuli = probe_stimuli["across_rc"][:6]
    table = all_neuron_nies(tiny_alm, stimuli, jobs=2)
    for idx in (0, 7, 13, 23):
        n = table.neuron(idx)
        rec = neuron_nie(tiny_alm, stimuli, n)
        assert rec.n_stimuli == 6 and rec.nie_mean == pytest.approx(np.mean(rec.nie_per_stimulus), abs=1e-15)
        np.testing.assert_allclose(rec.nie_per_stimulus, table.values[:, idx], atol=1e-12)
        assert stimulus_nie(tiny_alm, stimuli[0], n) == pytest.approx(table.values[0, idx], abs=1e-12)
    assert table.record(table.neuron(7)).nie_mean == table.nie_mean[7]


def test_table_is_deterministic_across_job_counts(tiny_mlm, probe_stimuli):
    stimuli = probe_stimuli["simple"][:8]
    a = effect_table_csv(all_neuron_nies(tiny_mlm, stimuli, jobs=1), seed=1, version="x")
    b = effect_table_csv(all_neuron_nies(tiny_mlm, stimuli, jobs=4, chunk=5), seed=1, version="x")
    assert a == b


def test_empty_stimuli_rejected(tiny_alm):
    with pytest.raises(ValueError):
        all_neuron_nies(tiny_alm, [])
    with pytest.raises(ValueError):
        total_effect(tiny_alm, [])


def test_untrained_model_mean_nie_is_small(en_vocab, probe_stimuli, small_trained):
    stimuli = probe_stimuli["simple"][:20]
    m = Model.random_init(ModelConfig("alm", 2, 16, 2, 32, len(en_vocab), 16, seed=2), en_vocab)
    untrained = float(all_neuron_nies(m, stimuli).nie_mean.mean())
    trained = float(all_neuron_nies(small_trained, stimuli).nie_mean.mean())
    assert abs(untrained) < 0.05
    assert abs(untrained) < 0.25 * abs(trained)


# ---------------------------------------------------------------- total effect and sweep


@pytest.mark.parametrize("mode", ["alm", "mlm"])
def test_full_column_reproduces_total_effect(en_vocab, probe_stimuli, mode):
    m = perturbed_model(en_vocab, mode, seed=2)
    results = column_completeness(m, probe_stimuli["across_rc"][:6])
    assert all(r.passed for r in results), [r.line() for r in results]


def test_sweep_shape_and_endpoint(tiny_alm, probe_stimuli):
    stimuli = probe_stimuli["across_pp"][:6]
    te = total_effect(tiny_alm, stimuli)
    curve = sparsity_sweep(tiny_alm, stimuli, k_step=5, te=te)
    n = tiny_alm.config.n_neurons
    assert curve.m_neurons == [5, 10, 15, 20, n]
    assert curve.pct_neurons[-1] == 100.0
    assert curve.cumulative_nie[-1] == pytest.approx(te.te_mean, rel=1e-6)
    with pytest.raises(ValueError):
        sparsity_sweep(tiny_alm, stimuli, k_step=n + 1)


def test_sweep_first_point_matches_single_neuron(tiny_alm, probe_stimuli):
    stimuli = probe_stimuli["simple"][:6]
    table = all_neuron_nies(tiny_alm, stimuli)
    curve = sparsity_sweep(tiny_alm, stimuli, k_step=1, table=table)
    assert curve.cumulative_nie[0] == pytest.approx(float(table.nie_mean.max()), abs=1e-12)


def test_default_k_step():
    assert default_k_step(768) == 96
    assert default_k_step(1024) == 128
    assert default_k_step(4) == 1
    # 96 neurons is about 1% of a 12-layer width-768 model
    assert 96 / 9984 == pytest.approx(0.01, abs=0.001)


def test_rank_ties_keep_neuron_order():
    assert rank_neurons(np.array([0.5, 1.0, 0.5, 1.0])).tolist() == [1, 3, 0, 2]


def _curve(values, te):
    n = 4 * len(values)
    return SparsityCurve(4, n, [4 * (i + 1) for i in range(len(values))], list(values), te)


def test_sparsity_metrics_hand_values():
    assert sparsity_metrics(_curve([0.5, 1.2, 0.9, 0.8], 0.8)) == (50.0, 50.0)
    assert sparsity_metrics(_curve([0.1, 0.2, 0.3, 0.4], 0.4)) == (100.0, 100.0)
    assert sparsity_metrics(_curve([1.0, 1.0, 0.5, 0.5], 0.5)) == (25.0, 25.0)
    with pytest.raises(AssertionError):
        sparsity_metrics(_curve([0.1, 0.2], 0.5))


# ---------------------------------------------------------------- files


def test_effect_table_round_trip(tmp_path, tiny_alm, probe_stimuli):
    table = all_neuron_nies(tiny_alm, probe_stimuli["across_rc"][:4])
    text = effect_table_csv(table, seed=3, version="0.1.0")
    lines = text.splitlines()
    assert lines[0] == "# seed=3 version=0.1.0"
    assert lines[1] == "language,structure,word_variant,layer,dim,nie_mean,n_stimuli"
    assert len(lines) == 2 + tiny_alm.config.n_neurons
    (tmp_path / "t.csv").write_text(text)
    (tmp_path / "t.jsonl").write_text(effect_detail_jsonl(table))
    back = read_effect_table(tmp_path / "t.csv", tmp_path / "t.jsonl")
    assert np.array_equal(back.values, table.values)
    assert back.stimulus_ids == table.stimulus_ids
    assert np.array_equal(back.nie_mean, table.nie_mean)


def test_curve_round_trip(tmp_path):
    curve = _curve([0.1, 0.30000000000000004, 0.2], 0.2)
    (tmp_path / "c.csv").write_text(curve_csv(curve, 1, "v"))
    back = read_curve_csv(tmp_path / "c.csv")
    assert back.cumulative_nie == curve.cumulative_nie and back.m_neurons == curve.m_neurons
    assert back.te_reference == curve.te_reference


def test_effect_table_subset_and_layers():
    values = np.arange(12, dtype=float).reshape(2, 6)
    t = EffectTable("en", "simple", "original", 2, 2, ["a", "b"], values)
    assert t.by_layer().shape == (3, 2)
    assert t.by_layer()[1, 0] == 5.0
    assert t.subset([1]).values.tolist() == [values[1].tolist()]
    assert t.neuron(3) == NeuronId(1, 1)
