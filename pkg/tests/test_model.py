import math

import numpy as np
import pytest

from agsc.model import (
    ContractError,
    InterventionSpec,
    Model,
    ModelConfig,
    NeuronId,
    loss_and_grads,
    random_init_weights,
    token_probability,
)
from agsc.vocab import Vocabulary

from conftest import perturbed_model


def tiny(mode="alm", seed=0, v=11, use_features=True):
    vocab = Vocabulary.from_features({f"w{i}": (("sg", "pl")[i % 2], "noun") for i in range(v - 3)})
    cfg = ModelConfig(mode, 2, 8, 2, 16, len(vocab), 12, seed=seed, use_features=use_features)
    model = Model.random_init(cfg, vocab)
    rng = np.random.default_rng(seed + 7)
    for k in model.params:
        model.params[k] = model.params[k] + rng.normal(0, 0.3, model.params[k].shape)
    return model


def test_config_validation():
    with pytest.raises(ValueError):
        ModelConfig("alm", 2, 10, 3, 8, 11, 8)
    with pytest.raises(ValueError):
        ModelConfig("rnn", 2, 8, 2, 8, 11, 8)
    with pytest.raises(ValueError):
        ModelConfig("alm", 0, 8, 2, 8, 11, 8)


def test_neuron_count_counts_the_embedding_layer():
    assert ModelConfig("mlm", 12, 768, 12, 3072, 100, 8).n_neurons == 9984


@pytest.mark.parametrize("mode", ["alm", "mlm"])
def test_forward_shapes_and_null_intervention(mode):
    m = tiny(mode)
    ids = np.array([0, 3, 4, 5, 2])
    logits, cache = m.forward(ids, 3)
    assert logits.shape == (11,)
    assert cache.hidden.shape == (3, 5, 8)
    logits2, cache2 = m.forward(ids, 3, InterventionSpec(1, {}))
    assert np.array_equal(logits, logits2)
    assert np.array_equal(cache.hidden, cache2.hidden)


@pytest.mark.parametrize("mode", ["alm", "mlm"])
def test_cache_fidelity(mode):
    m = tiny(mode)
    ids = np.array([0, 3, 4, 5, 2])
    logits, cache = m.forward(ids, 4)
    spec = InterventionSpec(2, {NeuronId(l, d): cache.hidden[l, 2, d] for l in range(3) for d in range(8)})
    assert np.array_equal(m.forward(ids, 4, spec)[0], logits)


@pytest.mark.parametrize("mode", ["alm", "mlm"])
def test_final_layer_override_reproduces_other_run(mode):
    m = tiny(mode)
    a, b = np.array([0, 3, 4, 5, 2]), np.array([0, 6, 7, 8, 2])
    q = 3
    logits_b, cache_b = m.forward(b, q)
    spec = InterventionSpec(q, {NeuronId(2, d): cache_b.hidden[2, q, d] for d in range(8)})
    if mode == "alm":
        assert np.array_equal(m.forward(a, q, spec)[0], logits_b)
    else:
        np.testing.assert_allclose(m.forward(a, q, spec)[0], logits_b, atol=1e-12)


@pytest.mark.parametrize("mode", ["alm", "mlm"])
def test_column_completeness(mode):
    m = tiny(mode)
    a, b = np.array([0, 3, 4, 5, 6, 2]), np.array([0, 3, 7, 5, 6, 2])
    q = 4
    logits_b, cache_b = m.forward(b, q)
    spec = InterventionSpec(2, {NeuronId(l, d): cache_b.hidden[l, 2, d] for l in range(3) for d in range(8)})
    np.testing.assert_allclose(m.forward(a, q, spec)[0], logits_b, atol=1e-9, rtol=0)


def test_prefix_causality_in_alm():
    m = tiny("alm")
    a, b = np.array([0, 3, 4, 5, 6]), np.array([0, 3, 4, 8, 7])
    assert np.allclose(m.forward(a, 2)[0], m.forward(b, 2)[0], atol=1e-13)
    spec = InterventionSpec(4, {NeuronId(1, 0): 99.0})
    assert np.allclose(m.forward(a, 2, spec)[0], m.forward(a, 2)[0], atol=1e-13)


def test_mlm_sees_right_context():
    m = tiny("mlm")
    a, b = np.array([0, 3, 4, 5, 6]), np.array([0, 3, 4, 8, 7])
    assert not np.allclose(m.forward(a, 2)[0], m.forward(b, 2)[0])


def test_contract_errors():
    m = tiny()
    with pytest.raises(ContractError):
        m.forward(np.array([0, 99]), 1)
    with pytest.raises(ContractError):
        m.forward(np.array([0, 3]), 2)
    with pytest.raises(ContractError):
        m.forward(np.array([0, 3]), 1, InterventionSpec(0, {NeuronId(3, 0): 1.0}))
    with pytest.raises(ContractError):
        m.forward(np.array([0, 3]), 1, InterventionSpec(5, {NeuronId(0, 0): 1.0}))
    with pytest.raises(ContractError):
        m.forward(np.arange(13) % 11, 1)


def test_token_probability():
    p, lp = token_probability(np.zeros(7), 3)
    assert p == pytest.approx(1 / 7)
    logits = np.array([0.1, 2.0, -1.0, 0.5])
    probs = [token_probability(logits, i)[0] for i in range(4)]
    assert int(np.argmax(probs)) == 1
    for i in range(4):
        p, lp = token_probability(logits, i)
        assert math.exp(lp) == pytest.approx(p, abs=1e-12)
    with pytest.raises(ContractError):
        token_probability(logits, 4)


def test_random_init_is_seeded():
    cfg = ModelConfig("alm", 2, 8, 2, 16, 11, 8, seed=4)
    a, b = random_init_weights(cfg), random_init_weights(cfg)
    c = random_init_weights(ModelConfig("alm", 2, 8, 2, 16, 11, 8, seed=5))
    assert all(np.array_equal(a.params[k], b.params[k]) for k in a.params)
    assert not np.array_equal(a.params["tok_emb"], c.params["tok_emb"])
    assert np.all(a.params["layers.1.ln1_g"] == 1.0) and np.all(a.params["layers.1.qkv_b"] == 0.0)
    assert a.params["tok_emb"].std() == pytest.approx(0.02, rel=0.2)


def test_init_loss_is_chance_level():
    vocab = Vocabulary.synthetic(50)
    m = random_init_weights(ModelConfig("alm", 2, 16, 2, 32, 50, 16, seed=0, use_features=False), vocab)
    ids = np.random.default_rng(0).integers(0, 50, size=(8, 10))
    targets = np.roll(ids, -1, axis=1)
    targets[:, -1] = -1
    loss, _ = loss_and_grads(m, ids, targets)
    assert loss == pytest.approx(math.log(50), rel=0.02)


@pytest.mark.parametrize("mode", ["alm", "mlm"])
def test_gradients_match_finite_differences(mode):
    m = tiny(mode, seed=3)
    rng = np.random.default_rng(2)
    ids = rng.integers(0, 11, size=(2, 5))
    targets = rng.integers(0, 11, size=(2, 5))
    targets[0, 1] = -1
    _, grads = loss_and_grads(m, ids, targets)
    h = 1e-5
    for name, p in m.params.items():
        num = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + h
            up, _ = loss_and_grads(m, ids, targets)
            p[idx] = old - h
            down, _ = loss_and_grads(m, ids, targets)
            p[idx] = old
            num[idx] = (up - down) / (2 * h)
        err = np.linalg.norm(grads[name] - num) / max(np.linalg.norm(num), np.linalg.norm(grads[name]), 1e-12)
        assert err < 1e-4, name


def test_batched_run_matches_single_forward(en_vocab):
    m = perturbed_model(en_vocab)
    ids = np.array([[0, 5, 9, 12], [0, 6, 10, 13]])
    batched = m.logits(m.run(ids))
    for row in range(2):
        single = m.logits(m.run(ids[row][None]))[0]
        np.testing.assert_allclose(batched[row], single, atol=1e-12)
