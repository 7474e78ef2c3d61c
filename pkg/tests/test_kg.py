import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from graphrx import kg
from graphrx import tensor as T
from graphrx.datasets import compositional_facts, generate_kg
from graphrx.errors import ConfigError, GraphIndexError, VocabularyError
from graphrx.tensor import Parameter

from helpers import brute_force_ranks

seeds = st.integers(0, 2**32 - 1)


def model_with(kind, entity, relation, dim):
    return kg.EmbeddingModel(kind, dim, Parameter(np.asarray(entity, np.float64), "entity"),
                             Parameter(np.asarray(relation, np.float64), "relation"))


def chain_store(n_ent=4):
    ents = [f"e{i}" for i in range(n_ent)]
    train = [(ents[i], "r", ents[i + 1]) for i in range(n_ent - 1)]
    return kg.TripletStore.from_named({"train": train[:-1], "test": train[-1:]})


# ---------------------------------------------------------------- store

def test_store_invariants():
    with pytest.raises(ValueError, match="duplicate"):
        kg.TripletStore(["a", "b"], ["r"], {"train": [(0, 0, 1), (0, 0, 1)]})
    with pytest.raises(ValueError, match="both"):
        kg.TripletStore(["a", "b"], ["r"], {"train": [(0, 0, 1)], "test": [(0, 0, 1)]})
    with pytest.raises(GraphIndexError):
        kg.TripletStore(["a", "b"], ["r"], {"train": [(0, 0, 2)]})


def test_vocabulary_error_suggests():
    store = chain_store()
    with pytest.raises(VocabularyError) as info:
        store.entity_id("e9x")
    assert info.value.suggestion is not None
    with pytest.raises(VocabularyError):
        kg.TripletStore.with_vocab(["a"], ["r"], {"train": [("a", "r", "b")]})


def test_tsv_roundtrip(tmp_path):
    splits = generate_kg(10)
    for name, triples in splits.items():
        kg.write_triples(tmp_path / f"{name}.tsv", triples)
    store = kg.TripletStore.from_tsv_dir(tmp_path)
    assert {k: len(v) for k, v in store.splits.items()} == {"train": 24, "valid": 3, "test": 3}
    with pytest.raises(FileNotFoundError):
        kg.TripletStore.from_tsv_dir(tmp_path / "missing")


def test_generator_examples():
    splits = generate_kg(10, seed=0)
    assert {k: len(v) for k, v in splits.items()} == {"train": 24, "valid": 3, "test": 3}
    assert generate_kg(10, seed=0) == splits
    everything = {t for v in splits.values() for t in v}
    assert len(everything) == 30 == len(compositional_facts(10))


# ---------------------------------------------------------------- scores

def test_shapes_and_rotate_phases():
    m = kg.init_model("rotate", 3, 5, 2, 0)
    assert m.entity.shape == (5, 6) and m.relation.shape == (2, 3)
    th = m.relation.numpy()
    assert np.all(th > -math.pi) and np.all(th <= math.pi)
    assert np.allclose(np.abs(np.exp(1j * th.astype(np.float64))), 1.0)
    s = kg.init_model("simple", 3, 5, 2, 0)
    assert s.entity.shape == (5, 6) and s.relation.shape == (4, 3)
    c = kg.init_model("complex", 3, 5, 2, 0)
    assert c.entity.shape == (5, 6) and c.relation.shape == (2, 6)


def test_init_bound():
    m = kg.init_model("distmult", 4, 50, 5, 0)
    assert np.abs(m.entity.numpy()).max() <= 6 / 2 + 1e-6


def test_transe_exact_translation_is_maximal():
    e = np.array([[0.1, 0.2], [0.4, -0.3], [1.0, 1.0]])
    w = np.array([[0.3, -0.5]])
    m = model_with("transe", e, w, 2)
    s = kg.score(m, [0, 0], [0, 0], [1, 2]).numpy()
    assert abs(s[0]) < 1e-6 and s[1] < s[0]


@given(seeds)
def test_distmult_symmetry(seed):
    m = kg.init_model("distmult", 4, 6, 3, seed)
    rng = np.random.default_rng(seed)
    h, r, t = rng.integers(0, 6, 10), rng.integers(0, 3, 10), rng.integers(0, 6, 10)
    # float32 products in a different order, so equality up to rounding
    assert np.allclose(kg.score(m, h, r, t).numpy(), kg.score(m, t, r, h).numpy(), rtol=1e-5, atol=1e-5)


@given(seeds)
def test_complex_reduces_to_distmult(seed):
    rng = np.random.default_rng(seed)
    d = 3
    e = rng.normal(size=(5, d))
    w = rng.normal(size=(2, d))
    ce = np.zeros((5, 2 * d))
    cw = np.zeros((2, 2 * d))
    ce[:, 0::2], cw[:, 0::2] = e, w
    h, r, t = rng.integers(0, 5, 8), rng.integers(0, 2, 8), rng.integers(0, 5, 8)
    got = kg.score(model_with("complex", ce, cw, d), h, r, t).numpy()
    want = kg.score(model_with("distmult", e, w, d), h, r, t).numpy()
    assert np.allclose(got, want, atol=1e-5)


def test_complex_matches_numpy_oracle():
    rng = np.random.default_rng(3)
    d = 4
    ent = rng.normal(size=(5, 2 * d))
    rel = rng.normal(size=(2, 2 * d))
    m = model_with("complex", ent, rel, d)
    z = ent[:, 0::2] + 1j * ent[:, 1::2]
    w = rel[:, 0::2] + 1j * rel[:, 1::2]
    for h, r, t in [(0, 1, 2), (4, 0, 4), (3, 1, 0)]:
        want = np.real(np.sum(z[h] * w[r] * np.conj(z[t])))
        assert kg.score(m, [h], [r], [t]).numpy()[0] == pytest.approx(want, abs=1e-4)


def test_rotate_matches_numpy_oracle_and_zero_phase():
    rng = np.random.default_rng(4)
    d = 3
    ent = rng.normal(size=(4, 2 * d))
    th = rng.uniform(-math.pi, math.pi, (2, d))
    m = model_with("rotate", ent, th, d)
    z = ent[:, 0::2] + 1j * ent[:, 1::2]
    want = -np.linalg.norm(z[0] * np.exp(1j * th[1]) - z[2])
    assert kg.score(m, [0], [1], [2]).numpy()[0] == pytest.approx(want, abs=1e-4)
    zero = model_with("rotate", ent, np.zeros((1, d)), d)
    want = -np.linalg.norm(ent[0] - ent[3])
    assert kg.score(zero, [0], [0], [3]).numpy()[0] == pytest.approx(want, abs=1e-4)


@given(seeds)
def test_rotate_anti_identity(seed):
    rng = np.random.default_rng(seed)
    d = 3
    ent = rng.normal(size=(3, 2 * d))
    th = rng.uniform(-math.pi, math.pi, (1, d))
    z = (ent[0, 0::2] + 1j * ent[0, 1::2]) * np.exp(1j * th[0])
    ent[1, 0::2], ent[1, 1::2] = z.real, z.imag
    s = kg.score(model_with("rotate", ent, th, d), [0, 0], [0, 0], [1, 2]).numpy()
    assert abs(s[0]) < 1e-5 and s[1] < s[0]


@given(seeds)
def test_transe_anti_identity(seed):
    rng = np.random.default_rng(seed)
    ent = rng.normal(size=(3, 4))
    w = rng.normal(size=(1, 4))
    ent[1] = ent[0] + w[0]
    s = kg.score(model_with("transe", ent, w, 4), [0, 0], [0, 0], [1, 2]).numpy()
    assert abs(s[0]) < 1e-5 and s[1] < s[0]


def test_simple_formula_and_tied_inverse_symmetry():
    rng = np.random.default_rng(5)
    d = 3
    ent = rng.normal(size=(4, 2 * d))
    rel = rng.normal(size=(2, d))
    m = model_with("simple", ent, rel, d)
    hh, ht = ent[:, :d], ent[:, d:]
    want = 0.5 * (np.sum(hh[0] * rel[0] * ht[2]) + np.sum(hh[2] * rel[1] * ht[0]))
    assert kg.score(m, [0], [0], [2]).numpy()[0] == pytest.approx(want, abs=1e-4)
    tied = model_with("simple", ent, np.concatenate([rel[:1], rel[:1]]), d)
    h, t = rng.integers(0, 4, 10), rng.integers(0, 4, 10)
    r = np.zeros(10, dtype=int)
    assert np.allclose(kg.score(tied, h, r, t).numpy(), kg.score(tied, t, r, h).numpy(), atol=1e-5)


def test_score_index_errors():
    m = kg.init_model("transe", 2, 3, 1, 0)
    with pytest.raises(GraphIndexError):
        kg.score(m, [3], [0], [0])
    with pytest.raises(GraphIndexError):
        kg.score(m, [0], [1], [0])


# ---------------------------------------------------------------- negatives

def test_forced_negative():
    # corruptions of (a, r, b): (a, r, a) and (a, r, b) are facts, (b, r, b) is not
    store = kg.TripletStore(["a", "b"], ["r"], {"train": [(0, 0, 1), (0, 0, 0)]})
    negs = kg.negative_sample(store, np.array([[0, 0, 1]]), 20, "filtered", 0)
    assert np.all(negs.triples.reshape(-1, 3) == [1, 0, 1])
    assert negs.unresolved == 0


def test_unresolvable_negatives_are_counted():
    store = kg.TripletStore(["a"], ["r"], {"train": [(0, 0, 0)]})
    negs = kg.negative_sample(store, np.array([[0, 0, 0]]), 3, "filtered", 0)
    assert negs.unresolved == 3


def test_uniform_negative_statistics():
    n = 20
    store = kg.TripletStore([str(i) for i in range(n)], ["r"], {"train": [(0, 0, 1)]})
    pos = np.tile([[0, 0, 1]], (10000, 1))
    negs = kg.negative_sample(store, pos, 10, "uniform", 0)
    tri = negs.triples.reshape(-1, 3)
    side = negs.corrupted_tail.reshape(-1)
    ent = np.where(side, tri[:, 2], tri[:, 0])
    counts = np.bincount(ent, minlength=n)
    expected = ent.size / n
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    dof = n - 1
    assert chi2 < dof + 3 * math.sqrt(2 * dof)
    heads = side.size - side.sum()
    assert abs(heads - side.size / 2) < 3 * math.sqrt(side.size / 4)


def test_negative_sampling_deterministic():
    store = chain_store(8)
    pos = store.splits["train"]
    a = kg.negative_sample(store, pos, 5, "filtered", 42)
    b = kg.negative_sample(store, pos, 5, "filtered", 42)
    assert a.triples.tobytes() == b.triples.tobytes()
    with pytest.raises(ConfigError):
        kg.negative_sample(store, pos, 0)


def test_filtered_negatives_avoid_facts():
    splits = generate_kg(12)
    store = kg.TripletStore.from_named(splits)
    negs = kg.negative_sample(store, store.splits["train"], 8, "filtered", 1)
    assert not store.is_fact(negs.triples.reshape(-1, 3)).any()


# ---------------------------------------------------------------- losses

def test_margin_loss_floor():
    pos = T.Tensor(np.array([5.0, 4.0]))
    neg = T.Tensor(np.array([[1.0, 2.0], [0.0, 1.0]]))
    assert kg.loss("margin", pos, neg, margin=2.0).item() == 0.0
    assert kg.loss("margin", pos, neg, margin=3.5).item() == pytest.approx(0.25)


def test_logistic_loss_at_zero():
    value = kg.loss("logistic", T.Tensor(np.zeros(3)), T.Tensor(np.zeros(3)))
    assert value.item() == pytest.approx(2 * math.log(2), rel=1e-6)


def test_self_adversarial_zero_temperature_is_mean():
    rng = np.random.default_rng(0)
    pos, neg = rng.normal(size=4), rng.normal(size=(4, 3))
    got = kg.loss("self_adversarial", T.Tensor(pos), T.Tensor(neg), margin=1.5, temperature=0.0).item()
    softplus = lambda x: np.log1p(np.exp(x))  # noqa: E731
    want = softplus(-(pos + 1.5)).mean() + softplus(neg + 1.5).mean(axis=1).mean()
    assert got == pytest.approx(want, rel=1e-5)


def test_self_adversarial_weights():
    pos, neg = np.array([0.3]), np.array([[0.0, 1.0]])
    got = kg.loss("self_adversarial", T.Tensor(pos), T.Tensor(neg), margin=1.0, temperature=2.0).item()
    w = np.exp(2 * neg[0]) / np.exp(2 * neg[0]).sum()
    want = -np.log(1 / (1 + np.exp(-(1.0 + 0.3)))) - np.sum(w * np.log(1 / (1 + np.exp(1.0 + neg[0]))))
    assert got == pytest.approx(want, rel=1e-5)


def test_unknown_loss():
    with pytest.raises(ConfigError):
        kg.loss("hinge", T.Tensor(np.zeros(1)), T.Tensor(np.zeros(1)))


# ---------------------------------------------------------------- training

@pytest.mark.parametrize("seed", [0, 1, 2])
def test_single_triple_transe_converges(seed):
    store = kg.TripletStore(["a", "b", "c"], ["r"], {"train": [(0, 0, 1)]})
    cfg = kg.KGTrainConfig(epochs=300, batch_size=1, lr=0.01, seed=seed)
    res = kg.train(store, "transe", 4, cfg)
    assert res.losses[-1] < 1e-6
    e, w = res.model.entity.numpy().astype(np.float64), res.model.relation.numpy().astype(np.float64)
    a, b = e[0] + w[0], e[1]
    assert a @ b / (np.linalg.norm(a) * np.linalg.norm(b)) > 1 - 1e-2


def test_zero_epochs_is_initialization():
    store = chain_store()
    cfg = kg.KGTrainConfig(epochs=0, seed=3)
    res = kg.train(store, "distmult", 4, cfg)
    init = kg.init_model("distmult", 4, store.num_entities, store.num_relations,
                         np.random.default_rng(3), cfg.init_scale)
    assert res.losses == []
    assert np.array_equal(res.model.entity.numpy(), init.entity.numpy())
    assert np.array_equal(res.model.relation.numpy(), init.relation.numpy())


@pytest.mark.parametrize("kind", kg.MODEL_KINDS)
def test_training_deterministic(kind):
    store = kg.TripletStore.from_named(generate_kg(10))
    cfg = kg.KGTrainConfig(epochs=5, seed=7)
    a = kg.train(store, kind, 4, cfg)
    b = kg.train(store, kind, 4, cfg)
    assert np.array(a.losses).tobytes() == np.array(b.losses).tobytes()
    assert a.model.entity.numpy().tobytes() == b.model.entity.numpy().tobytes()


def test_training_postprocessing():
    store = kg.TripletStore.from_named(generate_kg(10))
    t = kg.train(store, "transe", 4, kg.KGTrainConfig(epochs=3)).model
    assert np.allclose(np.linalg.norm(t.entity.numpy(), axis=1), 1.0, atol=1e-5)
    r = kg.train(store, "rotate", 4, kg.KGTrainConfig(epochs=3, lr=0.5)).model
    th = r.relation.numpy()
    assert np.all(th > -math.pi - 1e-6) and np.all(th <= math.pi + 1e-6)


def test_empty_train_split():
    store = kg.TripletStore(["a"], ["r"], {})
    with pytest.raises(ConfigError):
        kg.train(store, "transe", 2, kg.KGTrainConfig(epochs=1))


# ---------------------------------------------------------------- evaluation

def test_perfect_model_metrics():
    # one-hot distmult entities score 1 only for (x, same, x)
    store = kg.TripletStore(["a", "b", "c"], ["same"], {"train": [(0, 0, 0)], "test": [(1, 0, 1), (2, 0, 2)]})
    m = model_with("distmult", np.eye(3), np.ones((1, 3)), 3)
    rep = kg.evaluate_filtered(store, m)
    assert rep.mrr == 1.0 and rep.mr == 1.0 and rep.hits(1) == 1.0 and rep.count == 2


def test_pessimistic_ties():
    store = kg.TripletStore(["a", "b", "c"], ["r"], {"test": [(0, 0, 1)]})
    flat = model_with("distmult", np.zeros((3, 2)), np.zeros((1, 2)), 2)
    rep = kg.evaluate_filtered(store, flat)
    assert rep.mr == 3.0 and rep.hits(1) == 0.0


def test_hand_set_three_entity_store():
    store = kg.TripletStore(["a", "b", "c"], ["r"], {"train": [(0, 0, 2)], "test": [(0, 0, 1), (2, 0, 1)]})
    ent = np.array([[1.0, 0.0], [0.5, 0.5], [0.0, 2.0]])
    m = model_with("distmult", ent, np.array([[1.0, 1.0]]), 2)
    rep = kg.evaluate_filtered(store, m)
    ranks = brute_force_ranks(store, m, "test")
    heads, tails = ranks[0::2], ranks[1::2]
    assert rep.head["mr"] == pytest.approx(np.mean(heads))
    assert rep.tail["mr"] == pytest.approx(np.mean(tails))
    assert rep.both["mrr"] == pytest.approx(np.mean([1 / r for r in ranks]))


def _metrics(ranks):
    r = np.array(ranks, dtype=float)
    return {"mr": r.mean(), "mrr": (1 / r).mean(), "hits@1": (r <= 1).mean(),
            "hits@3": (r <= 3).mean(), "hits@10": (r <= 10).mean()}


@st.composite
def small_stores(draw):
    ne = draw(st.integers(2, 10))
    nr = draw(st.integers(1, 3))
    cells = draw(st.lists(st.tuples(st.integers(0, ne - 1), st.integers(0, nr - 1), st.integers(0, ne - 1)),
                          min_size=1, max_size=30, unique=True))
    cut = draw(st.integers(0, len(cells) - 1))
    return kg.TripletStore([f"e{i}" for i in range(ne)], [f"r{i}" for i in range(nr)],
                           {"train": cells[:cut], "test": cells[cut:]})


@given(small_stores(), st.sampled_from(kg.MODEL_KINDS), seeds, st.booleans())
def test_evaluate_matches_brute_force(store, kind, seed, quantize):
    m = kg.init_model(kind, 2, store.num_entities, store.num_relations, seed)
    if quantize and kind != "rotate":
        # coarse tables force ties so pessimistic tie-breaking is exercised
        m.entity.assign(np.round(m.entity.numpy()))
        m.relation.assign(np.round(m.relation.numpy()))
    rep = kg.evaluate_filtered(store, m)
    ranks = brute_force_ranks(store, m, "test")
    for got, want in ((rep.head, ranks[0::2]), (rep.tail, ranks[1::2]), (rep.both, ranks)):
        for key, value in _metrics(want).items():
            assert got[key] == pytest.approx(value, abs=1e-12)


@given(small_stores(), seeds)
def test_evaluate_sharding_independent(store, seed):
    m = kg.init_model("complex", 3, store.num_entities, store.num_relations, seed)
    assert kg.evaluate_filtered(store, m, workers=1) == kg.evaluate_filtered(store, m, workers=3)


@given(seeds, st.integers(-1000, 1000))
def test_rank_invariance_under_constant_shift(seed, c):
    rng = np.random.default_rng(seed)
    scores = rng.integers(-5, 5, (6, 9)).astype(np.float64)
    true = rng.integers(0, 9, 6)
    exclude = rng.random((6, 9)) < 0.3
    assert np.array_equal(kg.filtered_ranks(scores + c, true, exclude), kg.filtered_ranks(scores, true, exclude))


@given(seeds)
def test_report_invariants(seed):
    store = kg.TripletStore.from_named(generate_kg(10))
    m = kg.init_model("distmult", 3, store.num_entities, store.num_relations, seed)
    rep = kg.evaluate_filtered(store, m)
    for part in (rep.head, rep.tail, rep.both):
        assert 0 < part["mrr"] <= 1 and part["mr"] >= 1
        assert part["hits@1"] <= part["hits@3"] <= part["hits@10"]


def test_raw_ranking_is_never_better():
    store = kg.TripletStore.from_named(generate_kg(12))
    m = kg.init_model("complex", 4, store.num_entities, store.num_relations, 0)
    assert kg.evaluate_filtered(store, m, filtered=False).mr >= kg.evaluate_filtered(store, m).mr
    assert kg.evaluate_filtered(store, m, filtered=False).to_record()["ranking"] == "raw"


def test_random_model_mrr_matches_uniform_ranking():
    n = 60
    store = kg.TripletStore.from_named(generate_kg(n))
    facts = {tuple(t) for s in kg.SPLITS for t in store.splits[s].tolist()}
    mean, var = 0.0, 0.0
    triples = store.splits["test"].tolist()
    for h, r, t in triples:
        for side in ("head", "tail"):
            cands = [(e, r, t) if side == "head" else (h, r, e) for e in range(n)]
            size = 1 + sum(c not in facts for c in cands)
            harm = sum(1 / k for k in range(1, size + 1))
            harm2 = sum(1 / k ** 2 for k in range(1, size + 1))
            mean += harm / size
            var += harm2 / size - (harm / size) ** 2
    q = 2 * len(triples)
    mean, sigma = mean / q, math.sqrt(var) / q
    mrrs = [kg.evaluate_filtered(store, kg.init_model("distmult", 8, n, store.num_relations, s)).mrr
            for s in range(5)]
    assert abs(np.mean(mrrs) - mean) < 3 * sigma


# ---------------------------------------------------------------- queries

def test_query_topk():
    store = kg.TripletStore(["a", "b", "c"], ["r"], {"train": [(0, 0, 1)]})
    m = model_with("distmult", np.array([[1.0], [3.0], [2.0]]), np.array([[1.0]]), 1)
    assert [n for n, _ in kg.query_topk(store, m, "a", "r", 5, include_known=True)] == ["b", "c", "a"]
    assert [n for n, _ in kg.query_topk(store, m, "a", "r", 5)] == ["c", "a"]
    top = kg.query_topk(store, m, "a", "r", 1, include_known=True)
    assert top == [("b", 3.0)]
    with pytest.raises(ConfigError):
        kg.query_topk(store, m, "a", "r", 0)
    with pytest.raises(VocabularyError) as info:
        kg.query_topk(store, m, "a", "rr", 1)
    assert info.value.suggestion == "r"


def test_query_topk_brute_force_and_ties():
    store = kg.TripletStore(["a", "b", "c", "d"], ["r"], {"train": [(0, 0, 3)]})
    m = model_with("distmult", np.array([[1.0], [2.0], [2.0], [0.5]]), np.array([[1.0]]), 1)
    got = kg.query_topk(store, m, "a", "r", 10, include_known=True)
    scores = [kg.score(m, [0], [0], [e]).numpy()[0] for e in range(4)]
    want = sorted(range(4), key=lambda e: (-scores[e], e))
    assert [n for n, _ in got] == [store.entities[e] for e in want]


def test_query_topk_all_known():
    store = kg.TripletStore(["a", "b"], ["r"], {"train": [(0, 0, 0), (0, 0, 1)]})
    m = kg.init_model("transe", 2, 2, 1, 0)
    assert kg.query_topk(store, m, "a", "r", 3) == []
