import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from charstyle import refiner
from charstyle.corpus_io import EmbeddingTable
from charstyle.errors import StyleError
from charstyle.refiner import (DEFAULT_GRID, LabelSet, RefinerConfig, RefinerModel, RefinerWarning,
                               centroid_baseline, cosine_matrix, default_labels, init_model,
                               inverse_frequency_weights, loss_and_grads, macro_f1, make_example,
                               optimize_thresholds_from_probs, oversample_rare_labels, predict,
                               profile_from_decisions, train_refiner, weighted_bce)
from charstyle.toy import synthetic_refiner_data

LABELS = default_labels()


def test_taxonomy():
    assert len(LABELS) == 50
    assert set(LABELS.by_category()) == {"social_stance", "cognitive_tendency", "emotional_tone",
                                         "core_archetype"}
    assert "cute" in LABELS.labels and "rational" in LABELS.labels


def small_labels(n):
    return LabelSet(tuple(f"l{i}" for i in range(n)), ("c",) * n)


def examples_from(data, labels):
    cents = data.centroids(labels)
    return [make_example(data.utterances[i], cents, labels, data.contexts[i], data.gold[i], f"e{i}")
            for i in range(len(data.gold))]


def gold_examples(rows):
    labs = small_labels(len(rows[0]))
    cents = EmbeddingTable(2, {lab: np.array([1.0, i + 1.0]) for i, lab in enumerate(labs.labels)})
    return [make_example(np.array([1.0, 0.5]), cents, labs, gold=np.array(r, dtype=np.int8), id=f"x{i}")
            for i, r in enumerate(rows)]


def test_oversample_noop():
    ex = gold_examples([[1, 1]] * 23)
    assert oversample_rare_labels(ex, 23) == ex


def test_oversample_five_to_twenty_three():
    ex = gold_examples([[1, 0]] * 30 + [[0, 1]] * 5)
    out = oversample_rare_labels(ex, 23)
    gold = refiner.stack_gold(out)
    assert gold[:, 1].sum() == 23
    assert len(out) == 35 + 18
    assert out[:35] == ex


def test_oversample_absent_label_warns():
    ex = gold_examples([[1, 0]] * 3)
    with pytest.warns(RefinerWarning, match="no examples"):
        out = oversample_rare_labels(ex, 5)
    assert refiner.stack_gold(out)[:, 0].sum() == 5


@given(st.lists(st.lists(st.integers(0, 1), min_size=3, max_size=3), min_size=1, max_size=30),
       st.integers(1, 30))
def test_oversample_never_removes_and_reaches_minimum(rows, m):
    ex = gold_examples(rows)
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RefinerWarning)
        out = oversample_rare_labels(ex, m)
    assert out[:len(ex)] == ex
    before = refiner.stack_gold(ex).sum(axis=0)
    after = refiner.stack_gold(out).sum(axis=0)
    assert np.all((after >= m) | (before == 0))
    assert np.all(after >= before)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((7, 6))
    y = (rng.random((7, 4)) < 0.4).astype(float)
    model = init_model(6, 4, 5, seed=1, label_weights=rng.uniform(0.5, 2.0, 4))
    model.b1[:] = 0.1  # keep ReLU inputs away from the kink
    _, grads = loss_and_grads(model, x, y)
    eps = 1e-6
    for name, param in model.params().items():
        num = np.zeros_like(param)
        for idx in np.ndindex(param.shape):
            old = param[idx]
            param[idx] = old + eps
            up, _ = loss_and_grads(model, x, y)
            param[idx] = old - eps
            down, _ = loss_and_grads(model, x, y)
            param[idx] = old
            num[idx] = (up - down) / (2 * eps)
        err = np.abs(num - grads[name]) / np.maximum(np.abs(num) + np.abs(grads[name]), 1e-8)
        assert err.max() < 1e-4, name


def test_weighted_bce_oracle():
    z = np.array([[0.3, -2.0]])
    y = np.array([[1.0, 0.0]])
    w = np.array([2.0, 0.5])
    p = 1 / (1 + np.exp(-z))
    oracle = np.mean(w * -(y * np.log(p) + (1 - y) * np.log(1 - p)))
    assert weighted_bce(z, y, w) == pytest.approx(oracle, rel=1e-12)


def test_inverse_frequency_weights():
    gold = np.array([[1, 1, 0], [1, 0, 0], [1, 0, 0], [1, 1, 0]])
    w = inverse_frequency_weights(gold)
    assert w.mean() == pytest.approx(1.0)
    assert w[0] < w[1] and w[2] > w[1]


def test_separable_two_label_set():
    data = synthetic_refiner_data(300, n_labels=2, dim=8, seed=4, max_active=2)
    labs = small_labels(2)
    model = train_refiner(examples_from(data, labs), RefinerConfig(hidden_width=16, seed=2))
    x = refiner.stack_features(examples_from(data, labs))[model.val_indices]
    _, dec = predict(model, x, np.full(2, 0.5))
    assert macro_f1(dec, data.gold[model.val_indices]).macro_f1 >= 0.95


def test_zero_epochs_untrained():
    data = synthetic_refiner_data(20, n_labels=2, dim=4, seed=0, max_active=1)
    with pytest.warns(RefinerWarning, match="untrained"):
        model = train_refiner(examples_from(data, small_labels(2)), RefinerConfig(max_epochs=0))
    assert not model.trained
    with pytest.raises(StyleError, match="untrained model requested for prediction"):
        predict(model, np.zeros((1, model.input_dim)), np.full(2, 0.5))


def test_seeded_training_bit_identical():
    data = synthetic_refiner_data(120, n_labels=3, dim=6, seed=1, max_active=2)
    ex = examples_from(data, small_labels(3))
    cfg = RefinerConfig(hidden_width=8, max_epochs=15, seed=5)
    assert train_refiner(ex, cfg).to_bytes() == train_refiner(ex, cfg).to_bytes()


def test_model_file_roundtrip(tmp_path):
    model = init_model(5, 3, 4, seed=0)
    model.trained = True
    model.save(tmp_path / "m.bin")
    back = RefinerModel.load(tmp_path / "m.bin")
    assert back.to_bytes() == model.to_bytes()
    for k, v in model.params().items():
        np.testing.assert_array_equal(back.params()[k], v)
    raw = (tmp_path / "m.bin").read_bytes()
    assert raw[:8] == b"CSREFINE"
    with pytest.raises(StyleError):
        RefinerModel.from_bytes(b"XXXXXXXX" + raw[8:])
    with pytest.raises(StyleError, match="trailing"):
        RefinerModel.from_bytes(raw + b"\0")


def test_prototype_ablation_zeroes_block():
    model = init_model(7, 2, 3, seed=0, use_prototypes=False)
    x = np.arange(7.0)[None, :]
    x2 = x.copy()
    x2[0, -2:] = 99.0
    np.testing.assert_array_equal(model.logits(x), model.logits(x2))


def trained_stub(n_labels):
    m = init_model(2, n_labels, 1, seed=0)
    m.trained = True
    return m


@given(hnp.arrays(np.float64, (5, 4), elements=st.floats(0, 1)),
       hnp.arrays(np.float64, 4, elements=st.floats(0, 1)))
def test_decisions_elementwise(probs, thresholds):
    dec = (probs >= thresholds).astype(np.int8)

    class Fixed(RefinerModel):
        def predict_proba(self, x):
            return probs

    m = trained_stub(4)
    fixed = Fixed(m.w1, m.b1, m.w2, m.b2, m.label_weights, trained=True)
    _, out = predict(fixed, np.zeros((5, 2)), thresholds)
    np.testing.assert_array_equal(out, dec)


def test_threshold_extremes():
    probs = np.array([[0.0, 0.3, 1.0]])
    m = trained_stub(3)
    m.predict_proba = lambda x: probs
    assert predict(m, np.zeros((1, 2)), np.zeros(3))[1].all()
    assert not predict(m, np.zeros((1, 2)), np.full(3, 1 + 1e-9))[1].any()


def test_threshold_tie_goes_to_grid_minimum():
    probs = np.array([[0.999], [0.998], [0.0001]])
    gold = np.array([[1], [1], [0]])
    assert optimize_thresholds_from_probs(probs, gold)[0] == DEFAULT_GRID[0]


def brute_force_threshold(p, y, grid):
    best, best_t = -1.0, None
    for t in grid:
        d = p >= t
        tp, fp, fn = (d & y).sum(), (d & ~y).sum(), (~d & y).sum()
        f = 0.0 if tp == 0 else 2 * tp / (2 * tp + fp + fn)
        if f > best:
            best, best_t = f, t
    return best_t, best


def test_three_example_grid_oracle():
    p = np.array([[0.2], [0.55], [0.7]])
    y = np.array([[False], [True], [False]])
    t, _ = brute_force_threshold(p[:, 0], y[:, 0], DEFAULT_GRID)
    assert optimize_thresholds_from_probs(p, y)[0] == t


@given(hnp.arrays(np.float64, (12, 3), elements=st.floats(0, 1)),
       hnp.arrays(np.bool_, (12, 3)))
def test_optimized_never_worse_than_half(probs, gold):
    th = optimize_thresholds_from_probs(probs, gold)
    assert 0.5 in DEFAULT_GRID
    opt = macro_f1(probs >= th, gold).f1
    fixed = macro_f1(probs >= 0.5, gold).f1
    assert np.all(opt >= fixed - 1e-12)
    for j in range(3):
        t, f = brute_force_threshold(probs[:, j], gold[:, j], DEFAULT_GRID)
        assert th[j] == t
        assert opt[j] == pytest.approx(f)


def test_macro_f1_perfect():
    g = np.array([[1, 0], [0, 1]])
    assert macro_f1(g, g).macro_f1 == 1.0


def test_macro_f1_confusion_example():
    dec = np.array([[1, 1], [1, 0]])
    gold = np.array([[1, 1], [0, 1]])
    rep = macro_f1(dec, gold, ["A", "B"])
    np.testing.assert_allclose(rep.f1, [2 / 3, 2 / 3])
    assert rep.macro_f1 == pytest.approx(2 / 3)
    assert rep.to_tsv().splitlines()[0] == "Label\tP\tR\tF1\tSup"


def test_centroid_baseline():
    labs = small_labels(2)
    cents = EmbeddingTable(2, {"l0": np.array([3.0, 4.0]), "l1": np.array([-4.0, 3.0])})
    dec = centroid_baseline(np.array([[3.0, 4.0]]), cents, labs, threshold=1.0)
    np.testing.assert_array_equal(dec, [[1, 0]])
    dec = centroid_baseline(np.array([[3.0, 4.0]]), cents, labs, threshold=0.5)
    assert dec[0, 1] == 0


@given(hnp.arrays(np.float64, 16, elements=st.floats(-100, 100)).filter(lambda v: np.any(v != 0)))
def test_self_cosine_exactly_one(v):
    assert cosine_matrix(v, np.stack([v, v]))[0, 1] == 1.0


def test_cosine_zero_norm():
    with pytest.raises(StyleError, match="zero-norm"):
        cosine_matrix(np.zeros(3), np.ones((1, 3)))


def test_make_example_missing_context_zeroed():
    labs = small_labels(2)
    cents = EmbeddingTable(3, {"l0": np.array([1.0, 0, 0]), "l1": np.array([0, 1.0, 0])})
    ex = make_example(np.array([1.0, 0, 0]), cents, labs)
    assert ex.context_missing
    np.testing.assert_array_equal(ex.context_embedding, np.zeros(3))
    np.testing.assert_array_equal(ex.prototype_features, [1.0, 0.0])
    assert ex.features().shape == (3 + 3 + 2,)


def test_profile_rate_and_empty():
    labs = small_labels(3)
    dec = np.array([[0, 1, 0], [0, 0, 0], [0, 0, 0], [0, 0, 0]])
    prof = profile_from_decisions(dec, labs, "m")
    assert prof.activations == {"l1": 0.25}
    empty = profile_from_decisions(np.zeros((4, 3)), labs, "m")
    assert empty.empty
    with pytest.raises(StyleError, match="empty corpus"):
        profile_from_decisions(np.zeros((0, 3)), labs, "m")


def test_profile_top_k_order():
    labs = small_labels(6)
    rates = np.array([0.1, 0.66, 0.57, 0.41, 0.31, 0.22])
    dec = (np.arange(100)[:, None] < rates * 100).astype(np.int8)
    prof = profile_from_decisions(dec, labs, "m", top_k=5)
    assert prof.labels == ["l1", "l2", "l3", "l4", "l5"]


def test_thresholds_file_roundtrip():
    th = np.linspace(0.01, 0.99, len(LABELS))
    back = refiner.parse_thresholds(refiner.format_thresholds(th, LABELS), LABELS)
    np.testing.assert_array_equal(back, th)
    with pytest.raises(StyleError, match="missing"):
        refiner.parse_thresholds("kind\t0.5\n", LABELS)


def test_cosine_tiny_and_huge_rows():
    tiny = np.array([[0.0, 0.0, 3.9e-113]])
    huge = np.array([[1e200, -1e200, 0.0]])
    assert cosine_matrix(tiny, tiny)[0, 0] == 1.0
    np.testing.assert_allclose(cosine_matrix(huge, np.array([[1.0, 0.0, 0.0]])), [[2 ** -0.5]])
