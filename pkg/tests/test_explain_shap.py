import numpy as np
import pytest

from ppmxplain.errors import ExplainError
from ppmxplain.explain import (
    brute_force_shapley,
    interventional_value_function,
    sample_background,
    shap_global,
    shap_linear,
    shap_tree,
)
from ppmxplain.models import LinearModel, TreeEnsemble, train_gbt, train_logreg
from ppmxplain.models.boosted import Tree
from ppmxplain.models.train_config import TrainConfig

from conftest import build_matrix


def identity_linear_model(weights, intercept=0.0, means=None):
    d = len(weights)
    return LinearModel(
        columns=[f"f{j}" for j in range(d)],
        weights=np.asarray(weights, dtype=float),
        intercept=intercept,
        col_min=np.zeros(d),
        col_max=np.ones(d),  # identity scaling
        feature_means=np.zeros(d) if means is None else np.asarray(means, float),
        n_iterations=1,
        final_loss=0.0,
        converged=True,
    )


# -- linear ------------------------------------------------------------------


def test_linear_shap_formula_example():
    model = identity_linear_model([2.0, 0.0], intercept=0.0, means=[1.0, 4.0])
    matrix = build_matrix(np.array([[3.0, 5.0]]), np.array([0]))
    (attribution,) = shap_linear(model, matrix)
    assert attribution.phi.tolist() == [4.0, 0.0]
    assert attribution.base == 2.0
    assert attribution.output == 6.0


def test_linear_shap_at_means_is_zero():
    model = identity_linear_model([1.5, -2.0], intercept=0.3, means=[0.25, 0.75])
    matrix = build_matrix(np.array([[0.25, 0.75]]), np.array([0]))
    (attribution,) = shap_linear(model, matrix)
    assert np.allclose(attribution.phi, 0.0, atol=1e-15)


def test_linear_shap_zero_coefficient_nullified(rng):
    x = rng.normal(size=(200, 3))
    y = (x[:, 0] > 0).astype(int)
    matrix = build_matrix(x, y)
    model = train_logreg(matrix, TrainConfig(model="logreg"))
    model.weights[2] = 0.0
    for attribution in shap_linear(model, matrix):
        assert attribution.phi[2] == 0.0


def test_linear_shap_local_accuracy(rng):
    x = rng.normal(size=(300, 4))
    y = (x[:, 0] + x[:, 1] > 0).astype(int)
    matrix = build_matrix(x, y)
    model = train_logreg(matrix, TrainConfig(model="logreg"))
    margins = model.predict_margin(matrix)
    for attribution, margin in zip(shap_linear(model, matrix), margins):
        assert attribution.reconstruction_error() < 1e-9
        assert attribution.output == pytest.approx(margin, abs=1e-12)


# -- tree --------------------------------------------------------------------


def make_stump_ensemble(column=0, threshold=0.5, left=-1.0, right=1.0):
    tree = Tree(
        feature=np.array([column, -1, -1]),
        threshold=np.array([threshold, 0.0, 0.0]),
        left=np.array([1, -1, -1]),
        right=np.array([2, -1, -1]),
        value=np.array([0.0, left, right]),
        gain=np.array([1.0, 0.0, 0.0]),
        cover=np.array([10.0, 5.0, 5.0]),
    )
    return TreeEnsemble(columns=["a", "b"], trees=[tree], learning_rate=1.0)


def test_tree_shap_single_stump():
    model = make_stump_ensemble()
    background = np.array([[0.0, 9.0], [1.0, 7.0], [0.0, 5.0]])
    matrix = build_matrix(np.array([[1.0, 2.0]]), np.array([0]), columns=["a", "b"])
    (attribution,) = shap_tree(model, matrix, background)
    f_x = model.predict_margin(np.array([[1.0, 2.0]]))[0]
    mean_bg = model.predict_margin(background).mean()
    assert attribution.phi[0] == pytest.approx(f_x - mean_bg, abs=1e-12)
    assert attribution.phi[1] == 0.0
    assert attribution.base == pytest.approx(mean_bg, abs=1e-12)


def test_tree_shap_instance_equals_background():
    model = make_stump_ensemble()
    row = np.array([[1.0, 2.0]])
    matrix = build_matrix(row, np.array([0]), columns=["a", "b"])
    (attribution,) = shap_tree(model, matrix, row.copy())
    assert np.allclose(attribution.phi, 0.0, atol=1e-15)


def random_ensemble(rng, n_rows=60, d=6, n_trees=3, depth=3):
    x = rng.normal(size=(n_rows, d))
    y = (x[:, 0] + 0.5 * x[:, 1] * x[:, 2] + 0.3 * rng.normal(size=n_rows) > 0).astype(int)
    if y.min() == y.max():
        y[0] = 1 - y[0]
    matrix = build_matrix(x, y)
    model = train_gbt(
        matrix, TrainConfig(model="gbt", n_trees=n_trees, max_depth=depth,
                            min_child_cover=0.0)
    )
    return model, x


@pytest.mark.parametrize("seed", range(8))
def test_tree_shap_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(3, 8))
    model, x = random_ensemble(rng, d=d)
    background = x[rng.choice(len(x), size=4, replace=False)]
    instance = x[int(rng.integers(0, len(x)))]
    matrix = build_matrix(instance[None, :], np.array([0]),
                          columns=[f"f{j}" for j in range(d)])
    (attribution,) = shap_tree(model, matrix, background)
    oracle = brute_force_shapley(
        interventional_value_function(model, instance, background), d
    )
    assert np.max(np.abs(attribution.phi - oracle)) < 1e-9


def test_tree_shap_singleton_background_exact(rng):
    model, x = random_ensemble(rng, d=5)
    background = x[:1].copy()
    instance = x[7]
    matrix = build_matrix(instance[None, :], np.array([0]),
                          columns=[f"f{j}" for j in range(5)])
    (attribution,) = shap_tree(model, matrix, background)
    oracle = brute_force_shapley(
        interventional_value_function(model, instance, background), 5
    )
    assert np.max(np.abs(attribution.phi - oracle)) < 1e-12


def test_tree_shap_local_accuracy(rng):
    model, x = random_ensemble(rng, n_rows=100, d=6, n_trees=10, depth=3)
    matrix = build_matrix(x[:20], np.zeros(20, dtype=int),
                          columns=[f"f{j}" for j in range(6)])
    background = x[20:60]
    for attribution in shap_tree(model, matrix, background):
        assert attribution.reconstruction_error() < 1e-6


def test_tree_shap_never_split_column_zero(rng):
    x = np.column_stack([rng.normal(size=300), np.full(300, 2.0), rng.normal(size=300)])
    y = (x[:, 0] > 0).astype(int)
    matrix = build_matrix(x, y)
    model = train_gbt(matrix, TrainConfig(model="gbt", n_trees=10))
    background = sample_background(matrix, size=30, seed=0)
    for attribution in shap_tree(model, matrix, background, max_instances=10, seed=0):
        assert attribution.phi[1] == 0.0


def test_empty_background_rejected():
    model = make_stump_ensemble()
    matrix = build_matrix(np.array([[1.0, 2.0]]), np.array([0]), columns=["a", "b"])
    with pytest.raises(ExplainError):
        shap_tree(model, matrix, np.empty((0, 2)))


# -- brute force axioms --------------------------------------------------------


def test_brute_force_additive_game():
    a = np.array([0.5, -1.0, 2.0, 0.0])

    def value(subset):
        return sum(a[j] for j in subset)

    assert np.allclose(brute_force_shapley(value, 4), a, atol=1e-12)


def test_brute_force_symmetric_game():
    def value(subset):
        return float(len(subset) >= 2)

    phi = brute_force_shapley(value, 4)
    assert np.allclose(phi, phi[0], atol=1e-12)
    assert phi.sum() == pytest.approx(1.0, abs=1e-12)


def test_brute_force_dimension_cap():
    with pytest.raises(ExplainError):
        brute_force_shapley(lambda s: 0.0, 13)


# -- global aggregation ---------------------------------------------------------


def test_global_shap_mean_abs_and_ranking(rng):
    x = rng.normal(size=(100, 3))
    y = (x[:, 1] > 0).astype(int)
    matrix = build_matrix(x, y)
    model = train_logreg(matrix, TrainConfig(model="logreg"))
    model.weights[0] = 0.0
    attributions = shap_linear(model, matrix)
    report = shap_global(attributions, model.columns)
    assert report.mean_abs[0] == 0.0
    assert report.ranking[-1] == "f0"
    assert report.ranking[0] == "f1"
    stacked = np.abs(np.stack([a.phi for a in attributions])).mean(axis=0)
    assert np.array_equal(report.mean_abs, stacked)


def test_global_shap_single_instance():
    model = identity_linear_model([1.0, -2.0], means=[0.0, 0.0])
    matrix = build_matrix(np.array([[2.0, 3.0]]), np.array([0]))
    report = shap_global(shap_linear(model, matrix), model.columns)
    assert report.mean_abs.tolist() == [2.0, 6.0]


def test_duplicated_column_shap_scores_sum_to_original(rng):
    n = 2000
    signal = rng.integers(0, 2, size=n).astype(float)
    y = (rng.uniform(size=n) < 0.2 + 0.6 * signal).astype(int)
    noise = rng.normal(size=n)
    single_matrix = build_matrix(np.column_stack([signal, noise]), y)
    dup_matrix = build_matrix(np.column_stack([signal, signal, noise]), y)
    cfg = TrainConfig(model="logreg")
    single_report = shap_global(
        shap_linear(train_logreg(single_matrix, cfg), single_matrix), ["s", "n"]
    )
    dup_report = shap_global(
        shap_linear(train_logreg(dup_matrix, cfg), dup_matrix), ["s1", "s2", "n"]
    )
    combined = dup_report.mean_abs[0] + dup_report.mean_abs[1]
    assert combined == pytest.approx(single_report.mean_abs[0], rel=0.05)
    # interchangeable columns receive equal global scores
    assert dup_report.mean_abs[0] == pytest.approx(dup_report.mean_abs[1], rel=1e-6)


def test_per_point_rows_shape():
    model = identity_linear_model([1.0, 1.0])
    matrix = build_matrix(np.array([[1.0, 2.0], [3.0, 4.0]]), np.array([0, 1]))
    report = shap_global(shap_linear(model, matrix), model.columns)
    rows = list(report.per_point_rows())
    assert len(rows) == 4
    assert rows[0][1] == "f0" and rows[0][2] == 1.0
