import numpy as np
import pytest

from ppmxplain.errors import TrainingError
from ppmxplain.models import (
    LinearModel,
    lr_coefficients,
    logistic_objective,
    train_logreg,
)
from ppmxplain.models.train_config import TrainConfig

from conftest import build_matrix

CFG = TrainConfig(model="logreg")


def test_separable_data_fits_perfectly():
    x = np.array([[-2.0], [-1.5], [-1.0], [1.0], [1.5], [2.0]])
    y = np.array([0, 0, 0, 1, 1, 1])
    model = train_logreg(build_matrix(x, y), CFG)
    preds = (model.predict_proba(build_matrix(x, y)) >= 0.5).astype(int)
    assert np.array_equal(preds, y)
    assert model.weights[0] > 0  # positive class sits at larger x


def test_independent_labels_shrink_coefficients(rng):
    # the penalty does not scale with n (sum log-loss), so noise coefficients
    # concentrate near 1/sqrt(data curvature); stronger l2 pulls them under 0.1
    x = rng.normal(size=(1000, 5))
    y = rng.integers(0, 2, size=1000)
    norms = {}
    for l2 in (1.0, 10.0, 100.0):
        model = train_logreg(build_matrix(x, y), TrainConfig(model="logreg", l2=l2))
        norms[l2] = np.abs(model.weights).max()
    assert norms[100.0] < norms[10.0] < norms[1.0]
    assert norms[1.0] < 1.0
    assert norms[100.0] < 0.1


def test_duplicated_column_splits_coefficient_mass(rng):
    n = 2000
    signal = rng.integers(0, 2, size=n).astype(float)
    y = (rng.uniform(size=n) < 0.2 + 0.6 * signal).astype(int)
    noise = rng.normal(size=n)
    single = train_logreg(build_matrix(np.column_stack([signal, noise]), y), CFG)
    dup = train_logreg(
        build_matrix(np.column_stack([signal, signal, noise]), y), CFG
    )
    assert dup.weights[0] == pytest.approx(dup.weights[1], rel=1e-6)
    assert dup.weights[0] + dup.weights[1] == pytest.approx(
        single.weights[0], rel=0.05
    )


def test_gradient_matches_central_differences(rng):
    for _ in range(50):
        n, d = int(rng.integers(5, 30)), int(rng.integers(1, 6))
        x = rng.normal(size=(n, d))
        y = rng.integers(0, 2, size=n).astype(float)
        theta = rng.normal(size=d + 1)
        l2 = float(rng.uniform(0.1, 3.0))
        _, grad = logistic_objective(theta, x, y, l2)
        eps = 1e-6
        for j in range(d + 1):
            bump = np.zeros(d + 1)
            bump[j] = eps
            up, _ = logistic_objective(theta + bump, x, y, l2)
            down, _ = logistic_objective(theta - bump, x, y, l2)
            numeric = (up - down) / (2 * eps)
            scale = max(1.0, abs(numeric))
            assert abs(grad[j] - numeric) / scale < 1e-6


def test_single_class_raises():
    x = np.ones((10, 2))
    with pytest.raises(TrainingError):
        train_logreg(build_matrix(x, np.ones(10, dtype=int)), CFG)


def test_convergence_metadata(rng):
    x = rng.normal(size=(200, 3))
    y = (x[:, 0] + 0.1 * rng.normal(size=200) > 0).astype(int)
    model = train_logreg(build_matrix(x, y), CFG)
    assert model.converged
    assert 0 < model.n_iterations <= CFG.max_iter
    assert model.final_loss > 0


def test_prediction_invariant_to_column_permutation(rng):
    x = rng.normal(size=(100, 4))
    y = (x[:, 1] > 0).astype(int)
    matrix = build_matrix(x, y)
    model = train_logreg(matrix, CFG)
    permuted = build_matrix(
        x[:, [2, 0, 3, 1]], y, columns=[matrix.columns[j] for j in [2, 0, 3, 1]]
    )
    direct = model.predict_proba(matrix)
    reordered = model.predict_proba(permuted)
    assert np.array_equal(direct, reordered)


def test_serialization_roundtrip_bit_exact(rng):
    x = rng.normal(size=(50, 3))
    y = (x[:, 0] > 0).astype(int)
    model = train_logreg(build_matrix(x, y), CFG)
    clone = LinearModel.from_dict(model.to_dict())
    assert np.array_equal(clone.weights, model.weights)
    assert clone.intercept == model.intercept
    assert np.array_equal(
        clone.predict_proba(x), model.predict_proba(x)
    )


def test_scaling_absorbs_units(rng):
    # rescaling a *different* feature's raw units must not change the top feature
    x = rng.normal(size=(400, 3))
    y = (x[:, 0] + 0.3 * rng.normal(size=400) > 0).astype(int)
    base = train_logreg(build_matrix(x, y), CFG)
    rescaled = x.copy()
    rescaled[:, 2] *= 1000.0
    other = train_logreg(build_matrix(rescaled, y), CFG)
    assert lr_coefficients(base).ranking[0] == lr_coefficients(other).ranking[0]


def test_lr_coefficients_ranking_and_signs():
    model = LinearModel(
        columns=["c1", "c2", "c3"],
        weights=np.array([2.0, -3.0, 0.0]),
        intercept=0.1,
        col_min=np.zeros(3),
        col_max=np.ones(3),
        feature_means=np.zeros(3),
        n_iterations=1,
        final_loss=0.0,
        converged=True,
    )
    iv = lr_coefficients(model)
    assert iv.ranking == ["c2", "c1", "c3"]
    assert iv.scores.tolist() == [2.0, 3.0, 0.0]
    assert iv.signs.tolist() == [1, -1, 0]


def test_all_zero_weights_tie_break_by_index():
    model = LinearModel(
        columns=["a", "b", "c"],
        weights=np.zeros(3),
        intercept=0.0,
        col_min=np.zeros(3),
        col_max=np.ones(3),
        feature_means=np.zeros(3),
        n_iterations=0,
        final_loss=0.0,
        converged=True,
    )
    assert lr_coefficients(model).ranking == ["a", "b", "c"]
