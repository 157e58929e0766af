"""Permutation feature importance with ROC-AUC as the metric.

Importance of a column is the mean drop in AUC over ``n_iter`` independent
within-column shuffles. Each column draws its shuffles from its own seeded
stream (keyed by column name), so the result is independent of column order.
A column the model ignores leaves predictions untouched and scores exactly
zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._rand import rng_stream
from ..errors import ExplainError
from ..models.importance import ImportanceVector
from ..models.metrics import roc_auc

DEFAULT_N_ITER = 10

# stacking all shuffles into one prediction call is faster; fall back to
# per-iteration prediction when the stacked copy would be large
_STACK_LIMIT = 20_000_000


def _aligned_values(model, matrix) -> np.ndarray:
    if list(matrix.columns) == list(model.columns):
        return matrix.values
    idx = [matrix.column_index(c) for c in model.columns]
    return np.ascontiguousarray(matrix.values[:, idx])


@dataclass
class PFIReport:
    columns: list[str]
    baseline: float
    means: np.ndarray  # baseline - shuffled AUC, averaged over iterations
    stds: np.ndarray
    n_iter: int
    seed: int
    dataset: str  # which split the report was computed on

    def importance(self, name: str) -> float:
        return float(self.means[self.columns.index(name)])

    def importance_vector(self) -> ImportanceVector:
        return ImportanceVector(
            method="pfi",
            columns=list(self.columns),
            scores=np.maximum(self.means, 0.0),
        )

    def to_dict(self) -> dict:
        return {
            "method": "pfi",
            "dataset": self.dataset,
            "baseline_auc": self.baseline,
            "n_iter": self.n_iter,
            "seed": self.seed,
            "columns": self.columns,
            "mean_importance": [float(v) for v in self.means],
            "std_importance": [float(v) for v in self.stds],
        }


def permutation_importance(
    model,
    matrix,
    n_iter: int = DEFAULT_N_ITER,
    seed: int = 0,
    dataset: str = "train",
) -> PFIReport:
    if n_iter < 1:
        raise ExplainError("permutation importance needs n_iter >= 1")
    x = _aligned_values(model, matrix)
    y = matrix.labels
    baseline = roc_auc(y, model.predict_proba(x))
    if baseline is None:
        raise ExplainError(
            "permutation importance needs both classes present (AUC undefined)"
        )
    n, d = x.shape
    means = np.zeros(d, dtype=np.float64)
    stds = np.zeros(d, dtype=np.float64)
    stack = n_iter * n * d <= _STACK_LIMIT
    for j, column in enumerate(model.columns):
        rng = rng_stream(seed, "pfi", column)
        drops = np.empty(n_iter, dtype=np.float64)
        if stack:
            stacked = np.tile(x, (n_iter, 1))
            for it in range(n_iter):
                stacked[it * n : (it + 1) * n, j] = x[rng.permutation(n), j]
            scores = model.predict_proba(stacked)
            for it in range(n_iter):
                drops[it] = baseline - roc_auc(y, scores[it * n : (it + 1) * n])
        else:
            shuffled = x.copy()
            for it in range(n_iter):
                shuffled[:, j] = x[rng.permutation(n), j]
                drops[it] = baseline - roc_auc(y, model.predict_proba(shuffled))
        means[j] = drops.mean()
        stds[j] = drops.std()
    return PFIReport(
        columns=list(model.columns),
        baseline=baseline,
        means=means,
        stds=stds,
        n_iter=n_iter,
        seed=seed,
        dataset=dataset,
    )
