"""Classification metrics: ROC-AUC and accuracy."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


def roc_auc(labels: np.ndarray, scores: np.ndarray) -> Optional[float]:
    """Area under the ROC curve, trapezoidal over distinct score thresholds.

    Returns None when only one class is present. Tied scores form a single
    threshold step, so constant scores give exactly 0.5.
    """
    y = np.asarray(labels)
    s = np.asarray(scores, dtype=np.float64)
    n_pos = int(np.sum(y == 1))
    n_neg = int(np.sum(y == 0))
    if n_pos == 0 or n_neg == 0:
        return None
    order = np.argsort(-s, kind="stable")
    y_sorted = y[order]
    s_sorted = s[order]
    # cumulative counts at the end of each distinct-score group
    boundaries = np.nonzero(np.diff(s_sorted))[0]
    idx = np.concatenate([boundaries, [len(s_sorted) - 1]])
    tp = np.cumsum(y_sorted == 1)[idx]
    fp = np.cumsum(y_sorted == 0)[idx]
    tpr = np.concatenate([[0.0], tp / n_pos])
    fpr = np.concatenate([[0.0], fp / n_neg])
    return float(np.trapezoid(tpr, fpr))


@dataclass
class EvalReport:
    n_rows: int
    n_positive: int
    auc: Optional[float]
    accuracy: float
    degenerate: bool  # True when AUC is undefined (single-class data)

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def evaluate(model, matrix) -> EvalReport:
    """AUC (over predicted probabilities) and accuracy at the 0.5 threshold."""
    scores = model.predict_proba(matrix)
    labels = matrix.labels
    auc = roc_auc(labels, scores)
    accuracy = float(np.mean((scores >= 0.5).astype(np.int64) == labels))
    return EvalReport(
        n_rows=len(labels),
        n_positive=int(np.sum(labels == 1)),
        auc=auc,
        accuracy=accuracy,
        degenerate=auc is None,
    )
