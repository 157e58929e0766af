"""Model-specific importances as ranked score vectors."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ConfigError
from .boosted import TreeEnsemble
from .linear import LinearModel

GBT_CRITERIA = ("weight", "gain", "cover", "total_gain", "total_cover")


@dataclass
class ImportanceVector:
    """Non-negative per-column scores plus a deterministic ranking.

    Ties rank by ascending column index. ``signs`` is only populated for
    coefficient-based methods.
    """

    method: str
    columns: list[str]
    scores: np.ndarray
    signs: Optional[np.ndarray] = None

    @property
    def ranking(self) -> list[str]:
        order = np.lexsort((np.arange(len(self.columns)), -self.scores))
        return [self.columns[i] for i in order]

    def top(self, k: int) -> list[str]:
        return self.ranking[:k]

    def score(self, name: str) -> float:
        return float(self.scores[self.columns.index(name)])

    def to_dict(self) -> dict:
        out = {
            "method": self.method,
            "columns": self.columns,
            "scores": [float(s) for s in self.scores],
            "ranking": self.ranking,
        }
        if self.signs is not None:
            out["signs"] = [int(s) for s in self.signs]
        return out

    @classmethod
    def from_dict(cls, d) -> "ImportanceVector":
        signs = d.get("signs")
        return cls(
            method=d["method"],
            columns=list(d["columns"]),
            scores=np.asarray(d["scores"], dtype=np.float64),
            signs=None if signs is None else np.asarray(signs, dtype=np.int64),
        )


def lr_coefficients(model: LinearModel) -> ImportanceVector:
    """|coefficient| scores on the scaled training space, signs kept aside."""
    return ImportanceVector(
        method="lr-coef",
        columns=list(model.columns),
        scores=np.abs(model.weights),
        signs=np.sign(model.weights).astype(np.int64),
    )


def gbt_importance(model: TreeEnsemble, criterion: str) -> ImportanceVector:
    """Split-based importances: weight (#splits), total_gain/total_cover
    (sums over splits) and gain/cover (their per-split averages)."""
    if criterion not in GBT_CRITERIA:
        raise ConfigError(f"unknown importance criterion {criterion!r}")
    d = len(model.columns)
    weight = np.zeros(d, dtype=np.float64)
    total_gain = np.zeros(d, dtype=np.float64)
    total_cover = np.zeros(d, dtype=np.float64)
    for tree in model.trees:
        for node in tree.internal_nodes():
            j = int(tree.feature[node])
            weight[j] += 1.0
            total_gain[j] += float(tree.gain[node])
            total_cover[j] += float(tree.cover[node])
    if criterion == "weight":
        scores = weight
    elif criterion == "total_gain":
        scores = total_gain
    elif criterion == "total_cover":
        scores = total_cover
    else:
        with np.errstate(invalid="ignore"):
            scores = np.where(
                weight > 0,
                (total_gain if criterion == "gain" else total_cover)
                / np.where(weight > 0, weight, 1.0),
                0.0,
            )
    return ImportanceVector(
        method=f"gbt-{criterion}", columns=list(model.columns), scores=scores
    )
