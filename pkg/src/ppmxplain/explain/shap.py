"""Shapley-value attributions of the raw model margin.

Linear models get the exact closed form phi_j = w_j * (x_j - mean_j) in the
scaled feature space, with the base value w.mean + b. Tree ensembles get
interventional Shapley values: the value of a coalition S is the mean model
output over background rows with columns in S taken from the instance and the
rest from the background row. Per background row this is computed exactly by
enumerating tree paths: a leaf is reachable iff every path feature is
satisfied by the instance side (feature must be in S), the background side
(must be out), either (no constraint) or neither (unreachable), and the
resulting indicator game has closed-form Shapley values.

Attributions explain the raw margin (log-odds), which keeps additivity
exact; probabilities do not decompose additively.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .._rand import rng_stream
from ..errors import ExplainError
from ..models.boosted import Tree, TreeEnsemble
from ..models.importance import ImportanceVector
from ..models.linear import LinearModel

DEFAULT_BACKGROUND_SIZE = 100
_MAX_BRUTE_FORCE_D = 12


@dataclass
class Attribution:
    row_id: str
    phi: np.ndarray
    base: float
    output: float
    x: np.ndarray  # raw feature values, model column order

    def reconstruction_error(self) -> float:
        return abs(self.base + float(self.phi.sum()) - self.output)


def _aligned_values(model, matrix) -> np.ndarray:
    if list(matrix.columns) == list(model.columns):
        return matrix.values
    idx = [matrix.column_index(c) for c in model.columns]
    return np.ascontiguousarray(matrix.values[:, idx])


# ---------------------------------------------------------------------------
# Linear SHAP (exact, no sampling)
# ---------------------------------------------------------------------------


def shap_linear(model: LinearModel, matrix) -> list[Attribution]:
    """phi_j = w_j * (x_scaled_j - train_mean_j); base = w.mean + intercept."""
    x_raw = _aligned_values(model, matrix)
    x_scaled = model.scale(x_raw)
    base = float(model.weights @ model.feature_means + model.intercept)
    phis = model.weights[None, :] * (x_scaled - model.feature_means[None, :])
    margins = x_scaled @ model.weights + model.intercept
    return [
        Attribution(
            row_id=matrix.row_ids[i] if hasattr(matrix, "row_ids") else str(i),
            phi=phis[i].copy(),
            base=base,
            output=float(margins[i]),
            x=x_raw[i].copy(),
        )
        for i in range(len(x_raw))
    ]


# ---------------------------------------------------------------------------
# Interventional tree SHAP
# ---------------------------------------------------------------------------


def sample_background(
    matrix, size: int = DEFAULT_BACKGROUND_SIZE, seed: int = 0, tag: str = "background"
) -> np.ndarray:
    """Seeded uniform sample of rows used as the interventional background."""
    n = matrix.values.shape[0]
    if n == 0:
        raise ExplainError("cannot sample a background from an empty matrix")
    if size >= n:
        return matrix.values.copy()
    rng = rng_stream(seed, tag)
    rows = np.sort(rng.choice(n, size=size, replace=False))
    return matrix.values[rows].copy()


def _tree_depth(tree: Tree) -> int:
    # the builder appends children after their parent, so one forward pass works
    depth = np.zeros(tree.n_nodes, dtype=np.int64)
    for node in range(tree.n_nodes):
        if tree.feature[node] >= 0:
            depth[tree.left[node]] = depth[node] + 1
            depth[tree.right[node]] = depth[node] + 1
    return int(depth.max())


def _tree_phi(tree: Tree, x_row: np.ndarray, bg: np.ndarray, fact: np.ndarray) -> np.ndarray:
    """Shapley values of one tree for one instance, averaged over background rows."""
    n_cols = len(x_row)
    n_bg = len(bg)
    phi = np.zeros(n_cols, dtype=np.float64)

    # state per path: per split feature, whether the instance satisfies every
    # condition so far (scalar) and which background rows do (vector)
    def recurse(node: int, feats: dict, alive: np.ndarray, x_alive: bool):
        f = int(tree.feature[node])
        if f < 0:
            _leaf_contribution(float(tree.value[node]), feats, alive)
            return
        thr = float(tree.threshold[node])
        x_left = bool(x_row[f] < thr)
        r_left = bg[:, f] < thr
        for go_left in (True, False):
            x_ok = x_left == go_left
            r_ok = r_left if go_left else ~r_left
            prev = feats.get(f)
            if prev is not None:
                x_ok = x_ok and prev[0]
                r_ok = r_ok & prev[1]
            new_alive = alive if x_ok else alive & r_ok
            new_x_alive = x_alive and x_ok
            if not new_x_alive and not new_alive.any():
                continue
            new_feats = dict(feats)
            new_feats[f] = (x_ok, r_ok)
            child = int(tree.left[node] if go_left else tree.right[node])
            recurse(child, new_feats, new_alive, new_x_alive)

    def _leaf_contribution(value: float, feats: dict, alive: np.ndarray):
        if not feats:
            return  # fully forced path: cancels between f(x) and the background
        a_counts = np.zeros(n_bg, dtype=np.int64)
        b_counts = np.zeros(n_bg, dtype=np.int64)
        for x_ok, r_ok in feats.values():
            if x_ok:
                a_counts += ~r_ok
            else:
                b_counts += r_ok
        for f, (x_ok, r_ok) in feats.items():
            if x_ok:
                rows = alive & ~r_ok
                if rows.any():
                    a = a_counts[rows]
                    b = b_counts[rows]
                    phi[f] += value * float(
                        np.sum(fact[a - 1] * fact[b] / fact[a + b])
                    )
            else:
                rows = alive & r_ok
                if rows.any():
                    a = a_counts[rows]
                    b = b_counts[rows]
                    phi[f] -= value * float(
                        np.sum(fact[a] * fact[b - 1] / fact[a + b])
                    )

    recurse(0, {}, np.ones(n_bg, dtype=bool), True)
    return phi / n_bg


def shap_tree(
    model: TreeEnsemble,
    matrix,
    background: np.ndarray,
    max_instances: Optional[int] = None,
    seed: int = 0,
) -> list[Attribution]:
    """Interventional Shapley values of the ensemble margin for each matrix row.

    ``background`` rows must be in model column order. When ``max_instances``
    is set, a seeded uniform sample of rows is explained instead of all.
    """
    if background is None or len(background) == 0:
        raise ExplainError("tree SHAP needs a non-empty background")
    x = _aligned_values(model, matrix)
    row_ids = (
        list(matrix.row_ids)
        if hasattr(matrix, "row_ids")
        else [str(i) for i in range(len(x))]
    )
    rows = np.arange(len(x))
    if max_instances is not None and max_instances < len(x):
        rng = rng_stream(seed, "shap-instances")
        rows = np.sort(rng.choice(len(x), size=max_instances, replace=False))

    bg = np.asarray(background, dtype=np.float64)
    # coalition sizes in the leaf games are bounded by the tree depth
    max_depth = max((_tree_depth(t) for t in model.trees), default=1)
    fact = np.array(
        [math.factorial(i) for i in range(max_depth + 2)], dtype=np.float64
    )
    base = float(model.predict_margin(bg).mean())
    margins = model.predict_margin(x)

    out = []
    for i in rows:
        phi = np.zeros(x.shape[1], dtype=np.float64)
        for tree in model.trees:
            phi += _tree_phi(tree, x[i], bg, fact)
        out.append(
            Attribution(
                row_id=row_ids[i],
                phi=phi,
                base=base,
                output=float(margins[i]),
                x=x[i].copy(),
            )
        )
    return out


# ---------------------------------------------------------------------------
# Brute-force oracle
# ---------------------------------------------------------------------------


def brute_force_shapley(value_fn: Callable, d: int) -> np.ndarray:
    """Classical Shapley values by summing over all 2^d coalitions (d <= 12).

    ``value_fn`` receives a frozenset of column indices.
    """
    if d > _MAX_BRUTE_FORCE_D:
        raise ExplainError(f"brute force limited to {_MAX_BRUTE_FORCE_D} columns")
    players = list(range(d))
    values = {}
    for r in range(d + 1):
        for subset in itertools.combinations(players, r):
            key = frozenset(subset)
            values[key] = float(value_fn(key))
    fact = [math.factorial(i) for i in range(d + 1)]
    phi = np.zeros(d, dtype=np.float64)
    for j in players:
        others = [p for p in players if p != j]
        for r in range(d):
            weight = fact[r] * fact[d - r - 1] / fact[d]
            for subset in itertools.combinations(others, r):
                s = frozenset(subset)
                phi[j] += weight * (values[s | {j}] - values[s])
    return phi


def interventional_value_function(
    model, x_row: np.ndarray, background: np.ndarray
) -> Callable:
    """v(S) = mean over background rows of the margin on the composite row
    (columns in S from the instance, the rest from the background row)."""
    bg = np.asarray(background, dtype=np.float64)

    def value(subset) -> float:
        composite = bg.copy()
        cols = sorted(subset)
        if cols:
            composite[:, cols] = x_row[cols]
        return float(model.predict_margin(composite).mean())

    return value


# ---------------------------------------------------------------------------
# Global aggregation
# ---------------------------------------------------------------------------


@dataclass
class GlobalShapReport:
    columns: list[str]
    mean_abs: np.ndarray
    attributions: list[Attribution]
    provenance: dict = field(default_factory=dict)

    def importance_vector(self) -> ImportanceVector:
        return ImportanceVector(
            method="shap-global", columns=list(self.columns), scores=self.mean_abs
        )

    @property
    def ranking(self) -> list[str]:
        return self.importance_vector().ranking

    def score(self, name: str) -> float:
        return float(self.mean_abs[self.columns.index(name)])

    def to_dict(self) -> dict:
        return {
            "method": "shap-global",
            "provenance": self.provenance,
            "columns": self.columns,
            "mean_abs": [float(v) for v in self.mean_abs],
            "ranking": self.ranking,
            "base": self.attributions[0].base if self.attributions else None,
            "n_instances": len(self.attributions),
        }

    def per_point_rows(self):
        """(row_id, column, feature value, phi) tuples for summary exports."""
        for attribution in self.attributions:
            for j, column in enumerate(self.columns):
                yield (
                    attribution.row_id,
                    column,
                    float(attribution.x[j]),
                    float(attribution.phi[j]),
                )


def shap_global(
    attributions: Sequence[Attribution],
    columns: Sequence[str],
    provenance: Optional[dict] = None,
) -> GlobalShapReport:
    """Mean |phi| per column over a set of attributions."""
    if not attributions:
        raise ExplainError("global SHAP needs at least one attribution")
    stacked = np.stack([a.phi for a in attributions])
    return GlobalShapReport(
        columns=list(columns),
        mean_abs=np.abs(stacked).mean(axis=0),
        attributions=list(attributions),
        provenance=provenance or {},
    )
