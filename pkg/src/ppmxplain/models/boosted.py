"""Second-order gradient-boosted trees for binary logistic outcomes.

Each boosting round fits one depth-limited regression tree by exact greedy
search over sorted unique thresholds, maximizing

    0.5 * (GL^2/(HL+l2) + GR^2/(HR+l2) - (GL+GR)^2/(HL+HR+l2)) - min_split_gain

with g = p - y and h = p (1 - p). Leaf weights are -G/(H+l2) scaled by the
learning rate (stored pre-scaled in ``value``). Splits record their gain and
cover (sum of hessians at the node). Equal-gain ties break deterministically:
lowest column index, then lowest threshold. A round whose root cannot split
contributes nothing, so all-constant features leave predictions at the base
score. Row/column subsampling (off by default) is the only seeded component.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import TrainingError
from .train_config import TrainConfig

_LEAF = -1


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class Tree:
    """Array-of-nodes tree: ``feature[i] == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # leaf contribution to the margin (learning rate applied)
    gain: np.ndarray
    cover: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    def internal_nodes(self) -> np.ndarray:
        return np.nonzero(self.feature >= 0)[0]

    def predict(self, x: np.ndarray) -> np.ndarray:
        idx = np.zeros(len(x), dtype=np.int64)
        while True:
            f = self.feature[idx]
            active = np.nonzero(f >= 0)[0]
            if len(active) == 0:
                break
            node = idx[active]
            go_left = x[active, f[active]] < self.threshold[node]
            idx[active] = np.where(go_left, self.left[node], self.right[node])
        return self.value[idx]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "gain": self.gain.tolist(),
            "cover": self.cover.tolist(),
        }

    @classmethod
    def from_dict(cls, d) -> "Tree":
        return cls(
            feature=np.asarray(d["feature"], dtype=np.int64),
            threshold=np.asarray(d["threshold"], dtype=np.float64),
            left=np.asarray(d["left"], dtype=np.int64),
            right=np.asarray(d["right"], dtype=np.int64),
            value=np.asarray(d["value"], dtype=np.float64),
            gain=np.asarray(d["gain"], dtype=np.float64),
            cover=np.asarray(d["cover"], dtype=np.float64),
        )


@dataclass
class TreeEnsemble:
    columns: list[str]
    trees: list[Tree]
    learning_rate: float
    base_margin: float = 0.0
    train_loss: list[float] = field(default_factory=list)  # mean logloss per round

    def _as_array(self, data) -> np.ndarray:
        if hasattr(data, "values") and hasattr(data, "columns"):
            if list(data.columns) == self.columns:
                return data.values
            idx = [data.column_index(c) for c in self.columns]
            return np.ascontiguousarray(data.values[:, idx])
        return np.asarray(data, dtype=np.float64)

    def predict_margin(self, data) -> np.ndarray:
        x = self._as_array(data)
        out = np.full(len(x), self.base_margin, dtype=np.float64)
        for tree in self.trees:
            out += tree.predict(x)
        return out

    def predict_proba(self, data) -> np.ndarray:
        return _sigmoid(self.predict_margin(data))

    def to_dict(self) -> dict:
        return {
            "kind": "gbt",
            "columns": self.columns,
            "learning_rate": self.learning_rate,
            "base_margin": self.base_margin,
            "train_loss": self.train_loss,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d) -> "TreeEnsemble":
        return cls(
            columns=list(d["columns"]),
            trees=[Tree.from_dict(t) for t in d["trees"]],
            learning_rate=float(d["learning_rate"]),
            base_margin=float(d["base_margin"]),
            train_loss=[float(v) for v in d.get("train_loss", [])],
        )


class _TreeBuilder:
    def __init__(self, x, g, h, columns_used, config):
        self.x = x
        self.g = g
        self.h = h
        self.columns_used = columns_used  # global column indices searched
        self.cfg = config
        self.order = {j: np.argsort(x[:, j], kind="stable") for j in columns_used}
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[float] = []
        self.gain: list[float] = []
        self.cover: list[float] = []

    def _new_node(self) -> int:
        for arr in (self.feature, self.left, self.right):
            arr.append(_LEAF)
        self.threshold.append(0.0)
        self.value.append(0.0)
        self.gain.append(0.0)
        self.cover.append(0.0)
        return len(self.feature) - 1

    def _best_split(self, mask: np.ndarray):
        cfg = self.cfg
        g_total = float(self.g[mask].sum())
        h_total = float(self.h[mask].sum())
        parent_score = g_total * g_total / (h_total + cfg.gbt_l2)
        best = None  # (gain, column, threshold, left_mask)
        for j in self.columns_used:
            idx = self.order[j]
            idx = idx[mask[idx]]
            if len(idx) < 2:
                continue
            v = self.x[idx, j]
            gl = np.cumsum(self.g[idx])[:-1]
            hl = np.cumsum(self.h[idx])[:-1]
            mid = 0.5 * (v[:-1] + v[1:])
            # midpoints must strictly exceed the left value or the split
            # predicate (x < threshold) would disagree with the scan
            candidates = mid > v[:-1]
            if cfg.min_child_cover > 0:
                candidates &= (hl >= cfg.min_child_cover) & (
                    h_total - hl >= cfg.min_child_cover
                )
            if not candidates.any():
                continue
            gr = g_total - gl
            hr = h_total - hl
            gains = 0.5 * (
                gl * gl / (hl + cfg.gbt_l2)
                + gr * gr / (hr + cfg.gbt_l2)
                - parent_score
            ) - cfg.min_split_gain
            gains[~candidates] = -np.inf
            pos = int(np.argmax(gains))  # first max: lowest threshold wins ties
            if gains[pos] <= 0.0:
                continue
            if best is None or gains[pos] > best[0]:  # strict: lowest column wins ties
                best = (float(gains[pos]), j, float(mid[pos]), None)
        if best is None:
            return None
        gain, j, thr, _ = best
        left_mask = mask & (self.x[:, j] < thr)
        return gain, j, thr, left_mask

    def build_root(self):
        """Grow the tree, or return None when the root cannot split."""
        mask = np.ones(len(self.g), dtype=bool)
        split = self._best_split(mask)
        if split is None:
            return None
        self._grow(mask, 0, split)
        return self.finish()

    def _grow(self, mask: np.ndarray, depth: int, split=None) -> int:
        node = self._new_node()
        h_total = float(self.h[mask].sum())
        self.cover[node] = h_total
        if split is None and depth < self.cfg.max_depth:
            split = self._best_split(mask)
        if split is None:
            g_total = float(self.g[mask].sum())
            weight = -g_total / (h_total + self.cfg.gbt_l2)
            self.value[node] = self.cfg.learning_rate * weight
            return node
        gain, j, thr, left_mask = split
        self.feature[node] = j
        self.threshold[node] = thr
        self.gain[node] = gain
        self.left[node] = self._grow(left_mask, depth + 1)
        self.right[node] = self._grow(mask & ~left_mask, depth + 1)
        return node

    def finish(self) -> Tree:
        return Tree(
            feature=np.asarray(self.feature, dtype=np.int64),
            threshold=np.asarray(self.threshold, dtype=np.float64),
            left=np.asarray(self.left, dtype=np.int64),
            right=np.asarray(self.right, dtype=np.int64),
            value=np.asarray(self.value, dtype=np.float64),
            gain=np.asarray(self.gain, dtype=np.float64),
            cover=np.asarray(self.cover, dtype=np.float64),
        )


def _mean_logloss(y: np.ndarray, margin: np.ndarray) -> float:
    return float(np.mean(np.logaddexp(0.0, margin) - y * margin))


def train_gbt(matrix, config: TrainConfig | None = None) -> TreeEnsemble:
    """Boost ``config.n_trees`` rounds on a labeled matrix (both classes required)."""
    config = config or TrainConfig(model="gbt")
    y = np.asarray(matrix.labels, dtype=np.float64)
    if len(y) < 2:
        raise TrainingError("boosted training needs at least 2 rows")
    if len(np.unique(y)) < 2:
        raise TrainingError("cannot train on a single-class bucket")

    x = np.asarray(matrix.values, dtype=np.float64)
    n, d = x.shape
    stochastic = config.subsample < 1.0 or config.colsample < 1.0
    rng = np.random.default_rng(
        np.random.SeedSequence([config.seed, 0x6762745F])
    ) if stochastic else None

    ensemble = TreeEnsemble(
        columns=list(matrix.columns),
        trees=[],
        learning_rate=config.learning_rate,
        base_margin=0.0,
    )
    margin = np.zeros(n, dtype=np.float64)
    for _ in range(config.n_trees):
        p = _sigmoid(margin)
        g = p - y
        h = p * (1.0 - p)

        rows = np.arange(n)
        cols = list(range(d))
        if stochastic:
            if config.subsample < 1.0:
                take = max(2, int(round(n * config.subsample)))
                rows = np.sort(rng.choice(n, size=take, replace=False))
            if config.colsample < 1.0:
                take = max(1, int(round(d * config.colsample)))
                cols = sorted(rng.choice(d, size=take, replace=False).tolist())

        builder = _TreeBuilder(x[rows], g[rows], h[rows], cols, config)
        tree = builder.build_root()
        if tree is None:
            # nothing to learn this round; prediction stays at the base score
            ensemble.train_loss.append(_mean_logloss(y, margin))
            continue
        ensemble.trees.append(tree)
        margin += tree.predict(x)
        ensemble.train_loss.append(_mean_logloss(y, margin))
    return ensemble
