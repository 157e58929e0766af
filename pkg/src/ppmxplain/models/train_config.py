"""Training hyperparameters for both model families.

Defaults are fixed for reproducibility rather than tuned: logistic
regression uses l2=1, tol=1e-8, max 200 Newton iterations; the boosted
ensemble uses 100 trees of depth 4, learning rate 0.3, leaf penalty 1,
no minimum split gain and minimum child cover 1. Row/column subsampling is
off by default; enabling it (fractions < 1) makes training seed-dependent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from ..errors import ConfigError

LOGREG = "logreg"
GBT = "gbt"
MODEL_KINDS = (LOGREG, GBT)


@dataclass(frozen=True)
class TrainConfig:
    model: str = LOGREG
    # logistic regression
    l2: float = 1.0
    tol: float = 1e-8
    max_iter: int = 200
    # gradient-boosted trees
    n_trees: int = 100
    max_depth: int = 4
    learning_rate: float = 0.3
    gbt_l2: float = 1.0
    min_split_gain: float = 0.0
    min_child_cover: float = 1.0
    subsample: float = 1.0
    colsample: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.model not in MODEL_KINDS:
            raise ConfigError(f"unknown model kind {self.model!r}")
        if self.l2 < 0 or self.gbt_l2 < 0 or self.min_split_gain < 0:
            raise ConfigError("regularization strengths must be >= 0")
        if self.tol <= 0 or self.max_iter < 1:
            raise ConfigError("tol must be > 0 and max_iter >= 1")
        if self.n_trees < 1 or self.max_depth < 1 or self.learning_rate <= 0:
            raise ConfigError("n_trees, max_depth and learning_rate must be positive")
        if self.min_child_cover < 0:
            raise ConfigError("min_child_cover must be >= 0")
        if not (0 < self.subsample <= 1) or not (0 < self.colsample <= 1):
            raise ConfigError("subsample fractions must be in (0, 1]")

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_dict(cls, d: Mapping) -> "TrainConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown training config keys: {sorted(unknown)}")
        return cls(**dict(d))
