from .metrics import EvalReport, evaluate, roc_auc
from .importance import ImportanceVector, gbt_importance, lr_coefficients
from .linear import LinearModel, logistic_objective, train_logreg
from .boosted import Tree, TreeEnsemble, train_gbt
from .train_config import TrainConfig

__all__ = [
    "EvalReport",
    "ImportanceVector",
    "LinearModel",
    "TrainConfig",
    "Tree",
    "TreeEnsemble",
    "evaluate",
    "gbt_importance",
    "logistic_objective",
    "lr_coefficients",
    "roc_auc",
    "train_gbt",
    "train_logreg",
]
