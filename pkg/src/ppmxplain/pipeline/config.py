"""Run configuration: a single JSON document driving the whole pipeline.

The two studied preprocessing combinations are enforced as an invariant:
aggregation encoding pairs with single bucketing and index encoding with
prefix-length bucketing. ``unsafe_pairings`` lifts the constraint for
exploration and is recorded in every manifest.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional

from ..bucketing import DEFAULT_MIN_BUCKET_SIZE, PREFIX_LENGTH, SINGLE, STRATEGIES
from ..encoding import AGGREGATION, ENCODING_KINDS, INDEX
from ..errors import ConfigError
from ..log_model import ColumnMapping, LabelRule
from ..models.train_config import MODEL_KINDS, TrainConfig

TEMPORAL = "temporal"
RANDOM = "random"
SPLIT_KINDS = (TEMPORAL, RANDOM)

XAI_METHODS = ("pfi", "shap")

_PAIRING = {AGGREGATION: SINGLE, INDEX: PREFIX_LENGTH}


@dataclass(frozen=True)
class RunConfig:
    log_path: str
    mapping: ColumnMapping
    label_rule: LabelRule
    model: TrainConfig
    split_kind: str = TEMPORAL
    train_fraction: float = 0.8
    gap: int = 5
    max_prefix_length: int = 20
    encoding: str = AGGREGATION
    bucketing: Optional[str] = None  # derived from the encoding when omitted
    min_bucket_size: int = DEFAULT_MIN_BUCKET_SIZE
    derive_time: bool = True
    xai: tuple[str, ...] = ("pfi", "shap")
    pfi_iterations: int = 10
    background_size: int = 100
    shap_max_instances: int = 100
    top_k: int = 5
    mi_bins: int = 10
    collinearity_threshold: float = 0.9
    seed: int = 0
    unsafe_pairings: bool = False

    def __post_init__(self):
        if self.split_kind not in SPLIT_KINDS:
            raise ConfigError(f"unknown split kind {self.split_kind!r}")
        if not (0.0 < self.train_fraction < 1.0):
            raise ConfigError("train_fraction must be in (0, 1)")
        if self.encoding not in ENCODING_KINDS:
            raise ConfigError(f"unknown encoding {self.encoding!r}")
        bucketing = self.bucketing
        if bucketing is None:
            object.__setattr__(self, "bucketing", _PAIRING[self.encoding])
        else:
            if bucketing not in STRATEGIES:
                raise ConfigError(f"unknown bucketing strategy {bucketing!r}")
            if bucketing != _PAIRING[self.encoding] and not self.unsafe_pairings:
                raise ConfigError(
                    f"{self.encoding} encoding pairs with "
                    f"{_PAIRING[self.encoding]!r} bucketing; "
                    f"got {bucketing!r} (use unsafe_pairings to override)"
                )
        if self.gap < 1 or self.max_prefix_length < 1:
            raise ConfigError("gap and max_prefix_length must be >= 1")
        unknown = set(self.xai) - set(XAI_METHODS)
        if unknown:
            raise ConfigError(f"unknown XAI methods: {sorted(unknown)}")
        for name in ("pfi_iterations", "background_size", "shap_max_instances",
                     "top_k", "mi_bins", "min_bucket_size"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, seed=seed)

    def to_dict(self) -> dict:
        return {
            "log_path": self.log_path,
            "mapping": self.mapping.to_dict(),
            "label_rule": self.label_rule.to_dict(),
            "model": self.model.to_dict(),
            "split_kind": self.split_kind,
            "train_fraction": self.train_fraction,
            "gap": self.gap,
            "max_prefix_length": self.max_prefix_length,
            "encoding": self.encoding,
            "bucketing": self.bucketing,
            "min_bucket_size": self.min_bucket_size,
            "derive_time": self.derive_time,
            "xai": list(self.xai),
            "pfi_iterations": self.pfi_iterations,
            "background_size": self.background_size,
            "shap_max_instances": self.shap_max_instances,
            "top_k": self.top_k,
            "mi_bins": self.mi_bins,
            "collinearity_threshold": self.collinearity_threshold,
            "seed": self.seed,
            "unsafe_pairings": self.unsafe_pairings,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "RunConfig":
        for key in ("log_path", "mapping", "label_rule"):
            if key not in d:
                raise ConfigError(f"run config is missing {key!r}")
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown run config keys: {sorted(unknown)}")
        kwargs = dict(d)
        kwargs["mapping"] = ColumnMapping.from_dict(d["mapping"])
        kwargs["label_rule"] = LabelRule.from_dict(d["label_rule"])
        kwargs["model"] = TrainConfig.from_dict(d.get("model", {}))
        if "xai" in kwargs:
            kwargs["xai"] = tuple(kwargs["xai"])
        return cls(**kwargs)

    def config_hash(self) -> str:
        """Hash of the settings excluding the seed; seed pairs share a prefix."""
        payload = self.to_dict()
        payload.pop("seed")
        canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()

    def run_id(self) -> str:
        return f"run-{self.config_hash()[:12]}-s{self.seed}"

    def settings_dict(self) -> dict:
        """Settings for the fingerprint (includes the seed)."""
        return self.to_dict()


@dataclass(frozen=True)
class GridSpec:
    """Cartesian grid over encodings, model kinds and seeds."""

    base: RunConfig
    encodings: tuple[str, ...]
    model_kinds: tuple[str, ...]
    seeds: tuple[int, ...]

    def __post_init__(self):
        for enc in self.encodings:
            if enc not in ENCODING_KINDS:
                raise ConfigError(f"unknown encoding in grid: {enc!r}")
        for kind in self.model_kinds:
            if kind not in MODEL_KINDS:
                raise ConfigError(f"unknown model kind in grid: {kind!r}")
        if not self.seeds:
            raise ConfigError("grid needs at least one seed")

    def cells(self) -> list[RunConfig]:
        out = []
        for enc in self.encodings:
            for kind in self.model_kinds:
                for seed in self.seeds:
                    out.append(
                        replace(
                            self.base,
                            encoding=enc,
                            bucketing=None,
                            model=replace(self.base.model, model=kind, seed=seed),
                            seed=seed,
                        )
                    )
        return out


def load_config_file(path) -> tuple[RunConfig, Optional[GridSpec]]:
    """Parse a config JSON file; returns the run config and the grid, if any."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    grid_raw = raw.pop("grid", None)
    config = RunConfig.from_dict(raw)
    grid = None
    if grid_raw is not None:
        grid = GridSpec(
            base=config,
            encodings=tuple(grid_raw.get("encoding", [config.encoding])),
            model_kinds=tuple(grid_raw.get("model", [config.model.model])),
            seeds=tuple(int(s) for s in grid_raw.get("seeds", [config.seed])),
        )
    return config, grid
