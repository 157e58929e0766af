"""Outcome-oriented process prediction with explanation diagnostics.

The package covers the offline workflow (prefix extraction, bucketing,
encoding, per-bucket model training) plus data profiling, post-hoc
explanations and cross-run stability reports, all driven by one JSON config.
"""

from .bucketing import BucketKey, assign_buckets, bucket_manifest
from .encoding import (
    EncoderSpec,
    FeatureDescriptor,
    FeatureMatrix,
    expected_width,
    fit_encoder,
    transform,
)
from .errors import (
    ConfigError,
    DataError,
    ExplainError,
    InconsistentStaticError,
    MixedLengthBucketError,
    PipelineError,
    TrainingError,
    UnknownAttributeError,
)
from .log_model import (
    Attribute,
    ColumnMapping,
    Event,
    EventLog,
    LabelRule,
    LogSchema,
    LogStats,
    Trace,
    apply_labeling,
    compute_log_stats,
    derive_time_features,
    export_csv,
    ingest_csv,
)
from .prefixing import (
    PrefixLog,
    PrefixTrace,
    generate_prefix_log,
    prefix_count,
    prefix_lengths,
)
from .profiling import (
    CorrelationMatrix,
    DataTable,
    MIReport,
    ProfileReport,
    cramers_v,
    cramers_v_matrix,
    mutual_info,
    pearson_matrix,
    profile,
)

__version__ = "0.1.0"
