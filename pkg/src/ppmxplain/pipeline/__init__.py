from .config import GridSpec, RunConfig, load_config_file
from .run import RunArtifacts, run_experiment, run_grid
from .reports import emit_reports

__all__ = [
    "GridSpec",
    "RunArtifacts",
    "RunConfig",
    "emit_reports",
    "load_config_file",
    "run_experiment",
    "run_grid",
]
