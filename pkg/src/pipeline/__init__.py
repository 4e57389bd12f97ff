"""End-to-end runs, synthetic data, benchmarks and experiments."""

from .config import RunConfig, load_run_config, parse_config_text
from .timings import StageTimings
from .runner import Pipeline, PipelineError, RunResult, run, load_sources, write_outputs, replica_id
from .synthetic import SyntheticSpec, gen_synthetic, generate_stream, iter_frames
from .bench import bench_bgs, bench_compose, random_crops
from .experiments import replication_sweep

__all__ = [
    "RunConfig", "load_run_config", "parse_config_text",
    "StageTimings",
    "Pipeline", "PipelineError", "RunResult", "run", "load_sources", "write_outputs", "replica_id",
    "SyntheticSpec", "gen_synthetic", "generate_stream", "iter_frames",
    "bench_bgs", "bench_compose", "random_crops",
    "replication_sweep",
]
