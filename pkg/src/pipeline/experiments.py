"""
Replication sweep: the same stream replicated k times and consolidated with
elastic(k), measuring inference reduction against accuracy.
"""

from typing import Iterable

import pandas as pd

from ..utils.logging import get_logger
from .config import RunConfig
from .runner import run

logger = get_logger(__name__)


def replication_sweep(
    config: RunConfig,
    counts: Iterable[int] = (1, 2, 4, 8),
    match_policy: bool = True,
) -> pd.DataFrame:
    """Run the pipeline once per replicate count.

    Args:
        config: Base configuration (outputs are not written per run)
        counts: Replicate counts
        match_policy: Use elastic:<k> for k replicas instead of the configured policy

    Returns:
        One row per count: streams, inference_count, frames_processed,
        reduction_factor, mean_ap, precision, recall
    """
    rows = []
    for k in counts:
        update = {"replicate": k, "output_dir": None, "baseline": False}
        if match_policy:
            update["composer"] = config.composer.model_copy(update={"policy": f"elastic:{k}"})
        result = run(config.model_copy(update=update))
        report = result.report
        rows.append({
            "replicate": k,
            "streams": len({key[0] for key in result.run_log.frames_processed}),
            "inference_count": report.inference_count,
            "frames_processed": report.frames_processed,
            "reduction_factor": report.reduction_factor,
            "mean_ap": report.mean_ap,
            "precision": report.precision,
            "recall": report.recall,
        })
        logger.info(
            f"Sweep replicate={k}: reduction {report.reduction_factor:.3f}",
            extra={'event_type': 'sweep_point', 'replicate': k}
        )
    return pd.DataFrame(rows)
