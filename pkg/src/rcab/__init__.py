"""rcab: a benchmarking platform for crash root cause analysis.

Crash RCA pipelines are split into two swappable stages: *augmentation*
(grow a dataset of crashing/non-crashing inputs from one crashing seed)
and *extraction* (statistically contrast the traces of the two classes
and rank candidate root-cause source locations).  rcab runs any
augmenter x extractor combination against targets with registered
ground truth and evaluates rank accuracy over augmentation time,
initial seeds, and fuzzing randomness.
"""

__version__ = "0.1.0"

from rcab.model import (
    BlockSite,
    Dataset,
    GroundTruth,
    Location,
    Ranking,
    Sample,
    Trace,
    Verdict,
    VerdictKind,
    dataset_balance,
    rank_of_ground_truth,
    snapshot_schedule,
)

__all__ = [
    "BlockSite",
    "Dataset",
    "GroundTruth",
    "Location",
    "Ranking",
    "Sample",
    "Trace",
    "Verdict",
    "VerdictKind",
    "dataset_balance",
    "rank_of_ground_truth",
    "snapshot_schedule",
    "__version__",
]
