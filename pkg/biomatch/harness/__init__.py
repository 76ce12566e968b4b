from biomatch.harness.experiment import (
    DatasetSplit,
    ExperimentConfig,
    collect_scores,
    run_experiment,
    split_dataset,
)
from biomatch.harness.report import ExperimentReport, ReportCheck, recompute_report
from biomatch.harness.synthetic import SyntheticDataSpec, gen_synthetic

__all__ = [
    "DatasetSplit",
    "ExperimentConfig",
    "ExperimentReport",
    "ReportCheck",
    "SyntheticDataSpec",
    "collect_scores",
    "gen_synthetic",
    "recompute_report",
    "run_experiment",
    "split_dataset",
]
