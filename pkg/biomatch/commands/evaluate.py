from pathlib import Path
from typing import Optional

import typer

from biomatch.config.config_loader import load_experiment, resolve_config_path
from biomatch.harness.experiment import run_experiment
from biomatch.utils.console import console
from biomatch.utils.errors import handle_errors
from biomatch.utils.io import record


@handle_errors
def evaluate(output_dir: Optional[str] = None, config: Optional[str] = None) -> int:
    """Run the full pipeline and write report.txt, roc.csv and scores.csv."""
    cfg = load_experiment(resolve_config_path(config))
    out = Path(output_dir) if output_dir else Path(cfg.output_dir)
    with console.status("running experiment"):
        report = run_experiment(cfg, out)
    typer.echo(
        record(
            eer=report.eer,
            threshold=report.threshold,
            fmr=report.fmr_at_threshold,
            fnmr=report.fnmr_at_threshold,
            fmr_n=report.fmr_n,
            scaled_valid=report.scaled_valid,
            report=out / "report.txt",
            roc=report.roc_path,
        )
    )
    return 0
