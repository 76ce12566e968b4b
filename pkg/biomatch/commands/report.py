from pathlib import Path
from typing import Optional

import typer

from biomatch.config.config_loader import load_experiment, resolve_config_path
from biomatch.harness.report import read_report, recompute_report
from biomatch.utils.console import console
from biomatch.utils.errors import EXIT_NEGATIVE, handle_errors
from biomatch.utils.io import record


@handle_errors
def report(path: Optional[str] = None, config: Optional[str] = None) -> int:
    """Print a written report and check it against its scores file; exit 1 if they disagree."""
    if path is None:
        path = str(Path(load_experiment(resolve_config_path(config)).output_dir) / "report.txt")
    for key, value in read_report(path).items():
        typer.echo(record(**{key: value}))
    check = recompute_report(path)
    for key, (reported, recomputed) in check.mismatches.items():
        console.print(f"mismatch {key}: report says {reported}, scores give {recomputed}", markup=False)
    typer.echo(record(consistent=check.consistent, mismatches=len(check.mismatches)))
    if not check.consistent:
        raise typer.Exit(code=EXIT_NEGATIVE)
    return 0
