from pathlib import Path
from typing import Optional

import typer

from biomatch.config.config_loader import load_experiment, resolve_config_path
from biomatch.harness.synthetic import gen_synthetic, write_dataset
from biomatch.utils.errors import handle_errors
from biomatch.utils.io import record


@handle_errors
def gen_data(output: Optional[str] = None, config: Optional[str] = None) -> int:
    cfg = load_experiment(resolve_config_path(config))
    spec = cfg.data_spec()
    destination = Path(output) if output else Path(cfg.output_dir) / "data.csv"
    destination.parent.mkdir(parents=True, exist_ok=True)
    samples = gen_synthetic(spec)
    write_dataset(samples, destination)
    typer.echo(
        record(path=destination, samples=len(samples), classes=spec.classes, dim=spec.dimension, seed=spec.seed)
    )
    return 0
