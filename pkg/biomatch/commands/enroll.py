from typing import Optional

import typer

from biomatch.commands.state import load_state, save_state
from biomatch.config.config_loader import load_deployment, resolve_config_path
from biomatch.utils.errors import handle_errors
from biomatch.utils.io import read_probe, record


@handle_errors
def enroll(input_path: str, config: Optional[str] = None) -> int:
    cfg = load_deployment(resolve_config_path(config))
    paths, state, system = load_state(cfg)
    probe = read_probe(input_path, system.prover.net.input_dim)
    identifier = system.enroll(probe)
    save_state(paths, state, system, enrolled=1)
    typer.echo(record(id=identifier, gallery_size=len(system.gallery)))
    return 0
