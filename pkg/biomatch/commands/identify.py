from typing import Optional

import typer

from biomatch.commands.state import load_state, save_state
from biomatch.config.config_loader import load_deployment, resolve_config_path
from biomatch.utils.errors import EXIT_NEGATIVE, handle_errors
from biomatch.utils.io import read_probe, record


@handle_errors
def identify(input_path: str, config: Optional[str] = None) -> int:
    cfg = load_deployment(resolve_config_path(config))
    paths, state, system = load_state(cfg)
    probe = read_probe(input_path, system.prover.net.input_dim)
    result = system.identify_op(probe)
    save_state(paths, state, system)
    typer.echo(
        record(
            outcome="identified" if result.identified else "no_match",
            id=result.identifier,
            score=result.best_score,
            margin=result.margin,
            threshold=system.params.threshold,
        )
    )
    if not result.identified:
        raise typer.Exit(code=EXIT_NEGATIVE)
    return 0
