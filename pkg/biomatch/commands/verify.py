from typing import Optional

import typer

from biomatch.commands.state import load_state, save_state
from biomatch.config.config_loader import load_deployment, resolve_config_path
from biomatch.template_store import parse_id
from biomatch.utils.errors import EXIT_NEGATIVE, handle_errors
from biomatch.utils.io import read_probe, record


@handle_errors
def verify(identifier: str, input_path: str, config: Optional[str] = None) -> int:
    """One-to-one comparison; exit code 1 on rejection (including unknown ids)."""
    cfg = load_deployment(resolve_config_path(config))
    paths, state, system = load_state(cfg)
    probe = read_probe(input_path, system.prover.net.input_dim)
    decision = system.verify(parse_id(identifier), probe)
    save_state(paths, state, system)
    typer.echo(
        record(
            decision="accept" if decision.accept else "reject",
            id=identifier.lower(),
            score=decision.score,
            threshold=decision.threshold,
            reason=decision.reason,
        )
    )
    if not decision.accept:
        raise typer.Exit(code=EXIT_NEGATIVE)
    return 0
