from pathlib import Path
from typing import Optional

import typer

from biomatch.commands.state import create_state
from biomatch.config.config_loader import load_deployment, resolve_config_path
from biomatch.learner.model_io import load_model, model_digest
from biomatch.protocol import BiometricSystem, ExtractorRef
from biomatch.utils.errors import handle_errors
from biomatch.utils.io import record


@handle_errors
def init(config: Optional[str] = None, force: bool = False) -> int:
    """Create params.json and an empty gallery in the configured state directory."""
    cfg = load_deployment(resolve_config_path(config))
    net = load_model(cfg.model_path)
    ref = ExtractorRef(model_id=Path(cfg.model_path).name, digest=model_digest(cfg.model_path))
    params, gallery = BiometricSystem().init(
        cfg.lambda_bits, cfg.space, net, cfg.threshold, cfg.capacity, ref, cfg.seed
    )
    paths = create_state(cfg, params, gallery, force=force)
    typer.echo(
        record(
            status="initialized",
            state_dir=paths.root,
            lambda_bits=params.lambda_bits,
            space=params.space.kind,
            dim=params.space.dimension,
            threshold=params.threshold,
            capacity=params.capacity,
            model_digest=ref.digest,
        )
    )
    return 0
