from pathlib import Path
from typing import Optional

import numpy as np
import typer

from biomatch.config.config_loader import load_experiment, resolve_config_path
from biomatch.harness.synthetic import gen_synthetic, read_dataset
from biomatch.learner.layers import ActivationKind
from biomatch.learner.model_io import save_model
from biomatch.learner.network import NeuralNetwork
from biomatch.learner.training import check_gradients, train_with_history
from biomatch.utils.console import console
from biomatch.utils.errors import handle_errors
from biomatch.utils.io import record

GRADIENT_CHECK_SAMPLES = 8


def _max_gradient_error(analytic, numeric) -> float:
    worst = 0.0
    for a_layer, n_layer in zip(analytic, numeric):
        for name, a in a_layer.items():
            worst = max(worst, float(np.max(np.abs(a - n_layer[name]), initial=0.0)))
    return worst


@handle_errors
def train(
    output: Optional[str] = None,
    data: Optional[str] = None,
    config: Optional[str] = None,
    gradient_check: bool = False,
) -> int:
    """Train the feature extractor on synthetic (or given) data and write a BMNN model."""
    cfg = load_experiment(resolve_config_path(config))
    samples = read_dataset(data) if data else gen_synthetic(cfg.data_spec())
    classes = max(sample.label for sample in samples) + 1
    net = NeuralNetwork.mlp(
        [samples[0].x.size, *cfg.hidden, classes],
        hidden=cfg.activation,
        head=ActivationKind.SOFTMAX,
        seed=cfg.seeds.weights,
    )
    fields = {}
    if gradient_check:
        analytic, numeric = check_gradients(net, samples[:GRADIENT_CHECK_SAMPLES], cfg.loss)
        fields["gradient_error"] = _max_gradient_error(analytic, numeric)

    with console.status("training"):
        net, history = train_with_history(net, samples, cfg.training_config())

    destination = Path(output) if output else Path(cfg.output_dir) / "model.bmnn"
    destination.parent.mkdir(parents=True, exist_ok=True)
    digest = save_model(net, destination)
    typer.echo(
        record(
            model=destination,
            digest=digest,
            epochs=len(history),
            loss_first=history[0],
            loss_last=history[-1],
            embedding_dim=net.embedding_dim,
            **fields,
        )
    )
    return 0
