import sys
from typing import List, Optional

import typer

from biomatch.utils.console import setup_logging
from biomatch.utils.errors import EXIT_FAULT, EXIT_OK

app = typer.Typer(
    help="Biometric enrollment, verification and identification over learned embeddings.",
    no_args_is_help=True,
    add_completion=False,
)

ConfigOption = typer.Option(
    None, "--config", "-c", help="key=value config file (defaults to $BIOMATCH_CONFIG, then bundled defaults)"
)


@app.callback()
def main(verbose: bool = typer.Option(False, "--verbose", "-v", help="Log debug output to stderr")):
    setup_logging(verbose)


# Lazy-loaded commands to improve CLI startup performance


@app.command()
def init(
    config: Optional[str] = ConfigOption,
    force: bool = typer.Option(False, "--force", help="Overwrite existing system state"),
):
    """
    Initialise a system: load the extractor model, check it against the space and
    create an empty gallery in the state directory.
    """
    from biomatch.commands.init import init as _init

    return _init(config, force)


@app.command()
def enroll(
    input_path: str = typer.Option(..., "--input", "-i", help="Probe file: one decimal float per line"),
    config: Optional[str] = ConfigOption,
):
    """Enroll a raw biometric sample and print the issued identifier."""
    from biomatch.commands.enroll import enroll as _enroll

    return _enroll(input_path, config)


def _hex_identifier(value: str) -> str:
    from biomatch.template_store import parse_id

    try:
        parse_id(value)
    except ValueError as e:
        raise typer.BadParameter(str(e))
    return value


@app.command()
def verify(
    identifier: str = typer.Option(..., "--id", help="Hex identifier returned by enroll", callback=_hex_identifier),
    input_path: str = typer.Option(..., "--input", "-i", help="Probe file: one decimal float per line"),
    config: Optional[str] = ConfigOption,
):
    """Compare a sample against the template enrolled under an identifier."""
    from biomatch.commands.verify import verify as _verify

    return _verify(identifier, input_path, config)


@app.command()
def identify(
    input_path: str = typer.Option(..., "--input", "-i", help="Probe file: one decimal float per line"),
    config: Optional[str] = ConfigOption,
):
    """Search the whole gallery for the best-matching identifier."""
    from biomatch.commands.identify import identify as _identify

    return _identify(input_path, config)


@app.command()
def train(
    output: Optional[str] = typer.Option(None, "--output", "-o", help="Model file to write (BMNN)"),
    data: Optional[str] = typer.Option(None, "--data", help="Dataset CSV from gen-data; synthetic data if omitted"),
    config: Optional[str] = ConfigOption,
    gradient_check: bool = typer.Option(
        False, "--check-gradients", help="Compare backprop against finite differences before training"
    ),
):
    """Train the feature extractor and write it as a model file."""
    from biomatch.commands.train import train as _train

    return _train(output, data, config, gradient_check)


@app.command(name="gen-data")
def gen_data(
    output: Optional[str] = typer.Option(None, "--output", "-o", help="Dataset CSV to write"),
    config: Optional[str] = ConfigOption,
):
    """Generate a seeded synthetic population (one Gaussian cluster per identity)."""
    from biomatch.commands.gen_data import gen_data as _gen_data

    return _gen_data(output, config)


@app.command()
def evaluate(
    output_dir: Optional[str] = typer.Option(None, "--output-dir", "-o", help="Directory for the run's artifacts"),
    config: Optional[str] = ConfigOption,
):
    """Run the full experiment: train, enroll, score, and write ROC, scores and report."""
    from biomatch.commands.evaluate import evaluate as _evaluate

    return _evaluate(output_dir, config)


@app.command()
def report(
    path: Optional[str] = typer.Argument(None, help="report.txt to show (defaults to the configured output dir)"),
    config: Optional[str] = ConfigOption,
):
    """Print a report and check it against its persisted scores."""
    from biomatch.commands.report import report as _report

    return _report(path, config)


def cli_dispatch(argv: Optional[List[str]] = None) -> int:
    """Run one CLI invocation and return its exit code instead of exiting."""
    args = list(sys.argv[1:] if argv is None else argv)
    try:
        app(args=args, prog_name="biomatch")
    except SystemExit as e:
        # usage errors exit 2, typer.Exit carries 1 or 3
        if e.code is None:
            return EXIT_OK
        return e.code if isinstance(e.code, int) else EXIT_FAULT
    return EXIT_OK


def run() -> None:
    sys.exit(cli_dispatch())


if __name__ == "__main__":
    run()
