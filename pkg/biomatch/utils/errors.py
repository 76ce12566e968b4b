import functools

import typer
from rich.markup import escape

from biomatch.errors import BiomatchError, StageError
from biomatch.utils.console import console

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_USAGE = 2
EXIT_FAULT = 3


def handle_errors(func):
    """Decorator mapping library and I/O failures in CLI commands to exit code 3."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except StageError as e:
            console.print(f"[red]error[/] in stage [bold]{e.stage}[/]: {escape(str(e.cause))}", markup=True, highlight=False)
            raise typer.Exit(code=EXIT_FAULT)
        except (BiomatchError, OSError) as e:
            console.print(f"[red]error[/] {type(e).__name__}: {escape(str(e))}", markup=True, highlight=False)
            raise typer.Exit(code=EXIT_FAULT)
        except (typer.Exit, typer.Abort, typer.BadParameter):
            raise
        except Exception as e:
            console.print(f"[red]unexpected error[/] {type(e).__name__}: {escape(str(e))}", markup=True, highlight=False)
            raise typer.Exit(code=EXIT_FAULT)

    return wrapper
