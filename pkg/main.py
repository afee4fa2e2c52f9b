import functools
from pathlib import Path
from typing import Any, Callable, Dict, Optional

import click
from dotenv import load_dotenv
from pydantic import ValidationError

from errors import OutputError, TypicalityError
from experiment_tools import TOOLS, ExperimentConfig, render

# --- Error reporting ---

def _describe_validation(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        where = ".".join(str(part) for part in item["loc"])
        parts.append(f"{where}: {item['msg']}" if where else item["msg"])
    return "; ".join(parts)


def exit_status(error: Exception) -> tuple[int, str]:
    """Exit code and one-line diagnostic: 1 for invalid input, 2 for resource or convergence failures."""
    if isinstance(error, TypicalityError):
        return error.exit_code, str(error)
    if isinstance(error, click.ClickException):
        return 1, error.format_message()
    if isinstance(error, ValidationError):
        return 1, _describe_validation(error)
    if isinstance(error, OSError):
        return 1, f"cannot read input: {error}"
    return 1, str(error)


def _report(error: Exception) -> int:
    code, message = exit_status(error)
    click.echo(f"[TOOL] [ERROR] {' '.join(message.split())}", err=True)
    return code


def _write(text: str, output: Optional[Path]) -> None:
    if output is None:
        click.echo(text, nl=False)
        return
    with open(output, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


# --- Experiment execution ---

def run(config: ExperimentConfig) -> int:
    """Runs one experiment and writes its output only once every computation has succeeded."""
    tool = TOOLS[config.command](quiet=config.quiet, progress=config.progress)
    try:
        output = tool.invoke(config)
        text = render(config.command, output, config.format)
    except (TypicalityError, ValueError, OSError) as e:
        return _report(e)
    try:
        _write(text, config.output)
    except OSError as e:
        return _report(OutputError(f"cannot write output: {e}"))
    if not config.quiet:
        target = config.output if config.output is not None else "stdout"
        click.echo(f"[TOOL] '{config.command}' finished, {len(output.rows)} rows written to {target}.", err=True)
    return 0


def _dispatch(command: str, options: Dict[str, Any]) -> int:
    try:
        config = ExperimentConfig(command=command, **options)
    except ValidationError as e:
        return _report(e)
    return run(config)


def experiment_options(func: Callable) -> Callable:
    options = [
        click.option("--d", "d", type=int, default=None, help="Alphabet size / Hilbert-space dimension."),
        click.option("--n", "ns", type=str, default=None, help="Comma-separated block lengths, e.g. 16,64,256."),
        click.option("--h", "h", type=float, default=None, help="Target entropy in bits."),
        click.option("--eps", "epsilon", type=float, default=None, help="Entropy window half-width in bits."),
        click.option("--rho", "rho_source", type=str, default=None,
                     help="pure, maximally-mixed, diag:p1,p2,... or a density-matrix JSON file."),
        click.option("--seed", type=int, default=0, show_default=True, help="Seed for Haar sampling."),
        click.option("--tol", type=float, default=None, help="Entropy tolerance of the basis search."),
        click.option("--samples", type=int, default=64, show_default=True, help="Haar samples (upsilon-dim)."),
        click.option("--identity-first", is_flag=True, help="Use U = I as the first sample (upsilon-dim)."),
        click.option("--rule", type=click.Choice(["two-sided", "upper"]), default="two-sided", show_default=True,
                     help="Typical-set membership rule (overlap-curve, fidelity-curve)."),
        click.option("--output", type=click.Path(dir_okay=False, path_type=Path), default=None,
                     help="Output file; stdout when omitted."),
        click.option("--format", "format", type=click.Choice(["csv", "json"]), default="csv", show_default=True),
        click.option("--quiet", is_flag=True, help="Silence [TOOL] progress messages."),
        click.option("--progress", is_flag=True, help="Show a progress bar for long sampling loops."),
    ]
    return functools.reduce(lambda wrapped, option: option(wrapped), reversed(options), func)


class ExperimentGroup(click.Group):
    """Reports malformed option values as one [TOOL] [ERROR] line with exit status 1."""

    def invoke(self, ctx: click.Context) -> Any:
        try:
            return super().invoke(ctx)
        except click.UsageError as e:
            ctx.exit(_report(e))


@click.group(cls=ExperimentGroup)
def cli() -> None:
    """Typical-subspace compression experiments."""


def _register(command: str, help_text: str) -> None:
    @cli.command(name=command, help=help_text)
    @experiment_options
    @click.pass_context
    def _command(ctx: click.Context, **options: Any) -> None:
        ctx.exit(_dispatch(command, options))


for _name, _tool in TOOLS.items():
    _register(_name, _tool.model_fields["description"].default)


def main() -> None:
    load_dotenv()
    cli()


if __name__ == "__main__":
    main()
