"""Main CLI entry point for rankmap."""

import click

from rankmap import __version__
from rankmap.commands import evaluate, fit, generate, run, sweep
from rankmap.utils.console import configure_logging


@click.group()
@click.version_option(version=__version__, prog_name="rankmap")
@click.option("--verbose", "-v", is_flag=True, help="Show debug logging")
@click.pass_context
def main(ctx: click.Context, verbose: bool) -> None:
    """rankmap - optimal rank-constrained linear maps and their benchmarks.

    \b
    Workflow:
      rankmap generate --preset desk-swe    Generate data splits
      rankmap fit DATA --ranks 25,50        Fit maps to stored data
      rankmap evaluate MAP DATA             Score a stored map
      rankmap sweep --preset desk-imaging   Risk against rank
      rankmap run --preset desk-finance     Full pipeline with report
    """
    ctx.ensure_object(dict)
    ctx.obj["verbose"] = verbose
    configure_logging(verbose)


main.add_command(generate.generate)
main.add_command(fit.fit)
main.add_command(evaluate.evaluate)
main.add_command(sweep.sweep)
main.add_command(run.run)


if __name__ == "__main__":
    main()
