"""
CLI module — registers all the commands for the tomokit tool.
"""

import typer

app = typer.Typer(
    name="tomokit",
    help="Tomokit — optical quantum state generation, noise and tomography.",
    add_completion=False,
    rich_markup_mode="rich",
)

# Import the command functions
from tomokit.cli.generate import generate_command
from tomokit.cli.measure import measure_command
from tomokit.cli.noise import noise_command
from tomokit.cli.reconstruct import reconstruct_command
from tomokit.cli.benchmark import benchmark_command

# Register commands
app.command(name="generate")(generate_command)
app.command(name="measure")(measure_command)
app.command(name="noise")(noise_command)
app.command(name="reconstruct")(reconstruct_command)
app.command(name="benchmark")(benchmark_command)
