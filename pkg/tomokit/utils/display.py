"""
Display helpers — pretty print messages and tables using Rich.
"""

from rich.console import Console
from rich.table import Table
from rich import box

console = Console()
error_console = Console(stderr=True)


def success(message: str) -> None:
    """Print a green success message."""
    console.print(f"[bold green]✓[/bold green] {message}")


def error(message: str) -> None:
    """Print a red error message to stderr."""
    error_console.print(f"[bold red]✗[/bold red] {message}")


def info(message: str) -> None:
    """Print a blue info message."""
    console.print(f"[bold blue]ℹ[/bold blue] {message}")


def warning(message: str) -> None:
    """Print a yellow warning message."""
    console.print(f"[bold yellow]⚠[/bold yellow] {message}")


def _num(value, digits=4):
    return "—" if value is None else f"{value:.{digits}f}"


def print_family_summary(rows: list[dict]) -> None:
    """One line per family: records, train/test counts, truncation flags."""
    table = Table(title="Generated States", box=box.ROUNDED, title_style="bold magenta")
    table.add_column("Family", style="cyan")
    table.add_column("Records", style="green", justify="right")
    table.add_column("Train", justify="right")
    table.add_column("Test", justify="right")
    table.add_column("Truncation flags", style="yellow", justify="right")
    for r in rows:
        table.add_row(r["family"], str(r["records"]), str(r["train"]), str(r["test"]), str(r["flagged"]))
    console.print(table)


def print_benchmark_table(report) -> None:
    """Final mean ± std fidelity per method."""
    table = Table(
        title=f"Benchmark — {report.scenario['family']} {report.scenario['params']}",
        box=box.ROUNDED,
        title_style="bold magenta",
    )
    table.add_column("Method", style="cyan", width=8)
    table.add_column("Runs", justify="right")
    table.add_column("Final fidelity", style="green", justify="right")
    table.add_column("Std", justify="right")
    table.add_column("Epochs to threshold", style="yellow", justify="right")
    table.add_column("Failures", style="red", justify="right")
    for method, summary in report.methods.items():
        reached = summary.get("epochs_to_threshold")
        table.add_row(
            method.upper(),
            str(summary["runs_completed"]),
            _num(summary["final_mean"]),
            _num(summary["final_std"]),
            "—" if reached is None else str(reached),
            str(len(summary["failures"])),
        )
    console.print(table)
