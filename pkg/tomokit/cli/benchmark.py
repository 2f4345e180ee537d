"""
tomokit benchmark — MLE versus adversarial reconstruction over repeated runs.

Usage examples:
    tomokit benchmark --runs 5 --epochs 1000 --out bench/
    tomokit benchmark --runs 1 --epochs 10 --dim 16 --out smoke/
"""

from pathlib import Path
from typing import Optional

import typer

from tomokit.cli.common import exit_on_error, require_file
from tomokit.config import BenchmarkConfig, load_config
from tomokit.core.benchmark import run_benchmark, write_benchmark
from tomokit.utils.display import info, print_benchmark_table, success, warning
from tomokit.utils.io import atomic_output_dir


def benchmark_command(
    out: Path = typer.Option(..., "--out", "-o", help="Output directory."),
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="BenchmarkConfig JSON."),
    runs: Optional[int] = typer.Option(None, "--runs", help="Runs per method (default 5)."),
    epochs: Optional[int] = typer.Option(None, "--epochs", "-e", help="Epochs per run (default 1000)."),
    dim: Optional[int] = typer.Option(None, "--dim", "-d", help="Fock-space truncation (default 32)."),
    points: Optional[int] = typer.Option(None, "--points", help="Grid points per axis (default 20)."),
    zeta: Optional[float] = typer.Option(None, "--zeta", help="Mixing strength (default 0.2)."),
    seed: Optional[int] = typer.Option(None, "--seed", "-s", help="Master seed."),
):
    """Compare MLE and GAN fidelity curves on a noisy scenario."""
    with exit_on_error():
        cfg = load_config(require_file(config, "benchmark config"), BenchmarkConfig) if config else BenchmarkConfig()
        overrides = {"runs": runs, "epochs": epochs, "dim": dim, "zeta": zeta, "seed": seed}
        data = {**cfg.model_dump(), **{k: v for k, v in overrides.items() if v is not None}}
        if points is not None:
            data["grid"] = {**data["grid"], "points": points}
        cfg = BenchmarkConfig(**data)

        info(f"{cfg.runs} run(s) × {cfg.epochs} epochs, {cfg.family} {cfg.params}, dim {cfg.dim}, zeta {cfg.zeta}")
        report = run_benchmark(cfg)
        with atomic_output_dir(out) as staging:
            write_benchmark(report, staging)

    print_benchmark_table(report)
    for method, summary in report.methods.items():
        for failure in summary["failures"]:
            warning(f"{method} run {failure['run']} failed: {failure['error']}: {failure['message']}")
    success(f"Wrote benchmark to {out}")
