"""
tomokit generate — generate a batch of states, or the standard labelled dataset.

Usage examples:
    tomokit generate --family cat --alpha-mag 0:10 --n 1000 --dim 32 --seed 7 --out d/
    tomokit generate --family fock --n 1 --param n=2 --dim 4 --out fock2/
    tomokit generate --standard --dim 32 --seed 0 --out standard/
"""

from pathlib import Path
from typing import Optional

import typer

from tomokit.cli.common import batch_spec, exit_on_error, parse_params, parse_range, parse_ranges
from tomokit.config import GridConfig, NoiseConfig, default_noise_config, load_config
from tomokit.core.dataset import (
    Split, batch_dataset, export_labels_csv, standard_dataset, write_dataset_files,
)
from tomokit.core.states import StateFamily, generate_batch
from tomokit.errors import InvalidInput
from tomokit.utils.display import info, print_family_summary, success, warning
from tomokit.utils.io import atomic_output_dir

LABELS_FILE = "labels.csv"


def _family_rows(records):
    rows = {}
    for rec in records:
        fam = rec.label.family.value
        row = rows.setdefault(fam, {"family": fam, "records": 0, "train": 0, "test": 0, "flagged": 0})
        row["records"] += 1
        row["train" if rec.split is Split.TRAIN else "test"] += 1
        row["flagged"] += int(rec.clean_dm.truncation_warning)
    return list(rows.values())


def generate_command(
    family: Optional[StateFamily] = typer.Option(None, "--family", "-f", help="State family to draw from."),
    n: int = typer.Option(1, "--n", "-n", help="Number of states."),
    dim: int = typer.Option(32, "--dim", "-d", help="Fock-space truncation."),
    seed: int = typer.Option(0, "--seed", "-s", help="Master seed."),
    out: Path = typer.Option(..., "--out", "-o", help="Output dataset directory."),
    param: Optional[list[str]] = typer.Option(None, "--param", "-p", help="Fixed parameter KEY=VALUE (repeatable)."),
    range_: Optional[list[str]] = typer.Option(None, "--range", "-r", help="Parameter range KEY=LOW:HIGH (repeatable)."),
    alpha_mag: Optional[str] = typer.Option(None, "--alpha-mag", help="Range LOW:HIGH for |α| (coherent, cat)."),
    standard: bool = typer.Option(False, "--standard", help="Generate the standard seven-family dataset."),
    per_family: int = typer.Option(1000, "--per-family", help="Records per family with --standard."),
    points: int = typer.Option(20, "--points", help="Grid points per axis with --standard."),
    noise_config: Optional[Path] = typer.Option(None, "--noise-config", help="NoiseConfig JSON with --standard."),
    labels: bool = typer.Option(False, "--labels-csv", help="Also write labels.csv."),
):
    """Generate states and write them in the dataset directory format."""
    with exit_on_error():
        if standard:
            cfg = load_config(noise_config, NoiseConfig) if noise_config else default_noise_config()
            info(f"Generating the standard dataset: {per_family} × 7 families at dim {dim}")
            manifest, records = standard_dataset(
                dim=dim, grid=GridConfig(points=points), cfg=cfg, seed=seed,
                per_family=per_family, show_progress=True,
            )
        else:
            if family is None:
                raise InvalidInput("--family is required unless --standard is given")
            ranges = parse_ranges(range_)
            if alpha_mag is not None:
                ranges["alpha_magnitude"] = parse_range(alpha_mag)
            spec = batch_spec(family, parse_params(param), ranges)
            batch = generate_batch(spec, n, dim, seed=seed)
            manifest, records = batch_dataset(batch, dim, spec)

        with atomic_output_dir(out) as staging:
            write_dataset_files(staging, manifest, records)
            if labels:
                export_labels_csv(records, staging / LABELS_FILE)

    rows = _family_rows(records)
    print_family_summary(rows)
    flagged = sum(r["flagged"] for r in rows)
    if flagged:
        warning(f"{flagged} state(s) lost more than the truncation threshold at dim {dim}")
    success(f"Wrote {manifest.n_records} record(s) to {out}")
