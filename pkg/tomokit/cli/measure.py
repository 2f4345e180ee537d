"""
tomokit measure — Born-rule measurement data for one state.

Usage examples:
    tomokit measure --family coherent --param alpha_re=1 --param alpha_im=0 --dim 32 --out m/
    tomokit measure dataset/ --index 3 --which noisy --basis number --shots 100 --seed 1 --out m/
    tomokit measure rec/rho.bin --points 16 --out m/
"""

from pathlib import Path
from typing import Optional

import typer

from tomokit.cli.common import exit_on_error, load_state_file, parse_params, parse_range
from tomokit.config import GridConfig
from tomokit.core.dataset import MANIFEST_FILE, load_dataset
from tomokit.core.measurement import (
    MeasurementKind, expectation, husimi_image, measurement_operators, sample_counts, to_descriptor,
)
from tomokit.core.states import StateFamily, StateLabel
from tomokit.errors import DimensionMismatch, IndexOutOfRange, InvalidInput
from tomokit.utils.display import info, success, warning
from tomokit.utils.io import atomic_output_dir, fmt, write_csv, write_json, write_matrix, write_pgm

EXPECTATION_FILE = "expectation.csv"
COUNTS_FILE = "counts.csv"
PREVIEW_FILE = "preview.pgm"
OPERATORS_FILE = "operators.json"
STATE_FILE = "rho.bin"


def _load_state(source, family, param, dim, index, which):
    if source is None:
        if family is None:
            raise InvalidInput("give a state source or --family")
        return StateLabel(family=family, params=parse_params(param)).build(dim or 32)

    source = Path(source)
    if source.is_dir() and (source / MANIFEST_FILE).exists():
        _, records = load_dataset(source)
        if not 0 <= index < len(records):
            raise IndexOutOfRange(f"record {index} outside 0..{len(records) - 1}")
        record = records[index]
        rho = record.noisy_dm if which == "noisy" else record.clean_dm
    else:
        rho = load_state_file(source)
    if dim is not None and dim != rho.dim:
        raise DimensionMismatch(f"--dim {dim} does not match the state's dim {rho.dim}")
    return rho


def _header(mset):
    comments = [f"kind={mset.kind.value}", f"dim={mset.dim}"]
    if mset.kind is MeasurementKind.HUSIMI:
        comments += [
            f"x={fmt(mset.xgrid[0])}:{fmt(mset.xgrid[-1])}:{len(mset.xgrid)}",
            f"p={fmt(mset.pgrid[0])}:{fmt(mset.pgrid[-1])}:{len(mset.pgrid)}",
            f"cell_area={fmt(mset.cell_area)}",
        ]
    return comments


def _outcome_columns(mset, k):
    if mset.kind is MeasurementKind.HUSIMI:
        nx = len(mset.xgrid)
        return [fmt(mset.xgrid[k % nx]), fmt(mset.pgrid[k // nx])]
    return [k]


def write_measurement(out_dir, mset, values, counts=None):
    """expectation.csv (+ counts.csv) and operators.json for one measurement."""
    cols = ["k", "x", "p"] if mset.kind is MeasurementKind.HUSIMI else ["k", "n"]
    header = (_header(mset), cols + ["value"])
    rows = [[k, *_outcome_columns(mset, k), fmt(v)] for k, v in enumerate(values)]
    write_csv(out_dir / EXPECTATION_FILE, header, rows)
    if counts is not None:
        count_header = (_header(mset) + [f"shots={counts.shots}"], cols + ["count"])
        count_rows = [[k, *_outcome_columns(mset, k), int(c)] for k, c in enumerate(counts.counts)]
        write_csv(out_dir / COUNTS_FILE, count_header, count_rows)
    write_json(out_dir / OPERATORS_FILE, to_descriptor(mset))


def measure_command(
    source: Optional[Path] = typer.Argument(None, help="Dataset directory or rho.bin state file."),
    family: Optional[StateFamily] = typer.Option(None, "--family", "-f", help="Inline state family."),
    param: Optional[list[str]] = typer.Option(None, "--param", "-p", help="Inline state parameter KEY=VALUE."),
    dim: Optional[int] = typer.Option(None, "--dim", "-d", help="Fock-space truncation (inline states)."),
    index: int = typer.Option(0, "--index", help="Record index in a dataset."),
    which: str = typer.Option("noisy", "--which", help="Dataset state to use: clean or noisy."),
    basis: str = typer.Option("husimi", "--basis", "-b", help="husimi or number."),
    points: int = typer.Option(20, "--points", help="Grid points per axis."),
    x_range: str = typer.Option("-5:5", "--x-range", help="x range LOW:HIGH."),
    p_range: str = typer.Option("-5:5", "--p-range", help="p range LOW:HIGH."),
    shots: Optional[int] = typer.Option(None, "--shots", help="Sample this many outcomes."),
    seed: int = typer.Option(0, "--seed", "-s", help="Sampling seed."),
    out: Path = typer.Option(..., "--out", "-o", help="Output directory."),
):
    """Compute expectation values (and optional counts) for a state."""
    with exit_on_error():
        if which not in ("clean", "noisy"):
            raise InvalidInput(f"--which must be clean or noisy, got '{which}'")
        rho = _load_state(source, family, param, dim, index, which)
        if rho.truncation_warning:
            warning(f"state lost {rho.discarded_weight:.2e} of its weight to truncation")

        kind = "husimi-q" if basis.lower().startswith("husimi") else basis
        grid = GridConfig(x_range=parse_range(x_range), p_range=parse_range(p_range), points=points)
        mset = measurement_operators(rho.dim, kind, xgrid=grid.xgrid(), pgrid=grid.pgrid())
        values = expectation(rho, mset).values
        counts = sample_counts(values, shots, seed) if shots is not None else None

        with atomic_output_dir(out) as staging:
            write_measurement(staging, mset, values, counts)
            write_matrix(staging / STATE_FILE, rho.matrix)
            if mset.kind is MeasurementKind.HUSIMI:
                write_pgm(staging / PREVIEW_FILE, husimi_image(rho, mset).pixels)

    info(f"{len(mset)} outcomes, {mset.kind.value} basis, dim {rho.dim}")
    if counts is not None:
        info(f"Sampled {counts.shots} shots (seed {seed})")
    success(f"Wrote measurement data to {out}")
