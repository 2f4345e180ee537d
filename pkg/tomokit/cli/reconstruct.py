"""
tomokit reconstruct — recover a density matrix from measurement data.

Usage examples:
    tomokit reconstruct mle --data m/expectation.csv --operators m/operators.json --reference m/rho.bin --out r/
    tomokit reconstruct gan --data m/expectation.csv --operators m/operators.json --epochs 1000 --out r/
"""

from enum import Enum
from pathlib import Path
from typing import Optional

import typer

from tomokit.cli.common import exit_on_error, load_state_file, require_file
from tomokit.config import GANConfig, InitKind, MLEConfig, load_config
from tomokit.core.gan import gan_reconstruct
from tomokit.core.measurement import from_descriptor
from tomokit.core.mle import mle_reconstruct
from tomokit.core.result import save_result
from tomokit.errors import IoError, LengthMismatch
from tomokit.utils.display import info, success
from tomokit.utils.io import atomic_output_dir, read_csv_column, read_json

DATA_COLUMNS = ("count", "value")


class Method(str, Enum):
    MLE = "mle"
    GAN = "gan"


def _read_data(path):
    path = require_file(path, "data file")
    for column in DATA_COLUMNS:
        try:
            return read_csv_column(path, column)
        except IoError:
            continue
    raise IoError(f"{path} has none of the columns {DATA_COLUMNS}")


def _solver_config(method, config, epochs, seed):
    cls = MLEConfig if method is Method.MLE else GANConfig
    cfg = load_config(require_file(config, "solver config"), cls) if config else cls()
    update = {}
    if epochs is not None:
        update["max_epochs" if method is Method.MLE else "epochs"] = epochs
    if seed is not None:
        update["seed"] = seed
    return cls(**{**cfg.model_dump(), **update})


def reconstruct_command(
    method: Method = typer.Argument(..., help="mle or gan."),
    data: Path = typer.Option(..., "--data", help="expectation.csv or counts.csv."),
    operators: Path = typer.Option(..., "--operators", help="operators.json describing the measurement set."),
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="MLEConfig / GANConfig JSON."),
    reference: Optional[Path] = typer.Option(None, "--reference", help="rho.bin of the true state, for fidelity."),
    warm_start: Optional[Path] = typer.Option(None, "--warm-start", help="rho.bin initial guess (mle only)."),
    epochs: Optional[int] = typer.Option(None, "--epochs", "-e", help="Override the epoch budget."),
    seed: Optional[int] = typer.Option(None, "--seed", "-s", help="Override the solver seed."),
    out: Path = typer.Option(..., "--out", "-o", help="Output directory."),
):
    """Run MLE or adversarial reconstruction."""
    with exit_on_error():
        mset = from_descriptor(read_json(require_file(operators, "operators file")))
        values = _read_data(data)
        if values.size != len(mset):
            raise LengthMismatch(f"{values.size} data values for {len(mset)} operators")
        ref = load_state_file(reference) if reference else None
        cfg = _solver_config(method, config, epochs, seed)

        info(f"Reconstructing with {method.value.upper()} on {len(mset)} outcomes at dim {mset.dim}")
        if method is Method.MLE:
            start = load_state_file(warm_start) if warm_start else None
            if start is not None:
                cfg = cfg.model_copy(update={"init": InitKind.WARM_START})
            result = mle_reconstruct(values, mset, cfg, reference=ref, warm_start=start)
        else:
            result = gan_reconstruct(values, mset, cfg, reference=ref)

        with atomic_output_dir(out) as staging:
            save_result(result, staging)

    if result.final_fidelity is not None:
        success(f"Final fidelity: {result.final_fidelity:.4f}")
    if result.converged_epoch is not None:
        info(f"Converged at epoch {result.converged_epoch}")
    success(f"Wrote reconstruction to {out} ({result.wall_time:.1f}s)")
