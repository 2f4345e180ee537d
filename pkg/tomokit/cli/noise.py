"""
tomokit noise — apply state-preparation noise and/or the image noise pipeline.

Works on a measurement directory (from `tomokit measure`) or a dataset
directory (from `tomokit generate`).

Usage examples:
    tomokit noise m/ --out m_noisy/
    tomokit noise m/ --config noise.json --seed 3 --out m_noisy/
    tomokit noise m/ --demo-exaggerated --out demo/
    tomokit noise dataset/ --no-images --out dataset_noisy/
"""

from pathlib import Path
from typing import Optional

import typer

from tomokit.cli.common import exit_on_error, require_file
from tomokit.cli.measure import (
    EXPECTATION_FILE, OPERATORS_FILE, PREVIEW_FILE, STATE_FILE, write_measurement,
)
from tomokit.config import NoiseConfig, default_noise_config, load_config
from tomokit.core.dataset import MANIFEST_FILE as DATASET_MANIFEST
from tomokit.core.dataset import build_record, load_dataset, write_dataset_files
from tomokit.core.measurement import (
    MeasurementKind, expectation, from_descriptor, husimi_operators,
)
from tomokit.core.noise import (
    MIX_STAGE, PhaseSpaceImage, apply_state_noise, exaggerated_noise_config,
    pipeline_stages, stage_seeds,
)
from tomokit.core.quantum import DensityMatrix
from tomokit.errors import WrongKind
from tomokit.utils.display import info, success
from tomokit.utils.io import (
    atomic_output_dir, read_csv_column, read_json, read_matrix, write_json, write_matrix, write_pgm,
)
from tomokit.utils.rng import derive_seed

PROVENANCE_FILE = "noise_manifest.json"


def _resolve_config(config, seed, demo):
    if demo:
        cfg = exaggerated_noise_config()
    elif config is not None:
        cfg = load_config(require_file(config, "noise config"), NoiseConfig)
    else:
        cfg = default_noise_config()
    if seed is not None:
        cfg = cfg.model_copy(update={"seed": seed})
    return NoiseConfig(**cfg.model_dump())


def _provenance(source, cfg, states, images):
    return {
        "source": str(source),
        "config": cfg.model_dump(mode="json"),
        "states": states,
        "images": images,
        "mix_seed": derive_seed(cfg.seed, MIX_STAGE),
        "stage_seeds": stage_seeds(cfg),
    }


def _noise_measurement(source, out, cfg, states, images, demo):
    mset = from_descriptor(read_json(require_file(source / OPERATORS_FILE, "operators file")))
    values = read_csv_column(require_file(source / EXPECTATION_FILE, "expectation file"), "value")
    rho = None
    if (source / STATE_FILE).exists():
        rho = DensityMatrix(read_matrix(source / STATE_FILE))
        if states:
            rho = apply_state_noise(rho, cfg)
            values = expectation(rho, mset).values

    stages = None
    if images:
        if mset.kind is not MeasurementKind.HUSIMI:
            raise WrongKind("the image pipeline needs Husimi-grid measurements")
        img = PhaseSpaceImage(values.reshape(mset.grid_shape), mset.xgrid, mset.pgrid)
        stages = pipeline_stages(img, cfg)
        values = stages["salt_pepper"].pixels.ravel()

    with atomic_output_dir(out) as staging:
        write_measurement(staging, mset, values)
        if rho is not None:
            write_matrix(staging / STATE_FILE, rho.matrix)
        if mset.kind is MeasurementKind.HUSIMI:
            write_pgm(staging / PREVIEW_FILE, values.reshape(mset.grid_shape))
        if demo and stages is not None:
            for name, stage in stages.items():
                write_pgm(staging / f"stage_{name}.pgm", stage.pixels)
        write_json(staging / PROVENANCE_FILE, _provenance(source, cfg, states, images))
    return len(values)


def _noise_dataset(source, out, cfg, states, images):
    manifest, records = load_dataset(source)
    if not states:
        cfg = cfg.model_copy(update={"zeta": 0.0})
    mset = None
    grid = manifest.grid
    if images and grid is not None:
        mset = husimi_operators(manifest.dim, grid.xgrid(), grid.pgrid())
    rebuilt = [
        build_record(r.index, r.label, manifest.dim, mset, cfg, r.seed, r.split) for r in records
    ]
    new_manifest = manifest.model_copy(update={"noise": cfg})
    with atomic_output_dir(out) as staging:
        write_dataset_files(staging, new_manifest, rebuilt)
        write_json(staging / PROVENANCE_FILE, _provenance(source, cfg, states, images))
    return len(rebuilt)


def noise_command(
    source: Path = typer.Argument(..., help="Measurement or dataset directory."),
    out: Path = typer.Option(..., "--out", "-o", help="Output directory."),
    config: Optional[Path] = typer.Option(None, "--config", "-c", help="NoiseConfig JSON (default: shipped defaults)."),
    seed: Optional[int] = typer.Option(None, "--seed", "-s", help="Override the config seed."),
    states: bool = typer.Option(True, "--states/--no-states", help="Apply state-preparation mixing."),
    images: bool = typer.Option(True, "--images/--no-images", help="Apply the image pipeline."),
    demo: bool = typer.Option(False, "--demo-exaggerated", help="Use exaggerated demo parameters and write per-stage previews."),
):
    """Apply noise to measurement data or a dataset."""
    with exit_on_error():
        cfg = _resolve_config(config, seed, demo)
        if (source / DATASET_MANIFEST).exists() and not (source / OPERATORS_FILE).exists():
            count = _noise_dataset(source, out, cfg, states, images)
            what = "record(s)"
        else:
            count = _noise_measurement(source, out, cfg, states, images, demo)
            what = "outcome(s)"

    info(f"zeta={cfg.zeta}, nth={cfg.nth_conv}, rotation=±{cfg.rotation_deg}°, seed={cfg.seed}")
    success(f"Wrote {count} noisy {what} to {out}")
