"""
Dataset — seeded generation of labelled states with noisy Husimi images, and
the on-disk directory format.

Directory layout:
    manifest.json   counts, grid, noise config, seed, split sizes, ranges
    records.bin     per record, little-endian:
                      u64 meta length, UTF-8 meta JSON
                      u64 count, count × f8 clean ρ (re, im interleaved)
                      u64 count, count × f8 noisy ρ (re, im interleaved)
                      u64 count, count × f8 image pixels (count may be 0)
                      u32 CRC-32 of the bytes above
"""

import json
import struct
import zlib
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np
from pydantic import BaseModel, Field
from rich.progress import BarColumn, MofNCompleteColumn, Progress, SpinnerColumn, TextColumn, TimeElapsedColumn

from tomokit.config import GridConfig, NoiseConfig
from tomokit.core.measurement import husimi_image, husimi_operators
from tomokit.core.noise import PhaseSpaceImage, apply_pipeline, apply_state_noise
from tomokit.core.quantum import DensityMatrix
from tomokit.core.states import RANGE_NOTES, BatchSpec, StateFamily, StateLabel, default_ranges, draw_label
from tomokit.errors import ChecksumMismatch, FormatVersionMismatch, IoError, TomokitError
from tomokit.utils.io import atomic_output_dir, write_csv, write_json
from tomokit.utils.parallel import parallel_map, worker_count
from tomokit.utils.rng import derive_seed, substream

FORMAT_VERSION = 1
MANIFEST_FILE = "manifest.json"
RECORDS_FILE = "records.bin"

# The seven labelled classes; random mixed states are noise, not a class
DATASET_FAMILIES = (
    StateFamily.FOCK, StateFamily.COHERENT, StateFamily.THERMAL, StateFamily.CAT,
    StateFamily.BINOMIAL, StateFamily.NUM, StateFamily.GKP,
)

# Substream prefixes under the dataset seed
LABEL_KEY, SPLIT_KEY, RECORD_KEY = 0, 1, 2


class Split(str, Enum):
    TRAIN = "train"
    TEST = "test"


@dataclass(frozen=True, eq=False)
class DatasetRecord:
    index: int
    label: StateLabel
    clean_dm: DensityMatrix
    noisy_dm: DensityMatrix
    image: Optional[PhaseSpaceImage]
    split: Split
    seed: int


class DatasetManifest(BaseModel):
    format_version: int = FORMAT_VERSION
    n_records: int
    dim: int
    grid: Optional[GridConfig] = None
    noise: Optional[NoiseConfig] = None
    seed: int
    split_sizes: dict[str, int] = Field(default_factory=dict)
    family_counts: dict[str, int] = Field(default_factory=dict)
    ranges: dict[str, dict[str, tuple[float, float]]] = Field(default_factory=dict)
    range_notes: dict[str, str] = Field(default_factory=dict)


# --- Generation ---

def record_seed(seed, index):
    return derive_seed(seed, RECORD_KEY, index)


def build_record(index, label, dim, mset, cfg, seed, split=Split.TRAIN):
    """Clean state, noisy state and noisy image for one label.

    Noise seeds derive from the record seed, so a record is reproducible from
    (label, seed) alone.
    """
    try:
        clean = label.build(dim)
        if cfg is None:
            return DatasetRecord(index, label, clean, clean, None, Split(split), seed)
        rec_cfg = cfg.model_copy(update={"seed": seed})
        noisy = apply_state_noise(clean, rec_cfg)
        image = apply_pipeline(husimi_image(noisy, mset), rec_cfg) if mset is not None else None
    except TomokitError as exc:
        raise type(exc)(f"record {index} ({label.family.value}): {exc}") from exc
    return DatasetRecord(index, label, clean, noisy, image, Split(split), seed)


def _assign_splits(seed, family_index, count, test_fraction):
    n_test = int(np.floor(count * test_fraction + 0.5))
    order = substream(seed, SPLIT_KEY, family_index).permutation(count)
    splits = [Split.TRAIN] * count
    for j in order[:n_test]:
        splits[int(j)] = Split.TEST
    return splits


def _build_all(jobs, build, show_progress, description, workers):
    workers = worker_count() if workers is None else workers
    chunk = max(1, workers * 8)
    records = []
    if not show_progress:
        return parallel_map(build, jobs, workers=workers)
    with Progress(
        SpinnerColumn(),
        TextColumn("[bold blue]{task.description}"),
        BarColumn(),
        MofNCompleteColumn(),
        TimeElapsedColumn(),
    ) as progress:
        task = progress.add_task(description, total=len(jobs))
        for start in range(0, len(jobs), chunk):
            part = jobs[start:start + chunk]
            records.extend(parallel_map(build, part, workers=workers))
            progress.advance(task, len(part))
    return records


def _manifest(records, dim, grid, cfg, seed, ranges):
    split_sizes = {s.value: 0 for s in Split}
    family_counts = {}
    for rec in records:
        split_sizes[rec.split.value] += 1
        fam = rec.label.family.value
        family_counts[fam] = family_counts.get(fam, 0) + 1
    return DatasetManifest(
        n_records=len(records), dim=dim, grid=grid, noise=cfg, seed=seed,
        split_sizes=split_sizes, family_counts=family_counts, ranges=ranges,
        range_notes={
            f.value: note for f, note in RANGE_NOTES.items() if f.value in ranges
        },
    )


def standard_dataset(dim=32, grid=None, cfg=None, seed=0, per_family=1000,
                     test_fraction=0.2, families=DATASET_FAMILIES,
                     show_progress=False, workers=None):
    """per_family records for each family, split train/test per family.

    Returns (manifest, records), records ordered family by family.
    """
    grid = grid or GridConfig()
    cfg = cfg or NoiseConfig()
    mset = husimi_operators(dim, grid.xgrid(), grid.pgrid())

    jobs = []
    for fi, family in enumerate(families):
        spec = BatchSpec(family=family)
        splits = _assign_splits(seed, fi, per_family, test_fraction)
        for j in range(per_family):
            index = fi * per_family + j
            label = draw_label(spec, dim, substream(seed, LABEL_KEY, fi, j))
            jobs.append((index, label, splits[j]))

    def build(job):
        index, label, split = job
        return build_record(index, label, dim, mset, cfg, record_seed(seed, index), split)

    records = _build_all(jobs, build, show_progress, "Generating states...", workers)
    ranges = {
        StateFamily(f).value: {k: tuple(map(float, v)) for k, v in default_ranges(f).items()}
        for f in families
    }
    return _manifest(records, dim, grid, cfg, seed, ranges), records


def batch_dataset(batch, dim, spec=None):
    """Dataset view of a StateBatch: clean states only, no noise or images."""
    records = [
        DatasetRecord(i, label, rho, rho, None, Split.TRAIN, record_seed(batch.seed, i))
        for i, (label, rho) in enumerate(zip(batch.labels, batch.states))
    ]
    ranges = {}
    if spec is not None:
        merged = default_ranges(spec.family)
        merged.update(spec.ranges)
        ranges = {spec.family.value: {k: tuple(map(float, v)) for k, v in merged.items()}}
    return _manifest(records, dim, None, None, batch.seed, ranges), records


def replay_record(record, manifest):
    """Recompute a record from its label and stored seed."""
    mset = None
    if manifest.grid is not None:
        mset = husimi_operators(manifest.dim, manifest.grid.xgrid(), manifest.grid.pgrid())
    return build_record(record.index, record.label, manifest.dim, mset, manifest.noise, record.seed, record.split)


# --- Serialization ---

def _floats(arr):
    arr = np.ascontiguousarray(arr)
    if np.iscomplexobj(arr):
        arr = arr.astype(complex).view(np.float64)
    return np.asarray(arr, dtype="<f8").ravel()


def encode_record(record):
    meta = {
        "index": record.index,
        "label": record.label.model_dump(mode="json"),
        "split": record.split.value,
        "seed": record.seed,
        "discarded_weight": record.clean_dm.discarded_weight,
        "truncation_warning": record.clean_dm.truncation_warning,
    }
    meta_bytes = json.dumps(meta, sort_keys=True).encode("utf-8")
    parts = [struct.pack("<Q", len(meta_bytes)), meta_bytes]
    image = record.image.pixels if record.image is not None else np.zeros(0)
    for payload in (record.clean_dm.matrix, record.noisy_dm.matrix, image):
        values = _floats(payload)
        parts.append(struct.pack("<Q", values.size))
        parts.append(values.tobytes())
    body = b"".join(parts)
    return body + struct.pack("<I", zlib.crc32(body))


class RecordReader:
    """Sequential reader over records.bin with bounds and CRC checks."""

    def __init__(self, raw, manifest):
        self.raw = raw
        self.pos = 0
        self.manifest = manifest

    def _take(self, n, what):
        if self.pos + n > len(self.raw):
            raise ChecksumMismatch(f"records file truncated while reading {what} at byte {self.pos}")
        chunk = self.raw[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def _u64(self, what):
        return struct.unpack("<Q", self._take(8, what))[0]

    def _block(self, what):
        count = self._u64(what)
        return np.frombuffer(self._take(8 * count, what), dtype="<f8").astype(np.float64)

    def _matrix(self, values, what):
        dim = self.manifest.dim
        if values.size != 2 * dim * dim:
            raise ChecksumMismatch(f"{what} has {values.size} values, expected {2 * dim * dim}")
        return values.view(complex).reshape(dim, dim)

    def next_record(self):
        start = self.pos
        meta_bytes = self._take(self._u64("meta length"), "meta")
        clean = self._block("clean state")
        noisy = self._block("noisy state")
        image = self._block("image")
        body = self.raw[start:self.pos]
        (crc,) = struct.unpack("<I", self._take(4, "checksum"))
        if crc != zlib.crc32(body):
            raise ChecksumMismatch(f"record at byte {start} failed its CRC-32 check")
        meta = json.loads(meta_bytes.decode("utf-8"))

        grid = self.manifest.grid
        pixels = None
        if image.size:
            if grid is None or image.size != grid.points * grid.points:
                raise ChecksumMismatch(f"record {meta['index']} image size {image.size} does not match the grid")
            pixels = PhaseSpaceImage(image.reshape(grid.points, grid.points), grid.xgrid(), grid.pgrid())

        clean_dm = DensityMatrix(
            self._matrix(clean, "clean state"),
            discarded_weight=meta["discarded_weight"],
            truncation_warning=meta["truncation_warning"],
        )
        return DatasetRecord(
            index=meta["index"],
            label=StateLabel(**meta["label"]),
            clean_dm=clean_dm,
            noisy_dm=DensityMatrix(self._matrix(noisy, "noisy state")),
            image=pixels,
            split=Split(meta["split"]),
            seed=meta["seed"],
        )

    def at_end(self):
        return self.pos == len(self.raw)


def write_dataset_files(directory, manifest, records):
    """manifest.json and records.bin into an existing (staging) directory."""
    directory = Path(directory)
    write_json(directory / MANIFEST_FILE, manifest.model_dump(mode="json"))
    with open(directory / RECORDS_FILE, "wb") as fh:
        for record in records:
            fh.write(encode_record(record))


def save_dataset(manifest, records, path):
    """Write the dataset directory atomically."""
    with atomic_output_dir(path) as staging:
        write_dataset_files(staging, manifest, records)


def load_manifest(path):
    """Read only manifest.json."""
    path = Path(path) / MANIFEST_FILE
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise IoError(f"no dataset manifest at {path}") from exc
    except (OSError, ValueError) as exc:
        raise IoError(f"cannot read dataset manifest {path}: {exc}") from exc
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise FormatVersionMismatch(f"dataset format {version}, this build reads {FORMAT_VERSION}")
    return DatasetManifest(**doc)


def load_dataset(path):
    manifest = load_manifest(path)
    try:
        raw = (Path(path) / RECORDS_FILE).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {RECORDS_FILE} in {path}: {exc}") from exc

    reader = RecordReader(raw, manifest)
    records = [reader.next_record() for _ in range(manifest.n_records)]
    if not reader.at_end():
        raise ChecksumMismatch(f"{len(raw) - reader.pos} trailing bytes after {manifest.n_records} records")
    return manifest, records


def export_labels_csv(records, path):
    """index, family, split, seed, params (JSON) per record."""
    rows = [
        [r.index, r.label.family.value, r.split.value, r.seed, json.dumps(r.label.params, sort_keys=True)]
        for r in records
    ]
    write_csv(path, ["index", "family", "split", "seed", "params"], rows)
