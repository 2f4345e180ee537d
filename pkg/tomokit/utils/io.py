"""
File helpers — atomic output directories, JSON/CSV writers, binary matrix
blobs and 16-bit PGM previews.
"""

import csv
import json
import shutil
import struct
import tempfile
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from tomokit.errors import ChecksumMismatch, IoError

MATRIX_MAGIC = b"TKRHO001"


@contextmanager
def atomic_output_dir(target):
    """Yield a temp directory next to target; rename it into place on success.

    On any exception the temp directory is removed and target is untouched.
    An existing target is replaced only after the new contents are complete.
    """
    target = Path(target)
    parent = target.resolve().parent
    try:
        parent.mkdir(parents=True, exist_ok=True)
        staging = Path(tempfile.mkdtemp(prefix=f".{target.name}.", dir=parent))
    except OSError as exc:
        raise IoError(f"cannot create output directory under {parent}: {exc}") from exc

    try:
        yield staging
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        raise

    try:
        if target.exists():
            shutil.rmtree(target)
        staging.rename(target)
    except OSError as exc:
        shutil.rmtree(staging, ignore_errors=True)
        raise IoError(f"cannot move output into {target}: {exc}") from exc


def write_json(path, data):
    Path(path).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")


def read_json(path):
    path = Path(path)
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise
    except (OSError, ValueError) as exc:
        raise IoError(f"cannot read JSON from {path}: {exc}") from exc


def write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for line in header_comments(header):
            fh.write(line)
        writer.writerows(rows)


def header_comments(header):
    """Header is either a list of column names or (comment lines, columns)."""
    if isinstance(header, tuple):
        comments, columns = header
        lines = [f"# {c}\n" for c in comments]
    else:
        lines, columns = [], header
    return lines + [",".join(columns) + "\n"]


def read_csv_column(path, column):
    """Float values of one column, skipping '#' comment lines."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    reader = csv.DictReader(lines)
    if reader.fieldnames is None or column not in reader.fieldnames:
        raise IoError(f"{path} has no '{column}' column")
    return np.array([float(row[column]) for row in reader], dtype=float)


def fmt(value):
    """Shortest round-tripping text for a float."""
    return repr(float(value))


# --- Binary density matrices ---

def write_matrix(path, matrix):
    """magic, u64 dim, then little-endian f8 pairs (re, im) in row-major order."""
    matrix = np.asarray(matrix, dtype=complex)
    payload = np.ascontiguousarray(matrix).view(np.float64).astype("<f8").tobytes()
    with open(path, "wb") as fh:
        fh.write(MATRIX_MAGIC)
        fh.write(struct.pack("<Q", matrix.shape[0]))
        fh.write(payload)


def read_matrix(path):
    raw = Path(path).read_bytes()
    head = len(MATRIX_MAGIC) + 8
    if len(raw) < head or raw[:len(MATRIX_MAGIC)] != MATRIX_MAGIC:
        raise ChecksumMismatch(f"{path} is not a density-matrix blob")
    (dim,) = struct.unpack("<Q", raw[len(MATRIX_MAGIC):head])
    if len(raw) != head + 16 * dim * dim:
        raise ChecksumMismatch(f"{path} is truncated: expected {16 * dim * dim} payload bytes")
    values = np.frombuffer(raw[head:], dtype="<f8").astype(np.float64)
    return values.view(complex).reshape(dim, dim)


# --- Previews ---

def write_pgm(path, pixels):
    """16-bit binary PGM normalized to the pixel max; row 0 is the top of the image.

    The raster is flipped vertically so increasing p points up.
    """
    pixels = np.asarray(pixels, dtype=float)
    peak = float(pixels.max()) if pixels.size else 0.0
    scaled = np.zeros_like(pixels) if peak <= 0 else np.clip(pixels, 0.0, None) / peak
    levels = np.rint(scaled * 65535).astype(">u2")[::-1]
    height, width = levels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n65535\n".encode("ascii"))
        fh.write(levels.tobytes())
