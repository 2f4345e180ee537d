import json

import numpy as np
import pytest

from tomokit.config import GridConfig, NoiseConfig
from tomokit.core.dataset import (
    DATASET_FAMILIES, MANIFEST_FILE, RECORDS_FILE, Split, batch_dataset, export_labels_csv,
    load_dataset, load_manifest, replay_record, save_dataset, standard_dataset,
)
from tomokit.core.states import BatchSpec, StateFamily, generate_batch
from tomokit.errors import ChecksumMismatch, FormatVersionMismatch, IoError

from conftest import assert_valid_dm


@pytest.fixture(scope="module")
def mini():
    return standard_dataset(dim=16, grid=GridConfig(points=8), seed=3, per_family=4)


def test_standard_dataset_counts_and_splits(mini):
    manifest, records = mini
    assert manifest.n_records == len(records) == 28
    assert manifest.family_counts == {f.value: 4 for f in DATASET_FAMILIES}
    assert manifest.split_sizes == {"train": 21, "test": 7}
    for fi, family in enumerate(DATASET_FAMILIES):
        mine = records[fi * 4:(fi + 1) * 4]
        assert all(r.label.family is family for r in mine)
        assert sum(r.split is Split.TEST for r in mine) == 1
    assert [r.index for r in records] == list(range(28))


def test_standard_dataset_records_are_physical(mini):
    _, records = mini
    for rec in records:
        assert_valid_dm(rec.clean_dm)
        assert_valid_dm(rec.noisy_dm)
        assert rec.image.shape == (8, 8)
        assert np.all(rec.image.pixels >= 0)


def test_standard_dataset_ranges_are_recorded(mini):
    manifest, _ = mini
    assert manifest.ranges["cat"]["alpha_magnitude"] == (0.0, 3.0)
    assert manifest.ranges["gkp"]["delta"] == (0.25, 0.45)
    assert "truncation_warning" in manifest.range_notes["gkp"]
    assert "cat" not in manifest.range_notes
    assert manifest.noise == NoiseConfig()


def test_standard_dataset_is_independent_of_worker_count(mini):
    _, records = mini
    _, serial = standard_dataset(dim=16, grid=GridConfig(points=8), seed=3, per_family=4, workers=1)
    for a, b in zip(records, serial):
        assert a.label == b.label
        np.testing.assert_array_equal(a.noisy_dm.matrix, b.noisy_dm.matrix)
        np.testing.assert_array_equal(a.image.pixels, b.image.pixels)


def test_save_load_round_trip(tmp_path, mini):
    manifest, records = mini
    save_dataset(manifest, records, tmp_path / "ds")
    loaded_manifest, loaded = load_dataset(tmp_path / "ds")
    assert loaded_manifest == manifest
    for a, b in zip(records, loaded):
        assert (a.index, a.label, a.split, a.seed) == (b.index, b.label, b.split, b.seed)
        np.testing.assert_array_equal(a.clean_dm.matrix, b.clean_dm.matrix)
        np.testing.assert_array_equal(a.noisy_dm.matrix, b.noisy_dm.matrix)
        np.testing.assert_array_equal(a.image.pixels, b.image.pixels)
        assert a.clean_dm.truncation_warning == b.clean_dm.truncation_warning


def test_regeneration_is_byte_identical(tmp_path):
    for name in ("a", "b"):
        manifest, records = standard_dataset(
            dim=16, grid=GridConfig(points=6), seed=9, per_family=2, families=(StateFamily.FOCK, StateFamily.CAT),
        )
        save_dataset(manifest, records, tmp_path / name)
    for filename in (MANIFEST_FILE, RECORDS_FILE):
        assert (tmp_path / "a" / filename).read_bytes() == (tmp_path / "b" / filename).read_bytes()


def test_replay_reproduces_records(mini):
    manifest, records = mini
    for rec in records[::3]:
        again = replay_record(rec, manifest)
        np.testing.assert_allclose(again.noisy_dm.matrix, rec.noisy_dm.matrix, atol=1e-12)
        np.testing.assert_allclose(again.image.pixels, rec.image.pixels, atol=1e-12)


def test_truncated_records_fail_checksum(tmp_path, mini):
    manifest, records = mini
    save_dataset(manifest, records, tmp_path / "ds")
    path = tmp_path / "ds" / RECORDS_FILE
    path.write_bytes(path.read_bytes()[:-10])
    with pytest.raises(ChecksumMismatch):
        load_dataset(tmp_path / "ds")


def test_corrupted_byte_fails_checksum(tmp_path, mini):
    manifest, records = mini
    save_dataset(manifest, records, tmp_path / "ds")
    path = tmp_path / "ds" / RECORDS_FILE
    raw = bytearray(path.read_bytes())
    raw[len(raw) // 2] ^= 0xFF
    path.write_bytes(bytes(raw))
    with pytest.raises(ChecksumMismatch):
        load_dataset(tmp_path / "ds")


def test_format_version_is_checked(tmp_path, mini):
    manifest, records = mini
    save_dataset(manifest, records, tmp_path / "ds")
    path = tmp_path / "ds" / MANIFEST_FILE
    doc = json.loads(path.read_text())
    doc["format_version"] = 99
    path.write_text(json.dumps(doc))
    with pytest.raises(FormatVersionMismatch):
        load_manifest(tmp_path / "ds")


def test_manifest_reads_without_records(tmp_path, mini):
    manifest, records = mini
    save_dataset(manifest, records, tmp_path / "ds")
    (tmp_path / "ds" / RECORDS_FILE).unlink()
    assert load_manifest(tmp_path / "ds").family_counts["gkp"] == 4
    with pytest.raises(IoError):
        load_dataset(tmp_path / "ds")


def test_missing_dataset_directory(tmp_path):
    with pytest.raises(IoError):
        load_manifest(tmp_path / "nowhere")


def test_batch_dataset_round_trip(tmp_path):
    spec = BatchSpec(family=StateFamily.COHERENT, ranges={"alpha_magnitude": (0.5, 1.0)})
    batch = generate_batch(spec, 5, 8, seed=2)
    manifest, records = batch_dataset(batch, 8, spec)
    assert manifest.grid is None and manifest.noise is None
    assert manifest.ranges["coherent"]["alpha_magnitude"] == (0.5, 1.0)
    save_dataset(manifest, records, tmp_path / "b")
    _, loaded = load_dataset(tmp_path / "b")
    assert all(r.image is None for r in loaded)
    np.testing.assert_array_equal(loaded[4].clean_dm.matrix, batch.states[4].matrix)


def test_export_labels_csv(tmp_path, mini):
    _, records = mini
    export_labels_csv(records, tmp_path / "labels.csv")
    lines = (tmp_path / "labels.csv").read_text().splitlines()
    assert lines[0] == "index,family,split,seed,params"
    assert len(lines) == 29
    assert lines[1].split(",")[1] == "fock"


@pytest.mark.slow
def test_full_standard_dataset():
    manifest, records = standard_dataset(seed=0)
    assert manifest.n_records == 7000
    assert manifest.split_sizes == {"train": 5600, "test": 1400}
    for family in DATASET_FAMILIES:
        mine = [r for r in records if r.label.family is family]
        assert len(mine) == 1000
        assert sum(r.split is Split.TEST for r in mine) == 200
