import os

import numpy as np
import pytest
from pydantic import ValidationError

from tomokit.config import (
    BenchmarkConfig, GANConfig, GridConfig, MLEConfig, NoiseConfig, default_noise_config,
    load_config, write_config,
)
from tomokit.errors import ChecksumMismatch, IoError
from tomokit.utils.io import (
    atomic_output_dir, read_csv_column, read_matrix, write_csv, write_matrix, write_pgm,
)
from tomokit.utils.parallel import THREADS_ENV, parallel_map, worker_count
from tomokit.utils.rng import derive_seed, substream


# --- Config models ---

def test_noise_defaults():
    cfg = NoiseConfig()
    assert cfg.zeta == 0.2
    assert cfg.nth_conv == 2.0
    assert cfg.rotation_deg == 20.0
    assert cfg.translate_xy == (0.1, 0.1)
    assert cfg.additive_sigma == 0.01
    assert cfg.salt_prop == 0.0
    assert cfg.pepper_prop == 0.1
    assert default_noise_config() == cfg


@pytest.mark.parametrize("fields", [
    {"salt_prop": 0.6, "pepper_prop": 0.6},
    {"zeta": 1.5},
    {"translate_xy": (1.5, 0.0)},
    {"additive_sigma": -0.1},
])
def test_noise_config_validation(fields):
    with pytest.raises(ValidationError):
        NoiseConfig(**fields)


def test_zero_noise_config():
    cfg = NoiseConfig.zero(seed=4)
    assert cfg.seed == 4
    assert cfg.zeta == cfg.nth_conv == cfg.rotation_deg == cfg.pepper_prop == 0.0


def test_solver_defaults():
    mle = MLEConfig()
    assert (mle.lr, mle.max_epochs, mle.tol_grad) == (0.01, 1000, 1e-7)
    gan = GANConfig()
    assert gan.gen_layers == [512]
    assert gan.disc_layers == [128, 64, 32, 1]
    assert (gan.lr_gen, gan.lr_disc) == (0.001, 0.001)
    assert gan.l1_weight == 0.0


def test_gan_config_needs_scalar_discriminator_output():
    with pytest.raises(ValidationError):
        GANConfig(disc_layers=[64, 2])


def test_grid_config():
    grid = GridConfig(points=5, x_range=(-2.0, 2.0))
    np.testing.assert_allclose(grid.xgrid(), [-2.0, -1.0, 0.0, 1.0, 2.0])
    assert grid.pgrid()[0] == -5.0
    with pytest.raises(ValidationError):
        GridConfig(x_range=(1.0, 1.0))


def test_config_round_trip(tmp_path):
    cfg = BenchmarkConfig(runs=2, grid=GridConfig(points=8), gan=GANConfig(epochs=5))
    write_config(tmp_path / "nested" / "bench.json", cfg)
    assert load_config(tmp_path / "nested" / "bench.json", BenchmarkConfig) == cfg


def test_load_config_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_config(tmp_path / "absent.json", NoiseConfig)


# --- Seeds and workers ---

def test_substreams_are_reproducible_and_independent():
    a = substream(5, 1, 2).standard_normal(4)
    np.testing.assert_array_equal(a, substream(5, 1, 2).standard_normal(4))
    assert not np.array_equal(a, substream(5, 2, 1).standard_normal(4))
    assert derive_seed(5, 0) == derive_seed(5, 0)
    assert derive_seed(5, 0) != derive_seed(5, 1)


def test_worker_count_from_environment(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "3")
    assert worker_count() == 3
    monkeypatch.setenv(THREADS_ENV, "0")
    assert worker_count() == (os.cpu_count() or 1)


def test_parallel_map_keeps_order():
    assert parallel_map(lambda x: x * x, range(20), workers=4) == [x * x for x in range(20)]
    assert parallel_map(lambda x: x + 1, [1, 2], workers=1) == [2, 3]


# --- Files ---

def test_matrix_blob_round_trip(tmp_path):
    m = np.array([[0.5, 0.1 - 0.2j], [0.1 + 0.2j, 0.5]])
    write_matrix(tmp_path / "rho.bin", m)
    np.testing.assert_array_equal(read_matrix(tmp_path / "rho.bin"), m)
    raw = (tmp_path / "rho.bin").read_bytes()
    (tmp_path / "short.bin").write_bytes(raw[:-3])
    with pytest.raises(ChecksumMismatch):
        read_matrix(tmp_path / "short.bin")


def test_csv_with_comment_header(tmp_path):
    path = tmp_path / "data.csv"
    write_csv(path, (["kind=PhotonNumber"], ["k", "value"]), [[0, "0.25"], [1, "0.75"]])
    assert path.read_text().splitlines()[0] == "# kind=PhotonNumber"
    np.testing.assert_array_equal(read_csv_column(path, "value"), [0.25, 0.75])
    with pytest.raises(IoError):
        read_csv_column(path, "count")


def test_pgm_preview(tmp_path):
    write_pgm(tmp_path / "img.pgm", np.array([[0.0, 1.0], [0.5, 0.25]]))
    raw = (tmp_path / "img.pgm").read_bytes()
    assert raw.startswith(b"P5\n2 2\n65535\n")
    assert len(raw) == len(b"P5\n2 2\n65535\n") + 8


def test_atomic_output_dir_leaves_nothing_on_failure(tmp_path):
    target = tmp_path / "out"
    with pytest.raises(RuntimeError):
        with atomic_output_dir(target) as staging:
            (staging / "partial.txt").write_text("x")
            raise RuntimeError("boom")
    assert not target.exists()
    assert list(tmp_path.iterdir()) == []

    with atomic_output_dir(target) as staging:
        (staging / "done.txt").write_text("ok")
    assert (target / "done.txt").read_text() == "ok"
