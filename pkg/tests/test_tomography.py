import numpy as np
import pytest

from tomokit.config import GANConfig, GridConfig, InitKind, MLEConfig, OptimizerKind
from tomokit.core.gan import discriminator_pretrain_sanity, gan_reconstruct
from tomokit.core.grad import loglik, pack_params
from tomokit.core.measurement import expectation, husimi_operators, sample_counts
from tomokit.core.mle import initial_params, mle_reconstruct
from tomokit.core.quantum import dm_to_cholesky, fidelity
from tomokit.core.result import HISTORY_FILE, MANIFEST_FILE, RHO_FILE, load_result_state, save_result
from tomokit.core.noise import mix_with_random
from tomokit.core.states import cat, coherent, fock, thermal
from tomokit.errors import InvalidInput, LengthMismatch, NonFiniteLoss

from conftest import assert_valid_dm


# --- MLE ---

def test_mle_converges_immediately_on_maximally_mixed_data(number4):
    result = mle_reconstruct(np.full(4, 0.25), number4)
    assert result.converged_epoch == 0
    assert result.epochs_run == 0
    np.testing.assert_allclose(result.reconstructed_dm.matrix, np.eye(4) / 4, atol=1e-12)


def test_mle_initial_params_are_maximally_mixed():
    theta = initial_params(3, MLEConfig())
    np.testing.assert_allclose(theta, pack_params(np.eye(3) / np.sqrt(3)))


def test_mle_recovers_thermal_photon_statistics(number4):
    truth = thermal(4, 0.5)
    data = expectation(truth, number4)
    result = mle_reconstruct(data, number4, MLEConfig(max_epochs=1000), reference=truth)
    assert_valid_dm(result.reconstructed_dm)
    assert result.final_fidelity >= 0.99
    assert fidelity(truth, result.reconstructed_dm) >= 0.99


def test_mle_returns_best_likelihood_iterate(rng, husimi8_small):
    counts = sample_counts(rng.uniform(0.0, 1.0, size=len(husimi8_small)), 500, seed=3)
    result = mle_reconstruct(counts, husimi8_small, MLEConfig(max_epochs=60))
    losses = [loss for _, loss in result.loss_history]
    assert len(losses) == 61
    assert min(losses) <= losses[0]
    assert losses[result.best_epoch] == min(losses)
    final_ll = loglik(dm_to_cholesky(result.reconstructed_dm), counts, husimi8_small)
    assert final_ll >= -losses[0] - 1e-6


def test_mle_records_fidelity_on_schedule(number4):
    truth = thermal(4, 1.0)
    cfg = MLEConfig(max_epochs=25, record_every=10, tol_grad=1e-30)
    result = mle_reconstruct(expectation(truth, number4), number4, cfg, reference=truth)
    assert [e for e, _ in result.fidelity_history] == [0, 10, 20, 25]


def test_mle_sgd_runs(number4):
    cfg = MLEConfig(max_epochs=20, optimizer=OptimizerKind.SGD)
    result = mle_reconstruct(expectation(fock(4, 1), number4), number4, cfg)
    assert_valid_dm(result.reconstructed_dm)


def test_mle_warm_start(number4):
    truth = thermal(4, 0.7)
    cfg = MLEConfig(max_epochs=5, init=InitKind.WARM_START)
    result = mle_reconstruct(expectation(truth, number4), number4, cfg, reference=truth, warm_start=truth)
    assert result.fidelity_history[0][1] == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(InvalidInput):
        mle_reconstruct(expectation(truth, number4), number4, cfg)


def test_mle_rejects_bad_data(number4):
    with pytest.raises(LengthMismatch):
        mle_reconstruct(np.ones(3), number4)
    with pytest.raises(NonFiniteLoss) as info:
        mle_reconstruct(np.array([0.5, np.nan, 0.25, 0.25]), number4)
    assert info.value.epoch == 0


@pytest.mark.slow
def test_mle_reconstructs_coherent_state_from_grid():
    grid = GridConfig()
    mset = husimi_operators(16, grid.xgrid(), grid.pgrid())
    truth = coherent(16, 1.0)
    result = mle_reconstruct(expectation(truth, mset), mset, MLEConfig(max_epochs=2000), reference=truth)
    assert result.final_fidelity >= 0.99


def test_mle_likelihood_rises_across_windows():
    grid = GridConfig(points=10)
    mset = husimi_operators(8, grid.xgrid(), grid.pgrid())
    truth = coherent(8, 0.8)
    cfg = MLEConfig(max_epochs=400, tol_grad=1e-30)
    result = mle_reconstruct(expectation(truth, mset), mset, cfg)
    losses = [loss for _, loss in result.loss_history]
    assert len(losses) == 401
    for epoch in range(len(losses) - 50):
        assert losses[epoch + 50] <= losses[epoch] + 1e-6


@pytest.mark.slow
def test_mle_noise_free_data_is_never_worse():
    grid = GridConfig(points=12)
    mset = husimi_operators(8, grid.xgrid(), grid.pgrid())
    truth = coherent(8, 1.0)
    cfg = MLEConfig(max_epochs=1000)
    clean = mle_reconstruct(expectation(truth, mset), mset, cfg, reference=truth).final_fidelity
    noisy = [
        mle_reconstruct(
            expectation(mix_with_random(truth, 0.2, seed=seed), mset), mset, cfg, reference=truth,
        ).final_fidelity
        for seed in range(5)
    ]
    assert clean >= float(np.median(noisy))


@pytest.mark.slow
@pytest.mark.parametrize(
    "truth",
    [fock(16, 0), fock(16, 2), coherent(16, 1.5), cat(16, 1.5)],
    ids=["fock0", "fock2", "coherent", "cat"],
)
def test_mle_reconstructs_pure_states_from_grid(truth):
    grid = GridConfig()
    mset = husimi_operators(16, grid.xgrid(), grid.pgrid())
    result = mle_reconstruct(expectation(truth, mset), mset, MLEConfig(max_epochs=2000), reference=truth)
    assert result.final_fidelity >= 0.99


# --- GAN ---

def small_gan(**overrides):
    return GANConfig(**{"gen_layers": [64], "disc_layers": [32, 16, 1], **overrides})


def test_gan_is_deterministic(husimi8_small):
    truth = coherent(8, 0.5)
    data = expectation(truth, husimi8_small)
    cfg = small_gan(epochs=20, seed=5)
    a = gan_reconstruct(data, husimi8_small, cfg, reference=truth)
    b = gan_reconstruct(data, husimi8_small, cfg, reference=truth)
    assert a.loss_history == b.loss_history
    assert a.fidelity_history == b.fidelity_history
    assert a.disc_loss_history == b.disc_loss_history
    np.testing.assert_array_equal(a.reconstructed_dm.matrix, b.reconstructed_dm.matrix)


def test_gan_histories_and_output(husimi8_small):
    truth = coherent(8, 0.5)
    cfg = small_gan(epochs=30, record_every=10)
    result = gan_reconstruct(expectation(truth, husimi8_small), husimi8_small, cfg, reference=truth)
    assert_valid_dm(result.reconstructed_dm)
    assert len(result.loss_history) == 31
    assert len(result.disc_loss_history) == 30
    assert [e for e, _ in result.fidelity_history] == [0, 10, 20, 30]
    assert all(np.isfinite(v) for _, v in result.loss_history)
    assert result.loss_history[result.best_epoch][1] == min(v for _, v in result.loss_history)


def test_gan_l1_term_is_opt_in(husimi8_small):
    data = expectation(coherent(8, 0.5), husimi8_small)
    plain = gan_reconstruct(data, husimi8_small, small_gan(epochs=0))
    with_l1 = gan_reconstruct(data, husimi8_small, small_gan(epochs=0, l1_weight=1.0))
    assert GANConfig().l1_weight == 0.0
    assert plain.loss_history[0][1] > 0.0
    assert with_l1.loss_history[0][1] > plain.loss_history[0][1]


def test_gan_with_zero_epochs_only_evaluates(husimi8_small):
    truth = coherent(8, 0.5)
    result = gan_reconstruct(expectation(truth, husimi8_small), husimi8_small, small_gan(epochs=0))
    assert result.best_epoch == 0
    assert result.disc_loss_history == []
    assert result.reconstructed_dm.purity() < 1.0


def test_gan_rejects_bad_data(husimi8_small):
    with pytest.raises(LengthMismatch):
        gan_reconstruct(np.ones(5), husimi8_small, small_gan(epochs=1))


@pytest.mark.slow
def test_gan_reconstructs_fock_state():
    grid = GridConfig(points=16)
    mset = husimi_operators(8, grid.xgrid(), grid.pgrid())
    truth = fock(8, 1)
    data = expectation(truth, mset)
    finals = [
        gan_reconstruct(data, mset, GANConfig(epochs=2000, seed=seed), reference=truth).final_fidelity
        for seed in range(5)
    ]
    assert sum(f >= 0.9 for f in finals) >= 3


def test_discriminator_cannot_separate_identical_inputs():
    assert discriminator_pretrain_sanity(small_gan(), np.full(16, 0.3), seed=0) == 0.5


def test_discriminator_separates_one_hot_inputs():
    data = np.zeros(16)
    data[0] = 1.0
    cfg = small_gan(lr_disc=0.01)
    assert discriminator_pretrain_sanity(cfg, data, seed=0) == 1.0
    assert discriminator_pretrain_sanity(cfg, data, seed=0) == discriminator_pretrain_sanity(cfg, data, seed=0)


# --- Results ---

def test_save_result_writes_files(tmp_path, number4):
    truth = thermal(4, 0.5)
    result = mle_reconstruct(expectation(truth, number4), number4, MLEConfig(max_epochs=15), reference=truth)
    save_result(result, tmp_path / "r")
    for name in (RHO_FILE, MANIFEST_FILE, HISTORY_FILE):
        assert (tmp_path / "r" / name).exists()
    rho, manifest = load_result_state(tmp_path / "r")
    np.testing.assert_array_equal(rho.matrix, result.reconstructed_dm.matrix)
    assert manifest["method"] == "mle"
    assert manifest["final_fidelity"] == result.final_fidelity
    lines = (tmp_path / "r" / HISTORY_FILE).read_text().splitlines()
    assert lines[0] == "epoch,loss,fidelity"
    assert len(lines) == 1 + len(result.loss_history)
