import numpy as np
import pytest

from tomokit.config import NoiseConfig, default_noise_config
from tomokit.core.measurement import expectation
from tomokit.core.noise import (
    PhaseSpaceImage, additive_gaussian, affine_transform, apply_pipeline, apply_state_noise,
    exaggerated_noise_config, gaussian_convolution, gaussian_kernel, mix_with_random,
    pipeline_stages, salt_pepper, stage_seeds,
)
from tomokit.core.states import coherent, random_dm
from tomokit.errors import BadFraction, BadProportion, BadZeta, InvalidInput, NegativeParameter
from tomokit.utils.rng import derive_seed

from conftest import assert_valid_dm


def unit_image(pixels):
    n_p, n_x = np.shape(pixels)
    return PhaseSpaceImage(pixels, np.arange(n_x, dtype=float), np.arange(n_p, dtype=float))


# --- State noise ---

def test_mix_endpoints():
    rho = coherent(16, 1.0)
    np.testing.assert_array_equal(mix_with_random(rho, 0.0, seed=3).matrix, rho.matrix)
    np.testing.assert_array_equal(mix_with_random(rho, 1.0, seed=3).matrix, random_dm(16, 16, 3).matrix)


@pytest.mark.parametrize("zeta", [-0.1, 1.5])
def test_mix_rejects_bad_zeta(zeta):
    with pytest.raises(BadZeta):
        mix_with_random(coherent(8, 0.5), zeta, seed=0)


def test_mix_stays_physical_and_lowers_purity(rng):
    rho = coherent(16, 1.0)
    for zeta in rng.uniform(0.0, 1.0, size=20):
        mixed = mix_with_random(rho, float(zeta), seed=int(rng.integers(1000)))
        assert_valid_dm(mixed)
    assert mix_with_random(rho, 0.2, seed=1).purity() < 1.0


def test_mix_expectations_are_convex(husimi32):
    rho = coherent(32, 1.0)
    clean = expectation(rho, husimi32).values
    for seed in range(100):
        mixed = mix_with_random(rho, 0.2, seed=seed)
        rand = random_dm(32, 32, seed)
        np.testing.assert_allclose(
            expectation(mixed, husimi32).values,
            0.8 * clean + 0.2 * expectation(rand, husimi32).values,
            atol=1e-10,
        )


def test_state_noise_uses_config_seed():
    rho = coherent(8, 0.5)
    cfg = NoiseConfig(zeta=0.3, seed=12)
    expected = mix_with_random(rho, 0.3, derive_seed(12, 0))
    np.testing.assert_array_equal(apply_state_noise(rho, cfg).matrix, expected.matrix)


# --- Images ---

def test_image_rejects_non_finite_pixels():
    with pytest.raises(InvalidInput):
        PhaseSpaceImage(np.array([[0.0, np.nan]]))


def test_convolution_identity_and_validation():
    img = unit_image(np.arange(12.0).reshape(3, 4))
    np.testing.assert_array_equal(gaussian_convolution(img, 0.0).pixels, img.pixels)
    with pytest.raises(NegativeParameter):
        gaussian_convolution(img, -1.0)


def test_convolution_preserves_mass_of_interior_impulse(grid20):
    pixels = np.zeros((20, 20))
    pixels[10, 10] = 1.0
    img = PhaseSpaceImage(pixels, grid20.xgrid(), grid20.pgrid())
    out = gaussian_convolution(img, 2.0)
    assert out.total() == pytest.approx(1.0, abs=1e-9)
    assert np.argmax(out.pixels) == 10 * 20 + 10


def test_convolution_matches_reflect_padded_oracle(rng):
    pixels = rng.uniform(size=(9, 9))
    img = unit_image(pixels)
    # nth = 2 gives σ = 1 pixel on a unit grid, radius 4
    kernel = gaussian_kernel(img, 2.0)
    assert kernel.shape == (9, 9)

    def reflect(i, n):
        if i < 0:
            return -i - 1
        if i >= n:
            return 2 * n - i - 1
        return i

    expected = np.zeros_like(pixels)
    for i in range(9):
        for j in range(9):
            for a in range(9):
                for b in range(9):
                    expected[i, j] += kernel[a, b] * pixels[reflect(i + a - 4, 9), reflect(j + b - 4, 9)]
    np.testing.assert_allclose(gaussian_convolution(img, 2.0).pixels, expected, atol=1e-10)


def test_convolution_commutes_with_transpose(rng, grid20):
    pixels = rng.uniform(size=(20, 20))
    a = gaussian_convolution(PhaseSpaceImage(pixels, grid20.xgrid(), grid20.pgrid()), 1.5)
    b = gaussian_convolution(PhaseSpaceImage(pixels.T, grid20.xgrid(), grid20.pgrid()), 1.5)
    np.testing.assert_allclose(a.pixels.T, b.pixels, atol=1e-10)


def test_affine_identity_returns_input(rng):
    img = unit_image(rng.uniform(size=(6, 6)))
    out = affine_transform(img, 0.0, 0.0, 0.0, seed=1)
    np.testing.assert_array_equal(out.pixels, img.pixels)


def test_affine_quarter_turn_is_rot90():
    pixels = np.arange(9.0).reshape(3, 3)
    out = affine_transform(unit_image(pixels), (90.0, 90.0), 0.0, 0.0, seed=0)
    np.testing.assert_allclose(out.pixels, np.rot90(pixels), atol=1e-10)


def test_affine_never_adds_mass(rng):
    img = unit_image(rng.uniform(size=(20, 20)))
    for seed in range(5):
        out = affine_transform(img, 30.0, 0.2, 0.2, seed=seed)
        assert out.total() <= img.total() + 1e-9
        assert np.all(out.pixels >= 0)


def test_affine_rejects_large_translation():
    with pytest.raises(BadFraction):
        affine_transform(unit_image(np.ones((4, 4))), 0.0, 1.5, 0.0, seed=0)


def test_additive_gaussian():
    img = unit_image(np.zeros((100, 100)))
    np.testing.assert_array_equal(additive_gaussian(img, 0.0, seed=1).pixels, img.pixels)
    out = additive_gaussian(img, 0.01, seed=1)
    assert np.all(out.pixels >= 0)
    # mean of max(N(0, σ²), 0) is σ/√(2π)
    assert 0.002 < out.pixels.mean() < 0.006
    np.testing.assert_array_equal(out.pixels, additive_gaussian(img, 0.01, seed=1).pixels)


def test_salt_and_pepper_counts(rng):
    img = unit_image(rng.uniform(0.1, 1.0, size=(20, 20)))
    np.testing.assert_array_equal(salt_pepper(img, 0.0, 0.0, seed=0).pixels, img.pixels)
    out = salt_pepper(img, 0.0, 0.1, seed=4)
    assert int(np.sum(out.pixels == 0.0)) == 40
    assert np.all(salt_pepper(img, 0.0, 1.0, seed=4).pixels == 0.0)
    salted = salt_pepper(img, 0.05, 0.0, seed=4)
    assert int(np.sum(salted.pixels == img.pixels.max())) >= 20


def test_salt_and_pepper_rejects_overlap():
    with pytest.raises(BadProportion):
        salt_pepper(unit_image(np.ones((4, 4))), 0.6, 0.6, seed=0)


# --- Pipeline ---

def test_default_config_matches_shipped_table():
    cfg = default_noise_config()
    assert cfg == NoiseConfig()
    assert (cfg.zeta, cfg.nth_conv, cfg.rotation_deg) == (0.2, 2.0, 20.0)
    assert cfg.translate_xy == (0.1, 0.1)
    assert (cfg.additive_sigma, cfg.salt_prop, cfg.pepper_prop) == (0.01, 0.0, 0.1)


def test_zero_pipeline_is_identity(rng, grid20):
    img = PhaseSpaceImage(rng.uniform(size=(20, 20)), grid20.xgrid(), grid20.pgrid())
    np.testing.assert_array_equal(apply_pipeline(img, NoiseConfig.zero()).pixels, img.pixels)


def test_pipeline_is_deterministic_and_composed(rng, grid20):
    img = PhaseSpaceImage(rng.uniform(size=(20, 20)), grid20.xgrid(), grid20.pgrid())
    cfg = default_noise_config()
    out = apply_pipeline(img, cfg)
    np.testing.assert_array_equal(out.pixels, apply_pipeline(img, cfg).pixels)

    seeds = stage_seeds(cfg)
    manual = gaussian_convolution(img, cfg.nth_conv)
    manual = affine_transform(manual, cfg.rotation_deg, *cfg.translate_xy, seeds["affine"])
    manual = additive_gaussian(manual, cfg.additive_sigma, seeds["additive"])
    manual = salt_pepper(manual, cfg.salt_prop, cfg.pepper_prop, seeds["salt_pepper"])
    np.testing.assert_array_equal(out.pixels, manual.pixels)

    other = apply_pipeline(img, cfg.model_copy(update={"seed": 1}))
    assert not np.array_equal(out.pixels, other.pixels)


def test_pipeline_stages_are_keyed_in_order(rng, grid20):
    img = PhaseSpaceImage(rng.uniform(size=(20, 20)), grid20.xgrid(), grid20.pgrid())
    stages = pipeline_stages(img, exaggerated_noise_config())
    assert list(stages) == ["input", "convolution", "affine", "additive", "salt_pepper"]
    assert stages["input"] is img
