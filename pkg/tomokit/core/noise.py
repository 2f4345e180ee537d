"""
Noise — state-preparation mixing with a random state, and the four-stage
image pipeline: Gaussian convolution → affine jitter → additive Gaussian →
salt-and-pepper.

Every stage is a pure function of (input, parameters, seed).
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import ndimage

from tomokit.config import NoiseConfig
from tomokit.core.quantum import DensityMatrix
from tomokit.core.states import random_dm
from tomokit.errors import (
    BadFraction, BadProportion, BadZeta, DimensionMismatch, InvalidInput,
    NegativeParameter,
)
from tomokit.utils.rng import derive_seed

# Stage keys for derived seeds; key 0 is the state-mixing stage.
MIX_STAGE = 0
STAGES = ("convolution", "affine", "additive", "salt_pepper")

# Rotation-matrix entries below this are snapped to zero
SNAP_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class PhaseSpaceImage:
    """Real pixels on a (pgrid × xgrid) raster."""

    pixels: np.ndarray
    xgrid: Optional[np.ndarray] = None
    pgrid: Optional[np.ndarray] = None

    def __post_init__(self):
        pixels = np.array(self.pixels, dtype=float, copy=True)
        if pixels.ndim != 2:
            raise DimensionMismatch(f"image must be 2-D, got shape {pixels.shape}")
        if not np.all(np.isfinite(pixels)):
            raise InvalidInput("image pixels must be finite")
        pixels.setflags(write=False)
        object.__setattr__(self, "pixels", pixels)

    @property
    def shape(self):
        return self.pixels.shape

    def total(self):
        return float(self.pixels.sum())

    def with_pixels(self, pixels):
        return PhaseSpaceImage(pixels=pixels, xgrid=self.xgrid, pgrid=self.pgrid)

    def spacing(self):
        """(Δp, Δx) pixel spacing in phase-space units; 1 when no grid is attached."""
        dx = float(self.xgrid[1] - self.xgrid[0]) if self.xgrid is not None else 1.0
        dp = float(self.pgrid[1] - self.pgrid[0]) if self.pgrid is not None else 1.0
        return dp, dx


# --- State noise ---

def mix_with_random(rho, zeta, seed):
    """(1 − ζ)ρ + ζ ρ_rand with ρ_rand a full-rank Ginibre state."""
    if not 0.0 <= zeta <= 1.0:
        raise BadZeta(f"zeta = {zeta} outside [0, 1]")
    if zeta == 0.0:
        return DensityMatrix(rho.matrix)
    rand = random_dm(rho.dim, rho.dim, seed)
    if zeta == 1.0:
        return rand
    return DensityMatrix((1.0 - zeta) * rho.matrix + zeta * rand.matrix)


def apply_state_noise(rho, cfg: NoiseConfig):
    return mix_with_random(rho, cfg.zeta, derive_seed(cfg.seed, MIX_STAGE))


def stage_seeds(cfg: NoiseConfig):
    """Seeds for the image stages, derived from cfg.seed."""
    return {name: derive_seed(cfg.seed, i + 1) for i, name in enumerate(STAGES)}


# --- Image stages ---

def _gaussian_1d(sigma):
    radius = int(np.ceil(4.0 * sigma))
    offsets = np.arange(-radius, radius + 1, dtype=float)
    return np.exp(-0.5 * (offsets / sigma) ** 2)


def gaussian_kernel(img, nth):
    """Normalized kernel with phase-space variance nth/2 per axis, in pixel units."""
    dp, dx = img.spacing()
    sigma_phys = np.sqrt(nth / 2.0)
    kernel = np.outer(_gaussian_1d(sigma_phys / abs(dp)), _gaussian_1d(sigma_phys / abs(dx)))
    return kernel / kernel.sum()


def gaussian_convolution(img, nth):
    if nth < 0:
        raise NegativeParameter(f"nth = {nth} < 0")
    if nth == 0:
        return img.with_pixels(img.pixels)
    out = ndimage.convolve(img.pixels, gaussian_kernel(img, nth), mode="reflect")
    return img.with_pixels(out)


def _as_range(value, name):
    if isinstance(value, (tuple, list)):
        low, high = float(value[0]), float(value[1])
    else:
        low, high = -abs(float(value)), abs(float(value))
    if low > high:
        raise BadFraction(f"{name} range is empty: [{low}, {high}]")
    return low, high


def _rotation(angle_deg):
    theta = np.deg2rad(angle_deg)
    rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    rot[np.abs(rot) < SNAP_TOL] = 0.0
    return rot


def affine_transform(img, rotation_deg, tx, ty, seed):
    """Random rotation about the image center plus a random translation.

    rotation_deg, tx and ty are symmetric bounds or explicit (low, high)
    ranges; translations are fractions of the image extent. Bilinear
    resampling with zero fill; output mass never exceeds input mass.
    """
    rot_range = _as_range(rotation_deg, "rotation")
    tx_range = _as_range(tx, "tx")
    ty_range = _as_range(ty, "ty")
    for name, (low, high) in (("tx", tx_range), ("ty", ty_range)):
        if max(abs(low), abs(high)) > 1.0:
            raise BadFraction(f"{name} fraction outside [−1, 1]: [{low}, {high}]")

    rng = np.random.default_rng(seed)
    angle = float(rng.uniform(*rot_range))
    shift_x = float(rng.uniform(*tx_range))
    shift_y = float(rng.uniform(*ty_range))
    if angle == 0.0 and shift_x == 0.0 and shift_y == 0.0:
        return img.with_pixels(img.pixels)

    height, width = img.shape
    center = np.array([(height - 1) / 2.0, (width - 1) / 2.0])
    shift = np.array([shift_y * height, shift_x * width])
    rot = _rotation(angle)
    inverse = rot.T
    offset = center - inverse @ (center + shift)

    out = ndimage.affine_transform(
        img.pixels, inverse, offset=offset, order=1, mode="constant", cval=0.0,
    )
    before, after = img.total(), float(out.sum())
    if before > 0 and after > before:
        out = out * (before / after)
    return img.with_pixels(out)


def additive_gaussian(img, sigma, seed):
    """Add i.i.d. N(0, σ²) per pixel, then clamp at 0."""
    if sigma < 0:
        raise NegativeParameter(f"sigma = {sigma} < 0")
    if sigma == 0:
        return img.with_pixels(img.pixels)
    rng = np.random.default_rng(seed)
    noisy = img.pixels + rng.normal(0.0, sigma, size=img.shape)
    return img.with_pixels(np.maximum(noisy, 0.0))


def _count(fraction, total):
    return int(np.floor(fraction * total + 0.5))


def salt_pepper(img, salt_prop, pepper_prop, seed):
    """Saturate a salt_prop share of pixels and zero a disjoint pepper_prop share."""
    for name, prop in (("salt_prop", salt_prop), ("pepper_prop", pepper_prop)):
        if not 0.0 <= prop <= 1.0:
            raise BadProportion(f"{name} = {prop} outside [0, 1]")
    if salt_prop + pepper_prop > 1.0:
        raise BadProportion(f"salt_prop + pepper_prop = {salt_prop + pepper_prop} exceeds 1")
    if salt_prop == 0 and pepper_prop == 0:
        return img.with_pixels(img.pixels)

    flat = img.pixels.ravel().copy()
    total = flat.size
    n_salt = _count(salt_prop, total)
    n_pepper = min(_count(pepper_prop, total), total - n_salt)
    peak = float(flat.max())

    order = np.random.default_rng(seed).permutation(total)
    flat[order[:n_salt]] = peak
    flat[order[n_salt:n_salt + n_pepper]] = 0.0
    return img.with_pixels(flat.reshape(img.shape))


def apply_pipeline(img, cfg: NoiseConfig):
    return pipeline_stages(img, cfg)["salt_pepper"]


def pipeline_stages(img, cfg: NoiseConfig):
    """Intermediate images after each stage, keyed by stage name."""
    seeds = stage_seeds(cfg)
    tx, ty = cfg.translate_xy
    stages = {"input": img}
    stages["convolution"] = gaussian_convolution(img, cfg.nth_conv)
    stages["affine"] = affine_transform(stages["convolution"], cfg.rotation_deg, tx, ty, seeds["affine"])
    stages["additive"] = additive_gaussian(stages["affine"], cfg.additive_sigma, seeds["additive"])
    stages["salt_pepper"] = salt_pepper(stages["additive"], cfg.salt_prop, cfg.pepper_prop, seeds["salt_pepper"])
    return stages


def exaggerated_noise_config(seed=0):
    """Stronger-than-default demo parameters for side-by-side stage previews."""
    return NoiseConfig(
        zeta=0.5, nth_conv=6.0, rotation_deg=45.0, translate_xy=(0.25, 0.25),
        additive_sigma=0.05, salt_prop=0.05, pepper_prop=0.3, seed=seed,
    )
