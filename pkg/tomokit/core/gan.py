"""
Adversarial reconstruction: a dense generator maps the measurement vector to
Cholesky parameters, the physics layer turns them into expectations, and a
dense discriminator acts as a learned loss between real and generated data.

Generator loss is −ln D(data_G). An L1 consistency term
l1_weight · mean|data_G − data_real| on the scaled data is opt-in.
"""

import time

import numpy as np

from tomokit.config import GANConfig
from tomokit.core.grad import (
    Activation, AdamState, adam_step, dense_backward, dense_forward,
    expectation_vjp, flatten_grads, init_dense_layers, layer_params,
    pack_params, probabilities, unpack_params, with_params,
)
from tomokit.core.quantum import cholesky_to_dm, fidelity
from tomokit.core.result import ReconstructionResult
from tomokit.errors import LengthMismatch, NonFiniteLoss, ZeroMass
from tomokit.utils.rng import substream

PRETRAIN_STEPS = 50

# Substream keys under cfg.seed
GEN_INIT, DISC_INIT = 0, 1


def _data_vector(data, n_outcomes):
    values = getattr(data, "counts", None)
    if values is None:
        values = getattr(data, "values", data)
    values = np.asarray(values, dtype=float).ravel()
    if values.size != n_outcomes:
        raise LengthMismatch(f"{values.size} outcomes for {n_outcomes} operators")
    return values


def _scale(values):
    peak = float(np.max(np.abs(values)))
    if not peak > 0:
        raise ZeroMass("measurement vector is identically zero")
    return 1.0 / peak


def build_generator(n_outcomes, dim, cfg, rng):
    """[K → hidden… (LeakyReLU) → dim² (identity)]; output bias starts at T = I."""
    sizes = [n_outcomes] + list(cfg.gen_layers) + [dim * dim]
    acts = [Activation.LEAKY_RELU] * len(cfg.gen_layers) + [Activation.IDENTITY]
    layers = init_dense_layers(sizes, acts, rng)
    params = layer_params(layers)
    params[-1] = pack_params(np.eye(dim))
    return with_params(layers, params)


def build_discriminator(n_outcomes, cfg, rng):
    """[K → hidden… (LeakyReLU) → 1 (sigmoid)]."""
    sizes = [n_outcomes] + list(cfg.disc_layers)
    acts = [Activation.LEAKY_RELU] * (len(cfg.disc_layers) - 1) + [Activation.SIGMOID]
    return init_dense_layers(sizes, acts, rng)


def _disc_step(disc, state, real_in, fake_in, cfg):
    """One discriminator update on L_D = −(ln D(real) + ln(1 − D(fake)))."""
    d_real, tape_real = dense_forward(disc, real_in)
    d_fake, tape_fake = dense_forward(disc, fake_in)
    d_real, d_fake = float(d_real[0]), float(d_fake[0])
    loss = -(np.log(d_real) + np.log1p(-d_fake))

    grads_real, _ = dense_backward(tape_real, [-1.0 / d_real])
    grads_fake, _ = dense_backward(tape_fake, [1.0 / (1.0 - d_fake)])
    grads = [gr + gf for gr, gf in zip(flatten_grads(grads_real), flatten_grads(grads_fake))]
    params, state = adam_step(layer_params(disc), grads, state, cfg.lr_disc, cfg.beta1, cfg.beta2, cfg.eps)
    return with_params(disc, params), state, loss, d_real, d_fake


def gan_reconstruct(data, mset, cfg=None, reference=None):
    """Alternating discriminator/generator updates, one each per epoch.

    The returned state is the epoch-best by generator loss. Fidelity to
    `reference` is recorded every cfg.record_every epochs and at the end.
    """
    cfg = cfg or GANConfig()
    n_outcomes, dim = len(mset), mset.dim
    real = _data_vector(data, n_outcomes)
    scale = _scale(real)
    real_in = real * scale

    gen = build_generator(n_outcomes, dim, cfg, substream(cfg.seed, GEN_INIT))
    disc = build_discriminator(n_outcomes, cfg, substream(cfg.seed, DISC_INIT))
    gen_state = AdamState.zeros_like(layer_params(gen))
    disc_state = AdamState.zeros_like(layer_params(disc))

    loss_history, disc_history, fidelity_history = [], [], []
    best_loss, best_lower, best_epoch = np.inf, None, 0
    start = time.perf_counter()

    for epoch in range(cfg.epochs + 1):
        theta, gen_tape = dense_forward(gen, real_in)
        lower = unpack_params(theta, dim)
        fake = probabilities(lower, mset)
        fake_in = fake * scale

        if epoch < cfg.epochs:
            disc, disc_state, disc_loss, _, _ = _disc_step(disc, disc_state, real_in, fake_in, cfg)
            if not np.isfinite(disc_loss):
                raise NonFiniteLoss(epoch, actor="discriminator", value=disc_loss)
            disc_history.append((epoch, float(disc_loss)))

        d_fake, disc_tape = dense_forward(disc, fake_in)
        d_fake = float(d_fake[0])
        residual = fake_in - real_in
        gen_loss = -np.log(d_fake) + cfg.l1_weight * float(np.mean(np.abs(residual)))
        if not np.isfinite(gen_loss):
            raise NonFiniteLoss(epoch, actor="generator", value=gen_loss)

        loss_history.append((epoch, float(gen_loss)))
        if gen_loss < best_loss:
            best_loss, best_lower, best_epoch = gen_loss, lower, epoch
        if reference is not None and (epoch % cfg.record_every == 0 or epoch == cfg.epochs):
            fidelity_history.append((epoch, fidelity(reference, cholesky_to_dm(lower))))
        if epoch == cfg.epochs:
            break

        # L_G gradient: discriminator → scaled data → physics layer → generator
        _, grad_fake_in = dense_backward(disc_tape, [-1.0 / d_fake])
        grad_fake_in = grad_fake_in + cfg.l1_weight * np.sign(residual) / n_outcomes
        grad_theta = expectation_vjp(lower, mset, grad_fake_in * scale)
        gen_grads, _ = dense_backward(gen_tape, grad_theta)
        params, gen_state = adam_step(
            layer_params(gen), flatten_grads(gen_grads), gen_state,
            cfg.lr_gen, cfg.beta1, cfg.beta2, cfg.eps,
        )
        gen = with_params(gen, params)

    return ReconstructionResult(
        reconstructed_dm=cholesky_to_dm(best_lower),
        method="gan",
        loss_history=loss_history,
        fidelity_history=fidelity_history,
        disc_loss_history=disc_history,
        wall_time=time.perf_counter() - start,
        config=cfg.model_dump(mode="json"),
        best_epoch=best_epoch,
        epochs_run=cfg.epochs,
    )


def discriminator_pretrain_sanity(cfg, data, seed):
    """Train a fresh discriminator alone to tell data from a cyclically shifted copy.

    Returns the two-sample accuracy in [0, 1] after PRETRAIN_STEPS updates.
    """
    cfg = cfg or GANConfig()
    real = np.asarray(getattr(data, "values", data), dtype=float).ravel()
    peak = float(np.max(np.abs(real))) if real.size else 0.0
    real_in = real / peak if peak > 0 else real

    rng = substream(seed, 0)
    shift = int(rng.integers(1, real.size)) if real.size > 1 else 0
    fake_in = np.roll(real_in, shift)

    disc = build_discriminator(real.size, cfg, substream(seed, DISC_INIT))
    state = AdamState.zeros_like(layer_params(disc))
    for _ in range(PRETRAIN_STEPS):
        disc, state, _, _, _ = _disc_step(disc, state, real_in, fake_in, cfg)

    d_real = float(dense_forward(disc, real_in)[0][0])
    d_fake = float(dense_forward(disc, fake_in)[0][0])
    return (float(d_real >= 0.5) + float(d_fake < 0.5)) / 2.0
