"""
Maximum-likelihood reconstruction by gradient ascent on the log-likelihood
over Cholesky parameters, ρ = TT†/Tr(TT†).
"""

import time

import numpy as np

from tomokit.config import InitKind, MLEConfig, OptimizerKind
from tomokit.core.grad import (
    AdamState, adam_step, loglik, loglik_grad, pack_params, sgd_step, unpack_params,
)
from tomokit.core.quantum import cholesky_to_dm, dm_to_cholesky, fidelity
from tomokit.core.result import ReconstructionResult
from tomokit.errors import InvalidInput, NonFiniteLoss


def initial_params(dim, cfg, warm_start=None):
    if cfg.init is InitKind.WARM_START:
        if warm_start is None:
            raise InvalidInput("init=warm_start needs a warm-start density matrix")
        if warm_start.dim != dim:
            raise InvalidInput(f"warm start has dim {warm_start.dim}, measurements have dim {dim}")
        return pack_params(dm_to_cholesky(warm_start))
    return pack_params(np.eye(dim) / np.sqrt(dim))


def mle_reconstruct(data, mset, cfg=None, reference=None, warm_start=None):
    """Gradient ascent on ℓ(ρ) = Σ_k n_k ln Tr(ρ O_k).

    Stops after cfg.max_epochs steps or once ‖∇ℓ‖ < cfg.tol_grad; returns the
    highest-likelihood iterate. Loss is −ℓ, recorded every epoch; fidelity to
    `reference` is recorded every cfg.record_every epochs and at the end.
    """
    cfg = cfg or MLEConfig()
    theta = initial_params(mset.dim, cfg, warm_start)
    state = AdamState.zeros_like([theta])

    loss_history, fidelity_history = [], []
    best_ll, best_theta, best_epoch = -np.inf, theta, 0
    converged_epoch = None
    start = time.perf_counter()

    epoch = 0
    while True:
        lower = unpack_params(theta, mset.dim)
        ll = loglik(lower, data, mset, cfg.floor)
        if not np.isfinite(ll):
            raise NonFiniteLoss(epoch, actor="mle", value=ll)
        grad = loglik_grad(lower, data, mset, cfg.floor)
        if not np.all(np.isfinite(grad)):
            raise NonFiniteLoss(epoch, actor="mle", value=float(np.linalg.norm(grad)))

        loss_history.append((epoch, -ll))
        if ll > best_ll:
            best_ll, best_theta, best_epoch = ll, theta, epoch

        done = epoch >= cfg.max_epochs
        if np.linalg.norm(grad) < cfg.tol_grad:
            converged_epoch = epoch
            done = True
        if reference is not None and (epoch % cfg.record_every == 0 or done):
            fidelity_history.append((epoch, fidelity(reference, cholesky_to_dm(lower))))
        if done:
            break

        if cfg.optimizer is OptimizerKind.ADAM:
            (theta,), state = adam_step([theta], [-grad], state, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps)
        else:
            (theta,) = sgd_step([theta], [-grad], cfg.lr)
        epoch += 1

    return ReconstructionResult(
        reconstructed_dm=cholesky_to_dm(unpack_params(best_theta, mset.dim)),
        method="mle",
        loss_history=loss_history,
        fidelity_history=fidelity_history,
        wall_time=time.perf_counter() - start,
        config=cfg.model_dump(mode="json"),
        best_epoch=best_epoch,
        converged_epoch=converged_epoch,
        epochs_run=epoch,
    )
