"""
Measurement sets — Husimi-Q grid projectors, photon-number projectors and
custom POVM-like sets — with Born-rule expectations and finite-shot sampling.

Phase-space convention: x = (a + a†)/√2, p = (a − a†)/(i√2), β = (x + ip)/√2.
"""

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Optional

import numpy as np

from tomokit.core.noise import PhaseSpaceImage
from tomokit.core.quantum import DEFAULT_TOL, hermitize
from tomokit.core.states import coherent_amplitudes
from tomokit.errors import (
    DimensionMismatch, InvalidInput, NonHermitian, NonMonotonicGrid, NotPositive,
    WrongKind, ZeroMass,
)


class MeasurementKind(str, Enum):
    HUSIMI = "HusimiGrid"
    NUMBER = "PhotonNumber"
    CUSTOM = "Custom"


# Names accepted by measurement_operators(), as used in scripts
KIND_ALIASES = {
    "husimi-q": MeasurementKind.HUSIMI,
    "husimi": MeasurementKind.HUSIMI,
    "husimigrid": MeasurementKind.HUSIMI,
    "photon-number": MeasurementKind.NUMBER,
    "number": MeasurementKind.NUMBER,
    "photonnumber": MeasurementKind.NUMBER,
}


@dataclass(frozen=True, eq=False)
class MeasurementSet:
    """Ordered operators {O_k} (shape K×dim×dim) plus optional grid metadata."""

    dim: int
    kind: MeasurementKind
    operators: np.ndarray = field(repr=False)
    xgrid: Optional[np.ndarray] = None
    pgrid: Optional[np.ndarray] = None
    cell_area: Optional[float] = None

    def __post_init__(self):
        ops = np.array(self.operators, dtype=complex, copy=True)
        ops.setflags(write=False)
        object.__setattr__(self, "operators", ops)

    def __len__(self):
        return self.operators.shape[0]

    @property
    def grid_shape(self):
        """(len(pgrid), len(xgrid)) for Husimi sets."""
        if self.kind is not MeasurementKind.HUSIMI:
            raise WrongKind(f"{self.kind.value} set has no phase-space grid")
        return (len(self.pgrid), len(self.xgrid))

    @cached_property
    def transposed_flat(self):
        # Tr(ρ O_k) = Σ_ij ρ_ij (O_k)_ji = transposed_flat[k] · ρ.ravel()
        ops = self.operators.transpose(0, 2, 1).reshape(len(self), -1)
        ops.setflags(write=False)
        return ops

    def weighted_sum(self, weights):
        """Σ_k w_k O_k."""
        return np.tensordot(np.asarray(weights, dtype=float), self.operators, axes=1)


@dataclass(frozen=True, eq=False)
class ExpectationVector:
    values: np.ndarray
    set_kind: MeasurementKind

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True, eq=False)
class CountVector:
    counts: np.ndarray
    shots: int

    def __len__(self):
        return len(self.counts)

    @property
    def values(self):
        return self.counts


# --- Constructors ---

def _grid_step(grid, name):
    grid = np.asarray(grid, dtype=float).ravel()
    if grid.size < 2:
        raise NonMonotonicGrid(f"{name} needs at least 2 points, got {grid.size}")
    steps = np.diff(grid)
    if np.any(steps <= 0):
        raise NonMonotonicGrid(f"{name} is not strictly increasing")
    step = float(steps.mean())
    if not np.allclose(steps, step, rtol=1e-6, atol=1e-12):
        raise NonMonotonicGrid(
            f"{name} is not uniform: spacing varies by {float(np.ptp(steps)):.3e}"
        )
    return grid, step


def husimi_operators(dim, xgrid, pgrid):
    """O_k = (ΔA/π)|β_k⟩⟨β_k|, row-major over (p, x).

    ΔA = Δx·Δp/2 is the cell area in the β plane, so expectations are
    Riemann-sum probabilities of the Q function. |β_k⟩ is the truncated
    coherent vector without renormalization, so Tr O_k = (ΔA/π)·P(n < dim).
    """
    xgrid, dx = _grid_step(xgrid, "xgrid")
    pgrid, dp = _grid_step(pgrid, "pgrid")
    cell_area = dx * dp / 2.0

    xx, pp = np.meshgrid(xgrid, pgrid)
    betas = ((xx + 1j * pp) / np.sqrt(2.0)).ravel()
    vecs = coherent_amplitudes(dim, betas)

    weight = cell_area / np.pi
    ops = weight * np.einsum("ki,kj->kij", vecs, vecs.conj())
    return MeasurementSet(
        dim=dim,
        kind=MeasurementKind.HUSIMI,
        operators=ops,
        xgrid=xgrid,
        pgrid=pgrid,
        cell_area=cell_area,
    )


def number_operators(dim):
    """O_n = |n⟩⟨n|, n = 0..dim−1."""
    if dim < 1:
        raise InvalidInput(f"dim must be ≥ 1, got {dim}")
    ops = np.zeros((dim, dim, dim), dtype=complex)
    idx = np.arange(dim)
    ops[idx, idx, idx] = 1.0
    return MeasurementSet(dim=dim, kind=MeasurementKind.NUMBER, operators=ops)


def custom_operators(ops, tol=DEFAULT_TOL):
    """Validate an arbitrary stack of Hermitian PSD operators."""
    ops = np.asarray(ops, dtype=complex)
    if ops.ndim != 3 or ops.shape[1] != ops.shape[2] or ops.shape[0] < 1:
        raise DimensionMismatch(f"operators must have shape (K, d, d), got {ops.shape}")
    for k, op in enumerate(ops):
        dev = float(np.max(np.abs(op - op.conj().T)))
        if dev > tol:
            raise NonHermitian(f"operator {k} is not Hermitian: deviation {dev:.3e}")
        low = float(np.linalg.eigvalsh(hermitize(op))[0])
        if low < -tol:
            raise NotPositive(f"operator {k} has eigenvalue {low:.3e} < −{tol:.1e}")
    return MeasurementSet(dim=ops.shape[1], kind=MeasurementKind.CUSTOM, operators=ops)


def measurement_operators(dim, kind, xgrid=None, pgrid=None):
    """Build a set by name: "Husimi-Q" needs grids, "photon-number" does not."""
    key = kind.value.lower() if isinstance(kind, MeasurementKind) else str(kind).lower()
    resolved = KIND_ALIASES.get(key)
    if resolved is MeasurementKind.HUSIMI:
        if xgrid is None or pgrid is None:
            raise InvalidInput("Husimi-Q measurements need xgrid and pgrid")
        return husimi_operators(dim, xgrid, pgrid)
    if resolved is MeasurementKind.NUMBER:
        return number_operators(dim)
    raise WrongKind(f"unknown measurement kind '{kind}'")


# --- Born rule ---

def expectation(rho, mset):
    """p_k = Re Tr(ρ O_k)."""
    if rho.dim != mset.dim:
        raise DimensionMismatch(f"state dim {rho.dim} vs measurement dim {mset.dim}")
    values = np.real(mset.transposed_flat @ rho.matrix.ravel())
    return ExpectationVector(values=values, set_kind=mset.kind)


def sample_counts(p, shots, seed):
    """Multinomial draw of `shots` outcomes with probabilities p/Σp."""
    values = np.clip(np.asarray(getattr(p, "values", p), dtype=float), 0.0, None)
    total = float(values.sum())
    if not total > 0:
        raise ZeroMass("expectation values have no positive mass to sample from")
    if shots < 0:
        raise InvalidInput(f"shots must be ≥ 0, got {shots}")
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(int(shots), values / total)
    return CountVector(counts=counts.astype(np.int64), shots=int(shots))


def husimi_image(rho, mset):
    """Expectation values on the grid raster; pixel (i, j) is (pgrid[i], xgrid[j])."""
    if mset.kind is not MeasurementKind.HUSIMI:
        raise WrongKind(f"husimi_image needs a {MeasurementKind.HUSIMI.value} set, got {mset.kind.value}")
    values = expectation(rho, mset).values
    return PhaseSpaceImage(
        pixels=values.reshape(mset.grid_shape),
        xgrid=mset.xgrid,
        pgrid=mset.pgrid,
    )


# --- Descriptors (operators.json) ---

def to_descriptor(mset):
    """JSON-ready description from which the set can be rebuilt."""
    doc = {"kind": mset.kind.value, "dim": int(mset.dim)}
    if mset.kind is MeasurementKind.HUSIMI:
        doc["xgrid"] = [float(v) for v in mset.xgrid]
        doc["pgrid"] = [float(v) for v in mset.pgrid]
        doc["cell_area"] = float(mset.cell_area)
    elif mset.kind is MeasurementKind.CUSTOM:
        doc["operators_re"] = np.real(mset.operators).tolist()
        doc["operators_im"] = np.imag(mset.operators).tolist()
    return doc


def from_descriptor(doc):
    try:
        kind = MeasurementKind(doc["kind"])
        dim = int(doc["dim"])
        if kind is MeasurementKind.HUSIMI:
            return husimi_operators(dim, doc["xgrid"], doc["pgrid"])
        if kind is MeasurementKind.NUMBER:
            return number_operators(dim)
        ops = np.asarray(doc["operators_re"]) + 1j * np.asarray(doc["operators_im"])
        return custom_operators(ops)
    except (KeyError, ValueError, TypeError) as exc:
        if isinstance(exc, InvalidInput):
            raise
        raise InvalidInput(f"malformed operator descriptor: {exc}") from exc
