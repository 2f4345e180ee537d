"""
Quantum core — density matrices, Cholesky reparametrization, fidelity and
truncated bosonic operators.

All matrices are dense complex128 numpy arrays. Types are immutable after
construction.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from tomokit.errors import (
    BadTrace, DegenerateT, DimensionMismatch, FactorizationFailed,
    NonHermitian, NotPositive,
)

# Default validation tolerance
DEFAULT_TOL = 1e-10

# Eigenvalues below this fraction of the largest are treated as roundoff
EIG_RTOL = 1e-13

# Residual target for the exponential series
EXPM_TOL = 1e-12

ComplexMatrix = np.ndarray


def _frozen(m, dtype=complex):
    arr = np.array(m, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def hermitize(m):
    """Return (m + m†)/2."""
    return 0.5 * (m + m.conj().T)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A dim×dim Hermitian, positive semidefinite, unit-trace matrix."""

    matrix: np.ndarray
    discarded_weight: float = 0.0
    truncation_warning: bool = False

    def __post_init__(self):
        object.__setattr__(self, "matrix", _frozen(self.matrix))

    @property
    def dim(self):
        return self.matrix.shape[0]

    def purity(self):
        """Tr(ρ²)."""
        return float(np.real(np.vdot(self.matrix.conj().T, self.matrix)))

    def eigenvalues(self):
        return np.linalg.eigvalsh(self.matrix)

    def expect(self, op):
        """Re Tr(ρ op)."""
        return float(np.real(np.sum(self.matrix.T * op)))


@dataclass(frozen=True, eq=False)
class CholeskyParams:
    """Lower-triangular T with a real non-negative diagonal; ρ = TT†/Tr(TT†).

    Any complex matrix is accepted: the upper triangle is dropped and each
    column is rotated by the conjugate phase of its diagonal entry.
    """

    lower: np.ndarray

    def __post_init__(self):
        t = np.tril(np.asarray(self.lower, dtype=complex))
        if t.ndim != 2 or t.shape[0] != t.shape[1]:
            raise DimensionMismatch(f"Cholesky factor must be square, got shape {t.shape}")
        diag = np.diag(t)
        phases = np.ones_like(diag)
        nonzero = np.abs(diag) > 0
        phases[nonzero] = np.abs(diag[nonzero]) / diag[nonzero]
        t = t * phases[np.newaxis, :]
        idx = np.arange(t.shape[0])
        t[idx, idx] = np.abs(diag)
        object.__setattr__(self, "lower", _frozen(t))

    @property
    def dim(self):
        return self.lower.shape[0]


@dataclass(frozen=True, eq=False)
class BosonicOperators:
    """Truncated ladder operators on span{|0⟩, …, |dim−1⟩}."""

    dim: int
    annihilation: np.ndarray = field(repr=False)
    number: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, dim):
        return _bosonic_operators(int(dim))

    @property
    def creation(self):
        return self.annihilation.conj().T

    @property
    def position(self):
        """x = (a + a†)/√2."""
        return (self.annihilation + self.creation) / np.sqrt(2.0)

    @property
    def momentum(self):
        """p = (a − a†)/(i√2)."""
        return (self.annihilation - self.creation) / (1j * np.sqrt(2.0))


@lru_cache(maxsize=32)
def _bosonic_operators(dim):
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)
    n = np.diag(np.arange(dim, dtype=float)).astype(complex)
    return BosonicOperators(dim=dim, annihilation=_frozen(a), number=_frozen(n))


# --- Validation ---

def make_density_matrix(m, tol=DEFAULT_TOL):
    """Validate m as a density matrix; symmetrize and renormalize the trace."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise DimensionMismatch(f"density matrix must be square, got shape {m.shape}")

    herm_dev = float(np.max(np.abs(m - m.conj().T)))
    if herm_dev > tol:
        raise NonHermitian(f"Hermiticity violated: max |ρ_ij − conj(ρ_ji)| = {herm_dev:.3e} > {tol:.1e}")

    h = hermitize(m)
    min_eig = float(np.linalg.eigvalsh(h)[0])
    if min_eig < -tol:
        raise NotPositive(f"positivity violated: min eigenvalue = {min_eig:.3e} < −{tol:.1e}")

    trace = float(np.real(np.trace(h)))
    if abs(trace - 1.0) > tol:
        raise BadTrace(f"unit trace violated: |Tr(ρ) − 1| = {abs(trace - 1.0):.3e} > {tol:.1e}")

    return DensityMatrix(h / trace)


def pure_state(psi, discarded_weight=0.0, warn_above=None):
    """Density matrix |ψ⟩⟨ψ| of a (renormalized) amplitude vector."""
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    flagged = warn_above is not None and discarded_weight > warn_above
    return DensityMatrix(
        np.outer(psi, psi.conj()),
        discarded_weight=float(discarded_weight),
        truncation_warning=bool(flagged),
    )


# --- Cholesky reparametrization ---

def cholesky_to_dm(t):
    """ρ = TT†/Tr(TT†); accepts CholeskyParams or a raw lower-triangular matrix."""
    lower = t.lower if isinstance(t, CholeskyParams) else np.tril(np.asarray(t, dtype=complex))
    m = lower @ lower.conj().T
    trace = float(np.real(np.trace(m)))
    if not trace > 1e-30:
        raise DegenerateT(f"Tr(TT†) = {trace:.3e} underflows")
    return DensityMatrix(hermitize(m) / trace)


def dm_to_cholesky(rho, epsilon=1e-12):
    """Factor ρ + εI and rescale so that Tr(TT†) = 1."""
    reg = rho.matrix + epsilon * np.eye(rho.dim)
    try:
        lower = np.linalg.cholesky(reg)
    except np.linalg.LinAlgError as exc:
        raise FactorizationFailed(f"ρ + {epsilon:.1e}·I is not factorizable: {exc}") from exc
    norm = np.sqrt(np.real(np.trace(lower @ lower.conj().T)))
    return CholeskyParams(lower / norm)


# --- Fidelity ---

def psd_sqrt(m):
    """Matrix square root of a Hermitian PSD matrix via eigendecomposition."""
    w, v = np.linalg.eigh(hermitize(m))
    cutoff = EIG_RTOL * max(float(w[-1]), 0.0)
    w = np.where(w > cutoff, w, 0.0)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity(rho, sigma):
    """F(ρ, σ) = (Tr √(√ρ σ √ρ))², clamped to [0, 1]."""
    if rho.dim != sigma.dim:
        raise DimensionMismatch(f"fidelity of dim {rho.dim} and dim {sigma.dim} states")
    root = psd_sqrt(rho.matrix)
    inner = hermitize(root @ sigma.matrix @ root)
    w = np.linalg.eigvalsh(inner)
    cutoff = EIG_RTOL * max(float(w[-1]), 0.0)
    w = np.where(w > cutoff, w, 0.0)
    value = float(np.sum(np.sqrt(w)) ** 2)
    return min(max(value, 0.0), 1.0)


# --- Matrix exponentials ---

def expm_series(generator, tol=EXPM_TOL):
    """exp(G) by scaling and squaring around a truncated Taylor series."""
    g = np.asarray(generator, dtype=complex)
    norm = float(np.max(np.sum(np.abs(g), axis=0))) if g.size else 0.0
    squarings = max(0, int(np.ceil(np.log2(norm / 0.5)))) if norm > 0.5 else 0
    scaled = g / (2.0 ** squarings)

    result = np.eye(g.shape[0], dtype=complex)
    term = np.eye(g.shape[0], dtype=complex)
    for k in range(1, 60):
        term = term @ scaled / k
        result = result + term
        if np.max(np.abs(term)) < tol * 1e-4:
            break

    for _ in range(squarings):
        result = result @ result
    return result


def displacement_operator(ops, alpha):
    """D(α) = exp(α a† − conj(α) a) in the truncated space."""
    alpha = complex(alpha)
    if alpha == 0:
        return np.eye(ops.dim, dtype=complex)
    a = ops.annihilation
    return expm_series(alpha * ops.creation - np.conj(alpha) * a)


def squeeze_operator(ops, z):
    """S(z) = exp((conj(z) a² − z a†²)/2) in the truncated space."""
    z = complex(z)
    if z == 0:
        return np.eye(ops.dim, dtype=complex)
    a = ops.annihilation
    ad = ops.creation
    return expm_series(0.5 * (np.conj(z) * (a @ a) - z * (ad @ ad)))
