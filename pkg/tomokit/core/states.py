"""
Optical state constructors — Fock, coherent, thermal, cat, binomial, num, GKP
and random mixed states — plus seeded batch generation.

Analytic amplitudes are computed first and renormalized after truncation;
the discarded weight is recorded on the returned DensityMatrix.
"""

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from pathlib import Path
from typing import Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.special import comb, gammainc

from tomokit.core.quantum import (
    BosonicOperators, DensityMatrix, displacement_operator, hermitize,
    pure_state, squeeze_operator,
)
from tomokit.errors import (
    BadRank, DegenerateCat, DimensionMismatch, DimensionTooSmall, EmptyRange,
    IndexOutOfRange, InvalidInput, NegativeParameter, ZeroVector,
)
from tomokit.utils.parallel import parallel_map
from tomokit.utils.rng import substream

# Discarded-weight thresholds for the truncation flag
COHERENT_WARN = 1e-6
GKP_WARN = 1e-4

NUM_TABLE_PATH = Path(__file__).resolve().parent.parent / "data" / "num_states.txt"

ParamValue = Union[int, float, str]


class StateFamily(str, Enum):
    FOCK = "fock"
    COHERENT = "coherent"
    THERMAL = "thermal"
    CAT = "cat"
    BINOMIAL = "binomial"
    NUM = "num"
    GKP = "gkp"
    RANDOM_MIXED = "random_mixed"


class Parity(str, Enum):
    EVEN = "even"
    ODD = "odd"


class Logical(str, Enum):
    ZERO = "zero"
    ONE = "one"


# --- Constructors ---

def coherent_amplitudes(dim, alpha):
    """e^{−|α|²/2} αⁿ/√n! for n < dim; broadcasts over an array of α."""
    alpha = np.asarray(alpha, dtype=complex)
    factors = alpha[..., np.newaxis] / np.sqrt(np.arange(1, dim, dtype=float))
    head = np.ones(alpha.shape + (1,), dtype=complex)
    amps = np.concatenate([head, np.cumprod(factors, axis=-1)], axis=-1)
    return amps * np.exp(-0.5 * np.abs(alpha) ** 2)[..., np.newaxis]


def fock(dim, n):
    if not 0 <= n < dim:
        raise IndexOutOfRange(f"Fock level {n} outside 0..{dim - 1}")
    psi = np.zeros(dim, dtype=complex)
    psi[n] = 1.0
    return pure_state(psi)


def coherent(dim, alpha):
    alpha = complex(alpha)
    amps = coherent_amplitudes(dim, alpha)
    discarded = float(gammainc(dim, abs(alpha) ** 2))
    return pure_state(amps, discarded_weight=discarded, warn_above=COHERENT_WARN)


def thermal(dim, nth):
    if nth < 0:
        raise NegativeParameter(f"thermal occupancy nth = {nth} < 0")
    ratio = nth / (1.0 + nth)
    probs = (1.0 - ratio) * ratio ** np.arange(dim, dtype=float)
    discarded = float(ratio ** dim)
    probs = probs / probs.sum()
    return DensityMatrix(
        np.diag(probs).astype(complex),
        discarded_weight=discarded,
        truncation_warning=discarded > COHERENT_WARN,
    )


def cat(dim, alpha, parity=Parity.EVEN):
    """(|α⟩ ± |−α⟩)/√N± with N± = 2(1 ± e^{−2|α|²})."""
    alpha = complex(alpha)
    parity = Parity(parity)
    if dim < 2:
        raise DimensionTooSmall(f"cat states need dim ≥ 2, got {dim}")
    if parity is Parity.ODD and abs(alpha) < 1e-8:
        raise DegenerateCat(f"odd cat with |α| = {abs(alpha):.1e} has vanishing norm")

    amps = coherent_amplitudes(dim, alpha)
    levels = np.arange(dim)
    keep = levels % 2 == (0 if parity is Parity.EVEN else 1)
    psi = np.where(keep, 2.0 * amps, 0.0)

    decay = np.exp(-2.0 * abs(alpha) ** 2)
    norm_sq = 2.0 * (1.0 + decay) if parity is Parity.EVEN else -2.0 * np.expm1(-2.0 * abs(alpha) ** 2)
    psi = psi / np.sqrt(norm_sq)
    discarded = max(0.0, 1.0 - float(np.sum(np.abs(psi) ** 2)))
    return pure_state(psi, discarded_weight=discarded, warn_above=COHERENT_WARN)


def binomial(dim, N, S):
    """√(C(N+1, m)/2^{N+1}) on Fock levels m(S+1), m = 0..N+1."""
    if N < 0 or S < 0:
        raise NegativeParameter(f"binomial code needs N, S ≥ 0, got N={N}, S={S}")
    if (N + 1) * (S + 1) >= dim:
        raise DimensionTooSmall(f"binomial(N={N}, S={S}) needs dim > {(N + 1) * (S + 1)}, got {dim}")
    psi = np.zeros(dim, dtype=complex)
    for m in range(N + 2):
        psi[m * (S + 1)] = np.sqrt(comb(N + 1, m, exact=True) / 2.0 ** (N + 1))
    return pure_state(psi)


def num(dim, amplitudes):
    """Pure state from a Fock-basis amplitude vector."""
    amps = np.asarray(amplitudes, dtype=complex).ravel()
    if amps.size > dim:
        raise DimensionMismatch(f"{amps.size} amplitudes do not fit in dim {dim}")
    if not np.linalg.norm(amps) > 0:
        raise ZeroVector("num state amplitudes have zero norm")
    psi = np.zeros(dim, dtype=complex)
    psi[:amps.size] = amps
    return pure_state(psi)


def load_num_table(path=None):
    """Parse a num-state table: one line per state, name then "re,im" pairs."""
    path = Path(path) if path is not None else NUM_TABLE_PATH
    table = {}
    for raw in path.read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        name, *pairs = line.split()
        amps = []
        for pair in pairs:
            re_part, im_part = pair.split(",")
            amps.append(complex(float(re_part), float(im_part)))
        table[name] = np.array(amps, dtype=complex)
    return table


@lru_cache(maxsize=1)
def default_num_table():
    return load_num_table()


def num_named(dim, name, table=None):
    table = table if table is not None else default_num_table()
    if name not in table:
        raise InvalidInput(f"unknown num state '{name}'; known: {sorted(table)}")
    return num(dim, table[name])


def _gkp_work_dim(dim, lattice_halfwidth):
    reach = (2 * lattice_halfwidth + 1) * np.sqrt(np.pi / 2.0)
    return max(2 * dim, dim + int(np.ceil((reach + 4.0) ** 2)))


@lru_cache(maxsize=8)
def _lattice_step(work_dim):
    step = displacement_operator(BosonicOperators.build(work_dim), np.sqrt(np.pi / 2.0))
    step.setflags(write=False)
    return step


def gkp(dim, delta, logical=Logical.ZERO, lattice_halfwidth=2):
    """Finite-energy square-lattice GKP state.

    ψ ∝ Σ_s e^{−π δ² s²} D(μ_s) S(r)|0⟩, r = −ln δ, μ_s = (2s + b)√(π/2),
    evaluated in an enlarged space and truncated to dim.
    """
    logical = Logical(logical)
    if not delta > 0:
        raise NegativeParameter(f"GKP envelope delta must be > 0, got {delta}")
    if dim < 8:
        raise DimensionTooSmall(f"GKP states need dim ≥ 8, got {dim}")
    if lattice_halfwidth < 1:
        raise InvalidInput(f"lattice_halfwidth must be ≥ 1, got {lattice_halfwidth}")

    work_dim = _gkp_work_dim(dim, lattice_halfwidth)
    ops = BosonicOperators.build(work_dim)
    squeezed = squeeze_operator(ops, -np.log(delta))[:, 0]
    step = _lattice_step(work_dim)
    back = step.conj().T

    start = squeezed
    if logical is Logical.ONE:
        start = step @ start

    psi = start.copy()
    up, down = start, start
    for s in range(1, lattice_halfwidth + 1):
        weight = np.exp(-np.pi * delta ** 2 * s ** 2)
        up = step @ (step @ up)
        down = back @ (back @ down)
        psi = psi + weight * (up + down)

    total = float(np.sum(np.abs(psi) ** 2))
    kept = psi[:dim]
    discarded = max(0.0, 1.0 - float(np.sum(np.abs(kept) ** 2)) / total)
    return pure_state(kept, discarded_weight=discarded, warn_above=GKP_WARN)


def random_dm(dim, rank=None, seed=0):
    """Ginibre ensemble: ρ = GG†/Tr(GG†), G a dim×rank complex Gaussian matrix."""
    rank = dim if rank is None else rank
    if not 1 <= rank <= dim:
        raise BadRank(f"rank {rank} outside 1..{dim}")
    rng = np.random.default_rng(seed)
    g = (rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))) / np.sqrt(2.0)
    m = g @ g.conj().T
    return DensityMatrix(hermitize(m) / np.real(np.trace(m)))


# --- Diagnostics ---

def photon_distribution(rho):
    return np.real(np.diag(rho.matrix)).copy()


def mean_photon(rho):
    return float(np.dot(np.arange(rho.dim), photon_distribution(rho)))


# --- Labels ---

REQUIRED_PARAMS = {
    StateFamily.FOCK: {"n"},
    StateFamily.COHERENT: {"alpha_re", "alpha_im"},
    StateFamily.THERMAL: {"nth"},
    StateFamily.CAT: {"alpha_re", "alpha_im", "parity"},
    StateFamily.BINOMIAL: {"N", "S"},
    StateFamily.NUM: {"name"},
    StateFamily.GKP: {"delta", "logical", "lattice_halfwidth"},
    StateFamily.RANDOM_MIXED: {"rank", "seed"},
}


class StateLabel(BaseModel):
    """A state family plus the parameters it was built from."""

    model_config = ConfigDict(frozen=True)

    family: StateFamily
    params: dict[str, ParamValue] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_keys(self):
        required = REQUIRED_PARAMS[self.family]
        if set(self.params) != required:
            raise ValueError(
                f"{self.family.value} label needs params {sorted(required)}, got {sorted(self.params)}"
            )
        return self

    @property
    def alpha(self):
        return complex(self.params["alpha_re"], self.params["alpha_im"])

    def build(self, dim, table=None):
        """Reconstruct the labelled state."""
        p = self.params
        family = self.family
        if family is StateFamily.FOCK:
            return fock(dim, int(p["n"]))
        if family is StateFamily.COHERENT:
            return coherent(dim, self.alpha)
        if family is StateFamily.THERMAL:
            return thermal(dim, float(p["nth"]))
        if family is StateFamily.CAT:
            return cat(dim, self.alpha, Parity(p["parity"]))
        if family is StateFamily.BINOMIAL:
            return binomial(dim, int(p["N"]), int(p["S"]))
        if family is StateFamily.NUM:
            return num_named(dim, str(p["name"]), table)
        if family is StateFamily.GKP:
            return gkp(dim, float(p["delta"]), Logical(p["logical"]), int(p["lattice_halfwidth"]))
        return random_dm(dim, int(p["rank"]), int(p["seed"]))


# --- Batch generation ---

# Default parameter ranges (dataset defaults); integer ranges are inclusive.
DEFAULT_RANGES = {
    StateFamily.FOCK: {"n": (0, 10)},
    StateFamily.COHERENT: {"alpha_magnitude": (0.0, 3.0)},
    StateFamily.THERMAL: {"nth": (0.1, 3.0)},
    StateFamily.CAT: {"alpha_magnitude": (0.0, 3.0)},
    StateFamily.BINOMIAL: {"N": (1, 3), "S": (0, 2)},
    StateFamily.NUM: {},
    StateFamily.GKP: {"delta": (0.25, 0.45)},
    StateFamily.RANDOM_MIXED: {},
}

# Known truncation behaviour of the default ranges, copied into dataset manifests
RANGE_NOTES = {
    StateFamily.GKP: (
        "at dim 32 with lattice_halfwidth=2 every delta in [0.25, 0.45] discards more than "
        "GKP_WARN=1e-4 of the norm (about 1.1e-4 at delta=0.45 up to 0.09 at delta=0.25), "
        "so GKP records carry truncation_warning=true"
    ),
}


def default_ranges(family):
    return dict(DEFAULT_RANGES[StateFamily(family)])


class BatchSpec(BaseModel):
    """Family, parameter ranges (low, high) and fixed parameters for a batch."""

    family: StateFamily
    ranges: dict[str, tuple[float, float]] = Field(default_factory=dict)
    params: dict[str, ParamValue] = Field(default_factory=dict)

    def range_for(self, key):
        if key in self.ranges:
            return self.ranges[key]
        return DEFAULT_RANGES[self.family].get(key)


@dataclass(eq=False)
class StateBatch:
    states: list
    labels: list
    seed: int

    def __len__(self):
        return len(self.states)


def _check_ranges(spec):
    for key, (low, high) in spec.ranges.items():
        if low > high:
            raise EmptyRange(f"range for '{key}' is empty: [{low}, {high}]")


def _uniform(rng, spec, key):
    low, high = spec.range_for(key)
    return float(rng.uniform(low, high))


def _integer(rng, spec, key):
    low, high = spec.range_for(key)
    return int(rng.integers(int(low), int(high) + 1))


def _complex_amplitude(rng, spec):
    magnitude = _uniform(rng, spec, "alpha_magnitude")
    phase_range = spec.ranges.get("alpha_phase", (0.0, 2.0 * np.pi))
    phase = float(rng.uniform(*phase_range))
    alpha = magnitude * np.exp(1j * phase)
    return {"alpha_re": float(alpha.real), "alpha_im": float(alpha.imag)}


def _choice(rng, spec, key, options):
    if key in spec.params:
        return spec.params[key]
    return options[int(rng.integers(len(options)))]


def draw_label(spec, dim, rng, table=None):
    """Draw one StateLabel from a BatchSpec."""
    family = spec.family
    fixed = dict(spec.params)

    if family is StateFamily.FOCK:
        params = {"n": _integer(rng, spec, "n")}
    elif family is StateFamily.COHERENT:
        params = _complex_amplitude(rng, spec)
    elif family is StateFamily.THERMAL:
        params = {"nth": _uniform(rng, spec, "nth")}
    elif family is StateFamily.CAT:
        params = _complex_amplitude(rng, spec)
        params["parity"] = str(Parity(_choice(rng, spec, "parity", [p.value for p in Parity])).value)
    elif family is StateFamily.BINOMIAL:
        params = {"N": _integer(rng, spec, "N"), "S": _integer(rng, spec, "S")}
    elif family is StateFamily.NUM:
        table = table if table is not None else default_num_table()
        params = {"name": str(_choice(rng, spec, "name", sorted(table)))}
    elif family is StateFamily.GKP:
        params = {
            "delta": _uniform(rng, spec, "delta"),
            "logical": str(Logical(_choice(rng, spec, "logical", [q.value for q in Logical])).value),
            "lattice_halfwidth": int(fixed.get("lattice_halfwidth", 2)),
        }
    else:
        rank_range = spec.range_for("rank")
        rank = _integer(rng, spec, "rank") if rank_range is not None else int(fixed.get("rank", dim))
        params = {"rank": rank, "seed": int(rng.integers(0, 2 ** 31 - 1))}

    for key in REQUIRED_PARAMS[family]:
        if key in fixed and key not in ("parity", "logical", "name"):
            params[key] = fixed[key]
    return StateLabel(family=family, params=params)


def generate_batch(spec, n_states, dim, seed=0, table=None, workers=None):
    """n_states states with parameters drawn from spec; state i uses substream (seed, i)."""
    if n_states < 1:
        raise InvalidInput(f"n_states must be ≥ 1, got {n_states}")
    _check_ranges(spec)
    labels = [draw_label(spec, dim, substream(seed, i), table) for i in range(n_states)]
    states = parallel_map(lambda label: label.build(dim, table), labels, workers=workers)
    return StateBatch(states=states, labels=labels, seed=seed)
