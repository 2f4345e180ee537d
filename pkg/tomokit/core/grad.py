"""
Differentiation kernel shared by both solvers.

Analytic gradients of the log-likelihood and of Born expectations with
respect to the packed Cholesky parameters, a central-difference oracle,
and small dense networks with reverse-mode backpropagation.

Packing order of a ParamVector (length dim²):
    [Re T_ij for i > j] + [Im T_ij for i > j] + [T_ii]
with the strict lower triangle in row-major order (np.tril_indices(dim, -1)).
"""

from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache

import numpy as np

from tomokit.core.quantum import CholeskyParams
from tomokit.errors import DegenerateT, LengthMismatch, ShapeMismatch

DEFAULT_FLOOR = 1e-12
LEAKY_SLOPE = 0.2
SIGMOID_CLIP = 30.0


# --- Parameter packing ---

@lru_cache(maxsize=64)
def _indices(dim):
    rows, cols = np.tril_indices(dim, -1)
    return rows, cols, np.arange(dim)


def param_count(dim):
    return dim * dim


def infer_dim(n_params):
    dim = int(round(np.sqrt(n_params)))
    if dim * dim != n_params:
        raise LengthMismatch(f"{n_params} parameters is not a square count")
    return dim


def pack_params(t):
    """CholeskyParams (or raw lower-triangular matrix) -> real vector."""
    lower = _lower(t)
    rows, cols, diag = _indices(lower.shape[0])
    strict = lower[rows, cols]
    return np.concatenate([strict.real, strict.imag, lower[diag, diag].real])


def unpack_params(theta, dim=None):
    """Real vector -> lower-triangular complex matrix with a real diagonal."""
    theta = np.asarray(theta, dtype=float)
    dim = infer_dim(theta.size) if dim is None else dim
    if theta.size != param_count(dim):
        raise LengthMismatch(f"expected {param_count(dim)} parameters for dim {dim}, got {theta.size}")
    rows, cols, diag = _indices(dim)
    n_strict = rows.size
    lower = np.zeros((dim, dim), dtype=complex)
    lower[rows, cols] = theta[:n_strict] + 1j * theta[n_strict:2 * n_strict]
    lower[diag, diag] = theta[2 * n_strict:]
    return lower


def _lower(t):
    if isinstance(t, CholeskyParams):
        return t.lower
    return np.tril(np.asarray(t, dtype=complex))


def _pack_complex_grad(g):
    # d/dRe T_ij = 2 Re G_ij, d/dIm T_ij = 2 Im G_ij
    rows, cols, diag = _indices(g.shape[-1])
    strict = g[..., rows, cols]
    return 2.0 * np.concatenate([strict.real, strict.imag, g[..., diag, diag].real], axis=-1)


# --- Physics layer ---

def _gram(lower):
    m = lower @ lower.conj().T
    tau = float(np.real(np.trace(m)))
    if not tau > 1e-30:
        raise DegenerateT(f"Tr(TT†) = {tau:.3e} underflows")
    return m, tau


def probabilities(t, mset):
    """Tr(ρ(T) O_k) for every operator."""
    m, tau = _gram(_lower(t))
    return np.real(mset.transposed_flat @ m.ravel()) / tau


def _weights(data, mset):
    values = getattr(data, "counts", None)
    if values is None:
        values = getattr(data, "values", data)
    values = np.asarray(values, dtype=float).ravel()
    if values.size != len(mset):
        raise LengthMismatch(f"{values.size} outcomes for {len(mset)} operators")
    return values


def _vjp_lower(lower, mset, coeffs, probs, tau):
    # Σ_k c_k ∂p_k/∂T as a complex matrix G = (R − s I) T / τ
    r = mset.weighted_sum(coeffs)
    s = float(np.dot(coeffs, probs))
    a = (r - s * np.eye(lower.shape[0])) / tau
    return a @ lower


def loglik(t, data, mset, floor=DEFAULT_FLOOR):
    """ℓ = Σ_k n_k ln max(Tr(ρ(T) O_k), floor)."""
    weights = _weights(data, mset)
    probs = probabilities(t, mset)
    return float(np.dot(weights, np.log(np.maximum(probs, floor))))


def loglik_grad(t, data, mset, floor=DEFAULT_FLOOR):
    """Analytic gradient of loglik with respect to the packed parameters."""
    weights = _weights(data, mset)
    lower = _lower(t)
    m, tau = _gram(lower)
    probs = np.real(mset.transposed_flat @ m.ravel()) / tau
    active = probs > floor
    coeffs = np.zeros_like(probs)
    coeffs[active] = weights[active] / probs[active]
    return _pack_complex_grad(_vjp_lower(lower, mset, coeffs, probs, tau))


def expectation_jacobian(t, mset):
    """J[k, i] = ∂Tr(ρ(T) O_k)/∂θ_i."""
    lower = _lower(t)
    m, tau = _gram(lower)
    probs = np.real(mset.transposed_flat @ m.ravel()) / tau
    eye = np.eye(lower.shape[0])
    a = (mset.operators - probs[:, np.newaxis, np.newaxis] * eye) / tau
    return _pack_complex_grad(a @ lower)


def expectation_vjp(t, mset, upstream):
    """upstream · J without forming J."""
    upstream = np.asarray(upstream, dtype=float).ravel()
    if upstream.size != len(mset):
        raise LengthMismatch(f"{upstream.size} upstream entries for {len(mset)} operators")
    lower = _lower(t)
    m, tau = _gram(lower)
    probs = np.real(mset.transposed_flat @ m.ravel()) / tau
    return _pack_complex_grad(_vjp_lower(lower, mset, upstream, probs, tau))


def finite_diff_grad(f, x, h=1e-6):
    """Central differences (f(x + h e_i) − f(x − h e_i)) / 2h."""
    if not h > 0:
        raise ValueError(f"step h must be > 0, got {h}")
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    flat = grad.reshape(-1)
    for i in range(x.size):
        step = np.zeros(x.size)
        step[i] = h
        step = step.reshape(x.shape)
        flat[i] = (f(x + step) - f(x - step)) / (2.0 * h)
    return grad


# --- Dense networks ---

class Activation(str, Enum):
    LEAKY_RELU = "leaky_relu"
    SIGMOID = "sigmoid"
    IDENTITY = "identity"


def activate(kind, z):
    if kind is Activation.LEAKY_RELU:
        return np.where(z > 0, z, LEAKY_SLOPE * z)
    if kind is Activation.SIGMOID:
        return 1.0 / (1.0 + np.exp(-np.clip(z, -SIGMOID_CLIP, SIGMOID_CLIP)))
    return z


def _activation_grad(kind, z, out):
    if kind is Activation.LEAKY_RELU:
        return np.where(z > 0, 1.0, LEAKY_SLOPE)
    if kind is Activation.SIGMOID:
        # flat outside the clip
        return np.where(np.abs(z) > SIGMOID_CLIP, 0.0, out * (1.0 - out))
    return np.ones_like(z)


@dataclass(frozen=True, eq=False)
class DenseLayer:
    weights: np.ndarray
    biases: np.ndarray
    activation: Activation = Activation.IDENTITY

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        b = np.asarray(self.biases, dtype=float).ravel()
        if w.ndim != 2 or b.size != w.shape[0]:
            raise ShapeMismatch(f"weights {w.shape} and biases {b.shape} disagree")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "biases", b)
        object.__setattr__(self, "activation", Activation(self.activation))

    @property
    def n_in(self):
        return self.weights.shape[1]

    @property
    def n_out(self):
        return self.weights.shape[0]


@dataclass(frozen=True, eq=False)
class Tape:
    """Per-layer (layer, input, pre-activation, output) from one forward pass."""

    entries: list = field(default_factory=list)


def dense_forward(layers, x):
    a = np.asarray(x, dtype=float).ravel()
    entries = []
    for i, layer in enumerate(layers):
        if a.size != layer.n_in:
            raise ShapeMismatch(f"layer {i} expects {layer.n_in} inputs, got {a.size}")
        z = layer.weights @ a + layer.biases
        out = activate(layer.activation, z)
        entries.append((layer, a, z, out))
        a = out
    return a, Tape(entries)


def dense_backward(tape, upstream_grad):
    """Returns ([(dW, db) per layer], dInput)."""
    g = np.asarray(upstream_grad, dtype=float).ravel()
    if tape.entries and g.size != tape.entries[-1][0].n_out:
        raise ShapeMismatch(f"upstream gradient of size {g.size} for output width {tape.entries[-1][0].n_out}")
    grads = []
    for layer, a_in, z, out in reversed(tape.entries):
        g_pre = g * _activation_grad(layer.activation, z, out)
        grads.append((np.outer(g_pre, a_in), g_pre))
        g = layer.weights.T @ g_pre
    grads.reverse()
    return grads, g


def init_dense_layers(sizes, activations, rng):
    """Glorot-uniform weights, zero biases."""
    if len(activations) != len(sizes) - 1:
        raise ShapeMismatch(f"{len(sizes) - 1} layers need as many activations, got {len(activations)}")
    layers = []
    for n_in, n_out, act in zip(sizes[:-1], sizes[1:], activations):
        limit = np.sqrt(6.0 / (n_in + n_out))
        layers.append(DenseLayer(
            weights=rng.uniform(-limit, limit, size=(n_out, n_in)),
            biases=np.zeros(n_out),
            activation=Activation(act),
        ))
    return layers


def layer_params(layers):
    """Flatten layers into a [W0, b0, W1, b1, ...] list."""
    params = []
    for layer in layers:
        params.extend([layer.weights, layer.biases])
    return params


def with_params(layers, params):
    return [
        replace(layer, weights=params[2 * i], biases=params[2 * i + 1])
        for i, layer in enumerate(layers)
    ]


def flatten_grads(grads):
    flat = []
    for dw, db in grads:
        flat.extend([dw, db])
    return flat


# --- Optimizers ---

@dataclass(frozen=True, eq=False)
class AdamState:
    m: list
    v: list
    step: int = 0

    @classmethod
    def zeros_like(cls, params):
        return cls(m=[np.zeros_like(p) for p in params], v=[np.zeros_like(p) for p in params])


def _check_shapes(params, grads):
    if len(params) != len(grads):
        raise ShapeMismatch(f"{len(params)} parameter arrays but {len(grads)} gradients")
    for p, g in zip(params, grads):
        if np.shape(p) != np.shape(g):
            raise ShapeMismatch(f"parameter shape {np.shape(p)} vs gradient shape {np.shape(g)}")


def adam_step(params, grads, state, lr=0.01, beta1=0.9, beta2=0.999, eps=1e-8):
    """One bias-corrected Adam descent step; returns (params', state')."""
    _check_shapes(params, grads)
    if not lr > 0:
        raise ValueError(f"learning rate must be > 0, got {lr}")
    step = state.step + 1
    new_params, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        m_hat = m / (1.0 - beta1 ** step)
        v_hat = v / (1.0 - beta2 ** step)
        new_params.append(p - lr * m_hat / (np.sqrt(v_hat) + eps))
        new_m.append(m)
        new_v.append(v)
    return new_params, AdamState(m=new_m, v=new_v, step=step)


def sgd_step(params, grads, lr=0.01):
    _check_shapes(params, grads)
    return [p - lr * g for p, g in zip(params, grads)]
