"""Complex-valued feed-forward networks with split-complex backprop.

Gradients of a real loss ``L`` with respect to a complex array ``w`` are
stored as ``dL/dRe(w) + 1j * dL/dIm(w)``, i.e. every complex parameter is
treated as two independent real parameters. Batches are row-major: an
input batch has shape ``(n_samples, in_dim)``.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch
from .numerics import RngStream

ACTIVATIONS = ("crelu", "cprelu", "linear")
DEFAULT_SLOPE = 0.5


def _components(z) -> np.ndarray:
    """Interleaved (re, im) float view of a contiguous complex array."""
    return np.ascontiguousarray(z, dtype=np.complex128).view(np.float64)


def crelu(z):
    out = np.maximum(_components(z), 0.0).view(np.complex128)
    return out.reshape(np.shape(z))


def cprelu(z, a: float):
    v = _components(z)
    out = np.where(v < 0, a * v, v).view(np.complex128)
    return out.reshape(np.shape(z))


@dataclass(frozen=True)
class LayerSpec:
    in_dim: int
    out_dim: int
    activation: str = "linear"

    def __post_init__(self):
        if self.in_dim < 1 or self.out_dim < 1:
            raise ValueError("layer dims must be >= 1")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")


@dataclass
class Layer:
    weight: np.ndarray  # (out, in) complex
    bias: np.ndarray  # (out,) complex
    activation: str = "linear"
    slope: np.ndarray = field(default_factory=lambda: np.array([DEFAULT_SLOPE]))

    @property
    def spec(self) -> LayerSpec:
        out_dim, in_dim = self.weight.shape
        return LayerSpec(in_dim, out_dim, self.activation)

    def activate(self, z):
        if self.activation == "crelu":
            return crelu(z)
        if self.activation == "cprelu":
            return cprelu(z, self.slope[0])
        return z


@dataclass
class CvnnNetwork:
    layers: list[Layer]

    def __post_init__(self):
        if not self.layers:
            raise ValueError("network needs at least one layer")
        for a, b in zip(self.layers, self.layers[1:]):
            if a.weight.shape[0] != b.weight.shape[1]:
                raise DimensionMismatch(
                    f"layer dims do not chain: {a.weight.shape} -> {b.weight.shape}"
                )
        for layer in self.layers:
            if layer.activation == "cprelu" and not layer.slope[0] > 0:
                raise ValueError("PReLU slope must be positive")

    @property
    def in_dim(self) -> int:
        return self.layers[0].weight.shape[1]

    @property
    def out_dim(self) -> int:
        return self.layers[-1].weight.shape[0]

    @property
    def widths(self) -> list[int]:
        return [self.in_dim] + [layer.weight.shape[0] for layer in self.layers]

    @property
    def specs(self) -> list[LayerSpec]:
        return [layer.spec for layer in self.layers]

    def params(self) -> list[np.ndarray]:
        """Trainable arrays in a fixed order; gradients use the same order."""
        out = []
        for layer in self.layers:
            out += [layer.weight, layer.bias]
            if layer.activation == "cprelu":
                out.append(layer.slope)
        return out

    def copy(self) -> "CvnnNetwork":
        return copy.deepcopy(self)

    def __call__(self, x):
        return forward(self, x)[0]


def init_network(specs: list[LayerSpec], rng: RngStream, slope: float = DEFAULT_SLOPE) -> CvnnNetwork:
    """Complex Glorot initialization: each real component ~ N(0, 1/(in+out))."""
    layers = []
    for spec in specs:
        std = np.sqrt(1.0 / (spec.in_dim + spec.out_dim))
        shape = (spec.out_dim, spec.in_dim)
        w = std * (rng.gen.standard_normal(shape) + 1j * rng.gen.standard_normal(shape))
        layers.append(
            Layer(
                weight=np.ascontiguousarray(w),
                bias=np.zeros(spec.out_dim, dtype=np.complex128),
                activation=spec.activation,
                slope=np.array([slope], dtype=float),
            )
        )
    return CvnnNetwork(layers)


def chain_specs(widths: list[int], hidden: str, output: str = "linear") -> list[LayerSpec]:
    """Specs for an MLP with the given widths; only the last layer uses ``output``."""
    n = len(widths) - 1
    return [
        LayerSpec(widths[i], widths[i + 1], output if i == n - 1 else hidden)
        for i in range(n)
    ]


def forward(net: CvnnNetwork, x):
    """Evaluate the network; returns ``(y, cache)``.

    ``x`` may be a single vector or a batch of row vectors. The cache
    holds per-layer inputs and pre-activations for :func:`backward`.
    """
    x = np.asarray(x, dtype=np.complex128)
    single = x.ndim == 1
    h = x[None, :] if single else x
    if h.shape[-1] != net.in_dim:
        raise DimensionMismatch(f"input length {h.shape[-1]} != {net.in_dim}")
    cache = []
    for layer in net.layers:
        z = h @ layer.weight.T + layer.bias
        cache.append((h, z))
        h = layer.activate(z)
    return (h[0] if single else h), cache


def _activation_grad(layer: Layer, z, g):
    """Backprop ``g`` through the activation; returns (dz, dslope)."""
    if layer.activation == "linear":
        return g, None
    zv, gv = _components(z), _components(g)
    neg = zv < 0
    if layer.activation == "crelu":
        return np.where(neg, 0.0, gv).view(np.complex128), None
    a = layer.slope[0]
    dz = np.where(neg, a * gv, gv).view(np.complex128)
    dslope = np.dot(gv[neg], zv[neg])
    return dz, np.array([dslope])


def backward(net: CvnnNetwork, cache, output_grad, return_input_grad: bool = False):
    """Parameter gradients given ``dL/dy`` in split-complex form.

    Returns a list aligned with ``net.params()``; with
    ``return_input_grad`` also returns ``dL/dx``.
    """
    g = np.asarray(output_grad, dtype=np.complex128)
    if g.ndim == 1:
        g = g[None, :]
    grads: list[np.ndarray] = []
    for layer, (h, z) in zip(reversed(net.layers), reversed(cache)):
        dz, dslope = _activation_grad(layer, z, g)
        layer_grads = [dz.T @ h.conj(), dz.sum(axis=0)]
        if layer.activation == "cprelu":
            layer_grads.append(dslope)
        grads = layer_grads + grads
        g = dz @ layer.weight.conj()
    if return_input_grad:
        return grads, g
    return grads


def mae_loss(y_hat, y_target):
    """Mean complex modulus of the error and its split-complex gradient.

    The mean runs over every entry of the batch; the subgradient is zero
    where the error is exactly zero.
    """
    e = np.asarray(y_hat, dtype=np.complex128) - np.asarray(y_target, dtype=np.complex128)
    if e.size == 0:
        raise DimensionMismatch("empty input")
    mag = np.abs(e)
    safe = np.where(mag > 0, mag, 1.0)
    grad = np.where(mag > 0, e / safe, 0.0) / e.size
    return float(mag.mean()), grad


def e2e_loss(net: CvnnNetwork, s, c_fixed, h_fixed):
    """Link loss ``||C H net(s) - s||_2`` and parameter gradients.

    For a batch of symbol vectors the loss is the mean of the per-sample
    norms.
    """
    s = np.asarray(s, dtype=np.complex128)
    single = s.ndim == 1
    sb = s[None, :] if single else s
    m = np.asarray(c_fixed) @ np.asarray(h_fixed)
    if m.shape != (sb.shape[1], net.out_dim):
        raise DimensionMismatch(
            f"C H has shape {m.shape}, expected {(sb.shape[1], net.out_dim)}"
        )
    y, cache = forward(net, sb)
    r = y @ m.T - sb
    norms = np.linalg.norm(r, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    g_r = np.where(norms[:, None] > 0, r / safe[:, None], 0.0) / len(sb)
    grads = backward(net, cache, g_r @ m.conj())
    return float(norms.mean()), grads


def flatten_params(net: CvnnNetwork) -> np.ndarray:
    """Move every trainable array into one contiguous float buffer.

    The layers are rebound to views of the buffer, so updating the buffer
    updates the network. Complex arrays occupy interleaved (re, im) slots.
    """
    chunks = [_real_view(np.ascontiguousarray(p)).ravel() for p in net.params()]
    flat = np.concatenate(chunks)
    offset = 0
    for layer in net.layers:
        for name in ("weight", "bias", "slope"):
            if name == "slope" and layer.activation != "cprelu":
                continue
            arr = getattr(layer, name)
            n = arr.size * (2 if np.iscomplexobj(arr) else 1)
            view = flat[offset:offset + n]
            if np.iscomplexobj(arr):
                view = view.view(np.complex128)
            setattr(layer, name, view.reshape(arr.shape))
            offset += n
    return flat


def flatten_grads(grads: list[np.ndarray]) -> np.ndarray:
    return np.concatenate([_real_view(np.ascontiguousarray(g)).ravel() for g in grads])


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list[np.ndarray] | None = None
    v: list[np.ndarray] | None = None


def _real_view(a: np.ndarray) -> np.ndarray:
    return a.view(np.float64) if np.iscomplexobj(a) else a


def adam_step(params: list[np.ndarray], grads: list[np.ndarray], state: AdamState) -> AdamState:
    """In-place Adam update, applied independently to each real component."""
    if len(params) != len(grads):
        raise DimensionMismatch("params and grads differ in length")
    if state.m is None:
        state.m = [np.zeros(_real_view(p).shape) for p in params]
        state.v = [np.zeros(_real_view(p).shape) for p in params]
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    bc1 = 1.0 - b1**state.step
    bc2 = 1.0 - b2**state.step
    for p, g, m, v in zip(params, grads, state.m, state.v):
        pr = _real_view(p)
        gr = _real_view(np.ascontiguousarray(g, dtype=p.dtype)).reshape(pr.shape)
        m *= b1
        m += (1.0 - b1) * gr
        v *= b2
        v += (1.0 - b2) * gr * gr
        pr -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return state
