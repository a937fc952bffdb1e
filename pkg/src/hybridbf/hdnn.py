"""Hybrid digital/analog networks and their phase-shifter realization.

An :class:`HdnnModel` is a digital network and an analog network joined
at an RF-chain boundary of width ``n_rf``. Training treats the pair as
one network; afterwards :func:`realize_adnn` maps every analog layer onto
two unit-modulus phase-shifter banks fed through 1:2 power dividers and a
2:1 combiner.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .beamforming import UnitModulusDecomposition, decompose_unit_modulus
from .cvnn import CvnnNetwork, chain_specs, forward, init_network
from .errors import DimensionMismatch, InvalidPreset, OddStreams
from .numerics import RngStream

DIRECTIONS = ("downlink", "uplink")

# hidden-layer count and width multiplier for each side of the RF boundary
PRESETS = {
    "standard": {"digital_layers": 5, "digital_width": 2, "analog_layers": 1, "analog_width": 3},
    "half_rf": {"digital_layers": 4, "digital_width": 2, "analog_layers": 4, "analog_width": 6},
}


@dataclass
class AdnnLayer:
    decomposition: UnitModulusDecomposition  # of the augmented matrix [A, b]
    scale: float  # 1 / (2 c)
    bias_level: float  # amplitude of the constant carrier fed as the extra input
    activation: str
    slope: float


@dataclass
class AdnnRealization:
    layers: list[AdnnLayer]
    cumulative_scale: float

    @property
    def in_dim(self) -> int:
        return self.layers[0].decomposition.r1.shape[1] - 1

    @property
    def out_dim(self) -> int:
        return self.layers[-1].decomposition.r1.shape[0]


@dataclass
class HdnnModel:
    digital: CvnnNetwork
    analog: CvnnNetwork
    n_rf: int
    direction: str = "downlink"
    preset: str = "standard"
    realization: AdnnRealization | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise ValueError(f"direction must be one of {DIRECTIONS}")
        if self.direction == "downlink":
            ok = self.digital.out_dim == self.n_rf == self.analog.in_dim
        else:
            ok = self.analog.out_dim == self.n_rf == self.digital.in_dim
        if not ok:
            raise DimensionMismatch("digital and analog networks do not meet at n_rf")

    @property
    def stages(self) -> list[CvnnNetwork]:
        """Networks in signal-flow order."""
        if self.direction == "downlink":
            return [self.digital, self.analog]
        return [self.analog, self.digital]

    def network(self) -> CvnnNetwork:
        """Single network sharing this model's layer objects (for training)."""
        first, second = self.stages
        return CvnnNetwork(first.layers + second.layers)

    @property
    def in_dim(self) -> int:
        return self.stages[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.stages[1].out_dim


def _preset_widths(preset: str, n_ant: int, n_s: int):
    cfg = PRESETS[preset]
    digital = [cfg["digital_width"] * n_s] * cfg["digital_layers"]
    analog = [cfg["analog_width"] * n_ant] * cfg["analog_layers"]
    return digital, analog


def build_hdnn(
    preset: str,
    n_ant: int,
    n_s: int,
    n_rf: int | None = None,
    rng: RngStream | None = None,
    direction: str = "downlink",
    digital_activation: str = "cprelu",
    analog_activation: str = "cprelu",
) -> HdnnModel:
    """Randomly initialized HDNN for ``n_ant`` BS antennas and ``n_s`` streams.

    ``standard`` puts ``n_rf = n_s`` RF chains between five hidden digital
    layers of width ``2 n_s`` and one analog hidden layer of width
    ``3 n_ant``. ``half_rf`` (downlink only) uses ``n_s / 2`` chains, four
    digital layers of width ``2 n_s`` and four analog layers of width
    ``6 n_ant``. For uplink the analog stage comes first.
    """
    if preset not in PRESETS:
        raise InvalidPreset(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}")
    if n_ant < 1 or n_s < 1:
        raise ValueError("n_ant and n_s must be >= 1")
    if preset == "half_rf":
        if direction == "uplink":
            raise InvalidPreset("half_rf is only defined for the downlink")
        if n_s % 2:
            raise OddStreams(f"half_rf needs an even stream count, got n_s={n_s}")
        if n_rf is not None and n_rf != n_s // 2:
            raise InvalidPreset("half_rf fixes n_rf = n_s / 2")
        n_rf = n_s // 2
    else:
        n_rf = n_s if n_rf is None else n_rf
        if n_rf < n_s:
            raise InvalidPreset("standard preset needs n_rf >= n_s")
    rng = rng if rng is not None else RngStream(0)
    dig_hidden, ana_hidden = _preset_widths(preset, n_ant, n_s)
    if direction == "downlink":
        dig_widths = [n_s] + dig_hidden + [n_rf]
        ana_widths = [n_rf] + ana_hidden + [n_ant]
    else:
        ana_widths = [n_ant] + ana_hidden + [n_rf]
        dig_widths = [n_rf] + dig_hidden + [n_s]
    digital = init_network(chain_specs(dig_widths, digital_activation), rng.child(0))
    analog = init_network(chain_specs(ana_widths, analog_activation), rng.child(1))
    return HdnnModel(
        digital=digital,
        analog=analog,
        n_rf=n_rf,
        direction=direction,
        preset=preset,
        metadata={"init_seed": rng.seed, "init_spawn_key": list(rng.spawn_key)},
    )


def hdnn_forward(model: HdnnModel, s):
    """Unconstrained forward pass; RF conversion is identity in baseband."""
    first, second = model.stages
    return forward(second, forward(first, s)[0])[0]


def realize_adnn(analog: CvnnNetwork) -> AdnnRealization:
    """Phase-shifter realization of every layer of ``analog``.

    Layer ``l`` outputs ``s_l (A_l x + b_l)`` with ``s_l = 1/(2 c_l)``.
    The constant bias input of layer ``l`` is driven at the product of
    the earlier layer scales so the whole network stays proportional to
    the source, with factor ``prod(s_l)``.
    """
    layers = []
    level = 1.0
    for layer in analog.layers:
        if layer.activation not in ("crelu", "cprelu", "linear"):
            raise ValueError(f"activation {layer.activation!r} is not positively homogeneous")
        aug = np.hstack([layer.weight, layer.bias[:, None]])
        dec = decompose_unit_modulus(aug)
        scale = 1.0 / (2.0 * dec.c)
        layers.append(AdnnLayer(dec, scale, level, layer.activation, float(layer.slope[0])))
        level *= scale
    return AdnnRealization(layers=layers, cumulative_scale=level)


def cumulative_scale_from_layers(real: AdnnRealization) -> float:
    out = 1.0
    for layer in real.layers:
        out *= 1.0 / (2.0 * layer.decomposition.c)
    return out


def adnn_forward(real: AdnnRealization, x_rf):
    """Simulate the divider / phase-shifter / combiner network exactly.

    Each branch sees the augmented input attenuated by 1/sqrt(2) at the
    divider and the combiner adds another 1/sqrt(2); no scale is undone.
    """
    x = np.asarray(x_rf, dtype=np.complex128)
    single = x.ndim == 1
    h = x[None, :] if single else x
    if h.shape[-1] != real.in_dim:
        raise DimensionMismatch(f"input length {h.shape[-1]} != {real.in_dim}")
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    for layer in real.layers:
        bias_col = np.full((h.shape[0], 1), layer.bias_level, dtype=np.complex128)
        xa = np.hstack([h, bias_col]) * inv_sqrt2
        dec = layer.decomposition
        r = (xa @ dec.r1.T + xa @ dec.r2.T) * inv_sqrt2
        if layer.activation == "crelu":
            h = np.maximum(r.real, 0.0) + 1j * np.maximum(r.imag, 0.0)
        elif layer.activation == "cprelu":
            a = layer.slope
            h = np.where(r.real < 0, a * r.real, r.real) + 1j * np.where(r.imag < 0, a * r.imag, r.imag)
        else:
            h = r
    return h[0] if single else h


def realize(model: HdnnModel) -> HdnnModel:
    """Attach the analog realization to ``model`` (in place) and return it."""
    model.realization = realize_adnn(model.analog)
    return model


def hdnn_apply(model: HdnnModel, s, realized: bool = True):
    """Transceiver map with the realized analog stage and digital scale compensation.

    The realized analog output carries ``cumulative_scale``; it is undone
    with gain ``1/cumulative_scale`` at the digital side of the RF chains
    (uplink) or at the transmit output (downlink).
    """
    if not realized:
        return hdnn_forward(model, s)
    real = model.realization if model.realization is not None else realize_adnn(model.analog)
    g = 1.0 / real.cumulative_scale
    if model.direction == "downlink":
        return g * adnn_forward(real, forward(model.digital, s)[0])
    return forward(model.digital, g * adnn_forward(real, s))[0]
