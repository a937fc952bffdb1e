"""Per-channel supervised datasets and the mini-batch Adam training loop."""

from __future__ import annotations

import logging
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .beamforming import FdCombiner, FdPrecoder
from .cvnn import AdamState, adam_step, backward, flatten_grads, flatten_params, forward, mae_loss
from .errors import DimensionMismatch, DivergenceDetected
from .hdnn import HdnnModel
from .modulation import random_symbols
from .numerics import RngStream, complex_gaussian

log = logging.getLogger(__name__)

MIN_SLOPE = 1e-4
# shuffles come from RngStream(cfg.seed).child(SHUFFLE_KEY).child(epoch)
SHUFFLE_KEY = 2


@dataclass(frozen=True)
class TrainConfig:
    n_samples: int = 500_000
    batch_size: int = 50
    epochs: int = 5
    learning_rate: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if min(self.n_samples, self.batch_size, self.epochs) < 1:
            raise ValueError("n_samples, batch_size and epochs must be >= 1")
        if self.batch_size > self.n_samples:
            raise ValueError("batch_size exceeds n_samples")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Dataset:
    inputs: np.ndarray  # (n, in_dim)
    targets: np.ndarray  # (n, out_dim)
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.inputs) != len(self.targets):
            raise DimensionMismatch("inputs and targets differ in count")

    def __len__(self) -> int:
        return len(self.inputs)


@dataclass
class TrainResult:
    model: HdnnModel
    epoch_losses: list[float]
    epoch_seconds: list[float]

    @property
    def final_loss(self) -> float:
        return self.epoch_losses[-1]


def make_downlink_dataset(p: FdPrecoder | np.ndarray, n: int, rng: RngStream) -> Dataset:
    """Pairs ``(s, P s)`` with ``s`` uniform 4-QAM."""
    pm = np.asarray(getattr(p, "p", p))
    s = random_symbols(n, pm.shape[1], rng)
    return Dataset(
        s,
        s @ pm.T,
        {"direction": "downlink", "seed": rng.seed, "spawn_key": list(rng.spawn_key)},
    )


def make_uplink_dataset(c: FdCombiner | np.ndarray, rho: float, n: int, rng: RngStream) -> Dataset:
    """Pairs ``(y, C y)`` with ``y = rho z + noise``, both CN(0, I)."""
    if not rho > 0:
        raise ValueError("rho must be positive")
    cm = np.asarray(getattr(c, "c", c))
    n_rx = cm.shape[1]
    y = rho * complex_gaussian((n, n_rx), rng.child(0)) + complex_gaussian((n, n_rx), rng.child(1))
    return Dataset(
        y,
        y @ cm.T,
        {"direction": "uplink", "rho": rho, "seed": rng.seed, "spawn_key": list(rng.spawn_key)},
    )


def train(model: HdnnModel, data: Dataset, cfg: TrainConfig, progress=None) -> TrainResult:
    """Mini-batch Adam on the MAE loss over the joint digital + analog parameters.

    The model is updated in place. Each epoch visits a fresh permutation
    drawn from a dedicated child of ``RngStream(cfg.seed)``; a trailing
    partial batch is dropped.
    """
    net = model.network()
    if data.inputs.shape[1] != net.in_dim or data.targets.shape[1] != net.out_dim:
        raise DimensionMismatch(
            f"dataset dims {data.inputs.shape[1]}->{data.targets.shape[1]} "
            f"do not match model {net.in_dim}->{net.out_dim}"
        )
    n = min(len(data), cfg.n_samples)
    n_batches = n // cfg.batch_size
    flat = flatten_params(net)
    state = AdamState(lr=cfg.learning_rate)
    slopes = [layer.slope for layer in net.layers if layer.activation == "cprelu"]
    root = RngStream(cfg.seed).child(SHUFFLE_KEY)
    losses, seconds = [], []
    for epoch in range(cfg.epochs):
        t0 = time.perf_counter()
        order = root.child(epoch).gen.permutation(n)
        total = 0.0
        for b in range(n_batches):
            idx = order[b * cfg.batch_size:(b + 1) * cfg.batch_size]
            y, cache = forward(net, data.inputs[idx])
            loss, grad = mae_loss(y, data.targets[idx])
            if not np.isfinite(loss):
                raise DivergenceDetected(f"non-finite loss at epoch {epoch}, batch {b}")
            adam_step([flat], [flatten_grads(backward(net, cache, grad))], state)
            for s in slopes:
                np.maximum(s, MIN_SLOPE, out=s)
            total += loss
        losses.append(total / n_batches)
        seconds.append(time.perf_counter() - t0)
        log.info("epoch %d loss %.6g (%.1fs)", epoch, losses[-1], seconds[-1])
        if progress is not None:
            progress(epoch, losses[-1])
    model.realization = None
    model.metadata.update(
        {"train": cfg.to_dict(), "epoch_losses": losses, "data": data.provenance}
    )
    return TrainResult(model, losses, seconds)
