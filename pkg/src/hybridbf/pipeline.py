"""Experiment orchestration: one trained model per (channel, SNR) cell."""

from __future__ import annotations

import logging

from .beamforming import fd_combiner, fd_precoder
from .channel import ChannelRealization
from .hdnn import HdnnModel, build_hdnn, realize
from .numerics import RngStream, db2lin, derive_seed
from .trainer import TrainConfig, TrainResult, make_downlink_dataset, make_uplink_dataset, train

log = logging.getLogger(__name__)

# training seeds live under their own key prefix so they never coincide with
# evaluation streams, which are keyed ``(channel_index, snr_index)``
TRAIN_NAMESPACE = 1


def stream_count(direction: str, h) -> tuple[int, int]:
    """(BS antenna count, default stream count) for a channel matrix."""
    rows, cols = h.shape
    return (cols, rows) if direction == "downlink" else (rows, cols)


def train_cell(
    channel: ChannelRealization,
    snr_db: float,
    direction: str,
    preset: str,
    train_cfg: TrainConfig,
    seed: int,
    n_s: int | None = None,
    channel_id: str = "",
    n_rf: int | None = None,
    activations: tuple[str, str] = ("cprelu", "cprelu"),
) -> TrainResult:
    """Build, train and realize one HDNN for ``channel`` at ``snr_db``.

    ``seed`` fixes everything: init uses ``RngStream(seed).child(0)``, the
    dataset ``child(1)``, and epoch shuffles ``child(2)``.
    """
    h = channel.h
    rho = float(db2lin(snr_db))
    n_ant, default_ns = stream_count(direction, h)
    n_s = n_s or default_ns
    root = RngStream(seed)
    model = build_hdnn(
        preset, n_ant, n_s, n_rf=n_rf, rng=root.child(0), direction=direction,
        digital_activation=activations[0], analog_activation=activations[1],
    )
    if direction == "downlink":
        data = make_downlink_dataset(fd_precoder(h, n_s, rho), train_cfg.n_samples, root.child(1))
    else:
        data = make_uplink_dataset(fd_combiner(h, n_s), rho, train_cfg.n_samples, root.child(1))
    cfg = TrainConfig(
        n_samples=train_cfg.n_samples,
        batch_size=train_cfg.batch_size,
        epochs=train_cfg.epochs,
        learning_rate=train_cfg.learning_rate,
        seed=seed,
    )
    result = train(model, data, cfg)
    realize(model)
    model.metadata.update({"channel_id": channel_id, "snr_db": float(snr_db), "rho": rho, "seed": seed})
    return result


def train_grid(
    channels: dict[str, ChannelRealization],
    snr_grid_db,
    direction: str,
    preset: str,
    train_cfg: TrainConfig,
    seed: int,
    n_s: int | None = None,
    n_rf: int | None = None,
    progress=None,
) -> dict[tuple[str, float], HdnnModel]:
    """Train every (channel, SNR) cell.

    Cell ``(i, j)`` (channels in sorted-id order) is trained from
    ``derive_seed(seed, TRAIN_NAMESPACE, i, j)``.
    """
    models = {}
    for i, cid in enumerate(sorted(channels)):
        for j, snr in enumerate(snr_grid_db):
            cell_seed = derive_seed(seed, TRAIN_NAMESPACE, i, j)
            res = train_cell(channels[cid], snr, direction, preset, train_cfg, cell_seed, n_s, cid, n_rf)
            res.model.metadata["master_seed"] = seed
            res.model.metadata["cell_key"] = [TRAIN_NAMESPACE, i, j]
            models[(cid, float(snr))] = res.model
            log.info("trained %s @ %g dB: final loss %.4g", cid, snr, res.final_loss)
            if progress is not None:
                progress(cid, snr, res)
    return models
