"""Clustered narrowband mmWave channel with uniform linear arrays."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .numerics import RngStream, complex_gaussian, laplacian_angle

DEFAULT_SPREAD = np.deg2rad(10.0)


@dataclass(frozen=True)
class ChannelParams:
    n_tx: int
    n_rx: int
    n_clusters: int = 5
    n_rays: int = 10
    spread: float = DEFAULT_SPREAD
    seed: int = 0

    def __post_init__(self):
        for name in ("n_tx", "n_rx", "n_clusters", "n_rays"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not self.spread > 0:
            raise ValueError("spread must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ChannelRealization:
    h: np.ndarray  # n_rx x n_tx
    params: ChannelParams
    cluster_means_tx: np.ndarray
    cluster_means_rx: np.ndarray
    ray_angles_tx: np.ndarray  # (n_clusters, n_rays)
    ray_angles_rx: np.ndarray
    gains: np.ndarray  # (n_clusters, n_rays) complex
    spawn_key: tuple[int, ...] = ()

    @property
    def shape(self) -> tuple[int, int]:
        return self.h.shape


def array_response(phi, n: int) -> np.ndarray:
    """Half-wavelength ULA steering vector(s), unit norm.

    ``phi`` may be an array; the antenna index is the last axis.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    k = np.arange(n)
    phi = np.asarray(phi, dtype=float)
    return np.exp(1j * np.pi * np.multiply.outer(np.sin(phi), k)) / np.sqrt(n)


def channel_matrix(gains, angles_rx, angles_tx, n_rx: int, n_tx: int) -> np.ndarray:
    """Sum of ray outer products, scaled so that E||H||_F^2 = n_tx * n_rx."""
    gains = np.ravel(gains)
    a_r = array_response(np.ravel(angles_rx), n_rx)  # (paths, n_rx)
    a_t = array_response(np.ravel(angles_tx), n_tx)
    scale = np.sqrt(n_tx * n_rx / gains.size)
    return scale * (a_r.T * gains) @ a_t.conj()


def generate_channel(params: ChannelParams, rng: RngStream | None = None) -> ChannelRealization:
    """Draw one realization; with ``rng=None`` the stream is seeded from ``params.seed``."""
    if rng is None:
        rng = RngStream(params.seed)
    nc, nr = params.n_clusters, params.n_rays
    means_tx = rng.gen.uniform(0.0, 2 * np.pi, nc)
    means_rx = rng.gen.uniform(0.0, 2 * np.pi, nc)
    ang_tx = laplacian_angle(means_tx[:, None], params.spread, rng, size=(nc, nr))
    ang_rx = laplacian_angle(means_rx[:, None], params.spread, rng, size=(nc, nr))
    ang_tx = np.mod(ang_tx, 2 * np.pi)
    ang_rx = np.mod(ang_rx, 2 * np.pi)
    gains = complex_gaussian((nc, nr), rng)
    h = channel_matrix(gains, ang_rx, ang_tx, params.n_rx, params.n_tx)
    return ChannelRealization(
        h=h,
        params=params,
        cluster_means_tx=means_tx,
        cluster_means_rx=means_rx,
        ray_angles_tx=ang_tx,
        ray_angles_rx=ang_rx,
        gains=gains,
        spawn_key=rng.spawn_key,
    )


def generate_channels(params: ChannelParams, count: int) -> list[ChannelRealization]:
    """``count`` realizations, channel ``i`` drawn from child stream ``i``."""
    root = RngStream(params.seed)
    return [generate_channel(params, root.child(i)) for i in range(count)]
