"""Gray-mapped 4-QAM with unit average symbol energy."""

import numpy as np

from .numerics import RngStream

# bit pair (b0, b1) -> ((1 - 2 b0) + 1j (1 - 2 b1)) / sqrt(2); index = 2 b0 + b1
QAM4 = np.array([1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j]) / np.sqrt(2.0)


def qam4_map(bits):
    """Map bits of shape (..., 2) to symbols of shape (...)."""
    b = np.asarray(bits, dtype=int)
    return ((1 - 2 * b[..., 0]) + 1j * (1 - 2 * b[..., 1])) / np.sqrt(2.0)


def qam4_detect(z):
    """Per-axis sign decision; returns bits of shape (..., 2)."""
    z = np.asarray(z)
    return np.stack([(z.real < 0).astype(np.int8), (z.imag < 0).astype(np.int8)], axis=-1)


def random_bits(shape, rng: RngStream) -> np.ndarray:
    return rng.gen.integers(0, 2, size=tuple(shape) + (2,), dtype=np.int8)


def random_symbols(n: int, n_s: int, rng: RngStream) -> np.ndarray:
    """``n`` i.i.d. uniform 4-QAM symbol vectors of length ``n_s``."""
    return QAM4[rng.gen.integers(0, 4, size=(n, n_s))]
