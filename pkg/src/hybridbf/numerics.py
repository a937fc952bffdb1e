"""Complex linear algebra, water-filling and seeded random sampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFailure


class RngStream:
    """Seeded PCG64 stream; children are derived by seed splitting.

    Identical seeds give identical sequences on every platform numpy
    supports, because PCG64 and SeedSequence are specified bit-exactly.
    """

    def __init__(self, seed: int, spawn_key: tuple[int, ...] = ()):
        if seed < 0 or seed >= 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.seed = int(seed)
        self.spawn_key = tuple(int(k) for k in spawn_key)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=self.spawn_key)
        self.gen = np.random.Generator(np.random.PCG64(ss))

    def child(self, index: int) -> "RngStream":
        """Independent stream for sub-task ``index``; does not consume state."""
        return RngStream(self.seed, self.spawn_key + (int(index),))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, spawn_key={self.spawn_key})"


def as_rng(rng: RngStream | int) -> RngStream:
    return rng if isinstance(rng, RngStream) else RngStream(int(rng))


def complex_gaussian(n, rng: RngStream) -> np.ndarray:
    """Draw CN(0, 1) samples; ``n`` may be an int or a shape tuple."""
    shape = (n,) if np.isscalar(n) else tuple(n)
    if any(d < 1 for d in shape):
        raise ValueError("sample count must be positive")
    re = rng.gen.standard_normal(shape)
    im = rng.gen.standard_normal(shape)
    return (re + 1j * im) * np.sqrt(0.5)


def laplacian_angle(mean, spread: float, rng: RngStream, size=None):
    """Laplacian sample whose standard deviation equals ``spread``.

    The Laplace scale is ``spread / sqrt(2)`` since its variance is 2 b^2.
    """
    if spread <= 0:
        raise ValueError("spread must be positive")
    return rng.gen.laplace(loc=mean, scale=spread / np.sqrt(2.0), size=size)


@dataclass(frozen=True)
class SvdFactors:
    u: np.ndarray  # m x r
    sigma: np.ndarray  # r, descending
    v: np.ndarray  # n x r

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.sigma) @ self.v.conj().T


def svd(a: np.ndarray) -> SvdFactors:
    """Thin SVD with a deterministic phase convention.

    Each right singular vector is rotated so that its largest-modulus
    entry is real and nonnegative; the paired left vector gets the same
    rotation, leaving ``U diag(sigma) V^H`` unchanged.
    """
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.size == 0:
        raise ValueError("svd expects a nonempty 2-D matrix")
    if not np.all(np.isfinite(a)):
        raise ConvergenceFailure("matrix has non-finite entries")
    try:
        u, s, vh = np.linalg.svd(a, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    v = vh.conj().T
    idx = np.argmax(np.abs(v), axis=0)
    pivot = v[idx, np.arange(v.shape[1])]
    mag = np.abs(pivot)
    phase = np.where(mag > 0, pivot / np.where(mag > 0, mag, 1.0), 1.0)
    v = v * phase.conj()
    u = u * phase.conj()
    return SvdFactors(u=u, sigma=s, v=v)


def water_fill(gains, budget: float, max_iter: int = 200) -> np.ndarray:
    """Power allocation ``p_k = max(mu - 1/g_k, 0)`` with ``sum(p) = budget``.

    The water level is bracketed by bisection; once the active set is
    stable the level is solved in closed form so the budget is met to
    rounding precision.
    """
    g = np.asarray(gains, dtype=float)
    if g.ndim != 1 or g.size == 0:
        raise ValueError("gains must be a nonempty vector")
    if np.any(g <= 0) or budget <= 0:
        raise ValueError("gains and budget must be positive")
    inv = 1.0 / g
    lo, hi = inv.min(), inv.max() + budget
    for _ in range(max_iter):
        mu = 0.5 * (lo + hi)
        total = np.maximum(mu - inv, 0.0).sum()
        if total > budget:
            hi = mu
        else:
            lo = mu
        if hi - lo <= 1e-15 * hi:
            break
    mu = 0.5 * (lo + hi)
    # closed-form level on the active set; shrink it if the level drops a stream
    active = inv < mu
    while True:
        mu = (budget + inv[active].sum()) / active.sum()
        still = active & (inv < mu)
        if still.sum() == active.sum():
            break
        active = still
    return np.where(active, mu - inv, 0.0)


def db2lin(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def hermitian(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def derive_seed(seed: int, *key: int) -> int:
    """64-bit seed for sub-task ``key`` of ``seed`` (stable across runs)."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return int(lo) | (int(hi) << 32)
