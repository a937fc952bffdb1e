"""Fully-digital eigen-mode beamformers, spectral efficiency, and the
two-phase-shifter decomposition of an arbitrary complex matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AllZeroMatrix, DimensionMismatch, RankDeficient, SingularGram
from .numerics import SvdFactors, svd, water_fill

RANK_TOL = 1e-9
GRAM_TOL = 1e-12


def _as_matrix(h) -> np.ndarray:
    return np.asarray(getattr(h, "h", h), dtype=np.complex128)


@dataclass(frozen=True)
class UnitModulusDecomposition:
    c: float
    r1: np.ndarray
    r2: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return self.c * (self.r1 + self.r2)


def decompose_unit_modulus(a) -> UnitModulusDecomposition:
    """Write ``a = c (R1 + R2)`` with unit-modulus ``R1``, ``R2``.

    ``c`` is half the largest entry modulus; each entry pair straddles
    the entry's phase by ``+-arccos(|a| / 2c)``, so zero entries map to
    antipodal phases.
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.complex128))
    if a.size == 0:
        raise ValueError("empty matrix")
    mag = np.abs(a)
    c = 0.5 * float(mag.max())
    if c == 0.0:
        raise AllZeroMatrix("cannot decompose an all-zero matrix")
    theta = np.angle(a)
    delta = np.arccos(np.clip(mag / (2 * c), -1.0, 1.0))
    r1 = np.exp(1j * (theta + delta))
    # zero entries: make the pair exactly antipodal so it cancels without rounding
    r2 = np.where(mag == 0, -r1, np.exp(1j * (theta - delta)))
    return UnitModulusDecomposition(c=c, r1=r1, r2=r2)


def _dominant_svd(h: np.ndarray, n_s: int) -> SvdFactors:
    if n_s < 1 or n_s > min(h.shape):
        raise DimensionMismatch(f"n_s={n_s} must lie in [1, {min(h.shape)}]")
    f = svd(h)
    if f.sigma[n_s - 1] <= RANK_TOL * f.sigma[0]:
        raise RankDeficient(f"fewer than {n_s} significant singular values")
    return f


@dataclass(frozen=True)
class FdPrecoder:
    p: np.ndarray  # n_tx x n_s
    svd: SvdFactors
    stream_powers: np.ndarray
    rho: float

    @property
    def n_s(self) -> int:
        return self.p.shape[1]

    @property
    def stream_gains(self) -> np.ndarray:
        """Per-stream amplitude ``sigma_k sqrt(p_k)`` seen after eigen-combining."""
        return self.svd.sigma[: self.n_s] * np.sqrt(self.stream_powers)


@dataclass(frozen=True)
class FdCombiner:
    c: np.ndarray  # n_s x n_rx
    svd: SvdFactors

    @property
    def n_s(self) -> int:
        return self.c.shape[0]


def fd_precoder(h, n_s: int, rho: float) -> FdPrecoder:
    """Eigen-mode precoder ``P = V[:, :n_s] diag(sqrt(p))`` with water-filled powers."""
    if not rho > 0:
        raise ValueError("rho must be positive")
    hm = _as_matrix(h)
    f = _dominant_svd(hm, n_s)
    powers = water_fill(rho * f.sigma[:n_s] ** 2, 1.0)
    p = f.v[:, :n_s] * np.sqrt(powers)
    return FdPrecoder(p=p, svd=f, stream_powers=powers, rho=float(rho))


def fd_combiner(h, n_s: int) -> FdCombiner:
    """Rows are the conjugated ``n_s`` dominant left singular vectors."""
    hm = _as_matrix(h)
    f = _dominant_svd(hm, n_s)
    return FdCombiner(c=f.u[:, :n_s].conj().T, svd=f)


def se_downlink(h, p, rho: float) -> float:
    """``log2 det(I + rho H P P^H H^H)`` in bits/s/Hz."""
    hm = _as_matrix(h)
    pm = np.asarray(getattr(p, "p", p), dtype=np.complex128)
    if hm.shape[1] != pm.shape[0]:
        raise DimensionMismatch(f"H {hm.shape} and P {pm.shape} do not chain")
    hp = hm @ pm
    k = np.eye(hm.shape[0]) + rho * hp @ hp.conj().T
    return max(float(np.linalg.slogdet(k)[1]) / np.log(2.0), 0.0)


def se_uplink(h, c, rho: float) -> float:
    """``log2 det(I + rho (C C^H)^-1 C H H^H C^H)`` in bits/s/Hz.

    Evaluated as ``log2 det(G + rho C H H^H C^H) - log2 det(G)`` with
    ``G = C C^H`` so both determinants are of Hermitian PD matrices.
    """
    hm = _as_matrix(h)
    cm = np.asarray(getattr(c, "c", c), dtype=np.complex128)
    if cm.shape[1] != hm.shape[0]:
        raise DimensionMismatch(f"C {cm.shape} and H {hm.shape} do not chain")
    gram = cm @ cm.conj().T
    eig = np.linalg.eigvalsh(gram)
    if eig[0] <= GRAM_TOL * max(eig[-1], 1.0):
        raise SingularGram("C C^H is not invertible")
    ch = cm @ hm
    num = np.linalg.slogdet(gram + rho * ch @ ch.conj().T)[1]
    den = np.linalg.slogdet(gram)[1]
    return max(float(num - den) / np.log(2.0), 0.0)
