"""Unitary operators of the affine filter bank modulation core.

Every DFT-like matrix here uses unitary (1/sqrt(n)) scaling so that all
transform round trips are exact isometries. The DFT kernel sign convention
is exp(+j*2*pi*k*l/n) and chirp diagonals rotate as exp(-j*2*pi*c*m^2).

All constructors return dense matrices; the ``apply_*`` functions are
FFT-based fast paths that agree with the dense products (tested against
them) and accept stacked columns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ChirpPair:
    """Digital chirp rates (cycles per sample^2) of an affine transform."""

    c1: float
    c2: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.c1) and np.isfinite(self.c2)):
            raise ValueError("chirp rates must be finite")
        if self.c1 < 0:
            raise ValueError("c1 must be >= 0 by convention")


@dataclass(frozen=True)
class DaftDims:
    """Static dimensions of one affine filter bank configuration.

    L: data subcarriers per symbol, P: chirp (spreading) length,
    N: filter bank DFT size. L <= P <= N with everything even and L
    divisible by 4 (half of the L positions carry data, split in two
    quarter blocks). P == N is permitted as a degenerate configuration.
    """

    L: int
    P: int
    N: int

    def __post_init__(self):
        for name in ("L", "P", "N"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v <= 0:
                raise ValueError(f"{name} must be a positive integer")
            if v % 2:
                raise ValueError(f"{name} must be even, got {v}")
        if self.L % 4:
            raise ValueError(f"L must be divisible by 4, got {self.L}")
        if not (self.L <= self.P <= self.N):
            raise ValueError(
                f"need L <= P <= N, got L={self.L}, P={self.P}, N={self.N}")


def dft_matrix(n: int) -> np.ndarray:
    """Unitary n-point DFT matrix with entries exp(+j*2*pi*k*l/n)/sqrt(n)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    k = np.arange(n)
    return np.exp(2j * np.pi * np.outer(k, k) / n) / np.sqrt(n)


def chirp_phase(c: float, n: int) -> np.ndarray:
    """Diagonal of the chirp matrix as a vector: exp(-j*2*pi*c*m^2)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not np.isfinite(c):
        raise ValueError("chirp rate must be finite")
    return np.exp(-2j * np.pi * c * np.arange(n) ** 2)


def chirp_diag(c: float, n: int) -> np.ndarray:
    """n x n diagonal chirp matrix with entries exp(-j*2*pi*c*m^2)."""
    return np.diag(chirp_phase(c, n))


def daft_matrix(chirps: ChirpPair, n: int) -> np.ndarray:
    """Affine transform matrix: chirp(c1) * DFT * chirp(c2), unitary."""
    return (chirp_phase(chirps.c1, n)[:, None] * dft_matrix(n)
            * chirp_phase(chirps.c2, n)[None, :])


def truncated_daft(dims: DaftDims, chirps: ChirpPair) -> np.ndarray:
    """First L rows of the P-point affine transform (an L x P isometry)."""
    if dims.L > dims.P:
        raise ValueError("truncation requires L <= P")
    return daft_matrix(chirps, dims.P)[:dims.L, :]


def freq_zero_pad(N: int, P: int) -> np.ndarray:
    """N x P placement matrix embedding P spectrum bins into N.

    The last P/2 input entries land at the top of the output, the first
    P/2 at the bottom, with N-P zeros in between, so a spectrum centered
    on the circular origin stays centered after padding. T^T T = I_P.
    """
    if N < P:
        raise ValueError("zero padding requires N >= P")
    if N % 2 or P % 2:
        raise ValueError("N and P must be even")
    T = np.zeros((N, P))
    T[:P // 2, P // 2:] = np.eye(P // 2)
    T[N - P // 2:, :P // 2] = np.eye(P // 2)
    return T


def synthesis_matrix(dims: DaftDims, chirps: ChirpPair) -> np.ndarray:
    """Dense N x L per-symbol synthesis operator.

    Composition: adjoint of the truncated P-point affine transform,
    P-point DFT, zero padding into N bins, then the adjoint N-point DFT.
    Columns are orthonormal.
    """
    F_N = dft_matrix(dims.N)
    F_P = dft_matrix(dims.P)
    T = freq_zero_pad(dims.N, dims.P)
    Wt = truncated_daft(dims, chirps)
    return F_N.conj().T @ T @ F_P @ Wt.conj().T


# ---------------------------------------------------------------------------
# fast application paths (FFT-based, vectorized over columns)
# ---------------------------------------------------------------------------

def apply_dft(x: np.ndarray, adjoint: bool = False) -> np.ndarray:
    """Apply the unitary (+j kernel) DFT matrix, or its adjoint, along axis 0."""
    if adjoint:
        return np.fft.fft(x, axis=0, norm="ortho")
    return np.fft.ifft(x, axis=0, norm="ortho")


def apply_daft(x: np.ndarray, chirps: ChirpPair, adjoint: bool = False) -> np.ndarray:
    """Apply the n-point affine transform (n = len of axis 0), or its adjoint."""
    n = x.shape[0]
    p1 = chirp_phase(chirps.c1, n)
    p2 = chirp_phase(chirps.c2, n)
    if x.ndim > 1:
        p1 = p1[:, None]
        p2 = p2[:, None]
    if adjoint:
        return p2.conj() * np.fft.fft(p1.conj() * x, axis=0, norm="ortho")
    return p1 * np.fft.ifft(p2 * x, axis=0, norm="ortho")


def apply_freq_zero_pad(v: np.ndarray, N: int) -> np.ndarray:
    """Apply the N x P placement matrix along axis 0 (P = number of rows)."""
    P = v.shape[0]
    if N < P or N % 2 or P % 2:
        raise ValueError("invalid padding dimensions")
    shape = (N,) + v.shape[1:]
    w = np.zeros(shape, dtype=complex)
    w[:P // 2] = v[P // 2:]
    w[N - P // 2:] = v[:P // 2]
    return w


def apply_freq_zero_pad_adjoint(w: np.ndarray, P: int) -> np.ndarray:
    """Apply the transpose of the placement matrix: keep the outer P bins."""
    N = w.shape[0]
    if N < P or N % 2 or P % 2:
        raise ValueError("invalid padding dimensions")
    return np.concatenate([w[N - P // 2:], w[:P // 2]], axis=0)


def apply_synthesis(x: np.ndarray, dims: DaftDims, chirps: ChirpPair) -> np.ndarray:
    """Fast application of the N x L synthesis operator to L-row input."""
    if x.shape[0] != dims.L:
        raise ValueError(f"expected {dims.L} rows, got {x.shape[0]}")
    shape = (dims.P,) + x.shape[1:]
    u = np.zeros(shape, dtype=complex)
    u[:dims.L] = x
    u = apply_daft(u, chirps, adjoint=True)
    v = apply_dft(u)
    w = apply_freq_zero_pad(v, dims.N)
    return apply_dft(w, adjoint=True)


def apply_synthesis_adjoint(y: np.ndarray, dims: DaftDims, chirps: ChirpPair) -> np.ndarray:
    """Fast application of the adjoint synthesis operator to N-row input."""
    if y.shape[0] != dims.N:
        raise ValueError(f"expected {dims.N} rows, got {y.shape[0]}")
    u = apply_dft(y)
    v = apply_freq_zero_pad_adjoint(u, dims.P)
    v = apply_dft(v, adjoint=True)
    v = apply_daft(v, chirps)
    return v[:dims.L]
