"""Prototype filters, the block-Toeplitz synthesis stage, and the
compensation vector that restores complex orthogonality of the filtered
chain.

The three built-in prototypes:

* ``PHYDYAS`` -- the frequency-sampled prototype with the standard
  published frequency coefficients, very low sidelobes, integer overlap
  up to 4.
* ``HERMITE`` -- a weighted sum of Hermite functions (orders 0, 4, ...,
  20 with the classic localization weights), truncated to overlap 1.5.
  The raw envelope is divided by the square root of its period-N power
  fold so the folded power profile is exactly flat; that flatness is
  what makes the compensated transceiver chain exactly orthogonal at
  overlap <= 1.5. Finally the pulse is scaled to unit energy.
* ``RECT`` -- constant window, overlap 1, test-only.

Custom pulses can be loaded from a single-column CSV file as a
documented escape hatch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.hermite import hermval

from .transforms import ChirpPair, DaftDims, apply_synthesis, apply_daft

# frequency-domain coefficients H_1..H_{O-1} of the frequency-sampled
# prototype, per overlap factor (H_0 = 1 always)
_PHYDYAS_TAILS = {
    1: [],
    2: [np.sqrt(2) / 2],
    3: [0.91143783, 0.41143783],
    4: [0.97195983, 1 / np.sqrt(2), 0.23514695],
}

# weights of the Hermite-function orders 0, 4, ..., 20
_HERMITE_WEIGHTS = {
    0: 1.412692577,
    4: -3.0145e-3,
    8: -8.8041e-6,
    12: -2.2611e-9,
    16: -4.4570e-15,
    20: 1.8633e-16,
}

_SINGULAR_TOL = 1e-12


@dataclass(frozen=True)
class PrototypeFilter:
    """Real prototype pulse of length overlap*N with unit energy."""

    kind: str
    overlap: float
    N: int
    coeffs: np.ndarray = field(repr=False, compare=False)

    @property
    def length(self) -> int:
        return len(self.coeffs)


@dataclass(frozen=True)
class FilterBankOperator:
    """Assembled block-Toeplitz synthesis matrix for K symbols."""

    N: int
    K: int
    overlap: float
    blocks: list = field(repr=False, compare=False)
    matrix: np.ndarray = field(repr=False, compare=False)


@dataclass(frozen=True)
class CompensationVector:
    """Per-subcarrier real gains; zero on the guard half of the indices."""

    values: np.ndarray = field(repr=False, compare=False)


def _check_overlap(overlap: float, N: int) -> int:
    two_o = overlap * 2
    if abs(two_o - round(two_o)) > 1e-12:
        raise ValueError(f"2*overlap must be an integer, got overlap={overlap}")
    on = overlap * N
    if abs(on - round(on)) > 1e-9:
        raise ValueError(f"overlap*N must be an integer, got {on}")
    return int(round(on))


def fold_power(coeffs: np.ndarray, N: int) -> np.ndarray:
    """Period-N fold of the squared pulse: out[i] = sum_p coeffs[i+p*N]^2."""
    out = np.zeros(N)
    for p in range(math.ceil(len(coeffs) / N)):
        seg = coeffs[p * N:(p + 1) * N] ** 2
        out[:len(seg)] += seg
    return out


def _hermite_envelope(overlap: float, N: int) -> np.ndarray:
    length = _check_overlap(overlap, N)
    m = np.arange(length)
    t = (m - (length - 1) / 2) / N
    x = np.sqrt(2 * np.pi) * np.sqrt(2) * t
    h = np.zeros(length)
    for order, w in _HERMITE_WEIGHTS.items():
        basis = np.zeros(order + 1)
        basis[order] = 1
        h += w * hermval(x, basis)
    return h * np.exp(-2 * np.pi * t ** 2)


def prototype_filter(kind: str, overlap: float, N: int) -> PrototypeFilter:
    """Build one of the supported prototype pulses, unit-energy normalized."""
    kind = kind.upper()
    length = _check_overlap(overlap, N)
    if kind == "PHYDYAS":
        if abs(overlap - round(overlap)) > 1e-12 or not 1 <= overlap <= 4:
            raise ValueError("PHYDYAS requires integer overlap <= 4")
        tail = _PHYDYAS_TAILS[int(round(overlap))]
        m = np.arange(length)
        g = np.ones(length)
        for k, hk in enumerate(tail, start=1):
            # half-sample offset keeps the even symmetry g[m] = g[len-1-m]
            g += 2 * (-1) ** k * hk * np.cos(2 * np.pi * k * (m + 0.5) / length)
    elif kind == "HERMITE":
        h = _hermite_envelope(overlap, N)
        d = fold_power(h, N)
        if d.min() <= _SINGULAR_TOL:
            raise ValueError("degenerate Hermite fold; unsupported overlap/N")
        g = h / np.sqrt(d[np.arange(length) % N])
    elif kind == "RECT":
        if overlap != 1:
            raise ValueError("RECT is defined for overlap 1 only")
        g = np.ones(length)
    else:
        raise ValueError(f"unsupported filter kind {kind!r}")
    g = g / np.linalg.norm(g)
    return PrototypeFilter(kind=kind, overlap=float(overlap), N=N, coeffs=g)


def prototype_filter_from_csv(path, overlap: float, N: int) -> PrototypeFilter:
    """Escape hatch: load custom pulse coefficients (one per line)."""
    g = np.loadtxt(path, dtype=float, ndmin=1)
    if len(g) != _check_overlap(overlap, N):
        raise ValueError(
            f"file holds {len(g)} coefficients, expected {overlap * N:g}")
    g = g / np.linalg.norm(g)
    return PrototypeFilter(kind="CUSTOM", overlap=float(overlap), N=N, coeffs=g)


def export_coeffs_csv(filt: PrototypeFilter, path) -> None:
    """Write the pulse as a single-column CSV, full double precision."""
    np.savetxt(path, filt.coeffs, fmt="%.17g")


def filter_blocks(filt: PrototypeFilter) -> list:
    """Split the pulse into its 2*overlap diagonal half-blocks of size N/2."""
    half = filt.N // 2
    nblocks = int(round(2 * filt.overlap))
    return [np.diag(filt.coeffs[p * half:(p + 1) * half])
            for p in range(nblocks)]


def output_length(filt: PrototypeFilter, K: int) -> int:
    """Number of time samples produced by K symbols overlapped every N/2."""
    return filt.length + (filt.N // 2) * (K - 1)


def assemble_filter_matrix(filt: PrototypeFilter, K: int) -> FilterBankOperator:
    """Dense block-Toeplitz synthesis matrix.

    Each symbol contributes two adjacent width-N/2 column blocks; the
    even-index diagonal half-blocks stack down the first column at
    successive block-rows, the odd-index ones down the second column,
    and consecutive symbols are delayed by one block-row (N/2 samples).
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    half = filt.N // 2
    blocks = filter_blocks(filt)
    M = output_length(filt, K)
    G = np.zeros((M, filt.N * K))
    for k in range(K):
        for p, block in enumerate(blocks):
            r = (p + k) * half
            c = k * filt.N + (p % 2) * half
            G[r:r + half, c:c + half] = block
    return FilterBankOperator(N=filt.N, K=K, overlap=filt.overlap,
                              blocks=blocks, matrix=G)


def apply_filter_bank(y: np.ndarray, filt: PrototypeFilter) -> np.ndarray:
    """Fast synthesis: overlap-add of the windowed periodic extensions.

    ``y`` is N x K (one column per symbol); the output is the length-M
    time signal, equal to the dense assembled-matrix product.
    """
    N, K = y.shape
    if N != filt.N:
        raise ValueError("row count must equal the filter bank size")
    idx = np.arange(filt.length) % N
    s = np.zeros(output_length(filt, K), dtype=complex)
    hop = N // 2
    for k in range(K):
        s[k * hop:k * hop + filt.length] += filt.coeffs * y[idx, k]
    return s


def single_symbol_filter(y: np.ndarray, filt: PrototypeFilter) -> np.ndarray:
    """Window the periodic extension of independent length-N columns.

    Unlike :func:`apply_filter_bank`, columns here are separate K=1
    inputs, not successive overlapping symbols; output has O*N rows.
    """
    if y.shape[0] != filt.N:
        raise ValueError("row count must equal the filter bank size")
    idx = np.arange(filt.length) % filt.N
    g = filt.coeffs if y.ndim == 1 else filt.coeffs[:, None]
    return g * y[idx]


def single_symbol_filter_adjoint(r: np.ndarray, filt: PrototypeFilter) -> np.ndarray:
    """Fold windowed length-O*N columns back to period N (adjoint of above)."""
    if r.shape[0] != filt.length:
        raise ValueError("row count must equal the filter length")
    idx = np.arange(filt.length) % filt.N
    g = filt.coeffs if r.ndim == 1 else filt.coeffs[:, None]
    z = np.zeros((filt.N,) + r.shape[1:], dtype=complex)
    np.add.at(z, idx, g * r)
    return z


def apply_filter_bank_adjoint(r: np.ndarray, filt: PrototypeFilter, K: int) -> np.ndarray:
    """Fast analysis: window each symbol's span and fold it to period N."""
    N = filt.N
    hop = N // 2
    if len(r) != output_length(filt, K):
        raise ValueError("input length does not match K symbols")
    idx = np.arange(filt.length) % N
    z = np.zeros((N, K), dtype=complex)
    for k in range(K):
        seg = filt.coeffs * r[k * hop:k * hop + filt.length]
        np.add.at(z[:, k], idx, seg)
    return z


def chain_gains(dims: DaftDims, chirps_pre: ChirpPair, chirps_mod: ChirpPair,
                filt: PrototypeFilter) -> np.ndarray:
    """Per-subcarrier power gain of the single-symbol filtered chain.

    Diagonal of the end-to-end Gram matrix of precoding, spreading and
    filtering, evaluated with the fast paths: the filter Gram collapses
    to the period-N power fold, so only L synthesis applications and a
    weighted column norm are needed.
    """
    if filt.N != dims.N:
        raise ValueError("filter bank size must match dims.N")
    pre = apply_daft(np.eye(dims.L, dtype=complex), chirps_pre)
    cols = apply_synthesis(pre, dims, chirps_mod)
    w = fold_power(filt.coeffs, dims.N)
    return np.einsum("i,ij,ij->j", w, cols.conj(), cols).real


def data_indices(L: int) -> np.ndarray:
    """Row indices carrying data: the first and last L/4 positions."""
    return np.r_[0:L // 4, L - L // 4:L]


def compensation_vector(dims: DaftDims, chirps_pre: ChirpPair,
                        chirps_mod: ChirpPair,
                        filt: PrototypeFilter) -> CompensationVector:
    """Inverse square-root chain gains at the data positions, zero elsewhere."""
    c = chain_gains(dims, chirps_pre, chirps_mod, filt)
    data = data_indices(dims.L)
    bad = c[data] <= _SINGULAR_TOL
    if np.any(bad):
        raise ArithmeticError(
            "singular compensation: chain gain vanished at data positions "
            f"{data[bad].tolist()}")
    b = np.zeros(dims.L)
    b[data] = 1 / np.sqrt(c[data])
    return CompensationVector(values=b)
