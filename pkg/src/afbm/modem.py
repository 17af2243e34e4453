"""End-to-end modulation and demodulation of the chirp-precoded filter
bank waveform, plus a chirped-multicarrier baseline with a chirp-periodic
prefix and Gray-mapped constellations.

Transmit chain per frame (grid ``A`` of shape L x K, guard rows zero):

1. per-subcarrier compensation and L-point affine precoding,
   ``X = W_L diag(b_tx) A``;
2. per-symbol spreading to N samples through the synthesis operator;
3. overlapped filtering, symbols delayed every N/2 samples.

The receiver runs the adjoint of each stage in reverse order; the final
compensation applies ``diag(b_rx)`` after the adjoint affine transform,
so that the end-to-end ideal-channel response is exactly the Gram matrix
of the compensated transmit chain. With a flat-fold prototype (overlap
<= 1.5) that Gram is the data-position projector and the round trip is
exact; the guard rows are zeroed on extraction either way.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .transforms import (
    ChirpPair,
    DaftDims,
    apply_daft,
    apply_synthesis,
    apply_synthesis_adjoint,
    daft_matrix,
    synthesis_matrix,
)
from .filterbank import (
    PrototypeFilter,
    apply_filter_bank,
    apply_filter_bank_adjoint,
    assemble_filter_matrix,
    compensation_vector,
    data_indices,
    output_length,
)

_QPSK_BIT_LEVELS = np.array([1.0, -1.0])  # bit 0 -> +1, bit 1 -> -1
_QAM16_GRAY_LEVELS = {(0, 0): -3.0, (0, 1): -1.0, (1, 1): 1.0, (1, 0): 3.0}

BITS_PER_SYMBOL = {"QPSK": 2, "QAM16": 4}


@dataclass(frozen=True)
class WaveformParams:
    """Full static description of one waveform configuration."""

    dims: DaftDims
    K: int
    chirps_pre: ChirpPair
    chirps_mod: ChirpPair
    filter: PrototypeFilter
    constellation: str = "QPSK"
    compensation: str = "split"
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be >= 1")
        if self.filter.N != self.dims.N:
            raise ValueError("filter bank size must match dims.N")
        if self.constellation not in BITS_PER_SYMBOL:
            raise ValueError(f"unsupported constellation {self.constellation!r}")
        if self.compensation not in ("split", "tx"):
            raise ValueError("compensation must be 'split' or 'tx'")
        meta = dict(self.metadata)
        meta.setdefault("F", 15e3)
        meta.setdefault("T", 1.0 / meta["F"])
        meta.setdefault("f_c", 4e9)
        meta.setdefault("B", self.dims.L * meta["F"])
        if abs(meta["B"] - self.dims.L * meta["F"]) > 1e-6 * meta["B"]:
            raise ValueError("metadata bandwidth must equal L * F")
        object.__setattr__(self, "metadata", meta)

    @property
    def M(self) -> int:
        """Frame length in samples."""
        return output_length(self.filter, self.K)

    @property
    def sample_rate(self) -> float:
        return self.dims.N * self.metadata["F"]

    @property
    def data_per_frame(self) -> int:
        return (self.dims.L // 2) * self.K


@dataclass(frozen=True)
class GridFrame:
    """L x K symbol grid; the middle L/2 rows are a zero guard band."""

    A: np.ndarray = field(repr=False, compare=False)

    def __post_init__(self):
        L = self.A.shape[0]
        if self.A.ndim != 2 or L % 4:
            raise ValueError("grid must be L x K with L divisible by 4")
        if np.any(self.A[L // 4:L - L // 4]):
            raise ValueError("guard rows of the grid must be zero")

    @property
    def L(self) -> int:
        return self.A.shape[0]

    @property
    def K(self) -> int:
        return self.A.shape[1]


@dataclass(frozen=True)
class TimeSignal:
    """Complex baseband samples at rate ``f_s``."""

    s: np.ndarray = field(repr=False, compare=False)
    f_s: float = 1.0


# ---------------------------------------------------------------------------
# constellations
# ---------------------------------------------------------------------------

def map_symbols(bits: np.ndarray, constellation: str) -> np.ndarray:
    """Gray-map a 0/1 vector onto unit-average-energy symbols."""
    bits = np.asarray(bits, dtype=int).ravel()
    if np.any((bits != 0) & (bits != 1)):
        raise ValueError("bits must be 0 or 1")
    bps = BITS_PER_SYMBOL.get(constellation)
    if bps is None:
        raise ValueError(f"unsupported constellation {constellation!r}")
    if len(bits) % bps:
        raise ValueError(f"bit count must be divisible by {bps}")
    groups = bits.reshape(-1, bps)
    if constellation == "QPSK":
        re = _QPSK_BIT_LEVELS[groups[:, 0]]
        im = _QPSK_BIT_LEVELS[groups[:, 1]]
        return (re + 1j * im) / np.sqrt(2)
    lut = np.empty((2, 2))
    for (b0, b1), level in _QAM16_GRAY_LEVELS.items():
        lut[b0, b1] = level
    re = lut[groups[:, 0], groups[:, 1]]
    im = lut[groups[:, 2], groups[:, 3]]
    return (re + 1j * im) / np.sqrt(10)


def demap_symbols(symbols: np.ndarray, constellation: str) -> np.ndarray:
    """Hard-decision inverse of :func:`map_symbols`."""
    symbols = np.asarray(symbols).ravel()
    if constellation == "QPSK":
        bits = np.empty((len(symbols), 2), dtype=int)
        bits[:, 0] = symbols.real < 0
        bits[:, 1] = symbols.imag < 0
        return bits.ravel()
    if constellation != "QAM16":
        raise ValueError(f"unsupported constellation {constellation!r}")

    def axis_bits(v):
        lvl = np.clip(np.round((v * np.sqrt(10) + 3) / 2), 0, 3).astype(int)
        table = {0: (0, 0), 1: (0, 1), 2: (1, 1), 3: (1, 0)}
        return np.array([table[i] for i in lvl], dtype=int)

    re = axis_bits(symbols.real)
    im = axis_bits(symbols.imag)
    return np.hstack([re, im]).ravel()


# ---------------------------------------------------------------------------
# grid placement
# ---------------------------------------------------------------------------

def place_grid(d: np.ndarray, L: int, K: int) -> GridFrame:
    """Fill the first and last L/4 rows of each column with data symbols."""
    d = np.asarray(d).ravel()
    if len(d) != (L // 2) * K:
        raise ValueError(f"expected {(L // 2) * K} symbols, got {len(d)}")
    A = np.zeros((L, K), dtype=complex)
    q = L // 4
    for k in range(K):
        chunk = d[k * (L // 2):(k + 1) * (L // 2)]
        A[:q, k] = chunk[:q]
        A[L - q:, k] = chunk[q:]
    return GridFrame(A=A)


def extract_grid(frame: GridFrame) -> np.ndarray:
    """Read the data rows back out, column by column (inverse of place_grid)."""
    L = frame.L
    q = L // 4
    return np.concatenate(
        [np.r_[frame.A[:q, k], frame.A[L - q:, k]] for k in range(frame.K)])


# ---------------------------------------------------------------------------
# transceiver
# ---------------------------------------------------------------------------

class AfbmModem:
    """Precomputed modulator/demodulator for one parameter set.

    Immutable after construction; `modulate`/`demodulate` are re-entrant.
    """

    def __init__(self, params: WaveformParams):
        self.params = params
        comp = compensation_vector(params.dims, params.chirps_pre,
                                   params.chirps_mod, params.filter)
        b = comp.values
        if params.compensation == "split":
            self.b_tx = b
            self.b_rx = b
        else:  # one-sided: the full squared factor at the transmitter
            self.b_tx = b * b
            self.b_rx = np.ones_like(b)

    def modulate(self, frame: GridFrame) -> TimeSignal:
        p = self.params
        if frame.L != p.dims.L or frame.K != p.K:
            raise ValueError("frame shape does not match params")
        X = apply_daft(self.b_tx[:, None] * frame.A, p.chirps_pre)
        Y = apply_synthesis(X, p.dims, p.chirps_mod)
        s = apply_filter_bank(Y, p.filter)
        return TimeSignal(s=s, f_s=p.sample_rate)

    def demodulate(self, signal: TimeSignal) -> GridFrame:
        p = self.params
        r = np.asarray(signal.s)
        if len(r) != p.M:
            raise ValueError(f"expected {p.M} samples, got {len(r)}")
        Z = apply_filter_bank_adjoint(r, p.filter, p.K)
        Xt = apply_synthesis_adjoint(Z, p.dims, p.chirps_mod)
        At = self.b_rx[:, None] * apply_daft(Xt, p.chirps_pre, adjoint=True)
        L = p.dims.L
        At[L // 4:L - L // 4] = 0
        return GridFrame(A=At)


def afbm_modulate(frame: GridFrame, params: WaveformParams) -> TimeSignal:
    return AfbmModem(params).modulate(frame)


def afbm_demodulate(signal: TimeSignal, params: WaveformParams) -> GridFrame:
    return AfbmModem(params).demodulate(signal)


def precoded_symbol_matrix(params: WaveformParams, tx_side: bool = True) -> np.ndarray:
    """Dense L x L compensated precoder ``W_L diag(b)`` of one symbol."""
    modem = AfbmModem(params)
    b = modem.b_tx if tx_side else modem.b_rx
    return daft_matrix(params.chirps_pre, params.dims.L) * b[None, :]


def dense_transmit_matrix(params: WaveformParams) -> np.ndarray:
    """Explicit M x LK frame matrix: filtering of the spread, precoded grid.

    Reference oracle for the fast path; modulate(frame) equals this
    matrix times ``vec(A)`` (columns stacked in symbol order).
    """
    G = assemble_filter_matrix(params.filter, params.K).matrix
    Qc = synthesis_matrix(params.dims, params.chirps_mod) @ \
        precoded_symbol_matrix(params)
    return G @ np.kron(np.eye(params.K), Qc)


# ---------------------------------------------------------------------------
# chirped-multicarrier baseline (single-tap subcarriers, chirp-periodic prefix)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AfdmParams:
    """Static description of the prefix-based baseline waveform.

    The baseline is dimensioned for fairness against the filtered
    waveform: the same number of subcarriers, all of them data-loaded,
    K symbols per frame, prefix long enough for the channel's maximum
    delay.
    """

    L_a: int
    K: int
    chirps: ChirpPair
    cpp_len: int
    constellation: str = "QPSK"

    def __post_init__(self):
        if self.L_a < 1 or self.K < 1:
            raise ValueError("L_a and K must be >= 1")
        if not 0 <= self.cpp_len < self.L_a:
            raise ValueError("need 0 <= cpp_len < L_a")
        if self.constellation not in BITS_PER_SYMBOL:
            raise ValueError(f"unsupported constellation {self.constellation!r}")

    @property
    def M(self) -> int:
        return (self.L_a + self.cpp_len) * self.K

    @property
    def data_per_frame(self) -> int:
        return self.L_a * self.K


def _prefix_phase(c1: float, n_body: int, cpp_len: int) -> np.ndarray:
    m = np.arange(cpp_len)
    return np.exp(-2j * np.pi * c1 * (n_body ** 2 - 2 * n_body * (cpp_len - m)))


def afdm_modulate(x: np.ndarray, chirps: ChirpPair, cpp_len: int) -> np.ndarray:
    """Adjoint affine transform of the symbol plus a chirp-periodic prefix.

    The prefix copies the tail of the body with the quadratic phase
    continuation that makes a linear delay-Doppler channel act circularly
    on the body, so the channel module's circular model applies exactly.
    """
    x = np.asarray(x).ravel()
    L_a = len(x)
    if not 0 <= cpp_len < L_a:
        raise ValueError("need 0 <= cpp_len < symbol length")
    body = apply_daft(x, chirps, adjoint=True)
    prefix = body[L_a - cpp_len:] * _prefix_phase(chirps.c1, L_a, cpp_len)
    return np.concatenate([prefix, body])


def afdm_demodulate(r: np.ndarray, chirps: ChirpPair, cpp_len: int) -> np.ndarray:
    """Strip the prefix and apply the forward affine transform."""
    r = np.asarray(r).ravel()
    if cpp_len < 0 or len(r) <= cpp_len:
        raise ValueError("signal shorter than its prefix")
    return apply_daft(r[cpp_len:], chirps)


def afdm_modulate_frame(X: np.ndarray, chirps: ChirpPair, cpp_len: int) -> np.ndarray:
    """Concatenate K prefixed symbols (columns of ``X``) into one burst."""
    return np.concatenate(
        [afdm_modulate(X[:, k], chirps, cpp_len) for k in range(X.shape[1])])


def afdm_demodulate_frame(r: np.ndarray, L_a: int, K: int, chirps: ChirpPair,
                          cpp_len: int) -> np.ndarray:
    """Split a burst back into K symbols and demodulate each."""
    step = L_a + cpp_len
    r = np.asarray(r).ravel()
    if len(r) != step * K:
        raise ValueError(f"expected {step * K} samples, got {len(r)}")
    return np.stack(
        [afdm_demodulate(r[k * step:(k + 1) * step], chirps, cpp_len)
         for k in range(K)], axis=1)


# ---------------------------------------------------------------------------
# CSV round trips for cross-tool inspection
# ---------------------------------------------------------------------------

def signal_to_csv(signal: TimeSignal, path) -> None:
    rows = np.column_stack(
        [np.arange(len(signal.s)), signal.s.real, signal.s.imag])
    np.savetxt(path, rows, fmt=["%d", "%.17g", "%.17g"], delimiter=",",
               header="index,real,imag")


def signal_from_csv(path, f_s: float = 1.0) -> TimeSignal:
    rows = np.loadtxt(path, delimiter=",", ndmin=2)
    return TimeSignal(s=rows[:, 1] + 1j * rows[:, 2], f_s=f_s)


def frame_to_csv(frame: GridFrame, path) -> None:
    a = frame.A.ravel(order="F")
    rows = np.column_stack([np.arange(len(a)), a.real, a.imag])
    np.savetxt(path, rows, fmt=["%d", "%.17g", "%.17g"], delimiter=",",
               header="index,real,imag")


def frame_from_csv(path, L: int, K: int) -> GridFrame:
    rows = np.loadtxt(path, delimiter=",", ndmin=2)
    a = rows[:, 1] + 1j * rows[:, 2]
    return GridFrame(A=a.reshape((L, K), order="F"))
