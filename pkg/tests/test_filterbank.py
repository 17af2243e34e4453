"""Unit tests for prototype filters, the bank operator and compensation."""

import numpy as np
import pytest

from afbm.filterbank import (
    ChirpPair,
    DaftDims,
    PrototypeFilter,
    apply_filter_bank,
    apply_filter_bank_adjoint,
    assemble_filter_matrix,
    chain_gains,
    compensation_vector,
    data_indices,
    export_coeffs_csv,
    filter_blocks,
    fold_power,
    output_length,
    prototype_filter,
    prototype_filter_from_csv,
    single_symbol_filter,
    single_symbol_filter_adjoint,
)
from afbm.transforms import apply_synthesis, daft_matrix, synthesis_matrix


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


# ---------------------------------------------------------------------------
# prototype construction
# ---------------------------------------------------------------------------

def test_filter_lengths():
    assert prototype_filter("HERMITE", 1.5, 256).length == 384
    assert prototype_filter("PHYDYAS", 4, 256).length == 1024
    assert prototype_filter("RECT", 1, 8).length == 8


@pytest.mark.parametrize("kind,overlap", [("HERMITE", 1.5), ("PHYDYAS", 1),
                                          ("PHYDYAS", 2), ("PHYDYAS", 3),
                                          ("PHYDYAS", 4), ("RECT", 1)])
def test_filter_unit_energy(kind, overlap):
    filt = prototype_filter(kind, overlap, 64)
    assert abs(np.sum(filt.coeffs ** 2) - 1.0) < 1e-12


@pytest.mark.parametrize("kind,overlap", [("HERMITE", 1.5), ("PHYDYAS", 4)])
def test_filter_even_symmetry(kind, overlap):
    g = prototype_filter(kind, overlap, 128).coeffs
    assert np.abs(g - g[::-1]).max() < 1e-12


def test_filter_real_coefficients():
    for kind, overlap in (("HERMITE", 1.5), ("PHYDYAS", 4), ("RECT", 1)):
        g = prototype_filter(kind, overlap, 32).coeffs
        assert np.isrealobj(g)


def test_rect_is_flat():
    g = prototype_filter("RECT", 1, 16).coeffs
    assert np.allclose(g, g[0])


def test_invalid_prototypes_rejected():
    with pytest.raises(ValueError):
        prototype_filter("PHYDYAS", 1.5, 64)
    with pytest.raises(ValueError):
        prototype_filter("PHYDYAS", 5, 64)
    with pytest.raises(ValueError):
        prototype_filter("RECT", 2, 64)
    with pytest.raises(ValueError):
        prototype_filter("GAUSS", 1, 64)
    with pytest.raises(ValueError):
        prototype_filter("HERMITE", 1.3, 64)  # 2*overlap not an integer


def test_hermite_fold_is_flat():
    for N in (64, 128, 256):
        filt = prototype_filter("HERMITE", 1.5, N)
        fold = fold_power(filt.coeffs, N)
        assert fold.shape == (N,)
        # unit energy spread evenly across the N phases
        assert np.abs(fold - 1.0 / N).max() < 1e-12


def test_phydyas_fold_has_ripple():
    filt = prototype_filter("PHYDYAS", 4, 256)
    fold = fold_power(filt.coeffs, 256)
    assert np.ptp(fold) / fold.mean() > 0.01


# ---------------------------------------------------------------------------
# polyphase blocks and the assembled operator
# ---------------------------------------------------------------------------

def test_rect_blocks():
    filt = prototype_filter("RECT", 1, 4)
    blocks = filter_blocks(filt)
    assert len(blocks) == 2
    for b in blocks:
        assert np.allclose(b, 0.5 * np.eye(2))


def test_blocks_partition_coefficients():
    for kind, overlap, N in (("HERMITE", 1.5, 64), ("PHYDYAS", 4, 32)):
        filt = prototype_filter(kind, overlap, N)
        blocks = filter_blocks(filt)
        assert len(blocks) == int(2 * overlap)
        stitched = np.concatenate([np.diag(b) for b in blocks])
        assert np.allclose(stitched, filt.coeffs)


def test_output_length_formula():
    herm = prototype_filter("HERMITE", 1.5, 256)
    phyd = prototype_filter("PHYDYAS", 4, 256)
    assert output_length(herm, 1) == 384
    assert output_length(herm, 8) == 1280
    assert output_length(phyd, 8) == 1920
    for K in (1, 2, 5):
        assert output_length(herm, K) == 384 + 128 * (K - 1)


def test_assemble_filter_matrix_shape():
    filt = prototype_filter("HERMITE", 1.5, 16)
    op = assemble_filter_matrix(filt, 3)
    assert op.matrix.shape == (24 + 8 * 2, 3 * 16)
    with pytest.raises(ValueError):
        assemble_filter_matrix(filt, 0)


@pytest.mark.parametrize("kind,overlap,N,K", [("HERMITE", 1.5, 16, 1),
                                              ("HERMITE", 1.5, 16, 4),
                                              ("PHYDYAS", 4, 8, 3),
                                              ("PHYDYAS", 2, 32, 2),
                                              ("RECT", 1, 8, 5)])
def test_overlap_add_matches_dense(kind, overlap, N, K):
    filt = prototype_filter(kind, overlap, N)
    G = assemble_filter_matrix(filt, K).matrix
    rng = np.random.default_rng(21)
    for _ in range(10):
        Y = crandn(rng, N, K)
        s = apply_filter_bank(Y, filt)
        assert np.abs(s - G @ Y.flatten(order="F")).max() < 1e-12
        r = crandn(rng, len(s))
        back = apply_filter_bank_adjoint(r, filt, K)
        assert np.abs(back.flatten(order="F") - G.T @ r).max() < 1e-12


def test_single_symbol_filter_matches_dense():
    filt = prototype_filter("PHYDYAS", 3, 16)
    G1 = assemble_filter_matrix(filt, 1).matrix
    rng = np.random.default_rng(22)
    Y = crandn(rng, 16, 5)
    out = single_symbol_filter(Y, filt)
    assert np.abs(out - G1 @ Y).max() < 1e-13
    R = crandn(rng, filt.length, 5)
    back = single_symbol_filter_adjoint(R, filt)
    assert np.abs(back - G1.T @ R).max() < 1e-13


def test_filter_bank_adjoint_inner_product():
    filt = prototype_filter("HERMITE", 1.5, 32)
    rng = np.random.default_rng(23)
    Y = crandn(rng, 32, 3)
    r = crandn(rng, output_length(filt, 3))
    lhs = np.vdot(r, apply_filter_bank(Y, filt))
    rhs = np.vdot(apply_filter_bank_adjoint(r, filt, 3), Y)
    assert abs(lhs - rhs) < 1e-12


def test_filter_bank_shape_errors():
    filt = prototype_filter("RECT", 1, 8)
    with pytest.raises(ValueError):
        apply_filter_bank(np.zeros((7, 2), dtype=complex), filt)
    with pytest.raises(ValueError):
        apply_filter_bank_adjoint(np.zeros(9, dtype=complex), filt, 1)


# ---------------------------------------------------------------------------
# chain gains and compensation
# ---------------------------------------------------------------------------

def test_data_indices_layout():
    assert np.array_equal(data_indices(8), [0, 1, 6, 7])
    idx = data_indices(128)
    assert len(idx) == 64
    assert np.array_equal(idx[:32], np.arange(32))
    assert np.array_equal(idx[32:], np.arange(96, 128))


def test_chain_gains_match_bruteforce():
    dims = DaftDims(16, 24, 32)
    chirps = ChirpPair(0.017, 0.003)
    filt = prototype_filter("PHYDYAS", 2, 32)
    gains = chain_gains(dims, chirps, chirps, filt)
    B = (assemble_filter_matrix(filt, 1).matrix
         @ synthesis_matrix(dims, chirps)
         @ daft_matrix(chirps, dims.L))
    assert np.abs(gains - np.real(np.diag(B.conj().T @ B))).max() < 1e-12
    assert np.all(gains > 0)


def test_compensation_vector_structure(ref_dims, ref_chirps, hermite256):
    b = compensation_vector(ref_dims, ref_chirps, ref_chirps, hermite256).values
    data = data_indices(128)
    guard = np.setdiff1d(np.arange(128), data)
    assert np.all(b[guard] == 0)
    assert np.all(b[data] > 0)
    gains = chain_gains(ref_dims, ref_chirps, ref_chirps, hermite256)
    assert np.abs(b[data] - 1 / np.sqrt(gains[data])).max() < 1e-12


def test_compensation_rect_uniform():
    dims = DaftDims(8, 8, 8)
    chirps = ChirpPair(0.0, 0.0)
    filt = prototype_filter("RECT", 1, 8)
    b = compensation_vector(dims, chirps, chirps, filt).values
    data = data_indices(8)
    assert np.abs(b[data] - b[data][0]).max() < 1e-12


def test_compensation_singular_chain_raises():
    dead = PrototypeFilter(kind="HERMITE", overlap=1.0, N=8,
                           coeffs=np.zeros(8))
    dims = DaftDims(8, 8, 8)
    chirps = ChirpPair(0.0, 0.0)
    with pytest.raises(ArithmeticError):
        compensation_vector(dims, chirps, chirps, dead)


def test_gram_diagonal_equals_gains_through_fast_path():
    # the fast per-column chain reproduces the dense diagonal
    dims = DaftDims(16, 24, 32)
    chirps = ChirpPair(0.01, 0.0)
    filt = prototype_filter("HERMITE", 1.5, 32)
    W = daft_matrix(chirps, dims.L)
    cols = single_symbol_filter(
        apply_synthesis(W, dims, chirps), filt)
    diag = np.sum(np.abs(cols) ** 2, axis=0)
    assert np.abs(diag - chain_gains(dims, chirps, chirps, filt)).max() < 1e-12


# ---------------------------------------------------------------------------
# CSV round trip
# ---------------------------------------------------------------------------

def test_coeffs_csv_round_trip(tmp_path):
    filt = prototype_filter("PHYDYAS", 4, 64)
    path = tmp_path / "proto.csv"
    export_coeffs_csv(filt, path)
    loaded = prototype_filter_from_csv(path, 4, 64)
    assert np.array_equal(loaded.coeffs, filt.coeffs)
    assert loaded.length == filt.length


def test_coeffs_csv_wrong_length_rejected(tmp_path):
    filt = prototype_filter("RECT", 1, 8)
    path = tmp_path / "proto.csv"
    export_coeffs_csv(filt, path)
    with pytest.raises(ValueError):
        prototype_filter_from_csv(path, 2, 8)
