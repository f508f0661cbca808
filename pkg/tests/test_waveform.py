import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fgrafs.errors import DimensionError, EmptyBasisError, ValidationError
from fgrafs.slepian import generate_dpss
from fgrafs.waveform import (
    ControlWaveform,
    project_to_basis,
    synthesize_amplitudes,
    truncated_basis,
    waveform_from_json,
    waveform_to_json,
)


@pytest.fixture(scope="module")
def basis64():
    return generate_dpss(64, 0.0625, 8)


def test_zero_coeffs(basis64):
    w = synthesize_amplitudes({"x": np.zeros(8)}, basis64)
    assert np.all(w.amplitudes["x"] == 0)


def test_unit_coeff_reproduces_row(basis64):
    w = synthesize_amplitudes({"x": np.eye(8)[0]}, basis64)
    np.testing.assert_array_equal(w.amplitudes["x"], basis64.sequences[0])


def test_matches_direct_summation(basis64, rng):
    c = rng.standard_normal(8)
    w = synthesize_amplitudes({"x": c, "y": -c}, basis64)
    V = basis64.sequences
    ref = np.array([sum(c[k] * V[k, n] for k in range(8)) for n in range(64)])
    assert np.abs(w.amplitudes["x"] - ref).max() <= 1e-12
    assert np.abs(w.amplitudes["y"] + ref).max() <= 1e-12


def test_amplitudes_follow_coefficient_updates(basis64, rng):
    w = synthesize_amplitudes({"x": rng.standard_normal(8)}, basis64)
    _ = w.amplitudes
    c = rng.standard_normal(8)
    w.set_coeffs("x", c)
    np.testing.assert_allclose(w.amplitudes["x"], c @ basis64.sequences, atol=1e-12)


def test_projection_recovers_span(basis64, rng):
    c = rng.standard_normal(8)
    w = project_to_basis({"x": c @ basis64.sequences}, basis64)
    assert np.abs(w.coeffs["x"] - c).max() <= 1e-10


# interior error of the least-squares projection of a constant, frozen from
# numpy.linalg.lstsq on the dense (N, K) system; at K = floor(2NW) the
# band edge truncation leaves a few percent of ripple
CONSTANT_RIPPLE = {(256, 0.04, 20): 0.07743337512604564, (1000, 0.02, 40): 0.04291548244959553}


@pytest.mark.parametrize("N,W,K", sorted(CONSTANT_RIPPLE))
def test_constant_input_interior(N, W, K):
    b = generate_dpss(N, W)
    assert b.K == K
    c = 0.3
    rec = project_to_basis({"x": np.full(N, c)}, b).amplitudes["x"]
    ref = np.linalg.lstsq(b.sequences.T, np.full(N, c), rcond=None)[0] @ b.sequences
    np.testing.assert_allclose(rec, ref, atol=1e-12)
    mid = slice(N // 4, 3 * N // 4 + 1)
    assert np.abs(rec[mid] - c).max() / c == pytest.approx(CONSTANT_RIPPLE[N, W, K], rel=1e-6)


def test_constant_input_interior_with_margin():
    N, W = 256, 0.04
    b = generate_dpss(N, W, 26)
    rec = project_to_basis({"x": np.ones(N)}, b).amplitudes["x"]
    assert np.abs(rec[N // 4:3 * N // 4 + 1] - 1).max() <= 1e-3


def test_orthogonal_input():
    big = generate_dpss(128, 0.05, 14)
    small = generate_dpss(128, 0.05, 12)
    w = project_to_basis({"x": big.sequences[13]}, small)
    assert np.abs(w.coeffs["x"]).max() < 1e-8


@given(st.lists(st.floats(-5, 5), min_size=64, max_size=64))
def test_projection_idempotent(vals):
    b = generate_dpss(64, 0.0625, 8)
    w1 = project_to_basis({"x": np.array(vals)}, b)
    w2 = project_to_basis({"x": w1.amplitudes["x"]}, b)
    np.testing.assert_allclose(w2.coeffs["x"], w1.coeffs["x"], atol=1e-10)


def test_truncated_basis_reference_case():
    b = truncated_basis(1000, 0.02, 0.99)
    assert b.W == pytest.approx(0.04)
    assert b.K == 76
    assert np.all(b.eigenvalues >= 0.99)


def test_truncated_basis_without_filter():
    b = truncated_basis(200, 0.02, 0.0)
    assert b.K == 2 * int(np.floor(200 * 0.04 + 1e-9)) - 4


def test_truncated_basis_drops_poor_rows():
    full = truncated_basis(200, 0.02, 0.0)
    b = truncated_basis(200, 0.02, 0.999999)
    assert b.K < full.K
    assert np.all(b.eigenvalues >= 0.999999)


def test_truncated_basis_empty():
    with pytest.raises(EmptyBasisError):
        truncated_basis(12, 0.125, 0.999999995)


def test_truncated_concentration(rng):
    N, W = 400, 0.02
    b = truncated_basis(N, W, 0.99)
    a = rng.standard_normal(b.K) @ b.sequences
    pad = 64 * N
    P = np.abs(np.fft.fft(a, pad)) ** 2
    f = np.fft.fftfreq(pad)
    assert P[np.abs(f) < b.W].sum() / P.sum() >= 0.99


def test_json_round_trip(basis64, rng):
    w = synthesize_amplitudes({"x": rng.standard_normal(8), "y": rng.standard_normal(8)}, basis64)
    back = waveform_from_json(waveform_to_json(w, note="t"), basis64)
    for ax in ("x", "y"):
        np.testing.assert_array_equal(back.coeffs[ax], w.coeffs[ax])
    rebuilt = waveform_from_json(waveform_to_json(w))
    np.testing.assert_allclose(rebuilt.amplitudes["x"], w.amplitudes["x"], atol=1e-12)


@pytest.mark.parametrize(
    "coeffs,exc",
    [({"x": np.zeros(7)}, DimensionError), ({}, ValidationError), ({"z": np.zeros(8)}, ValidationError)],
)
def test_rejects_bad_coeffs(basis64, coeffs, exc):
    with pytest.raises(exc):
        ControlWaveform(basis64, coeffs)


def test_projection_length_mismatch(basis64):
    with pytest.raises(DimensionError):
        project_to_basis({"x": np.zeros(63)}, basis64)
