import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.linalg import expm

from fgrafs.bands import OU, BandSpec
from fgrafs.gradients import (
    central_difference,
    d_leakage_and_fidelity,
    d_propagator_d_coeff,
    d_segment_exponential,
    ff_adjoint,
    fidelity_gradient,
    iq_reparam_gradient,
)
from fgrafs.objective import gate, gate_from_matrix, gaussian_target, ideal_gate_fidelity, spectral_leakage
from fgrafs.optimizer import Phi
from fgrafs.problem import PulseProblem
from fgrafs.propagation import propagate, waveform_filter_functions
from fgrafs.quaternion import SIGMA
from fgrafs.slepian import generate_dpss
from fgrafs.waveform import ControlWaveform

SX, SY = SIGMA[0], SIGMA[1]
BASIS = generate_dpss(64, 0.0625, 8)
BANDS = BandSpec(intervals={"x": [(0, 0.5)], "y": [(0.2, 0.9)], "z": [(0, 0.7)]}, weights={"x": 1, "y": 2, "z": 3})
F_TARGET = np.stack([gaussian_target(64, 0.6, 0.2)] * 3)


def five_point(f, x, h=1e-3):
    """Fourth-order central stencil; a sharper oracle than the two-point rule."""
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (-f(x + 2 * e) + 8 * f(x + e) - 8 * f(x - e) + f(x - 2 * e)) / (12 * h)
    return g


def check(analytic, f, x):
    fd = central_difference(f, x, 1e-6)
    assert np.linalg.norm(analytic - fd) <= 1e-6 * np.linalg.norm(fd)
    ref = five_point(f, x)
    big = np.abs(ref) > 1e-10
    assert np.all(np.abs(analytic - ref)[big] <= 1e-6 * np.abs(ref)[big])


def random_hermitian(rng):
    A = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    return A + A.conj().T


def test_segment_derivative_trivial(rng):
    A = random_hermitian(rng)
    np.testing.assert_allclose(d_segment_exponential(A, np.zeros((2, 2))), 0, atol=1e-15)
    B = random_hermitian(rng)
    np.testing.assert_allclose(d_segment_exponential(np.zeros((2, 2)), B, 0.7), -0.7j * B, atol=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_segment_derivative_fd(seed):
    rng = np.random.default_rng(seed)
    A, B = random_hermitian(rng), random_hermitian(rng)
    h = 1e-6
    fd = (expm(-1j * (A + h * B)) - expm(-1j * (A - h * B))) / (2 * h)
    an = d_segment_exponential(A, B)
    assert np.abs(an - fd).max() <= 1e-6 * np.abs(fd).max()


def test_segment_derivative_degenerate(rng):
    B = random_hermitian(rng)
    A = 0.3 * np.eye(2)
    np.testing.assert_allclose(d_segment_exponential(A, B), -1j * B * np.exp(-0.3j), atol=1e-14)


def test_segment_derivative_rejects_non_hermitian():
    with pytest.raises(ValueError):
        d_segment_exponential(np.array([[0, 1], [0, 0]]), np.eye(2))


def test_single_segment_coeff_derivative():
    b = generate_dpss(1, 0.1, 1)
    w = ControlWaveform(b, {"x": [0.4], "y": [0.3]})
    d = d_propagator_d_coeff(w)
    A = 0.5 * (0.4 * SX + 0.3 * SY)
    np.testing.assert_allclose(d["x"][0], d_segment_exponential(A, 0.5 * SX), atol=1e-12)
    np.testing.assert_allclose(d["y"][0], d_segment_exponential(A, 0.5 * SY), atol=1e-12)


def test_zero_waveform_coeff_derivative():
    w = ControlWaveform(BASIS, {"x": np.zeros(8)})
    d = d_propagator_d_coeff(w)["x"][0]
    np.testing.assert_allclose(d, -0.5j * SX * BASIS.sequences[0].sum(), atol=1e-12)


def test_coeff_derivative_fd(rng):
    c = {"x": rng.standard_normal(8), "y": rng.standard_normal(8)}
    d = d_propagator_d_coeff(ControlWaveform(BASIS, c))

    def U(ax, k, s):
        cc = {a: v.copy() for a, v in c.items()}
        cc[ax][k] += s
        return propagate(*ControlWaveform(BASIS, cc).xy()).cumulative_unitaries()[-1]

    for ax in ("x", "y"):
        for k in range(8):
            fd = (U(ax, k, 1e-6) - U(ax, k, -1e-6)) / 2e-6
            assert np.abs(d[ax][k] - fd).max() <= 1e-6 * max(np.abs(fd).max(), 1.0)


def test_fidelity_stationary_at_target(rng):
    w = ControlWaveform(BASIS, {"x": rng.standard_normal(8), "y": rng.standard_normal(8)})
    U = propagate(*w.xy()).cumulative_unitaries()[-1]
    g = d_leakage_and_fidelity(w, BANDS, gate_from_matrix(U))
    for ax in ("x", "y"):
        assert np.abs(g.dFG[ax]).max() <= 1e-12


def test_empty_band_gradient(rng):
    w = ControlWaveform(BASIS, {"x": rng.standard_normal(8)})
    g = d_leakage_and_fidelity(w, BandSpec(intervals={}, weights={"z": 1}), gate("X"))
    assert np.all(g.dGamma["x"] == 0)


@pytest.mark.parametrize("seed", range(5))
def test_bundle_matches_fd(seed):
    rng = np.random.default_rng(100 + seed)
    c0 = {"x": rng.standard_normal(8), "y": rng.standard_normal(8)}
    w = ControlWaveform(BASIS, c0)
    g = d_leakage_and_fidelity(w, BANDS, gate("H"))
    x = np.concatenate([c0["x"], c0["y"]])

    def wf(v):
        return ControlWaveform(BASIS, {"x": v[:8], "y": v[8:]})

    def leak(v):
        return spectral_leakage(waveform_filter_functions(wf(v)), BANDS)

    def fid(v):
        return ideal_gate_fidelity(propagate(*wf(v).xy()).cumulative_unitaries()[-1], gate("H"))

    check(np.concatenate([g.dGamma["x"], g.dGamma["y"]]), leak, x)
    check(np.concatenate([g.dFG["x"], g.dFG["y"]]), fid, x)


def problem(kind, param):
    return PulseProblem(BASIS, gate("H"), BANDS, axes=("x", "y"), kind=kind, psd=OU(0.3, 0.2), F_target=F_TARGET, param=param)


def start(P, seed):
    x = 0.5 * np.random.default_rng(seed).standard_normal(P.n_params)
    if P.param == "polar":
        x[: BASIS.K] += 1.0
    return x


@pytest.mark.parametrize("param", ["cartesian", "polar"])
@pytest.mark.parametrize("kind", ["leakage", "psd", "target"])
@pytest.mark.parametrize("seed", range(20))
def test_scores_match_fd(kind, param, seed):
    P = problem(kind, param)
    x = start(P, seed)
    ev = P.evaluate(x)
    check(P.spectral_gradient(ev), P.spectral_value, x)
    check(P.fidelity_gradient(ev), P.fidelity_value, x)
    phi = Phi(P, 1e-3 if kind == "leakage" else None)
    check(phi.value_and_grad(x)[1], phi.value, x)


def test_iq_trivial_cases(rng):
    gx, gy = rng.standard_normal(10), rng.standard_normal(10)
    amp = np.abs(rng.standard_normal(10))
    d_amp, d_phase = iq_reparam_gradient(amp, np.zeros(10), (gx, gy))
    np.testing.assert_allclose(d_amp, gx)
    amp[3] = 0.0
    _, d_phase = iq_reparam_gradient(amp, rng.standard_normal(10), (gx, gy))
    assert d_phase[3] == 0.0


def test_iq_matches_polar_problem(rng):
    P = problem("leakage", "polar")
    x = start(P, 3)
    ev = P.evaluate(x)
    V = BASIS.sequences
    amp, phase = x[:8] @ V, x[8:] @ V
    g_amp = ff_adjoint(ev.prop, P.weights)
    d_amp, d_phase = iq_reparam_gradient(amp, phase, g_amp, BASIS)
    np.testing.assert_allclose(np.concatenate([d_amp, d_phase]), P.spectral_gradient(ev), atol=1e-13)


def test_fidelity_gradient_value(rng):
    p = propagate(rng.standard_normal(16), rng.standard_normal(16))
    val, _ = fidelity_gradient(p, gate("X").quaternion)
    assert val == pytest.approx(ideal_gate_fidelity(p.cumulative_unitaries()[-1], gate("X")))


@given(seed=st.integers(0, 2**32 - 1))
def test_adjoint_is_linear_in_weights(seed):
    rng = np.random.default_rng(seed)
    p = propagate(rng.standard_normal(32), rng.standard_normal(32))
    c1, c2 = rng.random((3, 32)), rng.random((3, 32))
    np.testing.assert_allclose(ff_adjoint(p, c1 + c2), ff_adjoint(p, c1) + ff_adjoint(p, c2), atol=1e-9)


def test_cost_scales_linearly():
    def best(N):
        b = generate_dpss(N, 8 / N, 8)
        P = PulseProblem(b, gate("X"), BandSpec.lowpass_all(0.3), axes=("x", "y"))
        x = np.random.default_rng(0).standard_normal(16)
        out = np.inf
        for _ in range(9):
            t = time.perf_counter()
            ev = P.evaluate(x)
            P.spectral_gradient(ev)
            P.fidelity_gradient(ev)
            out = min(out, time.perf_counter() - t)
        return out

    assert best(512) / best(256) < 2.5
