import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fgrafs.bands import OU, BandSpec, Tabulated
from fgrafs.errors import ValidationError
from fgrafs.objective import (
    CLIFFORD_T,
    analytic_infidelity,
    combined_fidelity,
    gate,
    gaussian_target,
    ideal_gate_fidelity,
    leakage_fidelity,
    overlap_integral,
    phase_invariant_distance,
    psd_weighted_leakage,
    spectral_leakage,
    target_ff_objective,
)
from fgrafs.propagation import FilterFunctionTable, control_matrix_trajectory, filter_functions, propagate
from fgrafs.quaternion import SIGMA

TAU = 2 * np.pi


def ff_of(ax, ay=None):
    ay = np.zeros_like(ax) if ay is None else ay
    return filter_functions(control_matrix_trajectory(propagate(ax, ay)))


def random_unitary(rng):
    q = rng.standard_normal(4)
    q /= np.linalg.norm(q)
    return q[0] * np.eye(2) - 1j * (q[1] * SIGMA[0] + q[2] * SIGMA[1] + q[3] * SIGMA[2])


@pytest.fixture
def random_ff(rng):
    return ff_of(rng.standard_normal(64), rng.standard_normal(64))


def test_empty_band_leakage(random_ff):
    assert spectral_leakage(random_ff, BandSpec(intervals={}, weights={"z": 1})) == 0.0


@pytest.mark.parametrize("axis", ["x", "y", "z"])
def test_full_band_leakage_is_one(random_ff, axis):
    full = BandSpec.single_axis([(0.0, TAU)], axis=axis)
    assert spectral_leakage(random_ff, full) == pytest.approx(1.0, abs=1e-12)


def test_discrete_convention_scale(random_ff):
    b = BandSpec.single_axis([(0.0, 0.5)])
    ratio = spectral_leakage(random_ff, b, "discrete") / spectral_leakage(random_ff, b)
    assert ratio == pytest.approx(TAU)
    with pytest.raises(ValidationError):
        spectral_leakage(random_ff, b, "other")


def test_leakage_axis_relabeling(random_ff):
    a = BandSpec(intervals={"x": [(0, 0.4)], "y": [(0, 1.0)]}, weights={"x": 1, "y": 1})
    b = BandSpec(intervals={"y": [(0, 0.4)], "x": [(0, 1.0)]}, weights={"x": 1, "y": 1})
    F = random_ff.F
    swapped = FilterFunctionTable(random_ff.grid, F[[1, 0, 2]])
    assert spectral_leakage(random_ff, a) == pytest.approx(spectral_leakage(swapped, b), rel=1e-14)


def test_fidelity_examples(rng):
    U = random_unitary(rng)
    assert ideal_gate_fidelity(U, U) == pytest.approx(1.0)
    assert ideal_gate_fidelity(-1j * SIGMA[0], gate("I")) == pytest.approx(0.0, abs=1e-30)
    assert ideal_gate_fidelity(np.exp(0.37j) * U, U) == pytest.approx(1.0)


@pytest.mark.parametrize("label", CLIFFORD_T)
def test_gates_unitary(label):
    U = gate(label).U
    np.testing.assert_allclose(U.conj().T @ U, np.eye(2), atol=1e-12)


def test_named_gate_matrices():
    np.testing.assert_allclose(gate("H").U, np.array([[1, 1], [1, -1]]) / np.sqrt(2), atol=1e-15)
    np.testing.assert_allclose(gate("S").U, np.diag([1, 1j]), atol=1e-15)
    np.testing.assert_allclose(gate("T").U, np.diag([1, np.exp(1j * np.pi / 4)]), atol=1e-15)
    assert ideal_gate_fidelity(gate("Xtheta", np.pi).U, gate("X")) == pytest.approx(1.0)
    with pytest.raises(ValidationError):
        gate("Q")
    with pytest.raises(ValidationError):
        gate("Xtheta")


def test_overlap_zero_psd(random_ff):
    assert overlap_integral(random_ff, OU(0.0, 1.0)) == 0.0


def test_overlap_single_bin(random_ff):
    N = 64
    dw = TAU / N
    b, P = 5, 0.3
    wb = b * dw
    psd = Tabulated(np.array([wb - 0.5 * dw, wb, wb + 0.5 * dw]), np.array([0.0, P / dw, 0.0]))
    chi = overlap_integral(random_ff, {"z": psd})
    assert chi == pytest.approx(P * random_ff.F[2, b] / np.pi, rel=1e-12)


@pytest.mark.parametrize("N,m,gam", [(100, 5, 0.05), (1000, 20, 0.05), (1000, 50, 0.01), (256, 16, 0.2)])
def test_overlap_constant_drive(N, m, gam):
    W0 = TAU * m / N
    psd = OU(1.0, gam)
    chi = overlap_integral(ff_of(np.full(N, W0)), {"z": psd})
    assert chi == pytest.approx(N * float(psd(W0)), rel=0.2)


def test_psd_weighted_is_pi_chi(random_ff):
    psd = OU(0.4, 0.1)
    assert psd_weighted_leakage(random_ff, psd) == pytest.approx(np.pi * overlap_integral(random_ff, psd))


def test_target_objective(random_ff):
    assert target_ff_objective(random_ff, random_ff.F) == 0.0
    assert target_ff_objective(random_ff, random_ff.F + 1.0) == pytest.approx(3 * 64 * TAU / 64)


def test_gaussian_target_area():
    N = 1000
    g = gaussian_target(N, np.pi, 0.2)
    assert g.sum() * TAU / N == pytest.approx(N, rel=1e-10)


def test_leakage_fidelity_examples():
    assert leakage_fidelity(0.0, 1.0, 10.0, 0.1) == 1.0
    assert leakage_fidelity(1e6, 1.0, 10.0, 0.1) == pytest.approx(0.5)
    assert leakage_fidelity(0.1 / 10.0, 1.0, 10.0, 0.1) == pytest.approx(0.5 * (1 + np.exp(-1)))


@given(a=st.floats(0, 10), b=st.floats(0, 10))
def test_leakage_fidelity_monotone(a, b):
    lo, hi = sorted((a, b))
    assert leakage_fidelity(lo, 1.0, 100.0, 0.06) >= leakage_fidelity(hi, 1.0, 100.0, 0.06)


def test_combined_examples():
    assert combined_fidelity(1.0, 1.0) == 2.0
    assert combined_fidelity(0.0, 0.5) == 0.5


def test_analytic_infidelity():
    assert analytic_infidelity(0.1, 0.0, 0.2, 100) == 0.0
    a = analytic_infidelity(0.1, 0.01, 0.2, 100)
    assert analytic_infidelity(0.2, 0.01, 0.2, 100) == pytest.approx(4 * a)
    assert a == pytest.approx(100 * 0.01 * 0.01 / (4 * 0.2))


def test_distance_examples(rng):
    U = random_unitary(rng)
    assert phase_invariant_distance(U, U) == pytest.approx(0.0, abs=1e-7)
    assert phase_invariant_distance(U, np.exp(1.1j) * U) == pytest.approx(0.0, abs=1e-7)
    assert phase_invariant_distance(np.eye(2), -1j * SIGMA[0]) == pytest.approx(1.0)


@given(seed=st.integers(0, 2**32 - 1))
def test_distance_fidelity_identity(seed):
    rng = np.random.default_rng(seed)
    A, B = random_unitary(rng), random_unitary(rng)
    D = phase_invariant_distance(A, B)
    assert 0 <= D <= np.sqrt(2)
    assert ideal_gate_fidelity(B, A) == pytest.approx((1 - D**2) ** 2, abs=1e-12)
