import numpy as np
import pytest
from scipy.linalg import expm

from fgrafs.bands import OU, BandSpec, OneOverF
from fgrafs.errors import StabilityError, ValidationError
from fgrafs.montecarlo import NoiseTrajectory, distance_stats, noisy_propagator, ou_batch, ou_trajectory
from fgrafs.objective import gate, phase_invariant_distance
from fgrafs.propagation import propagate
from fgrafs.quaternion import SIGMA
from fgrafs.slepian import generate_dpss
from fgrafs.waveform import ControlWaveform

BASIS = generate_dpss(32, 0.1, 6)
BANDS = BandSpec.single_axis([(0.0, 0.4)])


def waveform(seed):
    rng = np.random.default_rng(seed)
    return ControlWaveform(BASIS, {"x": rng.standard_normal(6), "y": rng.standard_normal(6)})


def test_zero_sigma():
    t = ou_trajectory(0.0, 0.1, 50, seed=1)
    assert np.all(t.beta == 0) and t.N == 50


def test_stability_and_validation():
    with pytest.raises(StabilityError):
        ou_trajectory(1.0, 1.0, 10, seed=0)
    with pytest.raises(ValidationError):
        ou_trajectory(-1.0, 0.1, 10, seed=0)
    with pytest.raises(ValidationError):
        ou_trajectory(1.0, 0.0, 10, seed=0)


def test_stationary_variance():
    # one 1e5-step run has about 4.5% standard error at this correlation time
    runs = ou_batch(1.3, 0.01, 100_000, 7, range(10), axes=("z",))[:, 2]
    assert runs.var(axis=1).mean() == pytest.approx(1.3**2, rel=0.05)


@pytest.mark.parametrize("lag", [1, 10, 50, 100])
def test_autocorrelation(lag):
    gam, n = 0.01, 100_000
    x = ou_trajectory(1.0, gam, n, seed=3).beta[0]
    x = x - x.mean()
    r = np.dot(x[:-lag], x[lag:]) / np.dot(x, x)
    rho = 1 - gam
    # Bartlett variance of the lag-l sample autocorrelation for AR(1)
    var = ((1 + rho**2) * (1 - rho ** (2 * lag)) / (1 - rho**2) - 2 * lag * rho ** (2 * lag)) / n
    assert abs(r - rho**lag) <= 3 * np.sqrt(var)


def test_periodogram_matches_ou_psd():
    sigma, gam, N = 0.7, 0.01, 4096
    beta = ou_batch(sigma, gam, N, 5, range(1000), axes=("z",))[:, 2]
    I = np.mean(np.abs(np.fft.rfft(beta, axis=1)) ** 2, axis=0) / N
    w = 2 * np.pi * np.arange(I.size) / N
    sel = w <= gam
    assert sel.sum() >= 5
    np.testing.assert_allclose(I[sel], OU(sigma, gam)(w[sel]), rtol=0.1)


def test_axis_streams_independent():
    t = ou_trajectory(1.0, 0.05, 100_000, seed=9)
    c = np.corrcoef(t.beta)
    assert np.abs(c[np.triu_indices(3, 1)]).max() < 0.1
    z_only = ou_trajectory(1.0, 0.05, 100_000, seed=9, axes=("z",))
    np.testing.assert_array_equal(z_only.beta[2], t.beta[2])
    assert np.all(z_only.beta[:2] == 0)


def test_zero_noise_propagator():
    w = waveform(0)
    U = noisy_propagator(w, NoiseTrajectory(np.zeros((3, 32)), 0))
    np.testing.assert_allclose(U, propagate(*w.xy()).cumulative_unitaries()[-1], atol=1e-12)


def test_commuting_case():
    b, N = 0.013, 32
    w = ControlWaveform(BASIS, {"x": np.zeros(6)})
    beta = np.zeros((3, N))
    beta[2] = b
    U = noisy_propagator(w, NoiseTrajectory(beta, 0))
    np.testing.assert_allclose(U, expm(-1j * b * N * SIGMA[2]), atol=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_substep_oracle(seed):
    w = waveform(seed)
    beta = 0.2 * np.random.default_rng(seed).standard_normal((3, 32))
    ax, ay = w.xy()
    U = np.eye(2, dtype=complex)
    for n in range(32):
        H = 0.5 * (ax[n] * SIGMA[0] + ay[n] * SIGMA[1]) + sum(beta[m, n] * SIGMA[m] for m in range(3))
        step = expm(-1j * H / 16)
        for _ in range(16):
            U = step @ U
    V = noisy_propagator(w, NoiseTrajectory(beta, 0))
    assert phase_invariant_distance(U, V) <= 1e-6


def test_zero_power_is_exact():
    w = waveform(1)
    g = gate("X")
    rep = distance_stats(w, g, OU(0.0, 0.1), BANDS, 10, base_seed=0)
    D = phase_invariant_distance(g.U, propagate(*w.xy()).cumulative_unitaries()[-1])
    assert rep.mean_D2 == pytest.approx(D**2, abs=1e-15)
    assert rep.stderr_D2 == 0.0
    assert rep.bound_value == pytest.approx(1 - rep.F_G)


def test_reproducible_and_job_independent():
    w = waveform(2)
    args = (w, gate("H"), OU(0.02, 0.05), BANDS, 300)
    a = distance_stats(*args, base_seed=42)
    b = distance_stats(*args, base_seed=42)
    c = distance_stats(*args, base_seed=42, jobs=2)
    assert a == b == c
    assert distance_stats(*args, base_seed=43) != a


def test_rejects_bad_input():
    w = waveform(0)
    with pytest.raises(ValidationError):
        distance_stats(w, gate("X"), OU(0.1, 0.1), BANDS, 1, base_seed=0)
    with pytest.raises(ValidationError):
        distance_stats(w, gate("X"), OneOverF(1.0, 0.1, 1.0), BANDS, 10, base_seed=0)


def test_fidelity_decreases_with_sigma():
    N = 64
    b = generate_dpss(N, 0.1)
    w = ControlWaveform(b, {"x": np.r_[0.4, np.zeros(b.K - 1)]})
    reps = [distance_stats(w, gate("X"), OU(s, 0.05), BANDS, 512, base_seed=1) for s in (0.002, 0.006, 0.02)]
    for lo, hi in zip(reps, reps[1:]):
        tol = 3 * np.hypot(lo.stderr_fidelity, hi.stderr_fidelity)
        assert hi.mean_fidelity <= lo.mean_fidelity + tol
    assert reps[-1].mean_fidelity < reps[0].mean_fidelity
