"""Monte-Carlo simulation of OU dephasing and the distance bound check."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _backend
from .bands import NOISE_AXES, OU, BandSpec, PsdModel
from .errors import StabilityError, ValidationError
from .objective import GateTarget, leakage_fidelity, spectral_leakage
from .propagation import waveform_filter_functions
from .quaternion import qconj, qmul, to_matrix
from .waveform import ControlWaveform

__all__ = [
    "NoiseTrajectory",
    "SimulationReport",
    "axis_generator",
    "ou_trajectory",
    "ou_batch",
    "noisy_propagator",
    "noisy_final_quaternions",
    "distance_stats",
]

_CHUNK = 128


@dataclass(frozen=True)
class NoiseTrajectory:
    """Per-axis noise samples beta[mu, n] in rad/dt, rows x, y, z."""

    beta: np.ndarray
    seed: int

    @property
    def N(self) -> int:
        return self.beta.shape[1]


@dataclass(frozen=True)
class SimulationReport:
    mean_D2: float
    stderr_D2: float
    mean_fidelity: float
    bound_value: float
    realizations: int
    stderr_fidelity: float = 0.0
    F_G: float = 1.0
    F_Gamma: float = 1.0


def axis_generator(base_seed: int, realization: int, axis: int) -> np.random.Generator:
    """Independent Philox stream for one (realization, axis) pair."""
    ss = np.random.SeedSequence(int(base_seed), spawn_key=(int(realization), int(axis)))
    return np.random.Generator(np.random.Philox(ss))


def _check(sigma: float, gamma: float, N: int):
    if sigma < 0:
        raise ValidationError("sigma must be nonnegative", key="sigma", sigma=sigma)
    if not gamma > 0:
        raise ValidationError("gamma must be positive", key="gamma", gamma=gamma)
    if gamma >= 1.0:
        raise StabilityError("OU recursion needs gamma * dt < 1", key="gamma", gamma=gamma)
    if N < 1:
        raise ValidationError("N must be positive", key="N", N=N)


def _draw(sigma, N, base_seed, realizations, axes):
    """Initial values and innovations for the listed realizations, shape (R, 3) and (R, 3, N-1)."""
    R = len(realizations)
    beta0 = np.zeros((R, 3))
    w = np.zeros((R, 3, N - 1))
    for i, r in enumerate(realizations):
        for a in axes:
            rng = axis_generator(base_seed, r, a)
            beta0[i, a] = sigma * rng.standard_normal()
            w[i, a] = rng.standard_normal(N - 1)
    return beta0, w


def ou_batch(sigma: float, gamma: float, N: int, base_seed: int, realizations, axes=NOISE_AXES) -> np.ndarray:
    """OU samples for several realizations, shape (R, 3, N); inactive axes are zero."""
    _check(sigma, gamma, N)
    idx = [NOISE_AXES.index(a) for a in axes]
    beta0, w = _draw(sigma, N, base_seed, list(realizations), idx)
    beta = _backend.ou_recursion(beta0, w, 1.0 - gamma, sigma * np.sqrt(2.0 * gamma))
    mask = np.zeros(3, dtype=bool)
    mask[idx] = True
    beta[:, ~mask] = 0.0
    return beta


def ou_trajectory(
    sigma: float, gamma: float, N: int, seed: int, realization: int = 0, axes=NOISE_AXES
) -> NoiseTrajectory:
    """beta[n+1] = (1 - gamma) beta[n] + sigma sqrt(2 gamma) w[n], w and beta[0]/sigma standard normal."""
    beta = ou_batch(sigma, gamma, N, seed, [realization], axes)[0]
    beta.flags.writeable = False
    return NoiseTrajectory(beta=beta, seed=int(seed))


def noisy_final_quaternions(w: ControlWaveform, beta) -> np.ndarray:
    ax, ay = (np.ascontiguousarray(a) for a in w.xy())
    beta = np.ascontiguousarray(beta, dtype=float)
    if beta.ndim == 2:
        beta = beta[None]
    if beta.shape[1:] != (3, w.basis.N):
        raise ValidationError("noise and waveform lengths differ", key="N", shape=beta.shape)
    return _backend.noisy_final_quaternions(ax, ay, beta)


def noisy_propagator(w: ControlWaveform, traj: NoiseTrajectory) -> np.ndarray:
    """U(T) under control plus noise, noise held constant over each step."""
    return to_matrix(noisy_final_quaternions(w, traj.beta)[0])


def _chunk_scores(args):
    w, g, sigma, gamma, base_seed, realizations, axes = args
    N = w.basis.N
    if sigma == 0:
        beta = np.zeros((len(realizations), 3, N))
    else:
        beta = ou_batch(sigma, gamma, N, base_seed, realizations, axes)
    q = noisy_final_quaternions(w, beta)
    v0 = qmul(qconj(g), q)[:, 0]
    return 1.0 - np.abs(v0), v0 * v0


def distance_stats(
    w: ControlWaveform,
    gate: GateTarget,
    psd: PsdModel,
    bands: BandSpec,
    n_realizations: int,
    base_seed: int,
    axes=NOISE_AXES,
    jobs: int = 1,
    convention: str = "parseval",
) -> SimulationReport:
    """Average squared phase-invariant distance and fidelity over OU realizations.

    bound_value is 2 - F_G - F_Gamma with F_Gamma from the waveform's leakage
    against ``bands`` and the noise power summed over the active axes.
    """
    if n_realizations < 2:
        raise ValidationError("need at least two realizations", key="realizations", n=n_realizations)
    if not isinstance(psd, OU):
        raise ValidationError("simulation supports OU noise only", key="psd", model=type(psd).__name__)
    N = w.basis.N
    g = np.asarray(gate.quaternion, dtype=float)
    chunks = [
        (w, g, psd.sigma, psd.gamma, base_seed, list(range(s, min(s + _CHUNK, n_realizations))), tuple(axes))
        for s in range(0, n_realizations, _CHUNK)
    ]
    if jobs > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_chunk_scores, chunks))
    else:
        parts = [_chunk_scores(c) for c in chunks]
    d2 = np.concatenate([p[0] for p in parts])
    fid = np.concatenate([p[1] for p in parts])
    n = float(n_realizations)
    mean_d2 = float(np.sum(d2) / n)
    mean_f = float(np.sum(fid) / n)
    se_d2 = float(np.sqrt(np.sum((d2 - mean_d2) ** 2) / (n - 1) / n))
    se_f = float(np.sqrt(np.sum((fid - mean_f) ** 2) / (n - 1) / n))

    prop_q = noisy_final_quaternions(w, np.zeros((3, N)))[0]
    F_G = float(qmul(qconj(g), prop_q)[0] ** 2)
    P = len(axes) * psd.total_power
    if P > 0:
        leak = spectral_leakage(waveform_filter_functions(w), bands, convention)
        F_gamma = float(leakage_fidelity(leak, P, float(N), 2 * np.pi / N))
    else:
        F_gamma = 1.0
    return SimulationReport(
        mean_D2=mean_d2,
        stderr_D2=se_d2,
        mean_fidelity=mean_f,
        bound_value=2.0 - F_G - F_gamma,
        realizations=int(n_realizations),
        stderr_fidelity=se_f,
        F_G=F_G,
        F_Gamma=F_gamma,
    )
