"""Exact derivatives of the propagator, filter functions and scores.

Filter-function gradients use a reverse (adjoint) pass: the sensitivity of
the score to every control-matrix sample is obtained with one FFT, and a
suffix sum carries it back to each step, so the cost is O(N log N) per
evaluation instead of one propagator derivative per time step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import DomainError
from .propagation import Propagation, control_matrix_trajectory, frequency_domain, propagate
from .quaternion import (
    qconj,
    qmul,
    rotation_differential,
    rotation_matrices,
    segment_quaternion_derivatives,
    to_matrix,
)
from .waveform import ControlWaveform

__all__ = [
    "GradientBundle",
    "d_segment_exponential",
    "d_propagator_d_amplitudes",
    "d_propagator_d_coeff",
    "ff_adjoint",
    "fidelity_gradient",
    "d_leakage_and_fidelity",
    "iq_reparam_gradient",
    "polar_to_cartesian",
    "spectrum_jacobian",
    "gate_error_jacobian",
    "central_difference",
]


@dataclass(frozen=True)
class GradientBundle:
    """Per-axis coefficient gradients of leakage and ideal gate fidelity."""

    dGamma: dict[str, np.ndarray]
    dFG: dict[str, np.ndarray]


def d_segment_exponential(A, B, dt: float = 1.0) -> np.ndarray:
    """d/ds exp(-i dt (A + s B)) at s = 0, from the eigensystem of A.

    In the eigenbasis of A the derivative is B times the divided difference
    of exp(-i dt x): (e_l - e_l') / (l - l') off the diagonal, and
    -i dt e_l where the eigenvalues coincide (closer than 1e-12).
    """
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    if np.abs(A - A.conj().T).max() > 1e-10:
        raise DomainError("A must be Hermitian")
    lam, Vec = np.linalg.eigh(A)
    e = np.exp(-1j * dt * lam)
    diff = np.subtract.outer(lam, lam)
    degenerate = np.abs(diff) < 1e-12
    limit = -1j * dt * 0.5 * np.add.outer(e, e)
    ratio = np.where(degenerate, limit, np.subtract.outer(e, e) / np.where(degenerate, 1.0, diff))
    return Vec @ ((Vec.conj().T @ B @ Vec) * ratio) @ Vec.conj().T


def _segment_derivative_quaternions(p: Propagation):
    return segment_quaternion_derivatives(p.ax, p.ay)


def d_propagator_d_amplitudes(p: Propagation) -> np.ndarray:
    """dU_C(T)/dOmega_{nu,j} as quaternions, shape (2, N, 4).

    Each column is the suffix product, the step derivative and the prefix
    product taken from the cached cumulative propagators.
    """
    q = p.cumulative
    left = qmul(q[-1][None, :], qconj(q[1:]))
    out = []
    for dseg in _segment_derivative_quaternions(p):
        out.append(qmul(qmul(left, dseg), q[:-1]))
    return np.stack(out)


def d_propagator_d_coeff(w: ControlWaveform, p: Propagation | None = None) -> dict[str, np.ndarray]:
    """dU_C(T)/d alpha_{nu,k} as 2x2 matrices, one (K, 2, 2) array per axis."""
    p = p or propagate(*w.xy())
    dq = d_propagator_d_amplitudes(p)
    V = w.basis.sequences
    out = {}
    for i, ax in enumerate(("x", "y")):
        if ax in w.axes:
            out[ax] = to_matrix(V @ dq[i])
    return out


def ff_adjoint(p: Propagation, c: np.ndarray, R: np.ndarray | None = None, Rt: np.ndarray | None = None):
    """Gradient of sum_{mu,m} c[mu,m] F_mu[m] with respect to the amplitudes.

    Returns an array of shape (2, N): derivatives along x and y per step.
    """
    if R is None:
        R = control_matrix_trajectory(p)
    if Rt is None:
        Rt = frequency_domain(R)
    N = R.shape[0]
    X = c.T[:, :, None] * np.conj(Rt)
    G = 2.0 * np.fft.fft(X, axis=0).real
    P = np.einsum("nkm,nkl->nml", R, G)
    H = np.zeros((N, 3, 3))
    H[:-1] = np.cumsum(P[:0:-1], axis=0)[::-1]
    Rall = rotation_matrices(p.cumulative)
    M = np.einsum("jab,jbc,jdc->jad", Rall[1:], H, Rall[:-1])
    grads = np.empty((2, N))
    for i, dseg in enumerate(_segment_derivative_quaternions(p)):
        dA = rotation_differential(p.segments, dseg)
        grads[i] = np.einsum("jab,jab->j", M, dA)
    return grads


def fidelity_gradient(p: Propagation, g: np.ndarray):
    """F_G = (g . q_N)^2 and its amplitude gradient, shape (2, N)."""
    q = p.cumulative
    ov = float(np.dot(g, q[-1]))
    z = qmul(qmul(q[1:], qconj(q[-1])[None, :]), qmul(g[None, :], qconj(q[:-1])))
    grads = np.empty((2, q.shape[0] - 1))
    for i, dseg in enumerate(_segment_derivative_quaternions(p)):
        grads[i] = 2.0 * ov * np.einsum("jk,jk->j", z, dseg)
    return ov * ov, grads


def contract(w: ControlWaveform, grads_amp: np.ndarray) -> dict[str, np.ndarray]:
    """Chain rule from per-step amplitude gradients to coefficient gradients."""
    V = w.basis.sequences
    return {ax: V @ grads_amp[0 if ax == "x" else 1] for ax in w.axes}


def d_leakage_and_fidelity(w: ControlWaveform, bands, target, convention: str = "parseval") -> GradientBundle:
    from .objective import leakage_weights

    p = propagate(*w.xy())
    c = leakage_weights(bands, w.N, convention)
    gG = ff_adjoint(p, c)
    _, gF = fidelity_gradient(p, target.quaternion)
    return GradientBundle(dGamma=contract(w, gG), dFG=contract(w, gF))


def polar_to_cartesian(amp, phase):
    amp = np.asarray(amp, dtype=float)
    phase = np.asarray(phase, dtype=float)
    return amp * np.cos(phase), amp * np.sin(phase)


def iq_reparam_gradient(amp, phase, cartesian_grads, basis=None):
    """Per-step Cartesian gradients to polar gradients.

    ``amp`` and ``phase`` are the per-step amplitude and phase, and
    ``cartesian_grads`` has shape (2, N). With a basis, the result is also
    contracted with its rows to give coefficient gradients.
    """
    amp = np.asarray(amp, dtype=float)
    phase = np.asarray(phase, dtype=float)
    gx, gy = cartesian_grads
    c, s = np.cos(phase), np.sin(phase)
    d_amp = c * gx + s * gy
    d_phase = amp * (-s * gx + c * gy)
    if basis is not None:
        V = basis.sequences
        return V @ d_amp, V @ d_phase
    return d_amp, d_phase


def spectrum_jacobian(p: Propagation, rows: dict[int, np.ndarray], R: np.ndarray | None = None):
    """Derivatives of selected frequency-domain control-matrix entries.

    ``rows`` maps a noise-axis index mu to the bins m of interest. Returns a
    dict mu -> complex array of shape (2, len(bins), 3, N): d Rt[m, mu, lam]
    / d Omega_{nu, j}.
    """
    if R is None:
        R = control_matrix_trajectory(p)
    N = R.shape[0]
    Rall = rotation_matrices(p.cumulative)
    dsegs = _segment_derivative_quaternions(p)
    B = []
    for dseg in dsegs:
        dA = rotation_differential(p.segments, dseg)
        B.append(np.einsum("jba,jbc,jcd->jad", Rall[1:], dA, Rall[:-1]))
    n = np.arange(N)
    out = {}
    for mu, bins in rows.items():
        bins = np.asarray(bins, dtype=int)
        phase = np.exp(-2j * np.pi * np.outer(bins, n) / N)
        terms = phase[:, :, None] * R[None, :, mu, :]
        X = np.zeros((bins.size, N, 3), dtype=complex)
        X[:, :-1] = np.cumsum(terms[:, :0:-1], axis=1)[:, ::-1]
        out[mu] = np.stack([np.einsum("mjk,jkl->mlj", X, Bv) for Bv in B])
    return out


def gate_error_jacobian(p: Propagation, g: np.ndarray):
    """Quaternion of U_G^dag U_C(T) and its amplitude Jacobian, shape (2, 4, N).

    The scalar part squared is the ideal gate fidelity; the vector part
    squared is the infidelity.
    """
    q = p.cumulative
    v = qmul(qconj(g), q[-1])
    left = qmul(v[None, :], qconj(q[1:]))
    J = []
    for dseg in _segment_derivative_quaternions(p):
        J.append(qmul(qmul(left, dseg), q[:-1]).T)
    return v, np.stack(J)


def central_difference(f, x, h: float = 1e-6) -> np.ndarray:
    """Central finite-difference gradient of a scalar function (test oracle)."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def expm_segment(A, dt: float = 1.0) -> np.ndarray:
    return expm(-1j * dt * np.asarray(A, dtype=complex))
