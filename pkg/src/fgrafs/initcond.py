"""Analytically informed starting waveforms.

Single axis: a constant drive along x. Two axes: a constant x drive plus a
y square wave whose amplitude, phase and period come from a small
transcendental system chosen so that the filter functions vanish at low
frequency on every axis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from .errors import IcSolveFailure, ValidationError
from .slepian import DpssBasis
from .waveform import ControlWaveform, project_to_basis

__all__ = [
    "MultiAxisIcSolution",
    "cd_initial",
    "solve_multiaxis",
    "square_wave",
    "multiaxis_amplitudes",
    "multiaxis_initial",
]

SHAPES = ("squarewave", "sinusoid", "rotated")


@dataclass(frozen=True)
class MultiAxisIcSolution:
    """Parameters of the constant-drive plus square-wave start.

    ``xi`` is a quarter of the drive angle accumulated over one square-wave
    period, Omega0 T / (4 M). ``theta`` is 2 pi n_xy / M: with the control
    matrix defined through U^dag sigma U, this places the first transverse
    filter-function peak at n_xy and the first longitudinal one at n_z.
    """

    n_z: int
    n_xy: int
    M: int
    theta: float
    xi: float
    Omega0: float
    phi0: float
    N: int

    def residual(self) -> float:
        """Residual of the defining equation; zero at an exact solution."""
        if self.n_xy == 0:
            return 0.0
        x = self.xi
        return float(np.sin(x) ** 2 / (1 - x / np.tan(x)) - np.cos(self.theta / 4) ** 2)


def cd_initial(omega_anchor: float, basis: DpssBasis) -> ControlWaveform:
    """Constant x drive at ``omega_anchor``, projected into the basis."""
    N = basis.N
    if omega_anchor < 2 * np.pi / N * (1 - 1e-12):
        raise ValidationError("drive frequency must be at least one grid step", key="omega_anchor")
    return project_to_basis({"x": np.full(N, float(omega_anchor))}, basis)


def _xi_equation(x, c2):
    return np.sin(x) ** 2 / (1 - x / np.tan(x)) - c2


def solve_multiaxis(n_z: int, n_xy: int, N: int) -> MultiAxisIcSolution:
    """Solve for (M, theta, xi, Omega0, phi0) given the cutoffs in grid steps.

    The defining equation sin^2(xi) / (1 - xi cot xi) = cos^2(theta / 4) is
    strictly decreasing on [pi/2, pi), so the root there is unique and is
    the smallest admissible one. It is found by Newton iteration from
    xi = 2, falling back to bisection whenever a step leaves the bracket.
    """
    n_z, n_xy = int(n_z), int(n_xy)
    if n_z < 0 or n_xy < 0 or n_z + n_xy < 1:
        raise ValidationError("need n_z, n_xy >= 0 with n_z + n_xy >= 1", key="init")
    M = n_z + n_xy
    theta = 2 * np.pi * n_xy / M
    T = float(N)
    if n_xy == 0:
        # no transverse band: plain constant drive at the z cutoff
        return MultiAxisIcSolution(n_z, 0, M, theta, np.pi, 2 * np.pi * n_z / N, 0.0, N)
    if n_z == 0:
        # root sits at xi = pi: a pure y square wave
        return MultiAxisIcSolution(0, n_xy, M, theta, np.pi, 4 * M * np.pi / T, np.pi / 2, N)
    c2 = np.cos(theta / 4) ** 2
    lo, hi = np.pi / 2, np.pi * (1 - 1e-15)
    if _xi_equation(lo, c2) <= 0:
        xi = lo
    else:
        xi = _safeguarded_newton(lambda x: _xi_equation(x, c2), 2.0, lo, hi)
    tan2 = -xi / np.tan(xi)
    if tan2 < -1e-12:
        raise IcSolveFailure("root left the branch where -xi cot xi >= 0", xi=xi)
    phi0 = float(np.arctan(np.sqrt(max(tan2, 0.0))))
    Omega0 = 4 * M * xi / T
    return MultiAxisIcSolution(n_z, n_xy, M, theta, float(xi), float(Omega0), phi0, N)


def _safeguarded_newton(f, x0, lo, hi, tol=1e-15, maxit=200):
    flo = f(lo)
    if flo * f(hi) > 0:
        raise IcSolveFailure("no root of the amplitude equation in (pi/2, pi)")
    x = min(max(x0, lo), hi)
    for _ in range(maxit):
        fx = f(x)
        if fx == 0:
            return float(x)
        if (fx > 0) == (flo > 0):
            lo, flo = x, fx
        else:
            hi = x
        h = 1e-7 * max(1.0, abs(x))
        dfx = (f(x + h) - f(x - h)) / (2 * h)
        new = x - fx / dfx if dfx != 0 else np.nan
        if not (lo < new < hi):
            new = 0.5 * (lo + hi)
        if abs(new - x) <= tol * max(1.0, abs(x)) or hi - lo <= tol:
            return float(new)
        x = new
    raise IcSolveFailure("amplitude equation did not converge", xi=x)


def square_wave(N: int, M: int) -> np.ndarray:
    """Per-step average of a square wave that is +1 on the first half of each of M periods.

    With an odd period N/M the sign flip falls in the middle of a step, whose
    average is then 0.
    """
    if N % M != 0:
        raise ValidationError(f"N={N} is not a multiple of the period count M={M}", key="N")
    P = N // M
    phase = np.arange(N) % P
    out = np.where(2 * phase + 1 < P, 1.0, -1.0)
    if P % 2:
        out[2 * phase + 1 == P] = 0.0
    return out


def multiaxis_amplitudes(sol: MultiAxisIcSolution, shape: str = "squarewave") -> dict[str, np.ndarray]:
    """Unprojected per-step amplitudes for the chosen modulation shape."""
    N, M = sol.N, sol.M
    if shape not in SHAPES:
        raise ValidationError(f"unknown shape {shape!r}", key="shape")
    if sol.n_xy == 0:
        return {"x": np.full(N, sol.Omega0), "y": np.zeros(N)}
    c, s = np.cos(sol.phi0), np.sin(sol.phi0)
    if shape == "sinusoid":
        t = np.arange(N) + 0.5
        mod = np.sin(2 * np.pi * M * t / N)
    else:
        mod = square_wave(N, M)
    if shape == "rotated":
        k = sol.Omega0 / np.sqrt(2.0)
        return {"x": k * (c + s * mod), "y": k * (c - s * mod)}
    return {"x": np.full(N, sol.Omega0 * c), "y": sol.Omega0 * s * mod}


def multiaxis_initial(
    n_z: int, n_xy: int, basis: DpssBasis, shape: str = "squarewave"
) -> tuple[ControlWaveform, MultiAxisIcSolution]:
    sol = solve_multiaxis(n_z, n_xy, basis.N)
    return project_to_basis(multiaxis_amplitudes(sol, shape), basis), sol
