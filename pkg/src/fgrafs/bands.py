"""Noise spectra and the frequency bands a pulse has to keep clean.

A ``BandSpec`` lists, per noise axis, the frequency intervals where the
noise carries most of its power together with a weight per axis. Intervals
are snapped outward to the 2 pi / N grid so they translate to integer bins.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import integrate, optimize

from .errors import DegenerateBandError, DomainError, ValidationError

__all__ = [
    "NOISE_AXES",
    "PsdModel",
    "OU",
    "OneOverF",
    "Tabulated",
    "BandSpec",
    "psd_eval",
    "total_power",
    "tail_fraction",
    "derive_cnb",
    "cutoff_frequency",
    "nb_fraction_by_quadrature",
    "cnb_size",
    "interval_bins",
]

NOISE_AXES = ("x", "y", "z")
_SNAP = 1e-9


class PsdModel:
    """One-sided power spectral density on [0, inf)."""

    def __call__(self, omega):
        omega = np.asarray(omega, dtype=float)
        if np.any(omega < 0):
            raise DomainError("PSD evaluated at a negative frequency")
        return self._eval(omega)

    def _eval(self, omega):
        raise NotImplementedError

    @property
    def total_power(self) -> float:
        raise NotImplementedError

    def power_above(self, omega: float) -> float:
        """Integral of the PSD over [omega, inf)."""
        raise NotImplementedError


@dataclass(frozen=True)
class OU(PsdModel):
    """Lorentzian spectrum 2 sigma^2 gamma / (gamma^2 + omega^2)."""

    sigma: float
    gamma: float

    def __post_init__(self):
        if self.sigma < 0 or self.gamma <= 0:
            raise ValidationError("OU needs sigma >= 0 and gamma > 0", key="psd")

    def _eval(self, omega):
        return 2 * self.sigma**2 * self.gamma / (self.gamma**2 + omega**2)

    @property
    def total_power(self) -> float:
        return np.pi * self.sigma**2

    def power_above(self, omega: float) -> float:
        return 2 * self.sigma**2 * (np.pi / 2 - np.arctan(omega / self.gamma))


@dataclass(frozen=True)
class OneOverF(PsdModel):
    """A / omega^2 between hard cutoffs, zero elsewhere."""

    A: float
    omega_low: float
    omega_high: float

    def __post_init__(self):
        if not (0 < self.omega_low < self.omega_high) or self.A < 0:
            raise ValidationError("OneOverF needs A >= 0 and 0 < omega_low < omega_high", key="psd")

    def _eval(self, omega):
        inside = (omega >= self.omega_low) & (omega <= self.omega_high)
        safe = np.where(inside, omega, 1.0)
        return np.where(inside, self.A / safe**2, 0.0)

    @property
    def total_power(self) -> float:
        return self.A * (1 / self.omega_low - 1 / self.omega_high)

    def power_above(self, omega: float) -> float:
        lo = max(omega, self.omega_low)
        if lo >= self.omega_high:
            return 0.0
        return self.A * (1 / lo - 1 / self.omega_high)


@dataclass(frozen=True)
class Tabulated(PsdModel):
    """Linear interpolation of sampled values; zero outside the sampled range."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.ndim != 1 or g.shape != v.shape or g.size < 2:
            raise ValidationError("tabulated PSD needs matching 1-d grid and values", key="psd")
        if np.any(np.diff(g) <= 0) or np.any(v < 0) or g[0] < 0:
            raise ValidationError("tabulated PSD grid must increase from >= 0 with values >= 0", key="psd")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)

    def _eval(self, omega):
        return np.interp(omega, self.grid, self.values, left=0.0, right=0.0)

    @property
    def total_power(self) -> float:
        return float(np.trapezoid(self.values, self.grid))

    def power_above(self, omega: float) -> float:
        g, v = self.grid, self.values
        if omega <= g[0]:
            return self.total_power
        if omega >= g[-1]:
            return 0.0
        i = int(np.searchsorted(g, omega, side="right"))
        vo = float(np.interp(omega, g, v))
        return float(np.trapezoid(np.r_[vo, v[i:]], np.r_[omega, g[i:]]))


def psd_eval(model: PsdModel, omega):
    return model(omega)


def total_power(model: PsdModel) -> float:
    return float(model.total_power)


def tail_fraction(model: PsdModel, omega: float) -> float:
    return model.power_above(omega) / model.total_power


def interval_bins(a: float, b: float, N: int) -> np.ndarray:
    """Bins m whose frequency 2 pi m / N lies in [a, b) after outward snapping."""
    dw = 2 * np.pi / N
    lo = int(np.floor(a / dw + _SNAP))
    hi = int(np.ceil(b / dw - _SNAP))
    lo = max(lo, 0)
    hi = min(hi, N)
    return np.arange(lo, hi)


@dataclass(frozen=True)
class BandSpec:
    """Per-axis frequency intervals to suppress, with axis weights.

    ``intervals[mu]`` is a sorted tuple of disjoint half-open intervals
    [a, b) in rad per time step. Weights are normalized to sum to one.
    """

    intervals: Mapping[str, tuple[tuple[float, float], ...]]
    weights: Mapping[str, float]
    epsilon: float | None = None
    omega_h: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        iv = {}
        for mu in NOISE_AXES:
            spans = sorted((float(a), float(b)) for a, b in self.intervals.get(mu, ()))
            for a, b in spans:
                if not (0 <= a < b <= 2 * np.pi + 1e-12):
                    raise ValidationError(f"interval [{a}, {b}) on axis {mu} is invalid", key=f"bands.{mu}")
            for (a0, b0), (a1, b1) in zip(spans, spans[1:]):
                if a1 < b0:
                    raise ValidationError(f"intervals on axis {mu} overlap", key=f"bands.{mu}")
            iv[mu] = tuple(spans)
        extra = set(self.intervals) - set(NOISE_AXES)
        if extra:
            raise ValidationError(f"unknown noise axes {sorted(extra)}", key="bands")
        w = {mu: float(self.weights.get(mu, 0.0)) for mu in NOISE_AXES}
        if any(v < 0 for v in w.values()):
            raise ValidationError("axis weights must be nonnegative", key="bands.weights")
        total = sum(w.values())
        if total <= 0:
            raise ValidationError("axis weights must not all vanish", key="bands.weights")
        object.__setattr__(self, "intervals", iv)
        object.__setattr__(self, "weights", {mu: v / total for mu, v in w.items()})

    @classmethod
    def single_axis(cls, intervals: Sequence[tuple[float, float]], axis: str = "z", **kw) -> "BandSpec":
        return cls(intervals={axis: tuple(intervals)}, weights={axis: 1.0}, **kw)

    @classmethod
    def lowpass_all(cls, omega_h: Mapping[str, float] | float, weights=None) -> "BandSpec":
        if not isinstance(omega_h, Mapping):
            omega_h = {mu: float(omega_h) for mu in NOISE_AXES}
        weights = weights or {mu: 1.0 for mu in NOISE_AXES}
        return cls(
            intervals={mu: ((0.0, w),) for mu, w in omega_h.items() if w > 0},
            weights=weights,
            omega_h=dict(omega_h),
        )

    def bins(self, N: int) -> dict[str, np.ndarray]:
        """Grid bins covered by each axis's intervals."""
        out = {}
        for mu in NOISE_AXES:
            parts = [interval_bins(a, b, N) for a, b in self.intervals[mu]]
            idx = np.unique(np.concatenate(parts)) if parts else np.zeros(0, dtype=int)
            out[mu] = idx.astype(int)
        return out

    def snapped(self, N: int) -> "BandSpec":
        dw = 2 * np.pi / N
        iv = {}
        for mu in NOISE_AXES:
            spans = []
            for a, b in self.intervals[mu]:
                idx = interval_bins(a, b, N)
                if idx.size:
                    spans.append((idx[0] * dw, (idx[-1] + 1) * dw))
            iv[mu] = _merge(spans)
        return BandSpec(intervals=iv, weights=self.weights, epsilon=self.epsilon, omega_h=self.omega_h)


def _merge(spans):
    out = []
    for a, b in sorted(spans):
        if out and a <= out[-1][1] + 1e-15:
            out[-1] = (out[-1][0], max(out[-1][1], b))
        else:
            out.append((a, b))
    return tuple(out)


def cnb_size(spec: BandSpec) -> float:
    """Total width of all intervals, summed over axes."""
    return float(sum(b - a for mu in NOISE_AXES for a, b in spec.intervals[mu]))


def cutoff_frequency(model: PsdModel, epsilon: float) -> float:
    """Smallest omega whose tail fraction equals epsilon (before grid snapping)."""
    if not (0.0 < epsilon < 1.0):
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}", key="epsilon")
    if isinstance(model, OU):
        return float(model.gamma * np.tan((1 - epsilon) * np.pi / 2))
    if isinstance(model, OneOverF):
        lo, hi = model.omega_low, model.omega_high
    elif isinstance(model, Tabulated):
        lo, hi = model.grid[0], model.grid[-1]
    else:
        lo, hi = 0.0, 1.0
        while tail_fraction(model, hi) > epsilon:
            hi *= 2.0
    if tail_fraction(model, lo) <= epsilon:
        return float(lo)
    return float(optimize.brentq(lambda w: tail_fraction(model, w) - epsilon, lo, hi, xtol=1e-14, rtol=1e-14))


def derive_cnb(
    model: PsdModel,
    epsilon: float,
    N: int,
    shape: str = "highpass",
    omega_l: float | None = None,
    delta_omega: float | None = None,
    axis: str = "z",
) -> BandSpec:
    """Single-axis band from the fractional power left in the tail.

    ``shape`` is "highpass" for [0, omega_H) or "bandpass" for
    [0, omega_l) u [omega_l + delta_omega, omega_H). The cutoff is capped at
    the Nyquist frequency.
    """
    dw = 2 * np.pi / N
    wh = cutoff_frequency(model, epsilon)
    if wh < dw:
        raise DegenerateBandError(
            f"cutoff {wh:.3g} is below the frequency resolution {dw:.3g}", key="epsilon", omega_h=wh
        )
    wh = min(wh, np.pi)
    if shape == "highpass":
        spans = [(0.0, wh)]
    elif shape == "bandpass":
        if omega_l is None or delta_omega is None:
            raise ValidationError("bandpass needs omega_l and delta_omega", key="shape")
        spans = [(0.0, omega_l), (omega_l + delta_omega, wh)]
        spans = [(a, b) for a, b in spans if b > a]
    else:
        raise ValidationError(f"unknown band shape {shape!r}", key="shape")
    spec = BandSpec(intervals={axis: tuple(spans)}, weights={axis: 1.0}, epsilon=epsilon, omega_h={axis: wh})
    return spec.snapped(N)


def nb_fraction_by_quadrature(model: PsdModel, spec: BandSpec, axis: str = "z") -> float:
    """Fraction of the model's power falling outside the axis's intervals, by quadrature."""
    inside = 0.0
    for a, b in spec.intervals[axis]:
        val, _ = integrate.quad(lambda w: float(model(w)), a, b, limit=200, epsabs=0, epsrel=1e-12)
        inside += val
    return 1.0 - inside / model.total_power
