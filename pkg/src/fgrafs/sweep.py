"""Batch runs over control bandwidth, bands and gates."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from .bands import BandSpec, cnb_size
from .errors import FgrafsError, ValidationError
from .initcond import cd_initial, multiaxis_initial
from .objective import CLIFFORD_T, gate
from .optimizer import OptimizerConfig, optimize_constrained
from .problem import PulseProblem
from .slepian import generate_dpss

__all__ = [
    "Scenario",
    "SweepRow",
    "SweepResult",
    "x_theta_gates",
    "single_axis_scenario",
    "multi_axis_scenario",
    "bandwidth_sweep",
    "window_summary",
    "power_analysis",
    "tolerance_study",
    "cell_seed",
    "WINDOW",
]

WINDOW = 0.1
_FAILED = ("degenerate", "infeasible", "error")


@dataclass(frozen=True)
class Scenario:
    """A band configuration in normalized frequency (cycles per step).

    Single-axis: ``omega_h`` is the z cutoff. Multi-axis: ``omega_z`` and
    ``omega_xy`` are the z and transverse cutoffs. ``controls`` lists the
    driven axes; empty means x alone for single-axis and x, y otherwise.
    """

    kind: str
    omega_h: float = 0.0
    omega_z: float = 0.0
    omega_xy: float = 0.0
    controls: tuple[str, ...] = ()

    @property
    def control_axes(self) -> tuple[str, ...]:
        if self.controls:
            return self.controls
        return ("x",) if self.kind == "single-axis" else ("x", "y")

    @property
    def size(self) -> float:
        """|B| in normalized frequency: omega_h, or omega_z + 2 omega_xy."""
        if self.kind == "single-axis":
            return self.omega_h
        return self.omega_z + 2 * self.omega_xy

    def grid_size(self, N: int) -> float:
        """|B| of the band as the optimizer sees it, snapped outward to whole bins."""
        return cnb_size(self.bands().snapped(N)) / (2 * np.pi)

    def bands(self) -> BandSpec:
        tau = 2 * np.pi
        if self.kind == "single-axis":
            return BandSpec.single_axis([(0.0, tau * self.omega_h)])
        spans = {"x": [(0.0, tau * self.omega_xy)], "y": [(0.0, tau * self.omega_xy)], "z": [(0.0, tau * self.omega_z)]}
        spans = {k: v for k, v in spans.items() if v[0][1] > 0}
        return BandSpec(intervals=spans, weights={k: 1.0 for k in spans})


def single_axis_scenario(omega_h: float, controls: Sequence[str] = ("x",)) -> Scenario:
    if not omega_h > 0:
        raise ValidationError("omega_h must be positive", key="omega_h")
    controls = tuple(controls)
    if controls not in (("x",), ("x", "y")):
        raise ValidationError(f"controls must be x or x, y, got {controls}", key="controls")
    return Scenario("single-axis", omega_h=float(omega_h), controls=controls)


def multi_axis_scenario(omega_z: float, omega_xy: float) -> Scenario:
    if not omega_z > 0 or omega_xy < 0:
        raise ValidationError("need omega_z > 0 and omega_xy >= 0", key="omega_z")
    return Scenario("multi-axis", omega_z=float(omega_z), omega_xy=float(omega_xy))


def x_theta_gates(count: int = 5) -> list[str]:
    """Labels of X rotations with angles evenly spaced over [0, pi]."""
    return [f"X{float(t)!r}" for t in np.linspace(0.0, np.pi, count)]


@dataclass(frozen=True)
class SweepRow:
    scenario: str
    N: int
    W: float
    ratio: float
    B_size: float
    omega_h: float
    omega_z: float
    omega_xy: float
    gate: str
    controls: str
    epsilon_G: float
    gamma: float
    F_G: float
    P_x: float
    P_y: float
    iterations: int
    termination: str
    seed: int

    @property
    def ok(self) -> bool:
        return self.termination.split(":")[0] not in _FAILED


@dataclass
class SweepResult:
    rows: list[SweepRow]
    summary: list[dict] = field(default_factory=list)

    def ok_rows(self) -> list[SweepRow]:
        return [r for r in self.rows if r.ok]


def cell_seed(base_seed: int, index: int) -> int:
    return int(np.random.SeedSequence(int(base_seed), spawn_key=(int(index),)).generate_state(1, np.uint64)[0])


def _gate_target(label: str):
    if label.startswith("X") and len(label) > 1:
        try:
            theta = float(label[1:])
        except ValueError:
            raise ValidationError(f"unknown gate {label!r}", key="gates") from None
        return gate("Xtheta", theta)
    return gate(label)


def _initial(sc: Scenario, problem: PulseProblem, basis, N: int, ic: str, seed: int):
    if ic == "random":
        rng = np.random.Generator(np.random.Philox(seed))
        return 0.1 * rng.standard_normal(problem.n_params)
    tau = 2 * np.pi
    if sc.kind == "single-axis":
        return problem.to_coeffs(cd_initial(tau * sc.omega_h, basis))
    n_z = int(round(sc.omega_z * N))
    n_xy = int(round(sc.omega_xy * N))
    return problem.to_coeffs(multiaxis_initial(n_z, n_xy, basis)[0])


def _run_cell(args) -> SweepRow:
    sc, N, ratio, label, cfg, seed, ic = args
    size = sc.grid_size(N)
    W = ratio * size
    base = dict(
        scenario=sc.kind,
        N=N,
        W=W,
        ratio=ratio,
        B_size=size,
        omega_h=sc.omega_h,
        omega_z=sc.omega_z,
        omega_xy=sc.omega_xy,
        gate=label,
        controls="".join(sc.control_axes),
        epsilon_G=cfg.epsilon_G,
        seed=seed,
    )
    nan = float("nan")
    if not (0 < W < 0.5) or math.floor(2 * N * W + 1e-9) < 1:
        return SweepRow(**base, gamma=nan, F_G=nan, P_x=nan, P_y=nan, iterations=0, termination="degenerate")
    try:
        basis = generate_dpss(N, W)
        problem = PulseProblem(basis, _gate_target(label), sc.bands(), axes=sc.control_axes)
        x0 = _initial(sc, problem, basis, N, ic, seed)
        res = optimize_constrained(problem, x0, cfg)
    except FgrafsError as exc:
        return SweepRow(**base, gamma=nan, F_G=nan, P_x=nan, P_y=nan, iterations=0, termination=f"error:{exc.code}")
    ax, ay = res.waveform.xy()
    return SweepRow(
        **base,
        gamma=res.gamma_final,
        F_G=res.F_G_final,
        P_x=float(np.sum(ax * ax)),
        P_y=float(np.sum(ay * ay)),
        iterations=res.iterations,
        termination=res.termination,
    )


def bandwidth_sweep(
    scenarios: Sequence[Scenario],
    ratios: Sequence[float],
    gates: Sequence[str],
    cfg: OptimizerConfig = OptimizerConfig(),
    N: int = 256,
    base_seed: int = 0,
    jobs: int = 1,
    ic: str = "analytic",
) -> SweepResult:
    """Optimize every (scenario, W, gate) cell.

    W is ``ratio`` times |B| in normalized units, with |B| measured on the
    band snapped to the frequency grid, since that is the set of bins the
    optimizer suppresses.

    Cells are independent; results come back in grid order whatever the
    number of workers.
    """
    if not scenarios or not ratios or not gates:
        raise ValidationError("sweep grids must be nonempty", key="sweep")
    if ic not in ("analytic", "random"):
        raise ValidationError(f"unknown initial condition {ic!r}", key="ic")
    cells = []
    for sc in scenarios:
        for ratio in ratios:
            for label in gates:
                cells.append((sc, int(N), float(ratio), str(label), cfg, cell_seed(base_seed, len(cells)), ic))
    if jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_cell, cells))
    else:
        rows = [_run_cell(c) for c in cells]
    return SweepResult(rows=rows, summary=window_summary(rows))


def window_summary(rows: Sequence[SweepRow], width: float = WINDOW) -> list[dict]:
    """Mean, median and minimum optimized leakage per window of the W / |B| ratio.

    Failed and degenerate rows are counted but left out of the statistics.
    """
    buckets: dict[int, list[SweepRow]] = {}
    for r in rows:
        buckets.setdefault(int(math.floor(r.ratio / width + 1e-9)), []).append(r)
    out = []
    for k in sorted(buckets):
        rs = buckets[k]
        g = np.array(sorted(r.gamma for r in rs if r.ok), dtype=float)
        out.append(
            {
                "ratio_lo": round(k * width, 12),
                "ratio_hi": round((k + 1) * width, 12),
                "count": int(g.size),
                "failed": len(rs) - int(g.size),
                "mean_gamma": float(np.mean(g)) if g.size else float("nan"),
                "median_gamma": float(np.median(g)) if g.size else float("nan"),
                "min_gamma": float(g[0]) if g.size else float("nan"),
            }
        )
    return out


def power_analysis(rows: Sequence[SweepRow], omega_z: float | None = None) -> list[dict]:
    """Control power normalized by the constant-drive power omega_z^2 T.

    ``omega_z`` is in normalized frequency; by default each row's own z (or
    single-axis) cutoff is used.
    """
    out = []
    for r in rows:
        wz = omega_z if omega_z is not None else (r.omega_h if r.scenario == "single-axis" else r.omega_z)
        norm = (2 * np.pi * wz) ** 2 * r.N
        if not norm > 0:
            raise ValidationError("normalizing frequency must be positive", key="omega_z")
        out.append(
            {
                "W": r.W,
                "ratio": r.ratio,
                "gate": r.gate,
                "P_total": (r.P_x + r.P_y) / norm,
                "P_x": r.P_x / norm,
                "P_y": r.P_y / norm,
            }
        )
    return out


def tolerance_study(
    scenarios: Sequence[Scenario],
    ratios: Sequence[float],
    gates: Sequence[str],
    epsilons: Sequence[float] = (1e-10, 1e-8, 1e-6),
    cfg: OptimizerConfig = OptimizerConfig(),
    **kw,
) -> dict[float, SweepResult]:
    """The same sweep once per gate-fidelity tolerance."""
    return {eps: bandwidth_sweep(scenarios, ratios, gates, replace(cfg, epsilon_G=eps), **kw) for eps in epsilons}


def row_dict(r: SweepRow) -> dict:
    return asdict(r)
