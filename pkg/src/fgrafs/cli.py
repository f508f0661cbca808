"""Command-line entry point.

Every subcommand takes one TOML or JSON config file. Frequencies and rates in
configs are normalized (cycles per time step); the code multiplies by 2 pi.
Outputs are deterministic functions of the config and seed.
"""

from __future__ import annotations

import csv
import io
import json
import os
import sys
from pathlib import Path
from typing import Literal, Optional

import click
import numpy as np
import pydantic
from pydantic import BaseModel, ConfigDict, Field

from .bands import NOISE_AXES, OU, BandSpec, OneOverF, cutoff_frequency, derive_cnb
from .errors import FgrafsError, NumericalError, ValidationError
from .initcond import cd_initial, multiaxis_initial
from .montecarlo import distance_stats
from .objective import CLIFFORD_T, gate
from .optimizer import OptimizerConfig, optimize_constrained, optimize_unconstrained
from .problem import PulseProblem
from .propagation import waveform_filter_functions
from .slepian import generate_dpss
from .sweep import (
    SweepRow,
    bandwidth_sweep,
    multi_axis_scenario,
    power_analysis,
    single_axis_scenario,
    window_summary,
    x_theta_gates,
)
from .waveform import ControlWaveform, truncated_basis, waveform_from_json, waveform_to_json

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

TAU = 2 * np.pi
SEED_ENV = "FGRAFS_SEED"


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DpssSection(_Section):
    N: int = Field(gt=1)
    W: Optional[float] = Field(default=None, gt=0, lt=0.5)
    K: Optional[int] = Field(default=None, gt=0)
    eta: Optional[float] = Field(default=None, gt=0, lt=1)


class InitSection(_Section):
    kind: Literal["cd", "multiaxis", "random"] = "cd"
    omega: Optional[float] = Field(default=None, gt=0, le=0.5)
    nz: int = Field(default=0, ge=0)
    nxy: int = Field(default=0, ge=0)
    shape: Literal["squarewave", "sinusoid", "rotated"] = "squarewave"
    scale: float = Field(default=0.1, gt=0)


class PsdSection(_Section):
    model: Literal["ou", "one_over_f"] = "ou"
    sigma: float = Field(default=0.0, ge=0)
    gamma: float = Field(default=0.0, ge=0)
    A: float = Field(default=0.0, ge=0)
    omega_low: float = Field(default=0.0, ge=0)
    omega_high: float = Field(default=0.5, gt=0)


class BandsSection(_Section):
    x: list[tuple[float, float]] = []
    y: list[tuple[float, float]] = []
    z: list[tuple[float, float]] = []
    weights: Optional[dict[Literal["x", "y", "z"], float]] = None
    psd: Optional[PsdSection] = None
    epsilon: Optional[float] = Field(default=None, gt=0, lt=1)
    shape: Literal["highpass", "bandpass"] = "highpass"
    omega_l: Optional[float] = Field(default=None, ge=0)
    delta_omega: Optional[float] = Field(default=None, gt=0)
    axes: list[Literal["x", "y", "z"]] = ["z"]


class GateSection(_Section):
    label: str = "X"
    theta: Optional[float] = None


class OptimizeSection(_Section):
    mode: Literal["constrained", "unconstrained"] = "constrained"
    objective: Literal["leakage", "psd"] = "leakage"
    param: Literal["cartesian", "polar"] = "cartesian"
    axes: list[Literal["x", "y"]] = ["x"]
    convention: Literal["parseval", "discrete"] = "parseval"
    epsilon_G: float = Field(default=1e-10, gt=0, lt=1)
    grad_tol: float = Field(default=1e-12, gt=0)
    max_iters: int = Field(default=1000, ge=1)
    memory: int = Field(default=10, ge=1)
    seed: int = Field(default=0, ge=0)


class SimulateSection(_Section):
    sigma: list[float] = Field(min_length=1)
    gamma: list[float] = Field(min_length=1)
    epsilon: float = Field(default=0.01, gt=0, lt=1)
    realizations: int = Field(default=500, ge=2)
    seed: int = Field(default=0, ge=0)
    gates: list[str] = ["X"]
    axes: list[Literal["x", "y", "z"]] = ["x", "y", "z"]
    bandwidth_factor: float = Field(default=2.0, gt=0)
    max_W: float = Field(default=0.49, gt=0, lt=0.5)


class SweepSection(_Section):
    scenario: Literal["single-axis", "multi-axis"] = "single-axis"
    controls: list[Literal["x", "y"]] = ["x"]
    N: int = Field(default=256, gt=1)
    omega_h: list[float] = []
    cutoffs: list[tuple[float, float]] = []
    ratios: list[float] = Field(min_length=1)
    gates: list[str] = []
    xtheta_count: Optional[int] = Field(default=None, ge=1)
    ic: Literal["analytic", "random"] = "analytic"
    epsilons: Optional[list[float]] = None
    seed: int = Field(default=0, ge=0)


class PowerSection(_Section):
    rows: str
    omega_z: Optional[float] = Field(default=None, gt=0)


class FfSection(_Section):
    waveform: Optional[str] = None


class IoSection(_Section):
    out_dir: str = "fgrafs-out"
    format: Literal["csv", "json"] = "csv"


class RunConfig(_Section):
    dpss: Optional[DpssSection] = None
    init: Optional[InitSection] = None
    bands: Optional[BandsSection] = None
    gate: GateSection = GateSection()
    optimize: OptimizeSection = OptimizeSection()
    simulate: Optional[SimulateSection] = None
    sweep: Optional[SweepSection] = None
    power_analysis: Optional[PowerSection] = None
    ff: Optional[FfSection] = None
    io: IoSection = IoSection()


# configuration loading


def load_config(path: str | Path) -> RunConfig:
    p = Path(path)
    try:
        raw = p.read_bytes()
    except OSError as exc:
        raise ValidationError(f"cannot read config: {exc}", key="config") from None
    try:
        if p.suffix.lower() == ".json":
            data = json.loads(raw)
        else:
            data = tomllib.loads(raw.decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise ValidationError(f"cannot parse config: {exc}", key="config") from None
    cfg = RunConfig.model_validate(data)
    return _apply_seed_env(cfg)


def _apply_seed_env(cfg: RunConfig) -> RunConfig:
    val = os.environ.get(SEED_ENV)
    if val is None or val == "":
        return cfg
    try:
        seed = int(val)
    except ValueError:
        raise ValidationError(f"{SEED_ENV} must be an integer", key=SEED_ENV) from None
    if seed < 0:
        raise ValidationError(f"{SEED_ENV} must be nonnegative", key=SEED_ENV)
    upd = {"optimize": cfg.optimize.model_copy(update={"seed": seed})}
    if cfg.simulate is not None:
        upd["simulate"] = cfg.simulate.model_copy(update={"seed": seed})
    if cfg.sweep is not None:
        upd["sweep"] = cfg.sweep.model_copy(update={"seed": seed})
    return cfg.model_copy(update=upd)


def _require(section, key: str):
    if section is None:
        raise ValidationError(f"config needs a [{key}] section", key=key)
    return section


# deterministic writers


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_table(path: Path, header: list[str], rows, fmt_name: str = "csv") -> Path:
    rows = [list(r) for r in rows]
    if fmt_name == "json":
        path = path.with_suffix(".json")
        doc = [{h: _json_value(v) for h, v in zip(header, r)} for r in rows]
        path.write_text(json.dumps(doc, indent=1) + "\n")
        return path
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    path.write_text(buf.getvalue())
    return path


def _json_value(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if np.isfinite(f) else fmt(f)
    return v


def write_json(path: Path, doc: dict) -> Path:
    path.write_text(json.dumps(doc, indent=1, sort_keys=True, default=_json_value) + "\n")
    return path


def read_table(path: str | Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValidationError("empty table", key="rows")
    return rows[0], rows[1:]


# pipeline pieces


def build_basis(cfg: RunConfig, W: float | None = None):
    d = _require(cfg.dpss, "dpss")
    W = d.W if W is None else W
    if W is None:
        raise ValidationError("dpss.W is required", key="dpss.W")
    if d.eta is not None:
        return truncated_basis(d.N, W, d.eta)
    return generate_dpss(d.N, W, d.K)


def build_psd(p: PsdSection):
    if p.model == "ou":
        return OU(TAU * p.sigma, TAU * p.gamma)
    return OneOverF(p.A, TAU * p.omega_low, TAU * p.omega_high)


def build_bands(cfg: RunConfig, N: int) -> BandSpec | None:
    b = cfg.bands
    if b is None:
        return None
    if b.psd is not None and b.epsilon is not None:
        model = build_psd(b.psd)
        ol = None if b.omega_l is None else TAU * b.omega_l
        dl = None if b.delta_omega is None else TAU * b.delta_omega
        specs = [derive_cnb(model, b.epsilon, N, b.shape, ol, dl, axis=a) for a in b.axes]
        iv = {a: s.intervals[a] for a, s in zip(b.axes, specs)}
        return BandSpec(intervals=iv, weights=b.weights or {a: 1.0 for a in iv}, epsilon=b.epsilon)
    iv = {a: [(TAU * lo, TAU * hi) for lo, hi in getattr(b, a)] for a in NOISE_AXES if getattr(b, a)}
    if not iv:
        raise ValidationError("bands need intervals or a psd with epsilon", key="bands")
    return BandSpec(intervals=iv, weights=b.weights or {a: 1.0 for a in iv})


def build_gate(g: GateSection):
    return gate(g.label, g.theta)


def build_initial(cfg: RunConfig, basis, bands: BandSpec | None) -> ControlWaveform:
    init = cfg.init or InitSection()
    if init.kind == "multiaxis":
        return multiaxis_initial(init.nz, init.nxy, basis, init.shape)[0]
    if init.kind == "random":
        rng = np.random.Generator(np.random.Philox(cfg.optimize.seed))
        axes = cfg.optimize.axes
        return ControlWaveform(basis, {a: init.scale * rng.standard_normal(basis.K) for a in axes})
    if init.omega is not None:
        omega = TAU * init.omega
    elif bands is not None:
        omega = max(b for mu in NOISE_AXES for _, b in bands.intervals[mu])
    else:
        raise ValidationError("constant drive needs init.omega or bands", key="init.omega")
    return cd_initial(omega, basis)


def build_problem(cfg: RunConfig, basis, bands) -> PulseProblem:
    o = cfg.optimize
    psd = None
    if o.objective == "psd":
        if cfg.bands is None or cfg.bands.psd is None:
            raise ValidationError("psd objective needs bands.psd", key="bands.psd")
        psd = build_psd(cfg.bands.psd)
    return PulseProblem(
        basis,
        build_gate(cfg.gate),
        bands,
        axes=tuple(o.axes),
        kind=o.objective,
        psd=psd,
        param=o.param,
        convention=o.convention,
    )


def run_optimizer(cfg: RunConfig, problem: PulseProblem, x0):
    o = cfg.optimize
    oc = OptimizerConfig(
        mode=o.mode, epsilon_G=o.epsilon_G, grad_tol=o.grad_tol, max_iters=o.max_iters, memory=o.memory
    )
    if o.mode == "constrained":
        return optimize_constrained(problem, x0, oc)
    P = None
    if problem.kind == "leakage":
        if cfg.bands is None or cfg.bands.psd is None:
            raise ValidationError("unconstrained leakage mode needs bands.psd for the total power", key="bands.psd")
        P = sum(1 for mu in NOISE_AXES if problem.bands.intervals[mu]) * build_psd(cfg.bands.psd).total_power
    return optimize_unconstrained(problem, x0, P, oc)


def ff_rows(w: ControlWaveform):
    ff = waveform_filter_functions(w)
    N = w.N
    for m in range(N // 2 + 1):
        yield [m, TAU * m / N, ff.F[0, m], ff.F[1, m], ff.F[2, m]]


FF_HEADER = ["m", "omega", "F_x", "F_y", "F_z"]


# subcommand bodies; each returns the list of files written


def cmd_dpss(cfg: RunConfig, out: Path, jobs: int) -> list[Path]:
    basis = build_basis(cfg)
    f = cfg.io.format
    seq = write_table(
        out / "dpss.csv",
        ["n"] + [f"v{k}" for k in range(basis.K)],
        ([n] + list(basis.sequences[:, n]) for n in range(basis.N)),
        f,
    )
    eig = write_table(out / "eigenvalues.csv", ["k", "lambda"], ([k, lam] for k, lam in enumerate(basis.eigenvalues)), f)
    return [seq, eig]


def cmd_init(cfg: RunConfig, out: Path, jobs: int) -> list[Path]:
    basis = build_basis(cfg)
    bands = build_bands(cfg, basis.N)
    init = cfg.init or InitSection()
    meta = {"kind": init.kind}
    if init.kind == "multiaxis":
        w, sol = multiaxis_initial(init.nz, init.nxy, basis, init.shape)
        meta.update({k: getattr(sol, k) for k in ("n_z", "n_xy", "M", "theta", "xi", "Omega0", "phi0")})
        meta["shape"] = init.shape
    else:
        w = build_initial(cfg, basis, bands)
    p = out / "initial.json"
    p.write_text(waveform_to_json(w, **meta) + "\n")
    return [p]


def cmd_ff(cfg: RunConfig, out: Path, jobs: int) -> list[Path]:
    if cfg.ff is not None and cfg.ff.waveform is not None:
        try:
            text = Path(cfg.ff.waveform).read_text()
        except OSError as exc:
            raise ValidationError(f"cannot read waveform: {exc}", key="ff.waveform") from None
        w = waveform_from_json(text)
    else:
        basis = build_basis(cfg)
        w = build_initial(cfg, basis, build_bands(cfg, basis.N))
    return [write_table(out / "ff.csv", FF_HEADER, ff_rows(w), cfg.io.format)]


def cmd_optimize(cfg: RunConfig, out: Path, jobs: int) -> list[Path]:
    basis = build_basis(cfg)
    bands = build_bands(cfg, basis.N)
    problem = build_problem(cfg, basis, bands)
    w0 = build_initial(cfg, basis, bands)
    x0 = problem.to_coeffs(w0) if problem.param == "cartesian" else _polar_start(problem, w0)
    res = run_optimizer(cfg, problem, x0)
    f = cfg.io.format
    wpath = out / "waveform.json"
    wpath.write_text(
        waveform_to_json(
            res.waveform,
            gate=cfg.gate.label,
            gamma=res.gamma_final,
            F_G=res.F_G_final,
            iterations=res.iterations,
            termination=res.termination,
        )
        + "\n"
    )
    ff = write_table(out / "ff.csv", FF_HEADER, ff_rows(res.waveform), f)
    log = write_table(
        out / "log.csv",
        ["iteration", "gamma", "fidelity", "grad_norm"],
        ([r.iteration, r.gamma, r.fidelity, r.grad_norm] for r in res.log),
        f,
    )
    return [wpath, ff, log]


def _polar_start(problem: PulseProblem, w0: ControlWaveform):
    ax, ay = w0.xy()
    V = problem.basis.sequences
    amp = np.hypot(ax, ay)
    phase = np.arctan2(ay, ax)
    return np.concatenate([V @ amp, V @ phase])


SIM_HEADER = [
    "sigma",
    "gamma",
    "gate",
    "mean_D2",
    "stderr_D2",
    "bound",
    "mean_fidelity",
    "stderr_fidelity",
    "F_G",
    "F_Gamma",
    "leakage",
    "W",
    "termination",
]


def cmd_simulate(cfg: RunConfig, out: Path, jobs: int) -> list[Path]:
    s = _require(cfg.simulate, "simulate")
    d = _require(cfg.dpss, "dpss")
    N = d.N
    rows = []
    ctrl_axes = ("x", "y") if len(s.axes) > 1 else ("x",)
    for gam_f in s.gamma:
        gam = TAU * gam_f
        wh = min(cutoff_frequency(OU(1.0, gam), s.epsilon), np.pi)
        bands = BandSpec(intervals={a: [(0.0, wh)] for a in s.axes}, weights={a: 1.0 for a in s.axes}).snapped(N)
        size = sum(b - a for mu in NOISE_AXES for a, b in bands.intervals[mu]) / TAU
        W = d.W if d.W is not None else min(s.bandwidth_factor * size, s.max_W)
        basis = generate_dpss(N, W, d.K)
        for label in s.gates:
            g = gate(label)
            problem = PulseProblem(basis, g, bands, axes=ctrl_axes)
            if len(ctrl_axes) == 2 and (cfg.init is None or cfg.init.kind == "multiaxis"):
                init = cfg.init or InitSection(kind="multiaxis", nz=8, nxy=8)
                w0 = multiaxis_initial(init.nz, init.nxy, basis, init.shape)[0]
            else:
                w0 = cd_initial(max(wh, TAU / N), basis)
            cfg_o = cfg.optimize
            res = optimize_constrained(
                problem,
                problem.to_coeffs(w0),
                OptimizerConfig(epsilon_G=cfg_o.epsilon_G, grad_tol=cfg_o.grad_tol, max_iters=cfg_o.max_iters),
            )
            for sig_f in s.sigma:
                rep = distance_stats(
                    res.waveform, g, OU(TAU * sig_f, gam), bands, s.realizations, s.seed, axes=tuple(s.axes), jobs=jobs
                )
                rows.append(
                    [
                        sig_f,
                        gam_f,
                        label,
                        rep.mean_D2,
                        rep.stderr_D2,
                        rep.bound_value,
                        rep.mean_fidelity,
                        rep.stderr_fidelity,
                        rep.F_G,
                        rep.F_Gamma,
                        res.gamma_final,
                        W,
                        res.termination,
                    ]
                )
    return [write_table(out / "simulate.csv", SIM_HEADER, rows, cfg.io.format)]


ROW_FIELDS = list(SweepRow.__dataclass_fields__)
SUMMARY_HEADER = ["ratio_lo", "ratio_hi", "count", "failed", "mean_gamma", "median_gamma", "min_gamma"]


def _sweep_gates(s: SweepSection) -> list[str]:
    gates = list(s.gates)
    if s.xtheta_count:
        gates += x_theta_gates(s.xtheta_count)
    if not gates:
        gates = list(CLIFFORD_T) if s.scenario == "multi-axis" else x_theta_gates(5)
    return gates


def cmd_sweep(cfg: RunConfig, out: Path, jobs: int) -> list[Path]:
    s = _require(cfg.sweep, "sweep")
    if s.scenario == "single-axis":
        if not s.omega_h:
            raise ValidationError("single-axis sweep needs sweep.omega_h", key="sweep.omega_h")
        scenarios = [single_axis_scenario(w, s.controls) for w in s.omega_h]
    else:
        if not s.cutoffs:
            raise ValidationError("multi-axis sweep needs sweep.cutoffs", key="sweep.cutoffs")
        scenarios = [multi_axis_scenario(z, xy) for z, xy in s.cutoffs]
    o = cfg.optimize
    base = OptimizerConfig(epsilon_G=o.epsilon_G, grad_tol=o.grad_tol, max_iters=o.max_iters)
    eps_list = s.epsilons or [o.epsilon_G]
    rows = []
    for eps in eps_list:
        c = OptimizerConfig(epsilon_G=eps, grad_tol=base.grad_tol, max_iters=base.max_iters)
        res = bandwidth_sweep(scenarios, s.ratios, _sweep_gates(s), c, N=s.N, base_seed=s.seed, jobs=jobs, ic=s.ic)
        rows.extend(res.rows)
    f = cfg.io.format
    raw = write_table(out / "rows.csv", ROW_FIELDS, ([getattr(r, k) for k in ROW_FIELDS] for r in rows), f)
    summ = write_table(
        out / "summary.csv", SUMMARY_HEADER, ([d[k] for k in SUMMARY_HEADER] for d in window_summary(rows)), f
    )
    return [raw, summ]


def rows_from_table(path: str | Path) -> list[SweepRow]:
    header, body = read_table(path)
    missing = [k for k in ROW_FIELDS if k not in header]
    if missing:
        raise ValidationError(f"sweep table lacks columns {missing}", key="power_analysis.rows")
    types = {k: SweepRow.__dataclass_fields__[k].type for k in ROW_FIELDS}
    idx = {k: header.index(k) for k in ROW_FIELDS}
    out = []
    for line in body:
        vals = {}
        for k in ROW_FIELDS:
            t = types[k]
            v = line[idx[k]]
            vals[k] = int(v) if t in (int, "int") else float(v) if t in (float, "float") else v
        out.append(SweepRow(**vals))
    return out


POWER_HEADER = ["W", "ratio", "gate", "P_total", "P_x", "P_y"]


def cmd_power(cfg: RunConfig, out: Path, jobs: int) -> list[Path]:
    s = _require(cfg.power_analysis, "power_analysis")
    rows = rows_from_table(s.rows)
    table = power_analysis(rows, s.omega_z)
    return [write_table(out / "power.csv", POWER_HEADER, ([d[k] for k in POWER_HEADER] for d in table), cfg.io.format)]


COMMANDS = {
    "dpss": cmd_dpss,
    "init": cmd_init,
    "ff": cmd_ff,
    "optimize": cmd_optimize,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "power-analysis": cmd_power,
}


def _config_error_record(exc: pydantic.ValidationError) -> dict:
    errs = exc.errors()
    first = errs[0] if errs else {}
    key = ".".join(str(p) for p in first.get("loc", ()))
    return {
        "error": "invalid-config",
        "key": key,
        "message": first.get("msg", str(exc)),
        "details": {"count": len(errs)},
    }


def run(name: str, config: str | Path, out_dir: str | None = None, jobs: int = 1) -> int:
    """Run one subcommand; returns the exit status (0, 2 or 3)."""
    out = Path(out_dir) if out_dir else None
    try:
        cfg = load_config(config)
        out = Path(out_dir or cfg.io.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[name](cfg, out, max(1, int(jobs)))
        return 0
    except pydantic.ValidationError as exc:
        return _fail(_config_error_record(exc), 2, out)
    except FgrafsError as exc:
        rec = exc.record()
        rec["command"] = name
        return _fail(rec, 3 if isinstance(exc, NumericalError) else 2, out)
    except (FloatingPointError, np.linalg.LinAlgError) as exc:
        return _fail({"error": "numerical-failure", "message": str(exc), "command": name}, 3, out)


def _fail(record: dict, code: int, out: Path | None) -> int:
    text = json.dumps(record, sort_keys=True)
    click.echo(text, err=True)
    if out is not None:
        try:
            out.mkdir(parents=True, exist_ok=True)
            (out / "error.json").write_text(text + "\n")
        except OSError:
            pass
    return code


def _default_jobs() -> int:
    return os.cpu_count() or 1


@click.group()
def main():
    """Filter-function pulse design tools."""


def _subcommand(name: str, parallel: bool):
    @click.argument("config", type=click.Path(dir_okay=False))
    @click.option("--out", "out_dir", default=None, help="Output directory (overrides io.out_dir).")
    @click.option(
        "--jobs",
        type=int,
        default=None,
        help="Worker processes" + (" (default: all CPUs)." if parallel else " (default: 1)."),
    )
    def cmd(config, out_dir, jobs):
        if jobs is None:
            jobs = _default_jobs() if parallel else 1
        sys.exit(run(name, config, out_dir, jobs))

    main.command(name=name, help=_HELP[name])(cmd)


_HELP = {
    "dpss": "Write the DPSS basis and its concentration eigenvalues.",
    "init": "Write the analytic initial waveform.",
    "ff": "Write filter functions of a waveform file or of the initial waveform.",
    "optimize": "Derive bands, build and project the start, optimize, and write waveform, FF and log.",
    "simulate": "Monte-Carlo distance and fidelity under OU noise against the bound.",
    "sweep": "Bandwidth sweep with raw rows and windowed summary.",
    "power-analysis": "Normalized control power of sweep rows.",
}

for _name in COMMANDS:
    _subcommand(_name, _name in ("sweep", "simulate"))


if __name__ == "__main__":
    main()
