"""Config-driven experiment runs that write self-describing artifact folders.

A run directory contains:

``config.json``
    the resolved configuration, register and drive(s)
``results.json``
    deterministic numbers for the run (no timestamps)
``metadata.json``
    wall-clock timing and software versions
``hist_NNN.json`` / ``hist_NNN_mitigated.json``
    outcome distribution at each sweep point
``plotdata_*.csv``
    the series needed to redraw the figures with any plotting tool
"""

from __future__ import annotations

import csv
import json
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .evolution import (
    BitstringHistogram,
    IntegrationError,
    IntegratorConfig,
    bitstring,
    build_cache,
    evolve_states,
    probabilities,
    rydberg_density,
    sample_shots,
)
from .fitting import FitError, binomial_errors, fit_damped_sinusoid
from .graphs import classify_histogram, enumerate_max_independent_sets, unit_disk_graph
from .mitigation import ReadoutModel, apply_error_channel, mitigate_exact, mitigate_first_order
from .model import (
    AtomRegister,
    DeviceProfile,
    PulseSchedule,
    ValidationReport,
    dump_register_and_schedule,
    validate_register,
    validate_schedule,
)
from .optimize import OptimizerConfig, ScheduleParameterization, build_detuning_schedule, optimize
from .presets import PRESETS, Preset, get_preset

SCHEMA = 1
SCENARIOS = ("rabi", "bell", "z2chain", "misloop", "custom")
# nominal error bars for fitting exact (noise-free) sweeps
NOMINAL_SHOTS = 80
TOP_PATTERNS = 20
MITIGATORS = {"first_order": mitigate_first_order, "exact": mitigate_exact}


class ConfigError(ValueError):
    pass


class ValidationFailed(ValueError):
    def __init__(self, report: ValidationReport):
        super().__init__("; ".join(v[1] for v in report.violations))
        self.report = report


@dataclass
class ScenarioConfig:
    scenario: str
    register: object = None
    schedule: object = None
    sweep: list[float] | None = None
    shots: int | None = None
    seed: int = 0
    mitigation: bool = False
    epsilon: float = 0.05
    mitigation_method: str = "first_order"
    readout_error: float = 0.0
    output: str = "qsim-out"
    target: str | None = None
    jobs: int = 1
    integrator: dict = field(default_factory=dict)
    optimizer: dict = field(default_factory=dict)
    parameterization: dict | None = None
    start: list[float] | None = None
    base_dir: Path = field(default=Path("."), repr=False)

    @classmethod
    def from_dict(cls, raw: dict, base_dir: Path | str = ".") -> "ScenarioConfig":
        raw = dict(raw)
        schema = raw.pop("schema", None)
        if schema != SCHEMA:
            raise ConfigError(f"config schema must be {SCHEMA}, got {schema!r}")
        if raw.get("scenario") not in SCENARIOS:
            raise ConfigError(f"scenario must be one of {SCENARIOS}")
        mit = raw.pop("mitigation", None)
        if isinstance(mit, dict):
            raw["mitigation"] = bool(mit.get("enabled", True))
            raw["epsilon"] = float(mit.get("epsilon", 0.05))
            raw["mitigation_method"] = mit.get("method", "first_order")
        elif mit is not None:
            raw["mitigation"] = bool(mit)
        unknown = set(raw) - (set(cls.__dataclass_fields__) - {"base_dir"})
        if unknown:
            raise ConfigError(f"unknown config fields {sorted(unknown)}")
        cfg = cls(**raw, base_dir=Path(base_dir))
        cfg.check()
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "ScenarioConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: top level must be an object")
        return cls.from_dict(raw, path.parent)

    def check(self) -> None:
        if self.shots is not None and (not isinstance(self.shots, int) or self.shots <= 0):
            raise ConfigError("shots must be a positive integer or null for exact mode")
        if not isinstance(self.seed, int):
            raise ConfigError("seed must be an integer")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        for name in ("epsilon", "readout_error"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ConfigError(f"{name} must lie in [0, 1)")
        if self.mitigation_method not in MITIGATORS:
            raise ConfigError(f"mitigation method must be one of {sorted(MITIGATORS)}")
        if self.sweep is not None and not all(isinstance(v, (int, float)) for v in self.sweep):
            raise ConfigError("sweep must be a list of numbers")
        if self.scenario == "custom" and (self.register is None or self.schedule is None):
            raise ConfigError("custom scenarios need a register and a schedule")

    def to_json_dict(self) -> dict:
        out = {"schema": SCHEMA}
        for key in self.__dataclass_fields__:
            if key in ("base_dir", "mitigation", "epsilon", "mitigation_method"):
                continue
            out[key] = getattr(self, key)
        out["mitigation"] = {"enabled": self.mitigation, "epsilon": self.epsilon, "method": self.mitigation_method}
        return out


@dataclass
class Resolved:
    register: AtomRegister
    schedules: list[PulseSchedule]
    sweep: list[float]
    # "duration": one schedule per sweep value; "snapshot": one schedule
    # observed at each sweep time; "single": no sweep
    sweep_kind: str
    preset: Preset | None
    target: str | None
    integrator: IntegratorConfig


def _read_json(path: Path) -> dict:
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None


def _source(value, base: Path) -> dict:
    if isinstance(value, dict) and set(value) == {"file"}:
        path = base / value["file"]
        if not path.exists():
            raise ConfigError(f"referenced file {path} does not exist")
        return _read_json(path)
    if isinstance(value, dict):
        return value
    raise ConfigError(f"cannot interpret source {value!r}")


def _resolve_register(cfg: ScenarioConfig, preset: Preset | None) -> AtomRegister:
    src = cfg.register
    if src is None:
        return preset.register
    if isinstance(src, str):
        return get_preset(src).register
    raw = _source(src, cfg.base_dir)
    try:
        return AtomRegister.from_json_dict(raw)
    except KeyError as exc:
        raise ConfigError(f"register source lacks field {exc}") from None


def _resolve_schedule(cfg: ScenarioConfig, preset: Preset | None) -> PulseSchedule | None:
    src = cfg.schedule
    if src is None:
        return None
    if isinstance(src, str):
        other = get_preset(src)
        if other.sweep:
            raise ConfigError(f"the {src} drive depends on the sweep; use it as the scenario instead")
        return other.schedule(None)
    raw = _source(src, cfg.base_dir)
    # optimizer records keep the drive under "schedule"
    if "schedule" in raw and "omega" not in raw:
        raw = raw["schedule"]
    try:
        return PulseSchedule.from_json_dict(raw)
    except KeyError as exc:
        raise ConfigError(f"schedule source lacks field {exc}") from None


def resolve(cfg: ScenarioConfig) -> Resolved:
    preset = get_preset(cfg.scenario) if cfg.scenario in PRESETS else None
    register = _resolve_register(cfg, preset)
    schedule = _resolve_schedule(cfg, preset)
    integrator = IntegratorConfig(**cfg.integrator)
    target = cfg.target if cfg.target is not None else (preset.target if preset else None)
    if target is not None and (len(target) != register.n or set(target) - {"0", "1"}):
        raise ConfigError(f"target {target!r} does not match a {register.n}-atom register")
    if schedule is None and preset.sweep:
        # the preset drive is a family indexed by total duration
        sweep = [float(T) for T in (cfg.sweep if cfg.sweep is not None else preset.sweep)]
        if not sweep:
            raise ConfigError(f"the {preset.name} drive needs at least one duration")
        try:
            schedules = [preset.schedule(T) for T in sweep]
        except ValueError as exc:
            raise ConfigError(f"sweep value outside the drive's validity: {exc}") from None
        return Resolved(register, schedules, sweep, "duration", preset, target, integrator)
    if schedule is None:
        schedule = preset.schedule(None)
    if cfg.sweep:
        T = schedule.total_time
        sweep = [float(t) for t in cfg.sweep]
        if sorted(sweep) != sweep or sweep[0] < 0 or sweep[-1] > T + 1e-12:
            raise ConfigError(f"sweep times must be sorted and inside [0, {T}]")
        return Resolved(register, [schedule], sweep, "snapshot", preset, target, integrator)
    return Resolved(register, [schedule], [], "single", preset, target, integrator)


def load_profile(path: str | Path | None) -> DeviceProfile:
    return DeviceProfile.from_json(path) if path else DeviceProfile()


def validate(cfg: ScenarioConfig, profile: DeviceProfile) -> tuple[Resolved, ValidationReport]:
    res = resolve(cfg)
    report = validate_register(res.register, profile)
    for sched in res.schedules:
        report = report.merge(validate_schedule(sched, profile))
    return res, report


def _simulate(res: Resolved) -> list[BitstringHistogram]:
    """Exact outcome distributions, one per sweep point (sequential)."""
    cache = build_cache(res.register)
    if res.sweep_kind == "snapshot":
        states = evolve_states(res.register, res.schedules[0], res.sweep, res.integrator, cache)
        return [probabilities(s) for s in states]
    return [_run_one(res, cache, s) for s in res.schedules]


def _run_one(res: Resolved, cache, schedule: PulseSchedule) -> BitstringHistogram:
    (state,) = evolve_states(res.register, schedule, [schedule.total_time], res.integrator, cache)
    hist = probabilities(state)
    if res.integrator.check_convergence:
        (fine,) = evolve_states(res.register, schedule, [schedule.total_time], res.integrator.halved(), cache)
        shift = float(np.max(np.abs(probabilities(fine).probs - hist.probs)))
        hist.convergence_shift = shift
        if shift > res.integrator.conv_tol:
            raise IntegrationError(f"step halving moved probabilities by {shift:.3g}")
    return hist


def _exact_histograms(res: Resolved, jobs: int) -> list[BitstringHistogram]:
    if res.sweep_kind == "snapshot" or jobs == 1 or len(res.schedules) == 1:
        return _simulate(res)
    cache = build_cache(res.register)
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda s: _run_one(res, cache, s), res.schedules))


def _measure(exact: BitstringHistogram, cfg: ScenarioConfig, index: int) -> BitstringHistogram:
    hist = exact
    if cfg.readout_error > 0:
        hist = apply_error_channel(hist, ReadoutModel(cfg.readout_error))
    if cfg.shots:
        hist = sample_shots(hist, cfg.shots, seed=[cfg.seed, index])
    return hist


def _fmt(x: float) -> float:
    return float(f"{x:.12g}")


def _point_record(hist: BitstringHistogram, target: str | None) -> dict:
    rec = {
        "density": [_fmt(v) for v in rydberg_density(hist)],
        "top": [[b, _fmt(p)] for b, p in hist.top(min(TOP_PATTERNS, 1 << hist.n))],
    }
    if hist.n <= 4:
        rec["probabilities"] = {b: _fmt(p) for b, p in zip(_all_bits(hist.n), hist.probs)}
    if target is not None:
        rec["target_probability"] = _fmt(hist[target])
    return rec


def _all_bits(n: int) -> list[str]:
    return [bitstring(i, n) for i in range(1 << n)]


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=1) + "\n")


def _write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.12g}" if isinstance(v, float) else v for v in row])


def _rabi_fit(sweep, p, shots) -> dict:
    t = np.asarray(sweep)
    sigma = binomial_errors(np.asarray(p), shots or NOMINAL_SHOTS)
    try:
        fit = fit_damped_sinusoid(t, p, sigma)
    except FitError as exc:
        return {"error": str(exc)}
    out = fit.to_json_dict()
    out["sigma_shots"] = shots or NOMINAL_SHOTS
    return out


def run_scenario(cfg: ScenarioConfig, profile: DeviceProfile | None = None) -> dict:
    """Simulate the configured experiment and write its artifact folder.

    Returns the contents of ``results.json``.
    """
    profile = profile or DeviceProfile()
    started = time.time()
    res, report = validate(cfg, profile)
    if not report.ok:
        raise ValidationFailed(report)
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "config.json", {
        "config": cfg.to_json_dict(),
        "profile": profile.to_json_dict(),
        "register": res.register.to_json_dict(),
        "schedules": [s.to_json_dict() for s in res.schedules],
    })

    exact = _exact_histograms(res, cfg.jobs)
    raw = [_measure(h, cfg, i) for i, h in enumerate(exact)]
    mitigate = MITIGATORS[cfg.mitigation_method]
    mitigated = [mitigate(h, ReadoutModel(cfg.epsilon)) for h in raw] if cfg.mitigation else []

    points = []
    for i, h in enumerate(raw):
        name = f"hist_{i:03d}"
        h.save(out / f"{name}.json")
        rec = {"index": i, "raw": _point_record(h, res.target), "norm_drift": _fmt(abs(exact[i].probs.sum() - 1))}
        if res.sweep:
            rec["t" if res.sweep_kind == "snapshot" else "T"] = res.sweep[i]
        if hasattr(exact[i], "convergence_shift"):
            rec["convergence_shift"] = _fmt(exact[i].convergence_shift)
        if mitigated:
            mitigated[i].save(out / f"{name}_mitigated.json")
            rec["mitigated"] = _point_record(mitigated[i], res.target)
            rec["mitigated"]["clipped_mass"] = _fmt(mitigated[i].clipped_mass)
        points.append(rec)

    results = {
        "schema": SCHEMA,
        "version": __version__,
        "scenario": cfg.scenario,
        "config": _echo(cfg),
        "n_atoms": res.register.n,
        "mode": "exact" if not cfg.shots else f"{cfg.shots} shots",
        "target": res.target,
        "points": points,
    }
    _population_csv(out, res, raw, mitigated)
    _density_csv(out, res, raw, mitigated)
    final = mitigated[-1] if mitigated else raw[-1]

    if cfg.scenario == "rabi" and res.sweep:
        results["rabi_fit"] = _rabi_fit(res.sweep, [rydberg_density(h).mean() for h in raw], cfg.shots)
    if cfg.scenario == "bell" and res.sweep:
        pair = [h["00"] + h["11"] for h in (mitigated or raw)]
        k = int(np.argmax(pair))
        results["bell"] = {"best_T": res.sweep[k], "p00_plus_p11": _fmt(pair[k])}
    graph_radius = res.preset.graph_radius if res.preset else None
    if graph_radius is not None:
        graph = unit_disk_graph(res.register, graph_radius)
        mis = enumerate_max_independent_sets(graph)
        cls = classify_histogram(graph, final)
        results["graph"] = graph.to_json_dict()
        results["mis"] = {"cardinality": mis.cardinality, "sets": mis.sets,
                          "maximal_counts": {str(k): v for k, v in mis.maximal_counts.items()}}
        results["classification"] = {
            "mass": {k: _fmt(v) for k, v in cls.mass.items()},
            "mass_by_cardinality": {str(k): _fmt(v) for k, v in cls.mass_by_cardinality.items()},
        }
        _patterns_csv(out, final, cls.labels)
    else:
        _patterns_csv(out, final, None)

    _write_json(out / "results.json", results)
    _write_json(out / "metadata.json", _metadata(started, cfg))
    return results


def _echo(cfg: ScenarioConfig) -> dict:
    """Config as embedded in results. The output location and the job count
    are left out (the latter goes to the metadata) so that reruns into other
    folders or with other parallelism produce identical files."""
    out = cfg.to_json_dict()
    out.pop("output")
    out.pop("jobs")
    return out


def _metadata(started: float, cfg: ScenarioConfig) -> dict:
    import numba
    import scipy

    finished = time.time()
    return {
        "started": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(started)),
        "finished": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(finished)),
        "wall_seconds": round(finished - started, 3),
        "jobs": cfg.jobs,
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
    }


def _population_csv(out: Path, res: Resolved, raw, mitigated) -> None:
    """Per-point series: bitstring probabilities for up to 4 atoms, mean
    Rydberg density always, target probability when there is a target."""
    n = res.register.n
    bits = _all_bits(n) if n <= 4 else []
    header = ["point", "T"] + [f"p_{b}" for b in bits] + ["mean_density"]
    if res.target:
        header.append("p_target")
    if mitigated:
        header += [f"p_{b}_mitigated" for b in bits] + ["mean_density_mitigated"]
        if res.target:
            header.append("p_target_mitigated")

    def cols(h):
        row = [float(h.probs[i]) for i in range(len(bits))] + [float(rydberg_density(h).mean())]
        if res.target:
            row.append(float(h[res.target]))
        return row

    rows = []
    for i, h in enumerate(raw):
        t = res.sweep[i] if res.sweep else res.schedules[0].total_time
        row = [i, float(t)] + cols(h)
        if mitigated:
            row += cols(mitigated[i])
        rows.append(row)
    _write_csv(out / "plotdata_population.csv", header, rows)


def _density_csv(out: Path, res: Resolved, raw, mitigated) -> None:
    header = ["point", "atom", "ancilla", "density"] + (["density_mitigated"] if mitigated else [])
    rows = []
    for i, h in enumerate(raw):
        d = rydberg_density(h)
        dm = rydberg_density(mitigated[i]) if mitigated else None
        for j in range(res.register.n):
            row = [i, j, int(res.register.ancilla_mask[j]), float(d[j])]
            if mitigated:
                row.append(float(dm[j]))
            rows.append(row)
    _write_csv(out / "plotdata_density.csv", header, rows)


def _patterns_csv(out: Path, hist: BitstringHistogram, labels: dict | None) -> None:
    header = ["rank", "bitstring", "probability"] + (["label"] if labels is not None else [])
    rows = []
    for r, (b, p) in enumerate(hist.top(min(TOP_PATTERNS, 1 << hist.n)), start=1):
        row = [r, b, p]
        if labels is not None:
            row.append(labels.get(b, ""))
        rows.append(row)
    _write_csv(out / "plotdata_patterns.csv", header, rows)


# --- optimization -----------------------------------------------------------

def _optimizer_inputs(cfg: ScenarioConfig, res: Resolved):
    preset = res.preset
    if cfg.parameterization is not None:
        spec = ScheduleParameterization.from_json_dict(cfg.parameterization)
    elif preset is not None and preset.parameterization is not None:
        spec = preset.parameterization
    else:
        raise ConfigError("optimization needs a parameterization (preset or config)")
    if cfg.start is not None:
        # knot values given in 2pi MHz, ramp durations in us
        start = np.asarray(cfg.start, dtype=float)
        if start.shape != (spec.size,):
            raise ConfigError(f"start needs {spec.size} values")
        start[: spec.n_knots] *= 2 * np.pi
    elif preset is not None and len(preset.start) == spec.size:
        start = np.asarray(preset.start)
    else:
        start = None
    return spec, start


def run_optimize(cfg: ScenarioConfig, profile: DeviceProfile | None = None) -> dict:
    """Search for the drive that maximizes the target probability.

    Writes ``optimization.json`` (full record), ``schedule_optimized.json``
    (register plus drive, reusable as a schedule source), ``results.json``
    with before/after numbers, and plot data for the drive comparison and the
    objective trace.
    """
    profile = profile or DeviceProfile()
    started = time.time()
    res = resolve(cfg)
    if res.target is None:
        raise ConfigError("optimization needs a target bitstring")
    spec, start = _optimizer_inputs(cfg, res)
    report = validate_register(res.register, profile)
    opt_kw = dict(cfg.optimizer)
    if cfg.shots:
        opt_kw.setdefault("mode", "shots")
        opt_kw.setdefault("shots", cfg.shots)
    opt_kw.setdefault("seed", cfg.seed)
    opt_cfg = OptimizerConfig(**opt_kw, integrator=res.integrator)
    if start is None:
        start = spec.linear_drive(*spec.delta_bounds)
    baseline = build_detuning_schedule(start, spec)
    report = report.merge(validate_schedule(baseline, profile))
    if not report.ok:
        raise ValidationFailed(report)

    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "config.json", {
        "config": cfg.to_json_dict(),
        "profile": profile.to_json_dict(),
        "register": res.register.to_json_dict(),
        "parameterization": spec.to_json_dict(),
        "start": [float(v) for v in start],
    })
    result = optimize(spec, res.register, res.target, opt_cfg, start)
    final_report = validate_schedule(result.schedule, profile)
    if not final_report.ok:
        raise ValidationFailed(final_report)

    cache = build_cache(res.register)
    before = _final_hist(res, baseline, cache)
    after = _final_hist(res, result.schedule, cache)
    record = result.to_json_dict(spec)
    record["optimizer"] = {k: v for k, v in opt_cfg.to_json_dict().items() if k != "integrator"}
    _write_json(out / "optimization.json", record)
    _write_json(out / "schedule_optimized.json", dump_register_and_schedule(res.register, result.schedule))
    before.save(out / "hist_linear.json")
    after.save(out / "hist_optimized.json")

    p0, p1 = before[res.target], after[res.target]
    top_after = after.top(2)
    runner_up = next((p for b, p in top_after if b != res.target), 0.0)
    results = {
        "schema": SCHEMA,
        "version": __version__,
        "scenario": cfg.scenario,
        "config": _echo(cfg),
        "target": res.target,
        "linear": _point_record(before, res.target),
        "optimized": _point_record(after, res.target),
        "target_probability_before": _fmt(p0),
        "target_probability_after": _fmt(p1),
        "improvement": _fmt(p1 / p0) if p0 > 0 else None,
        "argmax": top_after[0][0],
        "margin_over_runner_up": _fmt(p1 / runner_up) if runner_up > 0 else None,
        "iterations": result.iterations,
        "termination": result.termination,
        "best_params": [_fmt(v) for v in result.best_params],
    }
    _drive_csv(out, baseline, result.schedule)
    _write_csv(out / "plotdata_trace.csv", ["evaluation", "objective", "best"],
               [[i + 1, v, b] for i, (v, b) in enumerate(zip(result.trace, result.best_trace))])
    _write_csv(out / "plotdata_density.csv", ["atom", "ancilla", "density_linear", "density_optimized"],
               [[j, int(res.register.ancilla_mask[j]), float(a), float(b)]
                for j, (a, b) in enumerate(zip(rydberg_density(before), rydberg_density(after)))])
    _patterns_csv(out, after, None)
    _write_json(out / "results.json", results)
    _write_json(out / "metadata.json", _metadata(started, cfg))
    return results


def _final_hist(res: Resolved, schedule: PulseSchedule, cache) -> BitstringHistogram:
    return _run_one(replace(res, schedules=[schedule]), cache, schedule)


def _drive_csv(out: Path, linear: PulseSchedule, optimized: PulseSchedule, step: float = 0.01) -> None:
    """Omega and Delta of both drives on a common grid, in 2pi MHz."""
    T = max(linear.total_time, optimized.total_time)
    grid = np.round(np.arange(0.0, T + step / 2, step), 10)
    rows = []
    for t in grid:
        a = linear.value_at(min(t, linear.total_time))
        b = optimized.value_at(min(t, optimized.total_time))
        rows.append([float(t), a[0] / (2 * np.pi), a[1] / (2 * np.pi), b[0] / (2 * np.pi), b[1] / (2 * np.pi)])
    _write_csv(out / "plotdata_drive.csv",
               ["t", "omega_linear", "delta_linear", "omega_optimized", "delta_optimized"], rows)


# --- standalone fits ------------------------------------------------------------

def read_fit_csv(path: str | Path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Columns ``t, p, sigma`` with a header row."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ConfigError(f"{path} is empty")
    header = [h.strip().lower() for h in rows[0]]
    try:
        cols = [header.index(k) for k in ("t", "p", "sigma")]
    except ValueError:
        raise ConfigError(f"{path} needs columns t, p, sigma; found {header}") from None
    try:
        data = np.array([[float(r[c]) for c in cols] for r in rows[1:] if r], dtype=float)
    except (ValueError, IndexError) as exc:
        raise ConfigError(f"{path}: malformed row ({exc})") from None
    if data.size == 0:
        raise ConfigError(f"{path} has no data rows")
    return data[:, 0], data[:, 1], data[:, 2]


def run_fit(path: str | Path, output: str | Path, model: str = "damped_sinusoid") -> dict:
    if model != "damped_sinusoid":
        raise ConfigError(f"unknown fit model {model!r}")
    t, p, sigma = read_fit_csv(path)
    if np.any(sigma <= 0):
        raise ConfigError("sigma column must be positive")
    fit = fit_damped_sinusoid(t, p, sigma)
    out = Path(output)
    out.mkdir(parents=True, exist_ok=True)
    record = fit.to_json_dict()
    record["source"] = str(path)
    record["points"] = int(t.size)
    _write_json(out / "fit.json", record)
    _write_csv(out / "residuals.csv", ["t", "p", "sigma", "model", "residual"],
               [[float(a), float(b), float(c), float(b - r), float(r)]
                for a, b, c, r in zip(t, p, sigma, fit.residuals)])
    return record
