"""Detuning-schedule search that maximizes the probability of a target
bitstring.

The detuning is piecewise linear through a handful of knots spread evenly
over the Rabi plateau and held flat during the ramps. Optionally the ramp
durations are free parameters too, with the total time held fixed.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from . import cobyla
from .evolution import IntegratorConfig, bitstring_index, build_cache, evolve, probabilities, sample_shots
from .hamiltonian import DiagonalCache
from .model import AtomRegister, PulseSchedule, make_ramp_plateau_ramp, mhz, to_mhz

logger = logging.getLogger(__name__)


class BoundsError(ValueError):
    pass


@dataclass(frozen=True)
class ScheduleParameterization:
    """How a parameter vector maps to a schedule.

    Parameters are ``[delta_1 .. delta_k]`` (rad/us), followed by
    ``[t_up, t_down]`` (us) when ``optimize_ramps`` is set.
    """

    omega_max: float = mhz(2.5)
    total_time: float = 4.0
    t_up: float = 0.29
    t_down: float = 0.4
    n_knots: int = 6
    optimize_ramps: bool = False
    ramp_bounds: tuple[float, float] = (0.05, 1.5)
    delta_bounds: tuple[float, float] = (-mhz(5.0), mhz(5.0))

    def __post_init__(self):
        if self.n_knots < 2:
            raise ValueError("need at least two detuning knots")
        lo, hi = self.delta_bounds
        rlo, rhi = self.ramp_bounds
        if not (np.isfinite([lo, hi, rlo, rhi]).all() and lo < hi and 0 < rlo < rhi):
            raise ValueError("bounds must be finite and ordered")
        if self.t_up + self.t_down >= self.total_time:
            raise ValueError("ramps leave no plateau")
        if self.optimize_ramps and 2 * rhi >= self.total_time:
            raise ValueError("ramp bounds leave no plateau")

    @property
    def size(self) -> int:
        return self.n_knots + (2 if self.optimize_ramps else 0)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.full(self.size, self.delta_bounds[0])
        hi = np.full(self.size, self.delta_bounds[1])
        if self.optimize_ramps:
            lo[-2:] = self.ramp_bounds[0]
            hi[-2:] = self.ramp_bounds[1]
        return lo, hi

    def ramps(self, params: Sequence[float]) -> tuple[float, float]:
        if self.optimize_ramps:
            return float(params[-2]), float(params[-1])
        return self.t_up, self.t_down

    def knot_times(self, params: Sequence[float]) -> np.ndarray:
        t_up, t_down = self.ramps(params)
        return np.linspace(t_up, self.total_time - t_down, self.n_knots)

    def linear_drive(self, delta_start: float, delta_end: float) -> np.ndarray:
        """Parameters of a constant-slope detuning sweep over the plateau."""
        p = np.linspace(delta_start, delta_end, self.n_knots)
        if self.optimize_ramps:
            p = np.concatenate([p, [self.t_up, self.t_down]])
        return p

    def to_json_dict(self) -> dict:
        out = asdict(self)
        out["omega_max"] = to_mhz(self.omega_max)
        out["delta_bounds"] = [to_mhz(v) for v in self.delta_bounds]
        out["ramp_bounds"] = list(self.ramp_bounds)
        return out

    @classmethod
    def from_json_dict(cls, raw: dict) -> "ScheduleParameterization":
        kw = dict(raw)
        if "omega_max" in kw:
            kw["omega_max"] = mhz(kw["omega_max"])
        if "delta_bounds" in kw:
            kw["delta_bounds"] = tuple(mhz(v) for v in kw["delta_bounds"])
        if "ramp_bounds" in kw:
            kw["ramp_bounds"] = tuple(kw["ramp_bounds"])
        return cls(**kw)


def build_detuning_schedule(params: Sequence[float], spec: ScheduleParameterization) -> PulseSchedule:
    params = np.asarray(params, dtype=float)
    if params.shape != (spec.size,):
        raise ValueError(f"expected {spec.size} parameters, got {params.shape}")
    lo, hi = spec.bounds()
    bad = np.flatnonzero((params < lo - 1e-12) | (params > hi + 1e-12))
    if bad.size:
        raise BoundsError(f"parameters {bad.tolist()} outside their bounds")
    t_up, t_down = spec.ramps(params)
    total = spec.total_time
    times = spec.knot_times(params)
    values = params[: spec.n_knots]
    delta = [(0.0, values[0])] + list(zip(times, values)) + [(total, values[-1])]
    return make_ramp_plateau_ramp(spec.omega_max, t_up, total - t_up - t_down, t_down, delta)


@dataclass(frozen=True)
class OptimizerConfig:
    method: str = "cobyla"  # or "nelder-mead"
    maxiter: int = 150
    rhobeg: float = 0.1  # fraction of each parameter's box width
    rhoend: float = 1e-3
    mode: str = "exact"  # or "shots"
    shots: int = 200_000
    seed: int = 0
    integrator: IntegratorConfig = IntegratorConfig()

    def to_json_dict(self) -> dict:
        out = asdict(self)
        return out


@dataclass
class OptimizationResult:
    best_params: np.ndarray
    best_objective: float
    trace: list[float]
    best_trace: list[float]
    iterations: int
    schedule: PulseSchedule
    termination: str
    initial_objective: float
    params_trace: list[list[float]] = field(default_factory=list)

    def to_json_dict(self, spec: ScheduleParameterization | None = None) -> dict:
        out = {
            "best_params": [float(v) for v in self.best_params],
            "best_objective": self.best_objective,
            "initial_objective": self.initial_objective,
            "iterations": self.iterations,
            "termination": self.termination,
            "trace": self.trace,
            "best_trace": self.best_trace,
            "schedule": self.schedule.to_json_dict(),
        }
        if spec is not None:
            out["spec"] = spec.to_json_dict()
        return out


def objective_target_probability(
    params: Sequence[float],
    spec: ScheduleParameterization,
    register: AtomRegister,
    target: str,
    mode: str = "exact",
    shots: int = 200_000,
    seed: int | None = None,
    config: IntegratorConfig = IntegratorConfig(),
    cache: DiagonalCache | None = None,
) -> float:
    """Probability of measuring ``target`` after the parameterized drive."""
    if len(target) != register.n:
        raise ValueError(f"target has {len(target)} bits but register has {register.n} atoms")
    idx = bitstring_index(target)
    schedule = build_detuning_schedule(params, spec)
    hist = probabilities(evolve(register, schedule, config, cache))
    if mode == "exact":
        return float(hist.probs[idx])
    if mode == "shots":
        return float(sample_shots(hist, shots, seed).probs[idx])
    raise ValueError(f"unknown objective mode {mode!r}")


def optimize(
    spec: ScheduleParameterization,
    register: AtomRegister,
    target: str,
    config: OptimizerConfig = OptimizerConfig(),
    x0: Sequence[float] | None = None,
) -> OptimizationResult:
    """Maximize the target probability over the box-bounded parameters.

    The default start ``x0`` is the linear sweep across the detuning bounds.
    The search runs in coordinates scaled to the unit box, so ``rhobeg`` and
    ``rhoend`` are fractions of each parameter's range. Proposals outside the
    box are clipped before simulation and penalized through the bound
    constraints.
    """
    if len(target) != register.n:
        raise ValueError(f"target has {len(target)} bits but register has {register.n} atoms")
    lo, hi = spec.bounds()
    width = hi - lo
    if x0 is None:
        x0 = spec.linear_drive(*spec.delta_bounds)
    x0 = np.asarray(x0, dtype=float)
    if np.any(x0 < lo - 1e-12) or np.any(x0 > hi + 1e-12):
        raise BoundsError("initial point outside bounds")
    cache = build_cache(register)
    trace: list[float] = []
    params_trace: list[list[float]] = []
    memo: dict[bytes, float] = {}

    def physical(u):
        return lo + width * np.clip(u, 0.0, 1.0)

    def evaluate(p):
        key = p.tobytes()
        if key in memo and config.mode == "exact":
            value = memo[key]
        else:
            value = objective_target_probability(
                p, spec, register, target, config.mode, config.shots,
                seed=config.seed + len(trace), config=config.integrator, cache=cache,
            )
            memo[key] = value
        trace.append(value)
        params_trace.append(p.tolist())
        logger.debug("eval %d: p=%.6f", len(trace), value)
        return value

    def objective(u):
        return -evaluate(physical(u))

    def constraints(u):
        return np.concatenate([u, 1.0 - u])

    u0 = (x0 - lo) / width
    if config.method == "cobyla":
        res = cobyla.minimize(objective, u0, constraints, config.rhobeg, config.rhoend, config.maxiter)
        termination = res.status
    elif config.method == "nelder-mead":
        from scipy.optimize import minimize as sp_minimize

        res = sp_minimize(
            objective, u0, method="Nelder-Mead", bounds=[(0.0, 1.0)] * u0.size,
            options={"maxfev": config.maxiter, "xatol": config.rhoend, "fatol": 1e-9},
        )
        termination = str(res.message)
    else:
        raise ValueError(f"unknown optimizer {config.method!r}")

    best_i = int(np.argmax(trace))
    best = np.array(params_trace[best_i])
    best_trace = np.maximum.accumulate(trace).tolist()
    return OptimizationResult(
        best_params=best,
        best_objective=trace[best_i],
        trace=trace,
        best_trace=best_trace,
        iterations=len(trace),
        schedule=build_detuning_schedule(best, spec),
        termination=termination,
        initial_objective=trace[0],
        params_trace=params_trace,
    )
