"""Atom registers, drive schedules and device limits.

Frequencies are stored internally in rad/us. JSON files and other
user-facing surfaces express them as multiples of 2*pi MHz; the
``to_*``/``from_*`` helpers below do the conversion at the boundary.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi

#: van der Waals coefficient of the 87Rb 70S state, rad/us * um^6
C6_RB87 = 862690.0 * TWO_PI


class ScheduleError(ValueError):
    """Raised for structurally malformed schedules (unsorted knots, bad durations)."""


class RegisterError(ValueError):
    """Raised for structurally malformed registers."""


def mhz(value: float) -> float:
    """Convert a frequency quoted in units of 2*pi MHz to rad/us."""
    return value * TWO_PI


def to_mhz(value: float) -> float:
    return value / TWO_PI


@dataclass(frozen=True)
class DeviceProfile:
    """Hardware limits used by the validators.

    All frequencies in rad/us, times in us, lengths in um.
    """

    omega_max: float = mhz(2.5)
    delta_min: float = -mhz(20.0)
    delta_max: float = mhz(20.0)
    t_max: float = 4.0
    min_ramp: float = 0.05
    min_spacing: float = 4.0
    fov_width: float = 75.0
    fov_height: float = 76.0
    c6: float = C6_RB87
    check_fov: bool = True

    def __post_init__(self):
        for name in ("omega_max", "t_max", "min_ramp", "min_spacing", "fov_width", "fov_height", "c6"):
            if not getattr(self, name) > 0:
                raise ValueError(f"profile bound {name} must be positive")
        if not self.delta_min < self.delta_max:
            raise ValueError("profile requires delta_min < delta_max")

    @classmethod
    def from_json(cls, path: str | Path) -> "DeviceProfile":
        """Load a profile file. Frequencies in the file are in 2*pi MHz."""
        raw = json.loads(Path(path).read_text())
        kwargs = {}
        for key, value in raw.items():
            if key in ("omega_max", "delta_min", "delta_max", "c6"):
                kwargs[key] = mhz(float(value))
            elif key == "check_fov":
                kwargs[key] = bool(value)
            elif key in cls.__dataclass_fields__:
                kwargs[key] = float(value)
            else:
                raise ValueError(f"unknown profile field {key!r}")
        return cls(**kwargs)

    def to_json_dict(self) -> dict:
        out = {}
        for key in self.__dataclass_fields__:
            value = getattr(self, key)
            out[key] = to_mhz(value) if key in ("omega_max", "delta_min", "delta_max", "c6") else value
        return out


@dataclass(frozen=True)
class AtomRegister:
    """Atom positions in um. Atom ``j`` is bit ``j`` of every bitstring."""

    positions: tuple[tuple[float, float], ...]
    ancilla_mask: tuple[bool, ...] = ()
    label: str = ""

    def __init__(self, positions: Iterable[Sequence[float]], ancilla: Iterable[int] = (), label: str = ""):
        pos = tuple((float(x), float(y)) for x, y in positions)
        if not pos:
            raise RegisterError("register needs at least one atom")
        if not all(math.isfinite(c) for p in pos for c in p):
            raise RegisterError("atom coordinates must be finite")
        anc = set(int(i) for i in ancilla)
        if any(i < 0 or i >= len(pos) for i in anc):
            raise RegisterError("ancilla index out of range")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "ancilla_mask", tuple(i in anc for i in range(len(pos))))
        object.__setattr__(self, "label", label)

    @property
    def n(self) -> int:
        return len(self.positions)

    @property
    def ancillas(self) -> list[int]:
        return [i for i, a in enumerate(self.ancilla_mask) if a]

    def coords(self) -> np.ndarray:
        return np.array(self.positions, dtype=float)

    def distances(self) -> np.ndarray:
        xy = self.coords()
        return np.sqrt(((xy[:, None, :] - xy[None, :, :]) ** 2).sum(-1))

    def to_json_dict(self) -> dict:
        return {"atoms": [list(p) for p in self.positions], "ancilla": self.ancillas, "label": self.label}

    @classmethod
    def from_json_dict(cls, raw: dict) -> "AtomRegister":
        return cls(raw["atoms"], raw.get("ancilla", ()), raw.get("label", ""))


def _check_knots(knots: Iterable[Sequence[float]], name: str) -> tuple[tuple[float, float], ...]:
    out = tuple((float(t), float(v)) for t, v in knots)
    if len(out) < 2:
        raise ScheduleError(f"{name} needs at least two knots")
    for t, v in out:
        if not (math.isfinite(t) and math.isfinite(v)):
            raise ScheduleError(f"{name} knots must be finite")
    for (t0, _), (t1, _) in zip(out, out[1:]):
        if not t1 > t0:
            raise ScheduleError(f"{name} knot times must be strictly increasing (got {t0} then {t1})")
    if out[0][0] != 0.0:
        raise ScheduleError(f"{name} must start at t=0")
    return out


@dataclass(frozen=True)
class PulseSchedule:
    """Piecewise-linear global drive: Rabi frequency, detuning and phase.

    Each channel is a tuple of ``(t, value)`` knots spanning ``[0, T]``.
    Omega and delta are in rad/us, phi in rad.
    """

    omega: tuple[tuple[float, float], ...]
    delta: tuple[tuple[float, float], ...]
    phi: tuple[tuple[float, float], ...]

    def __init__(self, omega, delta=None, phi=None):
        om = _check_knots(omega, "omega")
        total = om[-1][0]
        if any(v < 0 for _, v in om):
            raise ScheduleError("omega must be non-negative")
        de = _check_knots(delta if delta is not None else [(0.0, 0.0), (total, 0.0)], "delta")
        ph = _check_knots(phi if phi is not None else [(0.0, 0.0), (total, 0.0)], "phi")
        for name, kn in (("delta", de), ("phi", ph)):
            if not math.isclose(kn[-1][0], total, rel_tol=0, abs_tol=1e-12):
                raise ScheduleError(f"{name} must end at T={total}")
        object.__setattr__(self, "omega", om)
        object.__setattr__(self, "delta", de)
        object.__setattr__(self, "phi", ph)

    @property
    def total_time(self) -> float:
        return self.omega[-1][0]

    def knot_times(self) -> np.ndarray:
        """Sorted union of knot times over all channels."""
        ts = {t for ch in (self.omega, self.delta, self.phi) for t, _ in ch}
        return np.array(sorted(ts))

    def value_at(self, t: float) -> tuple[float, float, float]:
        return schedule_value_at(self, t)

    def to_json_dict(self) -> dict:
        return {
            "omega": [[t, to_mhz(v)] for t, v in self.omega],
            "delta": [[t, to_mhz(v)] for t, v in self.delta],
            "phi": [[t, v] for t, v in self.phi],
        }

    @classmethod
    def from_json_dict(cls, raw: dict) -> "PulseSchedule":
        omega = [(t, mhz(v)) for t, v in raw["omega"]]
        delta = [(t, mhz(v)) for t, v in raw["delta"]] if "delta" in raw else None
        phi = raw.get("phi")
        return cls(omega, delta, phi)


@dataclass
class ValidationReport:
    violations: list[tuple[str, str, float]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, rule: str, message: str, value: float) -> None:
        self.violations.append((rule, message, float(value)))

    def rules(self) -> set[str]:
        return {r for r, _, _ in self.violations}

    def merge(self, other: "ValidationReport") -> "ValidationReport":
        return ValidationReport(self.violations + other.violations)

    def __bool__(self) -> bool:
        return self.ok


def _interp(knots: Sequence[tuple[float, float]], t: float) -> float:
    times = [k[0] for k in knots]
    i = int(np.searchsorted(times, t, side="right")) - 1
    i = min(max(i, 0), len(knots) - 2)
    (t0, v0), (t1, v1) = knots[i], knots[i + 1]
    if t == t1:
        return v1
    return v0 + (v1 - v0) * (t - t0) / (t1 - t0)


def schedule_value_at(schedule: PulseSchedule, t: float) -> tuple[float, float, float]:
    """Linearly interpolated ``(omega, delta, phi)`` at time ``t``."""
    total = schedule.total_time
    if not (-1e-12 <= t <= total + 1e-12):
        raise ValueError(f"t={t} outside schedule span [0, {total}]")
    t = min(max(t, 0.0), total)
    return _interp(schedule.omega, t), _interp(schedule.delta, t), _interp(schedule.phi, t)


def make_ramp_plateau_ramp(
    omega_max: float,
    t_up: float,
    t_plateau: float,
    t_down: float,
    delta: Sequence[Sequence[float]] | None = None,
) -> PulseSchedule:
    """Trapezoidal Rabi drive; ``delta`` knots default to zero detuning."""
    if min(t_up, t_plateau, t_down) < 0:
        raise ScheduleError("durations must be non-negative")
    total = t_up + t_plateau + t_down
    if not total > 0:
        raise ScheduleError("total duration must be positive")
    omega = [(0.0, 0.0), (t_up, omega_max)] if t_up > 0 else [(0.0, omega_max)]
    # skip knots that a sub-ulp duration would collapse onto the previous one
    if t_up + t_plateau > omega[-1][0]:
        omega.append((t_up + t_plateau, omega_max))
    if total > omega[-1][0]:
        omega.append((total, 0.0))
    return PulseSchedule(omega, delta)


def validate_register(register: AtomRegister, profile: DeviceProfile) -> ValidationReport:
    report = ValidationReport()
    d = register.distances()
    n = register.n
    for j in range(n):
        for k in range(j + 1, n):
            if d[j, k] < profile.min_spacing:
                report.add("min_spacing", f"atoms {j} and {k} are {d[j, k]:.3f} um apart", d[j, k])
    if profile.check_fov:
        for j, (x, y) in enumerate(register.positions):
            if not (0.0 <= x <= profile.fov_width and 0.0 <= y <= profile.fov_height):
                report.add("fov", f"atom {j} at ({x}, {y}) outside field of view", max(-x, -y, x - profile.fov_width, y - profile.fov_height))
    return report


def validate_schedule(schedule: PulseSchedule, profile: DeviceProfile) -> ValidationReport:
    report = ValidationReport()
    total = schedule.total_time
    if total > profile.t_max + 1e-12:
        report.add("t_max", f"duration {total} us exceeds {profile.t_max} us", total)
    om_peak = max(v for _, v in schedule.omega)
    if om_peak > profile.omega_max * (1 + 1e-12):
        report.add("omega_max", f"Rabi frequency {to_mhz(om_peak):.4g} x 2pi MHz over limit", om_peak)
    for _, v in schedule.delta:
        if not profile.delta_min * (1 + 1e-12) <= v <= profile.delta_max * (1 + 1e-12):
            report.add("delta_range", f"detuning {to_mhz(v):.4g} x 2pi MHz out of range", v)
    for _, ch in (("delta", schedule.delta), ("phi", schedule.phi)):
        if not math.isclose(ch[-1][0], total, abs_tol=1e-12):
            report.add("span", "channel does not end at T", ch[-1][0])
    if schedule.omega[0][1] != 0.0 or schedule.omega[-1][1] != 0.0:
        report.add("omega_endpoints", "Rabi drive must start and end at zero", max(schedule.omega[0][1], schedule.omega[-1][1]))
    first = schedule.omega[1][0] - schedule.omega[0][0]
    last = schedule.omega[-1][0] - schedule.omega[-2][0]
    if first < profile.min_ramp * (1 - 1e-9):
        report.add("min_ramp", f"ramp-up of {first} us shorter than {profile.min_ramp} us", first)
    if last < profile.min_ramp * (1 - 1e-9):
        report.add("min_ramp", f"ramp-down of {last} us shorter than {profile.min_ramp} us", last)
    return report


def load_register_and_schedule(path: str | Path) -> tuple[AtomRegister, PulseSchedule | None]:
    """Read the combined register/schedule JSON file."""
    raw = json.loads(Path(path).read_text())
    reg = AtomRegister.from_json_dict(raw)
    sched = PulseSchedule.from_json_dict(raw) if "omega" in raw else None
    return reg, sched


def dump_register_and_schedule(register: AtomRegister, schedule: PulseSchedule | None = None) -> dict:
    out = register.to_json_dict()
    if schedule is not None:
        out.update(schedule.to_json_dict())
    return out
