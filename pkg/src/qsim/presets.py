"""Built-in registers, drives and sweeps for the four reference experiments.

All coordinates are in micrometres with the array offset from the origin
so that every atom sits inside the default field of view. Frequencies are
given in units of 2 pi MHz and converted on construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .hamiltonian import blockade_radius
from .model import AtomRegister, PulseSchedule, make_ramp_plateau_ramp, mhz
from .optimize import ScheduleParameterization, build_detuning_schedule

# Rabi and Bell drives: 0.1 us linear ramps around a 1.8 x 2pi MHz plateau
RABI_OMEGA = mhz(1.8)
RABI_RAMP = 0.1
RABI_TIMES = tuple(np.round(np.r_[np.linspace(0.3, 1.5, 30), np.linspace(2.8, 4.0, 30)], 10))
RABI_SPACING = 24.0

BELL_SPACING = 11.0
BELL_TIMES = tuple(np.round(np.linspace(1.9, 2.5, 12), 10))

# chains: nearest neighbours at 6.1 um sit well inside the blockade radius
# of the 2.5 x 2pi MHz drive (8.4 um); next-nearest at 12.2 um sit outside
CHAIN_SPACING = 6.1

# square loop of 12 atoms: side 6.4 um < R_b (8.4 um) < 6.4 sqrt(2) um across
# a corner. Tighter loops widen the energy gap that singles out the corner
# pattern; below about 5.9 um the corner diagonals would join the graph.
LOOP_SPACING = 6.4


def trapezoid(total_time: float, omega: float = RABI_OMEGA, ramp: float = RABI_RAMP) -> PulseSchedule:
    """Resonant drive with linear ramps; ``total_time`` includes both ramps."""
    return make_ramp_plateau_ramp(omega, ramp, total_time - 2 * ramp, ramp)


def rabi_register() -> AtomRegister:
    return AtomRegister([(5.0, 5.0)], label="rabi")


def rabi_grid_register() -> AtomRegister:
    """16 atoms on a 4x4 grid far outside each other's blockade radius."""
    pts = [(1.5 + RABI_SPACING * i, 1.5 + RABI_SPACING * j) for j in range(4) for i in range(4)]
    return AtomRegister(pts, label="rabi-grid")


def rabi_area(total_time: float, omega: float = RABI_OMEGA, ramp: float = RABI_RAMP) -> float:
    return omega * (total_time - ramp)


def bell_register() -> AtomRegister:
    return AtomRegister([(5.0, 5.0), (5.0 + BELL_SPACING, 5.0)], label="bell")


def chain_register(n_chain: int = 9, spacing: float = CHAIN_SPACING) -> AtomRegister:
    """Straight chain with an ancilla beside the central atom.

    The ancilla is the last atom. It blockades the central chain site, which
    pins a '000' domain wall in the middle of the antiferromagnetic pattern.
    """
    if n_chain % 2 == 0:
        raise ValueError("the chain needs a central atom")
    y = 10.0
    pts = [(5.0 + spacing * i, y) for i in range(n_chain)]
    pts.append((5.0 + spacing * (n_chain // 2), y + spacing))
    return AtomRegister(pts, ancilla=[n_chain], label=f"chain{n_chain}+1")


def uturn_register(spacing: float = CHAIN_SPACING) -> AtomRegister:
    """17-atom U-shaped chain plus an ancilla below its central atom.

    Six atoms descend the left column, five run along the bottom (corners
    included) and six climb the right column, all at equal spacing.
    """
    s = spacing
    x0, y0 = 5.0, 5.0 + s
    left = [(x0, y0 + s * k) for k in range(6, 0, -1)]
    bottom = [(x0 + s * j, y0) for j in range(5)]
    right = [(x0 + 4 * s, y0 + s * k) for k in range(1, 7)]
    pts = left + bottom + right
    pts.append((x0 + 2 * s, y0 - s))
    return AtomRegister(pts, ancilla=[17], label="uturn17+1")


def defect_target(n_chain: int) -> str:
    """Alternating pattern with '000' in the centre, ancilla excited."""
    half = (n_chain - 3) // 2
    side = "".join("1" if k % 2 == 0 else "0" for k in range(half))
    return side + "000" + side[::-1] + "1"


def loop_register(spacing: float = LOOP_SPACING) -> AtomRegister:
    """12 atoms around the perimeter of a 4x4 square; corners are 0, 3, 6, 9."""
    a = spacing
    pts = [(i * a, 0.0) for i in range(4)]
    pts += [(3 * a, i * a) for i in range(1, 4)]
    pts += [(i * a, 3 * a) for i in range(2, -1, -1)]
    pts += [(0.0, i * a) for i in range(2, 0, -1)]
    return AtomRegister([(x + 5.0, y + 5.0) for x, y in pts], label="loop12")


CORNER_TARGET = "100100100100"

# drive parameterizations; knot values in rad/us
Z2_SPEC = ScheduleParameterization(delta_bounds=(-mhz(6.0), mhz(6.0)))
Z2_LINEAR = (mhz(-3.0), mhz(3.0))

LOOP_SPEC = ScheduleParameterization(t_up=0.3, t_down=0.3)
LOOP_LINEAR = (mhz(-5.0), mhz(3.0))
# The corner pattern is the classical ground state only for final detunings
# between 0 and about 1.9 x 2pi MHz, where every other independent set pays
# for a pair closer than the corner-to-corner distance. The search starts
# from a sweep that ends inside that window with a slow Rabi ramp-down.
CORNER_LINEAR = (mhz(-2.0), mhz(1.0))
CORNER_RAMPS = (0.3, 1.5)
CORNER_SPEC = ScheduleParameterization(
    t_up=0.3, t_down=0.3, optimize_ramps=True, ramp_bounds=(0.05, 1.5), delta_bounds=(-mhz(6.0), mhz(6.0))
)


@dataclass(frozen=True)
class Preset:
    """Everything needed to run one reference experiment.

    ``schedule(T)`` gives the drive for sweep value ``T``; presets without a
    sweep ignore the argument. ``parameterization`` and ``start`` describe the
    drive search for presets that have a ``target``.
    """

    name: str
    register: AtomRegister
    schedule: Callable[[float | None], PulseSchedule]
    sweep: tuple[float, ...] = ()
    target: str | None = None
    parameterization: ScheduleParameterization | None = None
    start: tuple[float, ...] = ()
    graph_radius: float | None = None
    notes: dict = field(default_factory=dict)

    def schedules(self) -> list[PulseSchedule]:
        if self.sweep:
            return [self.schedule(T) for T in self.sweep]
        return [self.schedule(None)]


def _rabi() -> Preset:
    return Preset("rabi", rabi_register(), lambda T: trapezoid(T), RABI_TIMES)


def _bell() -> Preset:
    return Preset("bell", bell_register(), lambda T: trapezoid(T), BELL_TIMES)


def _z2chain() -> Preset:
    start = Z2_SPEC.linear_drive(*Z2_LINEAR)
    return Preset(
        "z2chain", chain_register(9), lambda T: build_detuning_schedule(start, Z2_SPEC),
        target=defect_target(9), parameterization=Z2_SPEC, start=tuple(start),
    )


def _uturn() -> Preset:
    start = Z2_SPEC.linear_drive(*Z2_LINEAR)
    return Preset(
        "uturn", uturn_register(), lambda T: build_detuning_schedule(start, Z2_SPEC),
        target=defect_target(17), parameterization=Z2_SPEC, start=tuple(start),
    )


def _misloop() -> Preset:
    linear = LOOP_SPEC.linear_drive(*LOOP_LINEAR)
    start = CORNER_SPEC.linear_drive(*CORNER_LINEAR)
    start[-2:] = CORNER_RAMPS
    return Preset(
        "misloop", loop_register(), lambda T: build_detuning_schedule(linear, LOOP_SPEC),
        target=CORNER_TARGET, parameterization=CORNER_SPEC, start=tuple(start),
        graph_radius=blockade_radius(LOOP_SPEC.omega_max),
    )


PRESETS: dict[str, Callable[[], Preset]] = {
    "rabi": _rabi,
    "bell": _bell,
    "z2chain": _z2chain,
    "uturn": _uturn,
    "misloop": _misloop,
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
