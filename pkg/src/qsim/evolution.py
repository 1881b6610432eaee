"""Schrodinger evolution under a pulse schedule, plus measurement statistics."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .hamiltonian import (
    MAX_ATOMS,
    DiagonalCache,
    apply_hamiltonian,
    diagonal_energies,
    interaction_table,
)
from .model import C6_RB87, AtomRegister, PulseSchedule

# exp(-i a h E) lookup tables are used below this many complex entries
_TABLE_BUDGET = 1 << 23
_CLAMP = 1e-15


class IntegrationError(RuntimeError):
    """Evolution failed its norm or step-halving check."""


@dataclass
class QuantumState:
    amplitudes: np.ndarray
    n: int

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (1 << self.n,):
            raise ValueError("amplitude vector must have length 2^n")

    @classmethod
    def ground(cls, n: int) -> "QuantumState":
        psi = np.zeros(1 << n, dtype=complex)
        psi[0] = 1.0
        return cls(psi, n)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "split4"  # or "rk4"
    dt: float = 1e-3
    norm_tol: float = 1e-8
    conv_tol: float = 1e-6
    check_convergence: bool = False

    def __post_init__(self):
        if self.method not in ("split4", "rk4"):
            raise ValueError(f"unknown integrator {self.method!r}")
        if not (self.dt > 0 and self.norm_tol > 0 and self.conv_tol > 0):
            raise ValueError("dt and tolerances must be positive")

    def halved(self) -> "IntegratorConfig":
        return IntegratorConfig(self.method, self.dt / 2, self.norm_tol, self.conv_tol, False)


def bitstring(index: int, n: int) -> str:
    """Bitstring for basis index ``index``; character ``j`` is atom ``j``."""
    return "".join("1" if (index >> j) & 1 else "0" for j in range(n))


def bitstring_index(bits: str) -> int:
    if set(bits) - {"0", "1"}:
        raise ValueError(f"not a bitstring: {bits!r}")
    return sum(1 << j for j, c in enumerate(bits) if c == "1")


class BitstringHistogram:
    """Outcome distribution over n-bit strings.

    ``shots == 0`` marks an exact distribution (``values`` are
    probabilities); otherwise ``values`` are integer counts summing to
    ``shots``.
    """

    def __init__(self, n: int, values: np.ndarray, shots: int = 0):
        values = np.asarray(values, dtype=float if shots == 0 else np.int64)
        if values.shape != (1 << n,):
            raise ValueError("histogram vector must have length 2^n")
        if shots and int(values.sum()) != shots:
            raise ValueError("counts do not sum to the shot total")
        self.n = n
        self.values = values
        self.shots = int(shots)
        # negative quasi-probability removed by mitigation, if any
        self.clipped_mass = 0.0

    @property
    def exact(self) -> bool:
        return self.shots == 0

    @property
    def probs(self) -> np.ndarray:
        if self.exact:
            return self.values
        return self.values / self.shots

    def __getitem__(self, bits: str) -> float:
        if len(bits) != self.n:
            raise KeyError(bits)
        return self.probs[bitstring_index(bits)]

    def as_dict(self) -> dict[str, float]:
        """Non-zero entries keyed by bitstring, in index order."""
        nz = np.flatnonzero(self.values)
        return {bitstring(int(b), self.n): self.values[b].item() for b in nz}

    def top(self, k: int = 3) -> list[tuple[str, float]]:
        p = self.probs
        order = np.lexsort((np.arange(p.size), -p))[:k]
        return [(bitstring(int(b), self.n), float(p[b])) for b in order]

    @classmethod
    def from_dict(cls, n: int, entries: dict[str, float], shots: int = 0) -> "BitstringHistogram":
        values = np.zeros(1 << n)
        for bits, v in entries.items():
            if len(bits) != n:
                raise ValueError(f"bitstring {bits!r} has wrong length")
            values[bitstring_index(bits)] = v
        return cls(n, values.astype(np.int64) if shots else values, shots)

    def to_json_dict(self) -> dict:
        if self.exact:
            probs = {k: float(f"{v:.12g}") for k, v in self.as_dict().items()}
            out = {"n": self.n, "shots": 0, "probs": probs}
            if self.clipped_mass:
                out["clipped_mass"] = float(f"{self.clipped_mass:.12g}")
            return out
        return {"n": self.n, "shots": self.shots, "counts": {k: int(v) for k, v in self.as_dict().items()}}

    @classmethod
    def from_json_dict(cls, raw: dict) -> "BitstringHistogram":
        shots = int(raw.get("shots", 0))
        if shots:
            return cls.from_dict(raw["n"], raw["counts"], shots)
        return cls.from_dict(raw["n"], raw["probs"])

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=1) + "\n")

    def __repr__(self):
        kind = "exact" if self.exact else f"{self.shots} shots"
        return f"BitstringHistogram(n={self.n}, {kind}, top={self.top(3)})"


def _step_grid(schedule: PulseSchedule, dt: float, extra: Iterable[float] = ()) -> tuple[np.ndarray, np.ndarray, list[int]]:
    """Step start times and lengths with every knot (and ``extra`` time) on a
    step boundary. Returns the boundary index of each ``extra`` time too."""
    total = schedule.total_time
    marks = set(schedule.knot_times().tolist())
    extra = [float(t) for t in extra]
    marks.update(extra)
    marks = np.array(sorted(m for m in marks if 0.0 <= m <= total))
    starts, lengths, ends = [], [], {}
    count = 0
    ends[marks[0]] = 0
    for t0, t1 in zip(marks[:-1], marks[1:]):
        m = max(1, math.ceil((t1 - t0) / dt - 1e-9))
        h = (t1 - t0) / m
        starts.append(t0 + h * np.arange(m))
        lengths.append(np.full(m, h))
        count += m
        ends[t1] = count
    bounds = [ends[t] for t in extra]
    return np.concatenate(starts), np.concatenate(lengths), bounds


def _controls(schedule: PulseSchedule, t: np.ndarray):
    def ch(knots):
        kt, kv = zip(*knots)
        return np.interp(t, kt, kv)

    return ch(schedule.omega), ch(schedule.delta), ch(schedule.phi)


def _split_inputs(cache: DiagonalCache, schedule: PulseSchedule, t0: np.ndarray, h: np.ndarray):
    a, b = _kernels.A_COEF, _kernels.B_COEF
    cum_a = np.concatenate([[0.0], np.cumsum(a)])
    # B stage j sits after A stages 0..j
    b_pos = cum_a[1:7]
    a_mid = cum_a[:7] + a / 2
    _, det_mid, _ = _controls(schedule, t0[:, None] + h[:, None] * a_mid[None, :])
    det_int = det_mid * (a[None, :] * h[:, None])
    om_b, _, phi_b = _controls(schedule, t0[:, None] + h[:, None] * b_pos[None, :])
    theta = 0.5 * om_b * (b[None, :] * h[:, None])
    return np.ascontiguousarray(det_int), np.ascontiguousarray(theta), np.ascontiguousarray(phi_b)


def _propagate_split(psi, cache, schedule, t0, h):
    det_int, theta, phi = _split_inputs(cache, schedule, t0, h)
    classes, uidx = np.unique(np.round(h, 15), return_inverse=True)
    n = cache.n
    pc = np.ascontiguousarray(cache.popcount)
    if classes.size * 4 * cache.dim <= _TABLE_BUDGET:
        tau = classes[:, None] * _kernels.A_DISTINCT[None, :]
        etab = np.exp(-1j * tau[:, :, None] * cache.energies[None, None, :])
        _kernels.split_steps(psi, n, pc, etab, uidx.astype(np.int64), det_int, theta, phi)
    else:
        _kernels.split_steps_inline(psi, n, pc, np.ascontiguousarray(cache.energies), h, det_int, theta, phi)


def _propagate_rk4(psi, cache, schedule, t0, h):
    for ts, hs in zip(t0, h):
        def f(t, y):
            om, de, ph = _controls(schedule, np.array([t]))
            return -1j * apply_hamiltonian(y, cache, om[0], de[0], ph[0])

        k1 = f(ts, psi)
        k2 = f(ts + hs / 2, psi + hs / 2 * k1)
        k3 = f(ts + hs / 2, psi + hs / 2 * k2)
        k4 = f(ts + hs, psi + hs * k3)
        psi += hs / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def build_cache(register: AtomRegister, c6: float = C6_RB87, cutoff: float | None = None) -> DiagonalCache:
    if register.n > MAX_ATOMS:
        raise MemoryError(f"{register.n} atoms exceed the state-vector budget of {MAX_ATOMS}")
    return diagonal_energies(interaction_table(register, c6, cutoff))


def evolve_states(
    register: AtomRegister,
    schedule: PulseSchedule,
    times: Sequence[float],
    config: IntegratorConfig = IntegratorConfig(),
    cache: DiagonalCache | None = None,
    c6: float = C6_RB87,
) -> list[QuantumState]:
    """States at each of ``times`` (sorted, within ``[0, T]``), starting
    from all atoms in the ground state."""
    times = [float(t) for t in times]
    if sorted(times) != times:
        raise ValueError("sample times must be sorted")
    if cache is None:
        cache = build_cache(register, c6)
    if cache.n != register.n:
        raise ValueError("diagonal cache does not match register")
    t0, h, marks = _step_grid(schedule, config.dt, times)
    psi = np.zeros(cache.dim, dtype=complex)
    psi[0] = 1.0
    propagate = _propagate_split if config.method == "split4" else _propagate_rk4
    out, done = [], 0
    for mark in marks:
        if mark > done:
            propagate(psi, cache, schedule, t0[done:mark], h[done:mark])
            done = mark
        out.append(QuantumState(psi.copy(), cache.n))
    for st in out:
        drift = abs(st.norm() - 1.0)
        if drift > config.norm_tol:
            raise IntegrationError(f"norm drift {drift:.3g} exceeds {config.norm_tol:g}")
    return out


def evolve(
    register: AtomRegister,
    schedule: PulseSchedule,
    config: IntegratorConfig = IntegratorConfig(),
    cache: DiagonalCache | None = None,
    c6: float = C6_RB87,
) -> QuantumState:
    """Final state after the whole schedule.

    With ``config.check_convergence`` the run is repeated at half the step
    and :class:`IntegrationError` is raised if any outcome probability moves
    by more than ``config.conv_tol``.
    """
    if cache is None:
        cache = build_cache(register, c6)
    (state,) = evolve_states(register, schedule, [schedule.total_time], config, cache)
    if config.check_convergence:
        (fine,) = evolve_states(register, schedule, [schedule.total_time], config.halved(), cache)
        shift = float(np.max(np.abs(np.abs(state.amplitudes) ** 2 - np.abs(fine.amplitudes) ** 2)))
        if shift > config.conv_tol:
            raise IntegrationError(f"step halving moved probabilities by {shift:.3g}")
    return state


def probabilities(state: QuantumState) -> BitstringHistogram:
    p = np.abs(state.amplitudes) ** 2
    p[p < _CLAMP] = 0.0
    return BitstringHistogram(state.n, p, 0)


def sample_shots(hist: BitstringHistogram, shots: int, seed: int | None = None) -> BitstringHistogram:
    """Multinomial draw of ``shots`` outcomes from an exact distribution."""
    if not hist.exact:
        raise ValueError("sampling needs an exact distribution")
    if shots <= 0:
        raise ValueError("shots must be positive")
    p = hist.values / hist.values.sum()
    counts = np.random.default_rng(seed).multinomial(shots, p)
    return BitstringHistogram(hist.n, counts, shots)


def rydberg_density(hist: BitstringHistogram) -> np.ndarray:
    """Probability that each atom is measured in the Rydberg state."""
    p = hist.probs
    if p.sum() == 0:
        raise ValueError("empty histogram")
    return np.array([p.reshape(-1, 2, 1 << j)[:, 1, :].sum() for j in range(hist.n)])
