"""Rydberg Hamiltonian pieces: pair interactions, the diagonal energy cache and
a matrix-free ``H @ psi``.

Basis convention: amplitude index ``b`` is an integer whose bit ``j`` is the
state of atom ``j`` (0 = ground, 1 = Rydberg).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import C6_RB87, AtomRegister, RegisterError

MAX_ATOMS = 24


def blockade_radius(omega: float, delta: float = 0.0, c6: float = C6_RB87) -> float:
    """Distance (um) at which ``C6/r^6`` equals ``sqrt(omega^2 + delta^2)``."""
    drive = math.hypot(omega, delta)
    if drive == 0.0:
        raise ZeroDivisionError("blockade radius undefined for zero drive")
    return (c6 / drive) ** (1.0 / 6.0)


@dataclass(frozen=True)
class InteractionTable:
    v: np.ndarray  # (n, n) rad/us, symmetric, zero diagonal

    @property
    def n(self) -> int:
        return self.v.shape[0]


def interaction_table(register: AtomRegister, c6: float = C6_RB87, cutoff: float | None = None) -> InteractionTable:
    """All-to-all van der Waals energies ``c6 / r^6``.

    ``cutoff`` (um) drops pairs farther apart than the given distance.
    """
    d = register.distances()
    n = register.n
    off = ~np.eye(n, dtype=bool)
    if np.any(d[off] == 0.0):
        raise RegisterError("coincident atoms have infinite interaction")
    v = np.zeros((n, n))
    v[off] = c6 / d[off] ** 6
    if cutoff is not None:
        v[d > cutoff] = 0.0
    v.setflags(write=False)
    return InteractionTable(v)


def popcounts(n: int) -> np.ndarray:
    """Number of set bits of every index ``0 .. 2^n - 1`` as int8."""
    pc = np.zeros(1, dtype=np.int8)
    for _ in range(n):
        pc = np.concatenate([pc, pc + 1])
    return pc


@dataclass(frozen=True)
class DiagonalCache:
    """Interaction energy of every basis state; detuning is applied later."""

    energies: np.ndarray
    popcount: np.ndarray
    n: int

    @property
    def dim(self) -> int:
        return 1 << self.n


def diagonal_energies(table: InteractionTable, max_atoms: int = MAX_ATOMS) -> DiagonalCache:
    n = table.n
    if n > max_atoms:
        raise MemoryError(f"{n} atoms exceed the state-vector budget of {max_atoms}")
    v = table.v
    energies = np.zeros(1)
    for j in range(n):
        # coupling of atom j to every configuration of atoms 0..j-1
        couple = np.zeros(1)
        for k in range(j):
            couple = np.concatenate([couple, couple + v[j, k]])
        energies = np.concatenate([energies, energies + couple])
    energies.setflags(write=False)
    pc = popcounts(n)
    pc.setflags(write=False)
    return DiagonalCache(energies, pc, n)


def apply_hamiltonian(state, cache: DiagonalCache, omega: float, delta: float, phi: float = 0.0):
    """Return ``H psi`` without forming the 2^n x 2^n matrix.

    ``state`` may be a bare amplitude vector or a ``QuantumState``; the
    result has the same kind.
    """
    psi = getattr(state, "amplitudes", state)
    psi = np.asarray(psi, dtype=complex)
    n = cache.n
    if psi.shape != (cache.dim,):
        raise ValueError(f"state of shape {psi.shape} does not match {n} atoms")
    out = (cache.energies - delta * cache.popcount) * psi
    if omega != 0.0:
        up = 0.5 * omega * np.exp(-1j * phi)  # |r><g|
        down = 0.5 * omega * np.exp(1j * phi)  # |g><r|
        for j in range(n):
            src = psi.reshape(-1, 2, 1 << j)
            dst = out.reshape(-1, 2, 1 << j)
            dst[:, 0, :] += down * src[:, 1, :]
            dst[:, 1, :] += up * src[:, 0, :]
    if hasattr(state, "amplitudes"):
        return type(state)(out, n)
    return out
