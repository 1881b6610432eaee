"""Unit-disk graphs of atom registers and brute-force independent-set analysis."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .evolution import BitstringHistogram, bitstring, bitstring_index
from .model import AtomRegister

MAX_ENUMERATION = 24
_CHUNK = 1 << 20

LABELS = ("not-IS", "IS", "maximal-IS", "maximum-IS")


@dataclass(frozen=True)
class UnitDiskGraph:
    n: int
    edges: frozenset[tuple[int, int]]
    radius: float
    positions: tuple[tuple[float, float], ...] = ()

    def neighbor_masks(self) -> list[int]:
        masks = [0] * self.n
        for j, k in self.edges:
            masks[j] |= 1 << k
            masks[k] |= 1 << j
        return masks

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "radius": self.radius,
            "positions": [list(p) for p in self.positions],
            "edges": sorted([list(e) for e in self.edges]),
        }

    @classmethod
    def from_json_dict(cls, raw: dict) -> "UnitDiskGraph":
        edges = frozenset((min(e), max(e)) for e in map(tuple, raw["edges"]))
        return cls(raw["n"], edges, raw["radius"], tuple(tuple(p) for p in raw.get("positions", ())))


def unit_disk_graph(register: AtomRegister, radius: float) -> UnitDiskGraph:
    """Edge between every pair at distance <= radius (ties are edges)."""
    if not radius > 0:
        raise ValueError("radius must be positive")
    d = register.distances()
    n = register.n
    # relative slack so an exact tie is not lost to rounding in the distance
    cut = radius * (1 + 1e-12)
    edges = frozenset((j, k) for j in range(n) for k in range(j + 1, n) if d[j, k] <= cut)
    return UnitDiskGraph(n, edges, radius, register.positions)


def cycle_graph(n: int) -> UnitDiskGraph:
    return UnitDiskGraph(n, frozenset((min(j, (j + 1) % n), max(j, (j + 1) % n)) for j in range(n)), 0.0)


def _check_len(graph: UnitDiskGraph, bits: str) -> int:
    if len(bits) != graph.n:
        raise ValueError(f"bitstring length {len(bits)} does not match {graph.n} vertices")
    return bitstring_index(bits)


def is_independent_set(graph: UnitDiskGraph, bits: str) -> bool:
    b = _check_len(graph, bits)
    for j, k in graph.edges:
        if (b >> j) & 1 and (b >> k) & 1:
            return False
    return True


def is_maximal(graph: UnitDiskGraph, bits: str) -> bool:
    if not is_independent_set(graph, bits):
        raise ValueError(f"{bits} is not an independent set")
    b = bitstring_index(bits)
    masks = graph.neighbor_masks()
    return all((b >> v) & 1 or b & masks[v] for v in range(graph.n))


def _flags(graph: UnitDiskGraph, idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(independent, maximal) flags for an array of basis indices."""
    indep = np.ones(idx.shape, dtype=bool)
    for j, k in graph.edges:
        indep &= ((idx >> j) & (idx >> k) & 1) == 0
    maximal = indep.copy()
    for v, mask in enumerate(graph.neighbor_masks()):
        maximal &= (((idx >> v) & 1) == 1) | ((idx & mask) != 0)
    return indep, maximal


class MISEnumeration(NamedTuple):
    cardinality: int
    sets: list[str]
    maximal_counts: dict[int, int]


def enumerate_max_independent_sets(graph: UnitDiskGraph) -> MISEnumeration:
    """Exhaustive search over all 2^n vertex subsets."""
    n = graph.n
    if n > MAX_ENUMERATION:
        raise ValueError(f"{n} vertices exceed the brute-force budget of {MAX_ENUMERATION}")
    best = -1
    winners: list[int] = []
    maximal_counts: dict[int, int] = {}
    for start in range(0, 1 << n, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, 1 << n), dtype=np.int64)
        indep, maximal = _flags(graph, idx)
        card = np.zeros(idx.shape, dtype=np.int64)
        for j in range(n):
            card += (idx >> j) & 1
        for c, cnt in zip(*np.unique(card[maximal], return_counts=True)):
            maximal_counts[int(c)] = maximal_counts.get(int(c), 0) + int(cnt)
        if not indep.any():
            continue
        top = int(card[indep].max())
        hits = idx[indep & (card == top)].tolist()
        if top > best:
            best, winners = top, hits
        elif top == best:
            winners.extend(hits)
    sets = sorted(bitstring(b, n) for b in winners)
    return MISEnumeration(best, sets, dict(sorted(maximal_counts.items())))


@dataclass
class ISClassification:
    labels: dict[str, str]
    cardinality: dict[str, int]
    mass: dict[str, float]
    mass_by_cardinality: dict[int, float]


def classify_histogram(graph: UnitDiskGraph, hist: BitstringHistogram) -> ISClassification:
    """Label every observed outcome and aggregate probability per class.

    ``mass`` is cumulative up the hierarchy: ``mass["IS"]`` includes maximal
    and maximum sets, ``mass["maximal-IS"]`` includes maximum sets.
    ``mass_by_cardinality`` covers independent outcomes only.
    """
    if hist.n != graph.n:
        raise ValueError("histogram and graph sizes differ")
    p = hist.probs
    idx = np.flatnonzero(p).astype(np.int64)
    indep, maximal = _flags(graph, idx)
    card = np.zeros(idx.shape, dtype=np.int64)
    for j in range(graph.n):
        card += (idx >> j) & 1
    mis = enumerate_max_independent_sets(graph).cardinality
    labels, cards = {}, {}
    mass = {label: 0.0 for label in LABELS}
    by_card: dict[int, float] = {}
    for b, ind, mx, c in zip(idx.tolist(), indep, maximal, card.tolist()):
        key = bitstring(b, graph.n)
        w = float(p[b])
        if not ind:
            label = "not-IS"
        elif c == mis:
            label = "maximum-IS"
        elif mx:
            label = "maximal-IS"
        else:
            label = "IS"
        labels[key], cards[key] = label, c
        if ind:
            mass["IS"] += w
            by_card[c] = by_card.get(c, 0.0) + w
            if mx:
                mass["maximal-IS"] += w
            if label == "maximum-IS":
                mass["maximum-IS"] += w
        else:
            mass["not-IS"] += w
    return ISClassification(labels, cards, mass, dict(sorted(by_card.items())))
