"""Readout-error model with one-sided bit flips and its tensor-product inverse.

Each atom in the Rydberg state is misread as ground with probability
``epsilon``; ground-state atoms are always read correctly. Errors on
different atoms are independent, so the confusion matrix is a tensor
product of identical 2x2 blocks and can be applied (or inverted) one bit at
a time on the dense probability vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .evolution import BitstringHistogram


@dataclass(frozen=True)
class ReadoutModel:
    epsilon: float = 0.05

    def __post_init__(self):
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError("epsilon must lie in [0, 1)")


def _per_bit(p: np.ndarray, n: int, m00: float, m01: float, m11: float) -> np.ndarray:
    """Apply the upper-triangular 2x2 block [[m00, m01], [0, m11]] to every bit."""
    out = p.astype(float).copy()
    for j in range(n):
        v = out.reshape(-1, 2, 1 << j)
        zero = m00 * v[:, 0, :] + m01 * v[:, 1, :]
        v[:, 1, :] *= m11
        v[:, 0, :] = zero
    return out


def _clip(q: np.ndarray, n: int) -> BitstringHistogram:
    neg = abs(float(q[q < 0].sum()))
    q = np.where(q < 0, 0.0, q)
    total = q.sum()
    if total > 0:
        q = q / total
    hist = BitstringHistogram(n, q, 0)
    hist.clipped_mass = neg
    return hist


def apply_error_channel(hist: BitstringHistogram, model: ReadoutModel) -> BitstringHistogram:
    """Distribution seen through the readout channel."""
    if not hist.exact:
        raise ValueError("the forward channel acts on exact distributions")
    eps = model.epsilon
    return BitstringHistogram(hist.n, _per_bit(hist.probs, hist.n, 1.0, eps, 1.0 - eps), 0)


def mitigate_exact(hist: BitstringHistogram, model: ReadoutModel) -> BitstringHistogram:
    """Invert the channel exactly, then clip negative quasi-probabilities and
    renormalize. The clipped mass is stored on ``result.clipped_mass``."""
    eps = model.epsilon
    q = _per_bit(hist.probs, hist.n, 1.0, -eps / (1.0 - eps), 1.0 / (1.0 - eps))
    return _clip(q, hist.n)


def mitigate_first_order(hist: BitstringHistogram, model: ReadoutModel) -> BitstringHistogram:
    """Inverse truncated at one bit flip per outcome.

    Each outcome gains ``k * eps`` of its own weight (``k`` = number of ones)
    and loses ``eps`` times the weight of every outcome that differs by one
    extra excitation. Clipping as in :func:`mitigate_exact`.
    """
    eps = model.epsilon
    n = hist.n
    p = hist.probs
    pc = np.zeros(1)
    for _ in range(n):
        pc = np.concatenate([pc, pc + 1])
    q = (1.0 + eps * pc) * p
    for j in range(n):
        qv = q.reshape(-1, 2, 1 << j)
        pv = p.reshape(-1, 2, 1 << j)
        qv[:, 0, :] -= eps * pv[:, 1, :]
    return _clip(q, n)


def total_variation(p: BitstringHistogram | np.ndarray, q: BitstringHistogram | np.ndarray) -> float:
    p = getattr(p, "probs", p)
    q = getattr(q, "probs", q)
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())
