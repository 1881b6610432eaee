import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dense_hamiltonian
from qsim.evolution import QuantumState
from qsim.hamiltonian import (
    DiagonalCache,
    apply_hamiltonian,
    blockade_radius,
    diagonal_energies,
    interaction_table,
    popcounts,
)
from qsim.model import C6_RB87, AtomRegister, RegisterError, mhz


def test_blockade_radius_at_rabi_drive():
    assert blockade_radius(mhz(1.8), 0.0) == pytest.approx(8.85, abs=0.01)


def test_blockade_radius_unit_ratio_and_symmetry():
    assert blockade_radius(C6_RB87, 0.0) == pytest.approx(1.0)
    assert blockade_radius(0.0, mhz(1.8)) == pytest.approx(blockade_radius(mhz(1.8), 0.0))


def test_blockade_radius_zero_drive():
    with pytest.raises(ZeroDivisionError):
        blockade_radius(0.0, 0.0)


@given(st.floats(0.1, 100), st.floats(0.1, 100))
def test_blockade_radius_decreases_with_drive(a, b):
    lo, hi = sorted([a, b])
    assert blockade_radius(hi) <= blockade_radius(lo)


def test_pair_at_11um_matches_quoted_correction():
    v = interaction_table(AtomRegister([(0, 0), (11, 0)])).v
    assert v[0, 1] / (2 * math.pi) == pytest.approx(0.487, abs=1e-3)
    assert v[0, 1] / 2 / (2 * math.pi) == pytest.approx(0.24, abs=0.01)


def test_pair_at_c6_root_has_unit_interaction():
    d = C6_RB87 ** (1 / 6)
    assert interaction_table(AtomRegister([(0, 0), (d, 0)])).v[0, 1] == pytest.approx(1.0)


def test_collinear_next_nearest_is_64_times_weaker():
    v = interaction_table(AtomRegister([(0, 0), (6, 0), (12, 0)])).v
    assert v[0, 2] == pytest.approx(v[0, 1] / 64)
    assert np.allclose(v, v.T) and np.all(np.diag(v) == 0)


def test_coincident_atoms_raise():
    with pytest.raises(RegisterError):
        interaction_table(AtomRegister([(1, 1), (1, 1)]))


def test_cutoff_drops_far_pairs():
    v = interaction_table(AtomRegister([(0, 0), (6, 0), (12, 0)]), cutoff=7.0).v
    assert v[0, 2] == 0 and v[0, 1] > 0


def test_diagonal_energies_small_cases():
    v = 3.0
    table = interaction_table(AtomRegister([(0, 0), ((C6_RB87 / v) ** (1 / 6), 0)]))
    assert np.allclose(diagonal_energies(table).energies, [0, 0, 0, v])
    reg = AtomRegister([(0, 0), (6, 0), (12, 0)])
    t3 = interaction_table(reg)
    a = t3.v[0, 1]
    assert diagonal_energies(t3).energies[0b111] == pytest.approx(2 * a + a / 64)


def test_diagonal_energies_budget():
    with pytest.raises(MemoryError):
        diagonal_energies(interaction_table(AtomRegister([(10 * i, 0) for i in range(5)])), max_atoms=4)


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 7), st.randoms(use_true_random=False))
def test_diagonal_energies_pair_sum_and_relabeling(n, rnd):
    pts = [(5.0 * i + rnd.uniform(0, 1), rnd.uniform(0, 40)) for i in range(n)]
    table = interaction_table(AtomRegister(pts))
    e = diagonal_energies(table).energies
    for b in range(1 << n):
        bits = [j for j in range(n) if b >> j & 1]
        ref = sum(table.v[j, k] for j, k in itertools.combinations(bits, 2))
        assert e[b] == pytest.approx(ref, rel=1e-12, abs=1e-12)
        if len(bits) <= 1:
            assert e[b] == 0
    perm = list(range(n))
    rnd.shuffle(perm)
    e2 = diagonal_energies(interaction_table(AtomRegister([pts[p] for p in perm]))).energies
    for b in range(1 << n):
        # atom k of the relabeled register is atom perm[k] of the original
        orig = sum(1 << perm[k] for k in range(n) if b >> k & 1)
        assert e2[b] == pytest.approx(e[orig], rel=1e-12, abs=1e-12)


def test_popcounts():
    assert popcounts(3).tolist() == [0, 1, 1, 2, 1, 2, 2, 3]


def cache_for(positions):
    return diagonal_energies(interaction_table(AtomRegister(positions)))


def test_apply_single_atom_examples():
    cache = cache_for([(0, 0)])
    A, D = 2.0, 5.0
    assert np.allclose(apply_hamiltonian(np.array([1, 0], dtype=complex), cache, A, 0.0), [0, A / 2])
    assert np.allclose(apply_hamiltonian(np.array([0, 1], dtype=complex), cache, 0.0, D), [0, -D])


def test_apply_pair_diagonal():
    cache = cache_for([(0, 0), (7, 0)])
    v = cache.energies[3]
    psi = np.zeros(4, dtype=complex)
    psi[3] = 1
    assert np.allclose(apply_hamiltonian(psi, cache, 0.0, 1.5), [0, 0, 0, v - 3.0])


def test_apply_accepts_state_objects_and_checks_shape():
    cache = cache_for([(0, 0)])
    out = apply_hamiltonian(QuantumState(np.array([1, 0], dtype=complex), 1), cache, 1.0, 0.0)
    assert isinstance(out, QuantumState) and np.allclose(out.amplitudes, [0, 0.5])
    with pytest.raises(ValueError):
        apply_hamiltonian(np.ones(4, dtype=complex), cache, 1.0, 0.0)


def random_state(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


@pytest.mark.parametrize("n", range(1, 7))
def test_matrix_free_equals_dense_oracle(n):
    rng = np.random.default_rng(n)
    pos = [(6.0 * i + rng.uniform(0, 2), rng.uniform(0, 5)) for i in range(n)]
    cache = cache_for(pos)
    for _ in range(3):
        om, de, ph = rng.uniform(0, 20), rng.uniform(-30, 30), rng.uniform(-math.pi, math.pi)
        psi = random_state(rng, 1 << n)
        ref = dense_hamiltonian(pos, om, de, ph) @ psi
        assert np.max(np.abs(apply_hamiltonian(psi, cache, om, de, ph) - ref)) <= 1e-12 * max(1, np.abs(ref).max())


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_hermiticity(n, seed):
    rng = np.random.default_rng(seed)
    cache = cache_for([(7.0 * i, 0) for i in range(n)])
    om, de, ph = rng.uniform(0, 20), rng.uniform(-30, 30), rng.uniform(-4, 4)
    u, w = random_state(rng, 1 << n), random_state(rng, 1 << n)
    lhs = np.vdot(u, apply_hamiltonian(w, cache, om, de, ph))
    rhs = np.conj(np.vdot(w, apply_hamiltonian(u, cache, om, de, ph)))
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


def test_cache_is_read_only():
    cache = cache_for([(0, 0), (5, 0)])
    assert isinstance(cache, DiagonalCache)
    with pytest.raises(ValueError):
        cache.energies[0] = 1.0
