"""Acceptance criteria 1-9, each at its stated tolerance and time budget.

Every test records one PASS/FAIL line; the lines are printed together at the
end of the pytest run (see ``conftest.py``). Run on its own with
``pytest tests/test_acceptance.py`` or ``python3 tests/test_acceptance.py``.

Timings exclude the one-off numba compilation, which the ``warm`` fixture
triggers before any timed section.
"""

import math
import sys
import time

import numpy as np
import pytest
from scipy.optimize import least_squares

from qsim.evolution import (
    BitstringHistogram,
    IntegratorConfig,
    build_cache,
    evolve,
    evolve_states,
    probabilities,
    rydberg_density,
)
from qsim.fitting import damped_sinusoid, fit_binomial
from qsim.graphs import cycle_graph, enumerate_max_independent_sets, unit_disk_graph
from qsim.hamiltonian import blockade_radius, interaction_table
from qsim.mitigation import ReadoutModel, apply_error_channel, mitigate_exact, mitigate_first_order, total_variation
from qsim.model import AtomRegister, PulseSchedule, mhz
from qsim.optimize import OptimizerConfig, build_detuning_schedule, optimize
from qsim.presets import (
    BELL_TIMES,
    RABI_TIMES,
    Z2_LINEAR,
    bell_register,
    get_preset,
    trapezoid,
)

REPORT: dict[int, str] = {}
# drives used by criteria 1-8, re-checked for convergence by criterion 9
DRIVES: dict[str, tuple] = {}


def record(k, ok, detail):
    REPORT[k] = f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}"
    return ok


@pytest.fixture(scope="module", autouse=True)
def warm():
    evolve(AtomRegister([(0, 0), (9, 0)]), trapezoid(0.5))
    evolve(AtomRegister([(0, 0), (9, 0)]), trapezoid(0.5), IntegratorConfig(method="rk4"))


def test_criterion_1_analytic_rabi():
    A = mhz(1.8)
    reg = AtomRegister([(5, 5)])
    square = PulseSchedule([(0, A), (4.0, A)])
    t = np.linspace(0, 4, 401)[1:]
    start = time.perf_counter()
    states = evolve_states(reg, square, t)
    elapsed = time.perf_counter() - start
    p = np.array([probabilities(s).probs[1] for s in states])
    err = float(np.max(np.abs(p - np.sin(A * t / 2) ** 2)))
    period = 2 * math.pi / A
    DRIVES["rabi square"] = (reg, square)
    ok = err <= 1e-6 and abs(period - 0.5556) < 5e-5 and elapsed < 1.0
    record(1, ok, f"max |P - sin^2| = {err:.2e}, period {period:.4f} us, {elapsed:.2f} s")
    assert ok


def test_criterion_2_blockade_radius():
    rb = blockade_radius(mhz(1.8), 0.0)
    ok = abs(rb - 8.85) <= 0.05
    record(2, ok, f"R_b = {rb:.3f} um")
    assert ok


def two_tone(x, t):
    c, a1, w1, p1, a2, w2, p2 = x
    return c + a1 * np.cos(w1 * t + p1) + a2 * np.cos(w2 * t + p2)


def fit_two_tone(t, y, lo, hi, step=0.1):
    """Two-frequency fit: exhaustive frequency grid with the amplitudes
    solved linearly, then a joint nonlinear refinement."""
    grid = np.arange(lo, hi, step)
    cols = {w: (np.cos(w * t), np.sin(w * t)) for w in grid}
    best = None
    for i, w1 in enumerate(grid):
        for w2 in grid[i + 1:]:
            B = np.column_stack([np.ones_like(t), *cols[w1], *cols[w2]])
            c = np.linalg.lstsq(B, y, rcond=None)[0]
            r = float(np.sum((B @ c - y) ** 2))
            if best is None or r < best[0]:
                best = (r, w1, w2, c)
    _, w1, w2, c = best
    x0 = [c[0], math.hypot(c[1], c[2]), w1, math.atan2(-c[2], c[1]),
          math.hypot(c[3], c[4]), w2, math.atan2(-c[4], c[3])]
    return least_squares(lambda x: two_tone(x, t) - y, x0).x


def test_criterion_3_bell_beating():
    reg = bell_register()
    half_v = interaction_table(reg).v[0, 1] / 2
    A = mhz(1.8)
    start = time.perf_counter()
    # the interaction splits the Rabi line at A into A -/+ V/4; the two
    # components beat at V/2 in p('00') - p('11')
    T = np.round(np.linspace(0.3, 12.0, 300), 10)
    hists = [probabilities(evolve(reg, trapezoid(x))) for x in T]
    d = np.array([h["00"] - h["11"] for h in hists])
    fit = fit_two_tone(T, d, 0.7 * A, 1.3 * A)
    beat = abs(fit[5] - fit[2])
    window = [probabilities(evolve(reg, trapezoid(x))) for x in BELL_TIMES]
    elapsed = time.perf_counter() - start
    k = int(np.argmin(np.abs(np.asarray(BELL_TIMES) - 2.3)))
    h = window[k]
    DRIVES["bell"] = (reg, trapezoid(BELL_TIMES[k]))
    rel = abs(beat - half_v) / half_v
    ok = (rel <= 0.15 and 0.40 <= h["00"] <= 0.60 and 0.40 <= h["11"] <= 0.60
          and h["01"] + h["10"] <= 0.05 and elapsed < 10)
    record(3, ok, f"beat {beat / (2 * math.pi):.4f} vs V/2 {half_v / (2 * math.pi):.4f} x2pi MHz ({rel:.1%}); "
                  f"T={BELL_TIMES[k]:.3f}: p00 {h['00']:.3f} p11 {h['11']:.3f} p01+p10 {h['01'] + h['10']:.4f}; "
                  f"{elapsed:.2f} s")
    assert ok


def test_criterion_4_mitigation_round_trip():
    rng = np.random.default_rng(2024)
    model = ReadoutModel(0.05)
    start = time.perf_counter()
    worst_exact = worst_first = 0.0
    for _ in range(100):
        p = BitstringHistogram(3, rng.dirichlet(np.ones(8)))
        raw = apply_error_channel(p, model)
        worst_exact = max(worst_exact, total_variation(mitigate_exact(raw, model), p))
        worst_first = max(worst_first, total_variation(mitigate_first_order(raw, model), p))
    elapsed = time.perf_counter() - start
    ok = worst_exact <= 1e-12 and worst_first <= 10 * 0.05**2 and elapsed < 1
    record(4, ok, f"worst TV exact {worst_exact:.1e}, first-order {worst_first:.4f}; {elapsed:.2f} s")
    assert ok


def test_criterion_5_fit_recovery():
    t = np.asarray(RABI_TIMES)
    truth = (0.4, 0.45, mhz(1.8), math.pi / 2, 4.5)
    p = np.clip(damped_sinusoid(t, *truth), 0, 1)
    start = time.perf_counter()
    taus, ratios = [], []
    for seed in range(100):
        y = np.random.default_rng(seed).binomial(80, p) / 80
        res = fit_binomial(t, y, 80)
        taus.append(res.tau)
        ratios.append(res.chi2_per_dof)
    elapsed = time.perf_counter() - start
    hit = float(np.mean(np.abs(np.asarray(taus) - 4.5) <= 0.5))
    med = float(np.median(ratios))
    ok = hit >= 0.68 and 0.7 <= med <= 1.5 and elapsed < 30
    record(5, ok, f"tau within 4.5 +/- 0.5 in {hit:.0%} of trials, median chi2/dof {med:.2f}; {elapsed:.1f} s")
    assert ok


def test_criterion_6_mis_oracle():
    start = time.perf_counter()
    mis = enumerate_max_independent_sets(cycle_graph(12))
    preset = get_preset("misloop")
    graph = unit_disk_graph(preset.register, preset.graph_radius)
    schedule = preset.schedule(None)
    hist = probabilities(evolve(preset.register, schedule))
    elapsed = time.perf_counter() - start
    top = hist.top(3)
    DRIVES["misloop linear"] = (preset.register, schedule)
    ok = (mis.cardinality == 6 and mis.sets == ["010101010101", "101010101010"]
          and graph.edges == cycle_graph(12).edges
          and sorted(b for b, _ in top[:2]) == mis.sets and elapsed < 120)
    record(6, ok, f"MIS size {mis.cardinality}, {len(mis.sets)} sets; top outcomes "
                  + ", ".join(f"{b} {q:.3f}" for b, q in top) + f"; {elapsed:.1f} s")
    assert ok


@pytest.mark.slow
def test_criterion_7_maxis_diabatic():
    preset = get_preset("misloop")
    start = time.perf_counter()
    res = optimize(preset.parameterization, preset.register, preset.target, OptimizerConfig(maxiter=150),
                   x0=np.asarray(preset.start))
    hist = probabilities(evolve(preset.register, res.schedule))
    elapsed = time.perf_counter() - start
    (best, p1), (second, p2) = hist.top(2)
    margin = p1 / p2
    DRIVES["maxis optimized"] = (preset.register, res.schedule)
    ok = best == preset.target and margin >= 1.5 and res.iterations <= 150 and elapsed < 1800
    record(7, ok, f"argmax {best} p={p1:.4f} (start {res.initial_objective:.4f}), runner-up {second} "
                  f"p={p2:.4f}, margin {margin:.2f}x, {res.iterations} evaluations, {elapsed:.0f} s")
    assert ok


@pytest.fixture(scope="module")
def z2_run():
    preset = get_preset("z2chain")
    spec, reg, target = preset.parameterization, preset.register, preset.target
    linear = spec.linear_drive(*Z2_LINEAR)
    start = time.perf_counter()
    res = optimize(spec, reg, target, OptimizerConfig(maxiter=150), x0=linear)
    cache = build_cache(reg)
    before = probabilities(evolve(reg, build_detuning_schedule(linear, spec), cache=cache))
    after = probabilities(evolve(reg, res.schedule, cache=cache))
    elapsed = time.perf_counter() - start
    DRIVES["z2 linear"] = (reg, build_detuning_schedule(linear, spec))
    DRIVES["z2 optimized"] = (reg, res.schedule)
    return preset, linear, res, before, after, elapsed


@pytest.mark.slow
def test_criterion_8_z2_defect_improvement(z2_run):
    preset, _, res, before, after, elapsed = z2_run
    target = preset.target
    ratio = after[target] / before[target]
    n = preset.register.n - 1
    dens = rydberg_density(after)[:n]
    mid = n // 2
    # central '000' against the excited sites flanking it
    centre = dens[mid - 1:mid + 2]
    flank = dens[[mid - 2, mid + 2]]
    suppressed = centre.max() < flank.min()
    ok = ratio >= 1.3 and suppressed and elapsed < 2700
    record(8, ok, f"p(target) {before[target]:.4f} -> {after[target]:.4f} ({ratio:.2f}x); centre density "
                  f"{np.round(centre, 3).tolist()} vs flanks {np.round(flank, 3).tolist()}; "
                  f"{res.iterations} evaluations, {elapsed:.0f} s")
    assert ok


@pytest.mark.slow
def test_optimized_z2_drive_slows_near_crossing(z2_run):
    # inside the window where the drive crosses 0 <= Delta <= Omega, the
    # optimized drive should have a segment flatter than the linear sweep
    preset, linear, res, _, _, _ = z2_run
    spec = preset.parameterization
    knots = res.best_params[: spec.n_knots]
    times = spec.knot_times(res.best_params)
    slopes = np.diff(knots) / np.diff(times)
    lin_slope = (linear[-1] - linear[0]) / (times[-1] - times[0])
    mids = 0.5 * (knots[1:] + knots[:-1])
    window = (mids >= 0) & (mids <= spec.omega_max)
    rel = np.round(np.abs(slopes) / lin_slope, 2).tolist()
    assert window.any() and float(np.min(np.abs(slopes[window]))) < lin_slope, (
        f"knots {np.round(np.asarray(knots) / (2 * math.pi), 2).tolist()} x2pi MHz, "
        f"|slope| / linear slope per segment {rel}, segments in window {window.tolist()}")


def test_criterion_9_convergence_and_norm():
    # picks up every drive recorded above; the Rabi square pulse is always present
    if "rabi square" not in DRIVES:
        DRIVES["rabi square"] = (AtomRegister([(5, 5)]), PulseSchedule([(0, mhz(1.8)), (4.0, mhz(1.8))]))
    lines, ok = [], True
    for name, (reg, schedule) in DRIVES.items():
        cfg = IntegratorConfig()
        cache = build_cache(reg)
        coarse = evolve(reg, schedule, cfg, cache)
        fine = evolve(reg, schedule, cfg.halved(), cache)
        shift = float(np.max(np.abs(np.abs(coarse.amplitudes) ** 2 - np.abs(fine.amplitudes) ** 2)))
        drift = abs(coarse.norm() ** 2 - 1)
        ok &= shift < 1e-6 and drift <= 1e-8
        lines.append(f"{name}: shift {shift:.1e}, drift {drift:.1e}")
    record(9, ok, "; ".join(lines))
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
