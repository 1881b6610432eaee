import numpy as np
import pytest

from qsim.graphs import cycle_graph, unit_disk_graph
from qsim.hamiltonian import blockade_radius
from qsim.model import DeviceProfile, mhz, validate_register, validate_schedule
from qsim.presets import (
    BELL_TIMES,
    CHAIN_SPACING,
    PRESETS,
    RABI_TIMES,
    chain_register,
    defect_target,
    get_preset,
    rabi_area,
    rabi_grid_register,
    trapezoid,
    uturn_register,
)

PROFILE = DeviceProfile()


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_every_preset_validates(name):
    p = get_preset(name)
    assert validate_register(p.register, PROFILE).ok
    for s in p.schedules():
        assert validate_schedule(s, PROFILE).ok
    if p.parameterization is not None:
        assert len(p.start) == p.parameterization.size
        lo, hi = p.parameterization.bounds()
        assert np.all(np.asarray(p.start) >= lo) and np.all(np.asarray(p.start) <= hi)
    if p.target is not None:
        assert len(p.target) == p.register.n


def test_unknown_preset():
    with pytest.raises(ValueError):
        get_preset("nope")


def test_rabi_sweep_windows():
    t = np.asarray(RABI_TIMES)
    assert t.size == 60
    assert t.min() == pytest.approx(0.3) and t.max() == pytest.approx(4.0)
    assert not np.any((t > 1.5 + 1e-9) & (t < 2.8 - 1e-9))


def test_rabi_grid_atoms_are_independent():
    reg = rabi_grid_register()
    assert reg.n == 16 and validate_register(reg, PROFILE).ok
    d = reg.distances()
    assert d[d > 0].min() == pytest.approx(24.0)
    assert unit_disk_graph(reg, blockade_radius(mhz(1.8))).edges == frozenset()


def test_trapezoid_area():
    s = trapezoid(2.0)
    assert s.total_time == pytest.approx(2.0)
    ts = np.linspace(0, 2.0, 20001)
    area = np.trapezoid([s.value_at(t)[0] for t in ts], ts)
    assert area == pytest.approx(rabi_area(2.0), rel=1e-6)


def test_bell_sweep():
    assert len(BELL_TIMES) == 12
    assert BELL_TIMES[0] == pytest.approx(1.9) and BELL_TIMES[-1] == pytest.approx(2.5)
    assert get_preset("bell").register.distances()[0, 1] == pytest.approx(11.0)


def test_defect_targets():
    assert defect_target(9) == "1010001011"
    assert defect_target(17) == "101010100010101011"
    for n in (9, 17):
        t = defect_target(n)
        assert t[(n - 3) // 2:(n + 3) // 2] == "000" and t.endswith("1")


def test_chain_and_uturn_geometry():
    rb = blockade_radius(mhz(2.5))
    for reg, n in ((chain_register(9), 10), (uturn_register(), 18)):
        assert reg.n == n and reg.ancillas == [n - 1]
        chain = unit_disk_graph(reg, rb)
        body = cycle_graph(n - 1).edges - {(0, n - 2)}
        assert body <= chain.edges
        centre = (n - 2) // 2
        # the ancilla touches only the central chain atom
        assert {e for e in chain.edges if n - 1 in e} == {(centre, n - 1)}
    assert CHAIN_SPACING < rb < 2 * CHAIN_SPACING


def test_misloop_graph_is_twelve_cycle():
    p = get_preset("misloop")
    assert unit_disk_graph(p.register, p.graph_radius).edges == cycle_graph(12).edges
    assert p.target == "100100100100"
