import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from memdse.arch import MemoryAssignment, builtin_architecture
from memdse.dutycycle import (
    BufferPower,
    CrossoverKind,
    DutyCycleError,
    DutyCycleScenario,
    VariantPower,
    build_scenario,
    crossover_between,
    log_grid,
    memory_power,
    savings_at,
    sweep_csv,
    sweep_rows,
)
from memdse.kinds import DeviceKind
from memdse.mapper import map_network
from memdse.workload import bundled_network

from sweeps import closed_form_crossover, random_power_pair

T = 1e-12  # negligible active time


def sram(e=1e-6, sb=10e-6, t=T):
    return VariantPower("SramOnly", (BufferPower("buf", "weight", e, sb, 0.0, False),), t, 0.0)


def nvm(e=2e-6, wu=0.0, t=T, wake=0.0, label="P1"):
    return VariantPower(label, (BufferPower("buf", "weight", e, 0.0, wu, True),), t, wake)


def test_zero_rate():
    assert sram().power(0) == 10e-6
    assert nvm().power(0) == 0.0


def test_ten_ips_construction():
    c = crossover_between(sram(), nvm())
    assert c.kind is CrossoverKind.CROSSOVER and not c.capped
    assert c.ips == pytest.approx(10.0, rel=1e-9)


def test_nvm_always_wins():
    c = crossover_between(sram(e=2e-6, sb=0.0), nvm(e=1e-6))
    assert c.kind is CrossoverKind.NVM_ALWAYS and c.ips is None


def test_capped_at_ips_max():
    # intersection at 10 IPS but the NVM design tops out at 5 IPS
    c = crossover_between(sram(), nvm(t=0.1, wake=0.1))
    assert c.kind is CrossoverKind.CROSSOVER and c.capped
    assert c.ips == pytest.approx(1 / 0.2)


def test_equal_curves_flagged():
    same = VariantPower("P1", sram().buffers, T, 0.0)
    assert crossover_between(sram(), same).kind is CrossoverKind.EQUAL


def test_savings_and_guards():
    sc = DutyCycleScenario(sram(), {"P1": VariantPower("P1", sram().buffers, T, 0.0)}, ips_min=3)
    assert savings_at(sc, "P1") == 0.0
    zero = DutyCycleScenario(sram(sb=0.0), {"P1": nvm()}, ips_min=1)
    with pytest.raises(DutyCycleError, match="no power"):
        savings_at(zero, "P1", 0.0)
    with pytest.raises(DutyCycleError, match="outside"):
        memory_power(sc, "P1", 1e13)
    with pytest.raises(DutyCycleError, match="outside"):
        memory_power(sc, "SramOnly", -1)
    with pytest.raises(DutyCycleError):
        DutyCycleScenario(sram(), ips_min=0)
    with pytest.raises(DutyCycleError):
        VariantPower("x", (), 0.0, 0.0)


def _scenario(wl, arch_name, variant, ips, tech):
    arch = builtin_architecture(arch_name)
    prof = map_network(bundled_network(wl), arch)
    asg = MemoryAssignment.make(arch, variant, DeviceKind.VGSOT)
    return build_scenario(prof, arch, [asg], 7, ips, tech), asg.label


def test_shipped_default_signs(tech):
    from memdse.arch import Variant
    sc, label = _scenario("detnet", "simba-like-v2", Variant.P0, 10, tech)
    assert 0.20 <= savings_at(sc, label) <= 0.35
    sc, label = _scenario("edsnet", "eyeriss-like-v2", Variant.P1, 0.1, tech)
    assert savings_at(sc, label) < 0


def test_real_curves_are_affine_and_match_components(tech):
    from memdse.arch import Variant
    sc, label = _scenario("detnet", "eyeriss-like", Variant.P0, 10, tech)
    for vp in (sc.baseline, sc.get(label)):
        xs = [0.0, vp.ips_max / 3, vp.ips_max]
        ys = [vp.power(x) for x in xs]
        assert (ys[1] - ys[0]) * (xs[2] - xs[0]) == pytest.approx((ys[2] - ys[0]) * (xs[1] - xs[0]), rel=1e-9)
        s = vp.sample(xs[1])
        assert s.total_w == pytest.approx(s.weight_w + s.io_w)


def test_sweep_rows_stop_at_ips_max(tech):
    from memdse.arch import Variant
    sc, label = _scenario("edsnet", "simba-like-v2", Variant.P1, 0.1, tech)
    rows = sweep_rows(sc.get(label), log_grid(), "VGSOT")
    assert rows and rows[-1][2] <= sc.get(label).ips_max
    assert sweep_csv(rows).splitlines()[0] == "variant,device,ips,total_w,weight_w,io_w"
    grid = log_grid(1e-2, 1e3, 10)
    assert len(grid) == 51 and grid[0] == 1e-2 and grid[-1] == pytest.approx(1e3)


seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=200)
@given(seed=seeds, frac=st.floats(0.0, 1.0))
def test_affine_collinearity(seed, frac):
    for vp in random_power_pair(random.Random(seed)):
        xs = (0.0, frac * vp.ips_max, vp.ips_max)
        a, b, c = (vp.power(x) for x in xs)
        # the middle point lies on the chord, up to rounding of the curve's magnitude
        assert abs(b - (a + (c - a) * frac)) <= 1e-12 * max(abs(a), abs(c))
        assert min(a, b, c) >= 0


@settings(max_examples=200)
@given(seed=seeds)
def test_monotone_when_guard_holds(seed):
    for vp in random_power_pair(random.Random(seed)):
        if all(b.gated or b.energy_j >= b.standby_w * vp.active_time for b in vp.buffers):
            grid = [vp.ips_max * k / 20 for k in range(21)]
            ps = [vp.power(x) for x in grid]
            assert all(p1 <= p2 for p1, p2 in zip(ps, ps[1:]))


@settings(max_examples=200)
@given(seed=seeds, frac=st.floats(0.0, 0.999))
def test_nvm_cheaper_below_crossover(seed, frac):
    s, n = random_power_pair(random.Random(seed))
    c = crossover_between(s, n)
    if c.kind is CrossoverKind.CROSSOVER and not c.capped:
        x = frac * c.ips
        assert n.power(x) < s.power(x)


@settings(max_examples=200)
@given(seed=seeds, k=st.floats(1e-3, 1e3))
def test_crossover_scale_invariant(seed, k):
    s, n = random_power_pair(random.Random(seed))

    def scaled(vp):
        bufs = tuple(BufferPower(b.level, b.group, b.energy_j * k, b.standby_w * k, b.wakeup_j * k, b.gated)
                     for b in vp.buffers)
        return VariantPower(vp.label, bufs, vp.active_time, vp.wakeup_time)

    c1, c2 = crossover_between(s, n), crossover_between(scaled(s), scaled(n))
    assert c1.kind is c2.kind and c1.capped == c2.capped
    if c1.ips is not None:
        assert c2.ips == pytest.approx(c1.ips, rel=1e-9)


@settings(max_examples=100)
@given(seed=seeds)
def test_crossover_matches_closed_form(seed):
    s, n = random_power_pair(random.Random(seed))
    c = crossover_between(s, n)
    x = closed_form_crossover(s, n)
    if c.kind is CrossoverKind.CROSSOVER and not c.capped:
        assert c.ips == pytest.approx(x, rel=1e-9)
