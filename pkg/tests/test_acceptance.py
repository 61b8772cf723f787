"""The eight acceptance criteria, one test each.

Every test records a single PASS/FAIL line (printed in the terminal summary)
before asserting, so a failing criterion still reports its measured values.
"""

import random
import time
from dataclasses import replace

from click.testing import CliRunner

from memdse.arch import (
    MemoryAssignment,
    Sharing,
    Variant,
    builtin_architecture,
    builtin_architectures,
    replace_arch,
    toy_architectures,
)
from memdse.cli import main
from memdse.dutycycle import CrossoverKind, build_scenario, crossover_between, log_grid
from memdse.energy import inference_energy
from memdse.kinds import DataType, DeviceKind
from memdse.mapper import MappingError, map_layer, map_network
from memdse.oracle import oracle_map_layer
from memdse.scenario import Inputs, power_sweep, area_table, ips_table
from memdse.workload import BUNDLED_NETWORKS, bundled_network, mac_count, tensor_sizes

from sweeps import closed_form_crossover, exhaustive_small_layers, random_layers, random_power_pair

W, I, O = DataType.WEIGHTS, DataType.INPUTS, DataType.OUTPUTS
RESULTS: dict[int, str] = {}


def record(n: int, title: str, ok: bool, detail: str) -> None:
    RESULTS[n] = f"criterion {n} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    print(RESULTS[n])


def _same(a, b):
    return (a.reads, a.writes, a.total_macs, a.compute_cycles) == (b.reads, b.writes, b.total_macs, b.compute_cycles)


# ------------------------------------------------------------------------------ 1

def test_1_oracle_equivalence():
    t0 = time.perf_counter()
    layers = exhaustive_small_layers() + random_layers(200, seed=2024)
    checked, mismatches = 0, []
    for layer in layers:
        for arch in toy_architectures():
            a, b = map_layer(layer, arch), oracle_map_layer(layer, arch)
            checked += 1
            if not _same(a, b):
                mismatches.append((arch.name, layer))
    dt = time.perf_counter() - t0
    ok = not mismatches and dt < 60
    record(1, "mapper equals loop-nest oracle", ok,
           f"{checked} layer/dataflow pairs, {len(mismatches)} mismatches, {dt:.1f} s (< 60 s)")
    assert not mismatches, mismatches[:3]
    assert dt < 60


# ------------------------------------------------------------------------------ 2

def _fanout(arch) -> int:
    # a weight-stationary weight read is broadcast along the row to every column
    return arch.pe_cols if arch.dataflow.value == "WeightStationary" else 1


def _conservation_failures(layer, arch) -> list[str]:
    bad = []
    try:
        p = map_layer(layer, arch)
    except MappingError:
        return bad
    macs = mac_count(layer)
    if p.total_macs != macs:
        bad.append("total_macs")
    if min([*p.reads.values(), *p.writes.values()]) < 0:
        bad.append("negative count")
    w0, i0 = arch.chain(W)[0].name, arch.chain(I)[0].name
    if p.reads[(w0, W)] * _fanout(arch) < macs:
        bad.append("weight delivery")
    if p.reads[(i0, I)] < macs:
        bad.append("input delivery")
    if p.writes[(arch.top(O).name, O)] < tensor_sizes(layer).output_words:
        bad.append("output writes")
    # shrinking a lower buffer never lowers a count at any level above it
    for k, lv in enumerate(arch.levels):
        if lv.sharing is Sharing.GLOBAL:
            continue
        for div in (2, 4):
            cap = lv.capacity // div
            if cap * 8 < lv.word_width:
                continue
            small = replace_arch(arch, levels=tuple(
                replace(x, capacity=cap) if x.name == lv.name else x for x in arch.levels))
            try:
                q = map_layer(layer, small)
            except MappingError:
                continue
            above = {x.name for x in arch.levels if x.sharing is Sharing.GLOBAL} | {
                x.name for x in arch.levels[k + 1:] if x.held_data & lv.held_data}
            for key in p.reads:
                if key[0] in above and (q.reads[key] < p.reads[key] or q.writes[key] < p.writes[key]):
                    bad.append(f"shrink {lv.name}/{div} lowered {key[0]}/{key[1].value}")
    return bad


def test_2_conservation():
    archs = toy_architectures() + [builtin_architecture(n) for n in ("cpu", "eyeriss-like", "simba-like")]
    layers = random_layers(500, seed=77, max_dim=16)
    failures = []
    for layer in layers:
        for arch in archs:
            for f in _conservation_failures(layer, arch):
                failures.append((arch.name, layer.kind.value, f))
    ok = not failures
    record(2, "conservation and shrink monotonicity", ok,
           f"500 random layers x {len(archs)} archs, {len(failures)} violations")
    assert ok, failures[:5]


# ------------------------------------------------------------------------------ 3

AREA_TARGETS = {  # arch: (SramOnly mm2, P0 savings %, P1 savings %)
    "simba-like-v2": (2.89, 16.56, 34.97),
    "eyeriss-like-v2": (2.56, 17.52, 34.98),
}


def test_3_area(tech):
    t0 = time.perf_counter()
    t2 = area_table(tech)
    dt = time.perf_counter() - t0
    checks, parts = [], []
    for arch, sram, p0, p1, s0, s1 in t2.rows:
        ref_sram, ref_p0, ref_p1 = AREA_TARGETS[arch]
        s0, s1 = 100 * s0, 100 * s1
        checks += [abs(sram / ref_sram - 1) <= 0.15,
                   10 <= s0 <= 22 and abs(s0 - ref_p0) <= 5,
                   30 <= s1 <= 40 and abs(s1 - ref_p1) <= 5]
        parts.append(f"{arch} {sram:.2f} mm2 (ref {ref_sram}) P0 {s0:.1f}% (ref {ref_p0}) "
                     f"P1 {s1:.1f}% (ref {ref_p1})")
    ok = all(checks) and dt < 5
    record(3, "area savings", ok, "; ".join(parts) + f"; {dt:.2f} s")
    assert all(checks) and dt < 5


# ------------------------------------------------------------------------------ 4

def test_4_crossover_algebra(tech):
    rng = random.Random(4)
    worst, below_fail, solved, drawn = 0.0, 0, 0, 0
    while solved < 100:  # 100 scenarios that actually have an intersection
        drawn += 1
        s, n = random_power_pair(rng)
        c = crossover_between(s, n)
        x = closed_form_crossover(s, n)
        if c.kind in (CrossoverKind.CROSSOVER, CrossoverKind.REVERSED) and not c.capped:
            solved += 1
            worst = max(worst, abs(c.ips - x) / x)
        if c.kind is CrossoverKind.CROSSOVER:
            for k in range(1, 50):
                ips = c.ips * k / 50
                below_fail += n.power(ips) >= s.power(ips)
    # the same property on the shipped-default curves
    _, cross = power_sweep(tech, 7, log_grid())
    curves = 0
    for wl, arch, label, kind, ips, capped, _ in cross.rows:
        if kind != "crossover":
            continue
        inp = Inputs.load(wl, arch, tech)
        prof = map_network(inp.network, inp.arch)
        variant, dev = label.split("-")
        asg = MemoryAssignment.make(inp.arch, Variant.parse(variant), DeviceKind.parse(dev))
        sc = build_scenario(prof, inp.arch, [asg], 7, 1.0, tech)
        for rate in log_grid(1e-2, ips, 5)[:-1]:
            curves += 1
            below_fail += sc.get(asg.label).power(rate) >= sc.baseline.power(rate)
    ok = worst <= 1e-9 and below_fail == 0
    record(4, "crossover algebra", ok,
           f"{solved} intersecting scenarios ({drawn} drawn), worst relative error {worst:.1e}; "
           f"{below_fail} grid points below a crossover where NVM >= SRAM ({curves} shipped-default points)")
    assert worst <= 1e-9 and below_fail == 0


# ------------------------------------------------------------------------------ 5

IPS_TARGETS = {  # (workload, arch): (P0 %, P1 %)
    ("detnet", "simba-like-v2"): (27, 31),
    ("detnet", "eyeriss-like-v2"): (-4, 9),
    ("edsnet", "simba-like-v2"): (29, 24),
    ("edsnet", "eyeriss-like-v2"): (-15, -26),
}
IPS_SIGNS = {  # signs asserted exactly
    ("detnet", "simba-like-v2"): (1, 1),
    ("edsnet", "simba-like-v2"): (1, 1),
    ("edsnet", "eyeriss-like-v2"): (-1, -1),
}


def test_5_ips_savings(tech):
    rows = {(r[0], r[1]): (100 * r[5], 100 * r[6]) for r in ips_table(tech).rows}
    checks, parts = [], []
    for key, (t0, t1) in IPS_TARGETS.items():
        s0, s1 = rows[key]
        checks += [abs(s0 - t0) <= 10, abs(s1 - t1) <= 10]
        if key in IPS_SIGNS:
            checks += [s0 * IPS_SIGNS[key][0] > 0, s1 * IPS_SIGNS[key][1] > 0]
        parts.append(f"{key[0]}/{key[1].split('-')[0]} P0 {s0:+.1f} ({t0:+d}) P1 {s1:+.1f} ({t1:+d})")
    det_p1 = rows[("detnet", "simba-like-v2")][1]
    checks.append(det_p1 >= 24)
    ok = all(checks)
    record(5, "IPS savings signs and magnitudes", ok, "; ".join(parts))
    assert ok


# ------------------------------------------------------------------------------ 6

def test_6_latency_structure(tech):
    rows = {(r[0], r[1]): (r[3], r[4]) for r in ips_table(tech).rows}
    e0, e1 = rows[("detnet", "eyeriss-like-v2")]
    s0, s1 = rows[("detnet", "simba-like-v2")]
    equal = abs(e1 - e0) <= 1e-6 * e0
    ratio = s1 / s0
    ok = equal and 1.1 <= ratio <= 1.3
    record(6, "latency structure", ok,
           f"Eyeriss DetNet P0 {e0:.6g} ms, P1 {e1:.6g} ms; Simba DetNet P1/P0 = {ratio:.3f}")
    assert ok


# ------------------------------------------------------------------------------ 7

def test_7_node_scaling(tech):
    ratios = []
    for arch in builtin_architectures():
        asg = MemoryAssignment.sram_only(arch)
        for wl in BUNDLED_NETWORKS:
            prof = map_network(bundled_network(wl), arch).total
            e40 = inference_energy(prof, arch, asg, 40, tech).grand_total
            e7 = inference_energy(prof, arch, asg, 7, tech).grand_total
            ratios.append(e40 / e7)
    comp = []
    for a in tech.nodes:
        for b in tech.nodes:
            for c in tech.nodes:
                lhs = tech.factors(a, b).energy * tech.factors(b, c).energy
                comp.append(abs(lhs / tech.factors(a, c).energy - 1))
    ok = all(3.5 <= r <= 4.0 for r in ratios) and max(comp) <= 0.01
    record(7, "40nm to 7nm envelope", ok,
           f"{len(ratios)} builtin scenarios, ratio {min(ratios):.3f}..{max(ratios):.3f}; "
           f"composition error {max(comp):.1e}")
    assert ok


# ------------------------------------------------------------------------------ 8

def test_8_determinism(tmp_path):
    commands = [["report", "--variant", "sram", "--variant", "p0", "--variant", "p1", "--node", "7", "--node", "28"],
                ["ips-sweep"], ["area"], ["latency", "--ips-table"], ["energy", "--workload", "edsnet"],
                ["map", "--per-layer"]]
    files = 0
    same = True
    for i, cmd in enumerate(commands):
        outs = []
        for run in ("a", "b"):
            d = tmp_path / f"{i}{run}"
            res = CliRunner().invoke(main, [*cmd, "--out", str(d)], catch_exceptions=False)
            assert res.exit_code == 0, res.output
            outs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
        files += len(outs[0])
        same &= outs[0] == outs[1]
    record(8, "determinism", same, f"{files} output files from {len(commands)} commands, "
           f"{'byte-identical' if same else 'DIFFERENT'} across two runs")
    assert same
