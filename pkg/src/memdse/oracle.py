"""Brute-force reference for :func:`memdse.mapper.map_layer`.

Replays the tiling plan loop by loop and tracks what every buffer instance
holds, counting each fill, read and update as it happens. Slow by design; only
meant for small layers in tests.
"""

from __future__ import annotations

from collections import Counter

from .arch import ArchitectureSpec, Dataflow
from .kinds import DataType
from .mapper import AccessProfile, LayerPlan, plan_layer
from .workload import LayerSpec

W, I, O = DataType.WEIGHTS, DataType.INPUTS, DataType.OUTPUTS
ORACLE_LIMIT = 16


class OracleGuardError(ValueError):
    pass


def _guard(layer: LayerSpec) -> None:
    dims = {
        "in_channels": layer.in_channels, "out_channels": layer.out_channels,
        "height": layer.height, "width": layer.width,
        "kernel_h": layer.kernel_h, "kernel_w": layer.kernel_w,
    }
    big = {k: v for k, v in dims.items() if v > ORACLE_LIMIT}
    if big:
        raise OracleGuardError(f"oracle limited to dimensions <= {ORACLE_LIMIT}: {big}")


def _chunks(n: int, size: int):
    return [range(a, min(n, a + size)) for a in range(0, n, size)]


def _input_at(layer: LayerSpec, m: int, ci: int, p: int, q: int, r: int, s: int):
    h = p * layer.stride + r - layer.padding
    w = q * layer.stride + s - layer.padding
    if 0 <= h < layer.height and 0 <= w < layer.width:
        return (layer.input_channel(m, ci), h, w)
    return None


class _Sim:
    def __init__(self, plan: LayerPlan):
        self.lv = {tag: level.name for tag, level in plan.levels.items()}
        self.reads: Counter = Counter()
        self.writes: Counter = Counter()
        self.macs = 0
        self.cycles = 0

    def rd(self, tag: str, dt: DataType, n: int = 1) -> None:
        self.reads[(self.lv[tag], dt)] += n

    def wr(self, tag: str, dt: DataType, n: int = 1) -> None:
        self.writes[(self.lv[tag], dt)] += n

    def profile(self, arch: ArchitectureSpec) -> AccessProfile:
        prof = AccessProfile.empty(arch)
        for k, v in self.reads.items():
            prof.reads[k] += v
        for k, v in self.writes.items():
            prof.writes[k] += v
        prof.total_macs = self.macs
        prof.compute_cycles = self.cycles
        return prof.finalize_demand(arch)


def _run_cpu(layer: LayerSpec, sim: _Sim) -> None:
    for m in range(layer.out_channels):
        for p in range(layer.out_h):
            for q in range(layer.out_w):
                for ci in range(layer.reduction_channels):
                    for r in range(layer.kernel_h):
                        for s in range(layer.kernel_w):
                            sim.rd("w_top", W)
                            sim.rd("i_top", I)
                            sim.macs += 1
                            sim.cycles += 1
                sim.wr("o_top", O)


def _run_ws(layer: LayerSpec, plan: LayerPlan, sim: _Sim) -> None:
    R, S = layer.kernel_h, layer.kernel_w
    global_psums: set = set()
    for ms in _chunks(layer.out_channels, plan.m_tile):
        for cis in _chunks(layer.reduction_channels, plan.c_chunk):
            wbuf = {m: set() for m in ms}
            for m in ms:
                for ci in cis:
                    for r in range(R):
                        for s in range(S):
                            sim.rd("w_top", W)
                            sim.wr("w_local", W)
                            wbuf[m].add((ci, r, s))
            for ps in _chunks(layer.out_h, plan.p_tile):
                for qs in _chunks(layer.out_w, plan.q_tile):
                    # one channel at a time slides through every row buffer
                    for ci in cis:
                        fetched: set = set()
                        for m in ms:
                            window: set = set()
                            for p in ps:
                                for q in qs:
                                    for r in range(R):
                                        for s in range(S):
                                            x = _input_at(layer, m, ci, p, q, r, s)
                                            if x is not None and x not in window:
                                                window.add(x)
                                                sim.wr("i_local", I)
                                                if x not in fetched:
                                                    fetched.add(x)
                                                    sim.rd("i_top", I)
                    abuf: set = set()
                    for m in ms:
                        for p in ps:
                            for q in qs:
                                if (m, p, q) in global_psums:
                                    sim.rd("o_top", O)
                                    sim.wr("o_local", O)
                                    abuf.add((m, p, q))
                    for ci in cis:
                        for q in qs:
                            for r in range(R):
                                for s in range(S):
                                    sim.cycles += 1
                                    for m in ms:
                                        assert (ci, r, s) in wbuf[m]
                                        sim.rd("w_local", W)  # broadcast along the row
                                        for p in ps:
                                            sim.rd("i_local", I)
                                            sim.macs += 1
                            for m in ms:
                                for p in ps:
                                    if (m, p, q) in abuf:
                                        sim.rd("o_local", O)
                                    abuf.add((m, p, q))
                                    sim.wr("o_local", O)
                    for m, p, q in sorted(abuf):
                        sim.rd("o_local", O)
                        sim.wr("o_top", O)
                        global_psums.add((m, p, q))


def _run_rs(layer: LayerSpec, plan: LayerPlan, sim: _Sim) -> None:
    S = layer.kernel_w
    global_psums: set = set()
    for ms in _chunks(layer.out_channels, plan.m_tile):
        for cis in _chunks(layer.reduction_channels, plan.c_chunk):
            for rs in _chunks(layer.kernel_h, plan.r_tile):
                for ps in _chunks(layer.out_h, plan.p_tile):
                    pes = [(m, r, p) for m in ms for r in rs for p in ps]
                    multicast: set = set()
                    for m, r, p in pes:
                        for ci in cis:
                            for s in range(S):
                                sim.wr("w_local", W)
                                if (m, ci, r, s) not in multicast:
                                    multicast.add((m, ci, r, s))
                                    sim.rd("w_top", W)
                    for qs in _chunks(layer.out_w, plan.q_tile):
                        spad_o = {pe: set() for pe in pes}
                        for ci in cis:
                            fetched: set = set()
                            for pe in pes:
                                m, r, p = pe
                                row = set()
                                for q in qs:
                                    for s in range(S):
                                        x = _input_at(layer, m, ci, p, q, r, s)
                                        if x is not None:
                                            row.add(x)
                                sim.wr("i_local", I, len(row))
                                for x in row:
                                    if x not in fetched:
                                        fetched.add(x)
                                        sim.rd("i_top", I)
                            for q in qs:
                                for s in range(S):
                                    sim.cycles += 1
                                    for pe in pes:
                                        sim.rd("w_local", W)
                                        sim.rd("i_local", I)
                                        sim.macs += 1
                                for pe in pes:
                                    if q in spad_o[pe]:
                                        sim.rd("o_local", O)
                                    spad_o[pe].add(q)
                                    sim.wr("o_local", O)
                        # drain: the column sums filter rows, then merges with global
                        for m in ms:
                            for p in ps:
                                for q in qs:
                                    for r in rs:
                                        sim.rd("o_local", O)
                                    if (m, p, q) in global_psums:
                                        sim.rd("o_top", O)
                                    sim.wr("o_top", O)
                                    global_psums.add((m, p, q))


def oracle_map_layer(layer: LayerSpec, arch: ArchitectureSpec) -> AccessProfile:
    _guard(layer)
    plan = plan_layer(layer, arch)
    sim = _Sim(plan)
    if plan.dataflow is Dataflow.SEQUENTIAL_CPU:
        _run_cpu(layer, sim)
    elif plan.dataflow is Dataflow.WEIGHT_STATIONARY:
        _run_ws(layer, plan, sim)
    else:
        _run_rs(layer, plan, sim)
    return sim.profile(arch)
