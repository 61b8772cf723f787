"""Analytic per-level access counts for one layer under a fixed dataflow schedule.

Every dataflow has a single deterministic tiling policy (:func:`plan_layer`).
:func:`map_layer` turns that plan into read/write counts with closed forms summed
over tiles; :mod:`memdse.oracle` replays the same plan event by event and must
agree exactly.

Counting conventions
--------------------
* Counts are in words of the tensor element (one weight, one activation or one
  partial sum) and are summed over all instances of a level.
* A *read* leaves a level (towards a lower level or the datapath), a *write*
  enters it (a fill from above or an update from below).
* Innermost operand reads happen once per MAC, padded positions included (the
  zero is still delivered). Fills from higher levels move only real elements.
* Weights and the network input start resident in the global levels; loading
  them is not counted.

Schedules (outer to inner loops)
--------------------------------
SequentialCPU
    ``m, p, q, c, r, s``. One weight and one input read per MAC, the sum stays in
    a register and each output is written once.
WeightStationary
    Array rows take output channels, columns take output rows.
    ``m-tile, c-chunk, p-tile, q-tile, c, q, r, s``. The c-chunk of each row's
    filter is pinned in its row weight buffer (fetched from global once), the
    input window of each (p, q) tile is streamed channel by channel through every
    row's input buffer (a sliding window of ``rows x S`` words per channel),
    each weight read is broadcast along the row, the PE register sums one kernel
    window and the accumulation buffer takes one read-modify-write per channel.
    Partial sums leave for the global buffer after each c-chunk and are reloaded
    for the next.
    The weight buffer sets the c-chunk, the accumulation buffer sets the q-tile
    and the input buffer only has to hold one sliding window, so shrinking any
    buffer never lowers a higher-level count.
RowStationary
    Array rows take filter rows (stacked ``pe_rows // R`` times over output
    channels, or folded when ``R > pe_rows``), columns take output rows.
    ``m-group, c-chunk, r-fold, p-tile, q-tile, c, q, s``. Filter rows are
    refetched from global for every pass, input rows are multicast diagonally,
    one row per PE per channel, the PE register sums one filter row and the
    scratchpad takes one read-modify-write per channel. Column sums go to the
    global buffer after every pass and are re-read when a later pass continues
    them.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .arch import ArchitectureSpec, Dataflow, MemoryLevel
from .kinds import DataType
from .workload import LayerKind, LayerSpec, NetworkDescriptor, mac_count, tensor_sizes

W, I, O = DataType.WEIGHTS, DataType.INPUTS, DataType.OUTPUTS


class MappingError(ValueError):
    """Layer cannot be mapped onto the hierarchy."""

    def __init__(self, message: str, level: str | None = None, required: int | None = None):
        super().__init__(message)
        self.level = level
        self.required = required


def _unmappable(level: MemoryLevel, required: int, what: str) -> MappingError:
    return MappingError(
        f"unmappable: {what} needs {required} words in {level.name} "
        f"(capacity {level.capacity_words})",
        level=level.name,
        required=required,
    )


# ------------------------------------------------------------------------- profile


@dataclass
class AccessProfile:
    """Per (level, datatype) reads and writes for one inference of a layer or network."""

    reads: dict[tuple[str, DataType], int]
    writes: dict[tuple[str, DataType], int]
    total_macs: int
    compute_cycles: int
    pe_count: int = 1
    # Highest per-instance (reads/cycle, writes/cycle) seen at each level.
    peak_demand: dict[str, tuple[float, float]] = field(default_factory=dict)

    @classmethod
    def empty(cls, arch: ArchitectureSpec) -> "AccessProfile":
        keys = [(lv.name, dt) for lv in arch.levels for dt in DataType if lv.holds(dt)]
        return cls(
            reads=dict.fromkeys(keys, 0),
            writes=dict.fromkeys(keys, 0),
            total_macs=0,
            compute_cycles=0,
            pe_count=arch.num_pes,
            peak_demand={lv.name: (0.0, 0.0) for lv in arch.levels},
        )

    def keys(self) -> list[tuple[str, DataType]]:
        return list(self.reads)

    def level_reads(self, level: str) -> int:
        return sum(v for (lv, _), v in self.reads.items() if lv == level)

    def level_writes(self, level: str) -> int:
        return sum(v for (lv, _), v in self.writes.items() if lv == level)

    @property
    def peak_bandwidth_demand(self) -> dict[str, float]:
        """Words per cycle per instance, reads plus writes."""
        return {lv: r + w for lv, (r, w) in self.peak_demand.items()}

    @property
    def utilization(self) -> float:
        if self.compute_cycles == 0:
            return 0.0
        return self.total_macs / (self.compute_cycles * self.pe_count)

    def finalize_demand(self, arch: ArchitectureSpec) -> "AccessProfile":
        if self.compute_cycles:
            for lv in arch.levels:
                n = arch.instance_count(lv) * self.compute_cycles
                self.peak_demand[lv.name] = (self.level_reads(lv.name) / n, self.level_writes(lv.name) / n)
        return self

    def __add__(self, other: "AccessProfile") -> "AccessProfile":
        keys = list(dict.fromkeys([*self.reads, *other.reads]))
        levels = list(dict.fromkeys([*self.peak_demand, *other.peak_demand]))
        demand = {}
        for lv in levels:
            a = self.peak_demand.get(lv, (0.0, 0.0))
            b = other.peak_demand.get(lv, (0.0, 0.0))
            demand[lv] = (max(a[0], b[0]), max(a[1], b[1]))
        return AccessProfile(
            reads={k: self.reads.get(k, 0) + other.reads.get(k, 0) for k in keys},
            writes={k: self.writes.get(k, 0) + other.writes.get(k, 0) for k in keys},
            total_macs=self.total_macs + other.total_macs,
            compute_cycles=self.compute_cycles + other.compute_cycles,
            pe_count=max(self.pe_count, other.pe_count),
            peak_demand=demand,
        )

    def scaled(self, k: int) -> "AccessProfile":
        """Every access count multiplied by ``k`` (MACs and cycles unchanged)."""
        return AccessProfile(
            reads={key: v * k for key, v in self.reads.items()},
            writes={key: v * k for key, v in self.writes.items()},
            total_macs=self.total_macs,
            compute_cycles=self.compute_cycles,
            pe_count=self.pe_count,
            peak_demand=dict(self.peak_demand),
        )

    def rows(self) -> Iterator[tuple[str, str, int, int]]:
        for key in self.reads:
            yield key[0], key[1].value, self.reads[key], self.writes[key]

    def to_csv(self) -> str:
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(["level", "datatype", "reads", "writes"])
        out.writerows(self.rows())
        return buf.getvalue()


@dataclass
class NetworkProfile:
    total: AccessProfile
    layers: list[AccessProfile]


# ---------------------------------------------------------------------------- plan


@dataclass(frozen=True)
class LayerPlan:
    """Tile sizes chosen by the per-dataflow policy."""

    dataflow: Dataflow
    c_chunk: int = 1  # reduction channels resident per pass
    q_tile: int = 1  # output columns per tile
    m_tile: int = 1  # output channels side by side (WS rows / RS stacked sets)
    p_tile: int = 1  # output rows side by side (array columns)
    r_tile: int = 1  # filter rows per RS fold
    levels: dict[str, MemoryLevel] = field(default_factory=dict, compare=False, hash=False)


def _pow2_floor(n: int) -> int:
    return 1 << (n.bit_length() - 1)


def _tile_len(extent: int, bound: int) -> int:
    # Whole extent when it fits, else a power of two so smaller tiles refine larger ones.
    return extent if extent <= bound else _pow2_floor(bound)


def _hierarchy(arch: ArchitectureSpec, depth: int) -> dict[str, MemoryLevel]:
    levels = {}
    for dt, tag in ((W, "w"), (I, "i"), (O, "o")):
        chain = arch.chain(dt)
        if len(chain) != depth:
            raise MappingError(
                f"{arch.name}: {arch.dataflow.value} expects {depth} level(s) holding "
                f"{dt.value}, found {len(chain)}"
            )
        levels[f"{tag}_top"] = chain[-1]
        if depth == 2:
            levels[f"{tag}_local"] = chain[0]
    return levels


def _check_global(layer: LayerSpec, arch: ArchitectureSpec, levels: dict[str, MemoryLevel]) -> None:
    # Whole-layer tensors must fit their global homes; compared in bytes
    # because a CPU memory word packs several elements.
    ts = tensor_sizes(layer)
    need: dict[str, int] = {}
    for tag, size in (("w_top", ts.weight_bytes), ("i_top", ts.input_bytes), ("o_top", ts.output_bytes)):
        name = levels[tag].name
        need[name] = need.get(name, 0) + size
    for name, size in need.items():
        lv = arch.level(name)
        if size > lv.capacity:
            raise MappingError(
                f"unmappable: layer tensors need {size} bytes in {name} (capacity {lv.capacity})",
                level=name, required=size)


def plan_layer(layer: LayerSpec, arch: ArchitectureSpec) -> LayerPlan:
    df = arch.dataflow
    if df is Dataflow.SEQUENTIAL_CPU:
        levels = _hierarchy(arch, 1)
        _check_global(layer, arch, levels)
        return LayerPlan(df, c_chunk=layer.reduction_channels, q_tile=layer.out_w, levels=levels)

    levels = _hierarchy(arch, 2)
    _check_global(layer, arch, levels)
    R, S, st = layer.kernel_h, layer.kernel_w, layer.stride
    P, Q, Cr = layer.out_h, layer.out_w, layer.reduction_channels
    wl, il, ol = levels["w_local"], levels["i_local"], levels["o_local"]
    cap_w, cap_i, cap_o = wl.capacity_words, il.capacity_words, ol.capacity_words

    if df is Dataflow.ROW_STATIONARY:
        if cap_w < S:
            raise _unmappable(wl, S, "one filter row")
        if cap_i < S:
            raise _unmappable(il, S, "one input window")
        sets = arch.pe_rows // R if R <= arch.pe_rows else 1
        return LayerPlan(
            df,
            c_chunk=min(Cr, cap_w // S),
            q_tile=_tile_len(Q, cap_o),
            m_tile=sets,
            p_tile=arch.pe_cols,
            r_tile=min(R, arch.pe_rows),
            levels=levels,
        )

    # weight stationary
    if cap_w < R * S:
        raise _unmappable(wl, R * S, "one kernel plane")
    p_act = min(arch.pe_cols, P)
    rows_span = (p_act - 1) * st + R
    if cap_i < rows_span * S:
        raise _unmappable(il, rows_span * S, "one input window column")
    if cap_o < p_act:
        raise _unmappable(ol, p_act, "one partial-sum column")
    c_chunk = 1 if layer.kind is LayerKind.DEPTHWISE else min(Cr, cap_w // (R * S))
    return LayerPlan(
        df,
        c_chunk=c_chunk,
        q_tile=_tile_len(Q, cap_o // p_act),
        m_tile=arch.pe_rows,
        p_tile=arch.pe_cols,
        levels=levels,
    )


# ---------------------------------------------------------------------- closed forms


def covered(p0: int, p1: int, stride: int, k0: int, k1: int, pad: int, n: int) -> int:
    """Distinct coordinates ``p*stride + k - pad`` in ``[0, n)`` for p in [p0,p1), k in [k0,k1)."""
    klen = k1 - k0
    if p1 <= p0 or klen <= 0:
        return 0
    if stride <= klen:
        lo = p0 * stride + k0 - pad
        hi = (p1 - 1) * stride + k1 - 1 - pad
        return max(0, min(hi, n - 1) - max(lo, 0) + 1)
    total = 0
    for p in range(p0, p1):
        lo = p * stride + k0 - pad
        total += max(0, min(lo + klen - 1, n - 1) - max(lo, 0) + 1)
    return total


def _tiles(extent: int, size: int) -> Iterable[tuple[int, int]]:
    for start in range(0, extent, size):
        yield start, min(extent, start + size)


def _valid_pairs(P: int, R: int, stride: int, pad: int, H: int) -> int:
    """Number of (p, r) with ``0 <= p*stride + r - pad < H``."""
    total = 0
    for r in range(R):
        lo = max(0, -((r - pad) // stride)) if r < pad else 0
        hi = min(P - 1, (H - 1 + pad - r) // stride)
        total += max(0, hi - lo + 1)
    return total


def map_layer(layer: LayerSpec, arch: ArchitectureSpec) -> AccessProfile:
    plan = plan_layer(layer, arch)
    prof = AccessProfile.empty(arch)
    lv = plan.levels
    macs = mac_count(layer)
    ts = tensor_sizes(layer)
    M, Cr = layer.out_channels, layer.reduction_channels
    P, Q, R, S = layer.out_h, layer.out_w, layer.kernel_h, layer.kernel_w
    H, Wd, st, pad = layer.height, layer.width, layer.stride, layer.padding
    outs = M * P * Q
    depthwise = layer.kind is LayerKind.DEPTHWISE
    rd, wr = prof.reads, prof.writes

    def key(tag: str, dt: DataType) -> tuple[str, DataType]:
        return (lv[tag].name, dt)

    if plan.dataflow is Dataflow.SEQUENTIAL_CPU:
        rd[key("w_top", W)] += macs
        rd[key("i_top", I)] += macs
        wr[key("o_top", O)] += outs
        prof.compute_cycles = macs

    elif plan.dataflow is Dataflow.WEIGHT_STATIONARY:
        n_mt = math.ceil(M / plan.m_tile)
        n_pt = math.ceil(P / plan.p_tile)
        K = math.ceil(Cr / plan.c_chunk)
        row_sum = sum(covered(a, b, st, 0, R, pad, H) for a, b in _tiles(P, plan.p_tile))
        col_sum = sum(covered(a, b, st, 0, S, pad, Wd) for a, b in _tiles(Q, plan.q_tile))
        window = row_sum * col_sum

        rd[key("w_top", W)] += ts.weight_words
        wr[key("w_local", W)] += ts.weight_words
        rd[key("w_local", W)] += M * n_pt * Cr * Q * R * S
        rd[key("i_local", I)] += macs
        if depthwise:
            rd[key("i_top", I)] += M * window
            wr[key("i_local", I)] += M * window
        else:
            rd[key("i_top", I)] += n_mt * Cr * window
            wr[key("i_local", I)] += M * Cr * window
        rd[key("o_local", O)] += outs * (Cr + K - 1)
        wr[key("o_local", O)] += outs * (Cr + K - 1)
        wr[key("o_top", O)] += outs * K
        rd[key("o_top", O)] += outs * (K - 1)
        prof.compute_cycles = n_mt * n_pt * Cr * Q * R * S

    else:  # row stationary
        n_mg = math.ceil(M / plan.m_tile)
        n_pt = math.ceil(P / plan.p_tile)
        K = math.ceil(Cr / plan.c_chunk)
        folds = list(_tiles(R, plan.r_tile))
        F = len(folds)
        col_sum = sum(covered(a, b, st, 0, S, pad, Wd) for a, b in _tiles(Q, plan.q_tile))
        row_sum = sum(
            covered(pa, pb, st, ra, rb, pad, H)
            for ra, rb in folds
            for pa, pb in _tiles(P, plan.p_tile)
        )

        rd[key("w_top", W)] += ts.weight_words * n_pt
        wr[key("w_local", W)] += ts.weight_words * P
        rd[key("w_local", W)] += macs
        rd[key("i_local", I)] += macs
        wr[key("i_local", I)] += M * Cr * _valid_pairs(P, R, st, pad, H) * col_sum
        if depthwise:
            rd[key("i_top", I)] += M * row_sum * col_sum
        else:
            rd[key("i_top", I)] += n_mg * Cr * row_sum * col_sum
        rd[key("o_local", O)] += outs * R * Cr
        wr[key("o_local", O)] += outs * R * Cr
        wr[key("o_top", O)] += outs * K * F
        rd[key("o_top", O)] += outs * (K * F - 1)
        prof.compute_cycles = n_mg * F * n_pt * Cr * Q * S

    prof.total_macs = macs
    return prof.finalize_demand(arch)


def map_network(net: NetworkDescriptor, arch: ArchitectureSpec) -> NetworkProfile:
    """Sum of per-layer profiles plus activation hand-offs.

    Each producer-to-consumer edge costs one write and one read per activation
    word at the global level holding inputs.
    """
    per_layer = []
    for i, layer in enumerate(net.layers):
        try:
            per_layer.append(map_layer(layer, arch))
        except MappingError as exc:
            raise MappingError(f"layer {i} ({layer.name}): {exc}", exc.level, exc.required) from exc
    total = AccessProfile.empty(arch)
    for prof in per_layer:
        total = total + prof
    act = arch.top(I)
    for i, srcs in enumerate(net.sources):
        for src in srcs:
            if src >= 0:
                words = tensor_sizes(net.layers[src]).output_words
                total.writes[(act.name, O if act.holds(O) else I)] += words
                total.reads[(act.name, I)] += words
    return NetworkProfile(total=total, layers=per_layer)
