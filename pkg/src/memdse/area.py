"""Silicon area of memories and compute.

A macro of ``bits`` cells costs its bitcell array plus periphery. The array is
``bits * sram_cell * bitcell_ratio(device)``. Periphery (decoders, sense amps,
routing at subarray, MAT and bank level) is sized from the SRAM array of the
same capacity, ``sram_array * (f_subarray * f_mat * f_bank - 1)``, and does not
change with the device. The factors come from three capacity brackets and are
interpolated in log2(capacity) between bracket anchors, so area grows smoothly
with capacity.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

from .arch import ArchitectureSpec, MemoryAssignment, validate_assignment
from .kinds import DeviceKind
from .technology import TechLibrary, default_tech


@dataclass(frozen=True)
class PeripheryBracket:
    max_bytes: float  # upper edge of the bracket (inf for the last)
    anchor_bytes: int  # capacity the factors were derived at
    subarray: float
    mat: float
    bank: float

    @property
    def factor(self) -> float:
        return self.subarray * self.mat * self.bank


def periphery_brackets(tech: TechLibrary) -> list[PeripheryBracket]:
    out = []
    for b in tech.doc["periphery"]:
        top = b["max_bytes"]
        out.append(PeripheryBracket(
            max_bytes=math.inf if top is None else float(top),
            anchor_bytes=int(b["anchor_bytes"]),
            subarray=float(b["subarray"]), mat=float(b["mat"]), bank=float(b["bank"]),
        ))
    return out


def periphery_factor(capacity: int, tech: TechLibrary | None = None) -> float:
    """Cascaded periphery factor for a macro of ``capacity`` bytes."""
    brackets = periphery_brackets(tech or default_tech())
    x = math.log2(capacity)
    pts = [(math.log2(b.anchor_bytes), b.factor) for b in brackets]
    if x <= pts[0][0]:
        return pts[0][1]
    for (x0, f0), (x1, f1) in zip(pts, pts[1:]):
        if x <= x1:
            return f0 + (f1 - f0) * (x - x0) / (x1 - x0)
    return pts[-1][1]


def macro_area(capacity: int, device: DeviceKind, node: int,
               tech: TechLibrary | None = None) -> tuple[float, float]:
    """(array, periphery) area in mm^2 of one macro."""
    if capacity <= 0:
        raise ValueError("capacity must be positive")
    tech = tech or default_tech()
    tech.check_node(node)
    sram_array = capacity * 8 * tech.sram_cell_um2(node) * 1e-6
    return sram_array * tech.bitcell_ratio(device), sram_array * (periphery_factor(capacity, tech) - 1)


def memory_area(capacity: int, device: DeviceKind, node: int,
                tech: TechLibrary | None = None) -> float:
    array, periphery = macro_area(capacity, device, node, tech)
    return array + periphery


@dataclass
class AreaEstimate:
    """Areas in mm^2; per-level entries cover all instances."""

    arch: str
    label: str
    level_array: dict[str, float] = field(default_factory=dict)
    level_periphery: dict[str, float] = field(default_factory=dict)
    compute: float = 0.0
    baseline_total: float | None = None

    @property
    def level(self) -> dict[str, float]:
        return {k: self.level_array[k] + self.level_periphery[k] for k in self.level_array}

    @property
    def memory(self) -> float:
        return math.fsum(self.level.values())

    @property
    def total(self) -> float:
        return self.memory + self.compute

    @property
    def savings(self) -> float:
        base = self.total if self.baseline_total is None else self.baseline_total
        return 1.0 - self.total / base


def _area(arch: ArchitectureSpec, asg: MemoryAssignment, node: int,
          tech: TechLibrary) -> AreaEstimate:
    est = AreaEstimate(arch.name, asg.label)
    for level in arch.levels:
        n = arch.instance_count(level)
        array, periphery = macro_area(level.capacity, asg.device(level.technology_slot), node, tech)
        est.level_array[level.name] = n * array
        est.level_periphery[level.name] = n * periphery
    est.compute = arch.num_pes * tech.mac_area_um2(node, arch.mac_precision) * 1e-6
    return est


def total_area(arch: ArchitectureSpec, asg: MemoryAssignment, node: int,
               tech: TechLibrary | None = None) -> AreaEstimate:
    tech = tech or default_tech()
    validate_assignment(arch, asg)
    est = _area(arch, asg, node, tech)
    est.baseline_total = _area(arch, MemoryAssignment.sram_only(arch), node, tech).total
    return est


def area_csv(estimates: list[AreaEstimate], memory_only: bool = False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["arch", "variant", "level", "area_mm2"])
    for e in estimates:
        for name, a in e.level.items():
            w.writerow([e.arch, e.label, name, f"{a:.6g}"])
        if not memory_only:
            w.writerow([e.arch, e.label, "compute", f"{e.compute:.6g}"])
        w.writerow([e.arch, e.label, "memory", f"{e.memory:.6g}"])
        if not memory_only:
            w.writerow([e.arch, e.label, "total", f"{e.total:.6g}"])
    return buf.getvalue()
