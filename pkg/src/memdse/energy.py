"""Per-inference energy from access counts and device bindings."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

from .arch import ArchitectureSpec, Dataflow, MemoryAssignment, Variant, validate_assignment
from .kinds import MRAM_DEVICES, DataType, DeviceKind
from .mapper import AccessProfile, map_network
from .technology import TechLibrary, default_tech
from .workload import NetworkDescriptor


@dataclass
class EnergyBreakdown:
    """All values in pJ."""

    compute: float
    read: dict[tuple[str, DataType], float] = field(default_factory=dict)
    write: dict[tuple[str, DataType], float] = field(default_factory=dict)
    label: str = ""

    @property
    def mem_read(self) -> float:
        return sum(self.read.values())

    @property
    def mem_write(self) -> float:
        return sum(self.write.values())

    @property
    def mem_total(self) -> float:
        return self.mem_read + self.mem_write

    @property
    def grand_total(self) -> float:
        return self.compute + self.mem_total

    def level_energy(self, level: str) -> float:
        return sum(v for (lv, _), v in self.read.items() if lv == level) + sum(
            v for (lv, _), v in self.write.items() if lv == level)

    def memory_by(self, levels: set[str] | frozenset[str]) -> float:
        return sum(self.level_energy(lv) for lv in levels)

    def rows(self):
        for key in self.read:
            yield (self.label, key[0], key[1].value, self.read[key], self.write[key], 0.0)
        yield (self.label, "", "", 0.0, 0.0, self.compute)


def _word_bits(arch: ArchitectureSpec, width: int) -> int:
    # The CPU moves whole memory words regardless of operand size.
    if arch.dataflow is Dataflow.SEQUENTIAL_CPU and arch.cpu_mem_word:
        return arch.cpu_mem_word
    return width


def inference_energy(
    profile: AccessProfile,
    arch: ArchitectureSpec,
    asg: MemoryAssignment,
    node: int,
    tech: TechLibrary | None = None,
) -> EnergyBreakdown:
    tech = tech or default_tech()
    validate_assignment(arch, asg)
    out = EnergyBreakdown(compute=profile.total_macs * tech.mac_energy(node, arch.mac_precision),
                          label=asg.label)
    for key in profile.reads:
        level = arch.level(key[0])
        dev = tech.resolve(level, asg, node)
        bits = _word_bits(arch, level.word_width)
        out.read[key] = profile.reads[key] * bits * dev.read_energy
        out.write[key] = profile.writes[key] * bits * dev.write_energy
    return out


def edp(e: EnergyBreakdown, latency_s: float) -> float:
    """Energy-delay product in J*s."""
    if not latency_s > 0:
        raise ValueError("latency must be positive")
    return e.grand_total * 1e-12 * latency_s


def variant_grid(devices=MRAM_DEVICES) -> list[tuple[Variant, DeviceKind | None]]:
    grid: list[tuple[Variant, DeviceKind | None]] = [(Variant.SRAM_ONLY, None)]
    for variant in (Variant.P0, Variant.P1):
        grid.extend((variant, d) for d in devices)
    return grid


def compare_variants(
    net: NetworkDescriptor,
    arch: ArchitectureSpec,
    node: int,
    devices=MRAM_DEVICES,
    tech: TechLibrary | None = None,
    profile: AccessProfile | None = None,
) -> dict[str, EnergyBreakdown]:
    """Energy of every variant from one shared access profile."""
    if profile is None:
        profile = map_network(net, arch).total
    out = {}
    for variant, device in variant_grid(devices):
        asg = MemoryAssignment.make(arch, variant, device)
        out[asg.label] = inference_energy(profile, arch, asg, node, tech)
    return out


def breakdown_csv(breakdowns: list[EnergyBreakdown]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["variant", "level", "datatype", "read_pj", "write_pj", "compute_pj"])
    for b in breakdowns:
        for row in b.rows():
            w.writerow([row[0], row[1], row[2], *(f"{v:.6g}" for v in row[3:])])
    return buf.getvalue()
