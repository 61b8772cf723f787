"""Scenario runner: one (workload, architecture, assignment, node) point end to end.

Everything the CLI writes goes through :class:`Table`, which renders CSV or
Markdown behind a single header line carrying the schema version and the
digests of every input file, so outputs can be traced to the data that made
them. Reports contain no timestamps; identical inputs give identical bytes.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Sequence

from . import __version__
from .arch import (
    ArchitectureError,
    ArchitectureSpec,
    AssignmentError,
    MemoryAssignment,
    Variant,
    resolve_architecture,
)
from .area import AreaEstimate, total_area
from .dutycycle import (
    Crossover,
    DutyCycleError,
    build_scenario,
    crossover_ips,
    log_grid,
    savings_at,
)
from .energy import EnergyBreakdown, edp, inference_energy
from .kinds import DeviceKind
from .mapper import MappingError, NetworkProfile, map_network
from .technology import TechLibrary, TechnologyError, default_tech
from .timing import LatencyEstimate, inference_latency
from .workload import BUNDLED_NETWORKS, NetworkDescriptor, WorkloadError, resolve_network

SCHEMA_VERSION = 1

MRAM = (DeviceKind.STT, DeviceKind.SOT, DeviceKind.VGSOT)

# Inference-rate floors of the two bundled applications.
APP_IPS_MIN = {"detnet": 10.0, "edsnet": 0.1}


class ScenarioError(RuntimeError):
    """Module-qualified failure of one scenario point."""


_MODULE_OF = (
    (WorkloadError, "workload"),
    (MappingError, "mapper"),
    (AssignmentError, "arch"),
    (ArchitectureError, "arch"),
    (TechnologyError, "technology"),
    (DutyCycleError, "duty-cycle"),
)


def _qualify(exc: Exception) -> ScenarioError:
    for cls, module in _MODULE_OF:
        if isinstance(exc, cls):
            return ScenarioError(f"{module}: {exc}")
    return ScenarioError(f"{type(exc).__name__}: {exc}")


# ----------------------------------------------------------------------------- inputs


def _sha(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def workload_digest(ref: str | Path) -> str:
    if str(ref) in BUNDLED_NETWORKS:
        raw = resources.files("memdse.data.networks").joinpath(f"{ref}.json").read_bytes()
    else:
        raw = Path(ref).read_bytes()
    return _sha(raw)


def arch_digest(arch: ArchitectureSpec) -> str:
    return _sha(json.dumps(arch.to_dict(), sort_keys=True).encode())


@dataclass(frozen=True)
class Inputs:
    """Resolved inputs of a run plus their digests."""

    network: NetworkDescriptor
    arch: ArchitectureSpec
    tech: TechLibrary
    digests: tuple[tuple[str, str], ...]

    @classmethod
    def load(cls, workload: str | Path, arch: str | Path | ArchitectureSpec,
             tech: TechLibrary | None = None) -> "Inputs":
        try:
            tech = tech or default_tech()
            net = resolve_network(workload)
            spec = arch if isinstance(arch, ArchitectureSpec) else resolve_architecture(arch)
            digests = (
                ("workload", workload_digest(workload)),
                ("arch", arch_digest(spec)),
                ("tech", tech.digest),
            )
        except (OSError, json.JSONDecodeError) as exc:
            raise ScenarioError(f"input: {exc}") from exc
        except ValueError as exc:
            raise _qualify(exc) from exc
        return cls(net, spec, tech, digests)


def header_line(digests: Iterable[tuple[str, str]], kind: str) -> str:
    parts = [f"memdse {__version__}", f"schema={SCHEMA_VERSION}", f"table={kind}"]
    parts += [f"{name}={digest[:16]}" for name, digest in sorted(set(digests))]
    return " ".join(parts)


# ----------------------------------------------------------------------------- tables


def _fmt(v: Any) -> str:
    if isinstance(v, float):
        if math.isnan(v):
            return ""
        return f"{v:.6g}"
    if v is None:
        return ""
    return str(v)


@dataclass
class Table:
    kind: str
    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)
    digests: tuple[tuple[str, str], ...] = ()

    def render(self, fmt: str = "csv") -> str:
        head = header_line(self.digests, self.kind)
        cells = [[_fmt(v) for v in r] for r in self.rows]
        if fmt == "csv":
            import csv
            import io

            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(self.columns)
            w.writerows(cells)
            return f"# {head}\n" + buf.getvalue()
        if fmt == "md":
            lines = [f"<!-- {head} -->", "",
                     "| " + " | ".join(self.columns) + " |",
                     "|" + "|".join("---" for _ in self.columns) + "|"]
            lines += ["| " + " | ".join(c) + " |" for c in cells]
            return "\n".join(lines) + "\n"
        raise ValueError(f"unknown format {fmt!r}")


def read_header(text: str) -> dict[str, str]:
    """Key=value pairs of an emitted file's header line."""
    first = text.splitlines()[0].strip("#<!-> ")
    return dict(p.split("=", 1) for p in first.split() if "=" in p)


# ----------------------------------------------------------------------------- scenario


@dataclass(frozen=True)
class Scenario:
    workload: str
    arch: str
    variant: Variant = Variant.SRAM_ONLY
    device: DeviceKind | None = None
    node: int = 7
    ips_min: float = 1.0

    def assignment(self, arch: ArchitectureSpec) -> MemoryAssignment:
        return MemoryAssignment.make(arch, self.variant, self.device)


@dataclass
class PowerSummary:
    ips_min: float
    ips_max: float
    sram_w: float
    variant_w: float
    savings: float | None  # None for the SRAM-only baseline itself
    crossover: Crossover | None


@dataclass
class ScenarioReport:
    scenario: Scenario
    label: str
    energy: EnergyBreakdown
    latency: LatencyEstimate
    edp: float  # J*s
    area: AreaEstimate
    power: PowerSummary
    digests: tuple[tuple[str, str], ...]
    arch_name: str = ""

    def summary_row(self) -> tuple:
        sc, p = self.scenario, self.power
        cross = p.crossover
        return (
            sc.workload, self.arch_name, self.label, sc.node,
            self.energy.grand_total * 1e-12, self.energy.compute * 1e-12,
            self.energy.mem_read * 1e-12, self.energy.mem_write * 1e-12,
            self.latency.latency, self.latency.memory_limited_frequency, self.edp, self.area.total, self.area.savings,
            p.ips_min, p.variant_w, p.sram_w, p.savings,
            "" if cross is None else cross.kind.value,
            None if cross is None else cross.ips,
        )

    def tables(self) -> list[Table]:
        d = self.digests
        summary = Table("report", SUMMARY_COLUMNS, [self.summary_row()], d)
        energy = Table("energy", ENERGY_COLUMNS, energy_rows(self.energy), d)
        area = Table("area", AREA_COLUMNS, area_rows([self.area]), d)
        lat = Table("latency", LATENCY_COLUMNS, latency_rows(self.label, self.latency), d)
        return [summary, energy, lat, area]


SUMMARY_COLUMNS = (
    "workload", "arch", "variant", "node_nm", "energy_j", "compute_j", "mem_read_j",
    "mem_write_j", "latency_s", "eff_freq_hz", "edp_js", "area_mm2", "area_savings", "ips_min",
    "mem_power_w", "sram_mem_power_w", "mem_power_savings", "crossover_kind", "crossover_ips",
)
ENERGY_COLUMNS = ("variant", "level", "datatype", "read_j", "write_j")
AREA_COLUMNS = ("arch", "variant", "level", "area_mm2")
LATENCY_COLUMNS = ("variant", "level", "frequency_limit_hz", "limiting")


def energy_rows(e: EnergyBreakdown) -> list[tuple]:
    rows = [(e.label, lv, dt.value, e.read[(lv, dt)] * 1e-12, e.write[(lv, dt)] * 1e-12)
            for (lv, dt) in e.read]
    rows.append((e.label, "compute", "", e.compute * 1e-12, 0.0))
    rows.append((e.label, "total", "", e.mem_read * 1e-12 + e.compute * 1e-12, e.mem_write * 1e-12))
    return rows


def area_rows(estimates: Sequence[AreaEstimate], memory_only: bool = False) -> list[tuple]:
    rows = []
    for a in estimates:
        rows += [(a.arch, a.label, lv, v) for lv, v in a.level.items()]
        if not memory_only:
            rows.append((a.arch, a.label, "compute", a.compute))
        rows.append((a.arch, a.label, "memory", a.memory))
        if not memory_only:
            rows.append((a.arch, a.label, "total", a.total))
    return rows


def latency_rows(label: str, lat: LatencyEstimate) -> list[tuple]:
    rows = [(label, "base", lat.base_frequency, int(lat.limiting_level == ""))]
    rows += [(label, lv, f, int(lv == lat.limiting_level)) for lv, f in lat.level_frequency.items()]
    rows.append((label, "effective", lat.memory_limited_frequency, 1))
    return rows


def _evaluate(sc: Scenario, inputs: Inputs, profile: NetworkProfile) -> ScenarioReport:
    arch, tech = inputs.arch, inputs.tech
    tech.check_node(sc.node)
    asg = sc.assignment(arch)
    energy = inference_energy(profile.total, arch, asg, sc.node, tech)
    lat = inference_latency(profile, arch, asg, sc.node, tech)
    area = total_area(arch, asg, sc.node, tech)
    others = [] if sc.variant is Variant.SRAM_ONLY else [asg]
    duty = build_scenario(profile, arch, others, sc.node, sc.ips_min, tech)
    vp = duty.get(asg.label)
    ips = min(sc.ips_min, vp.ips_max, duty.baseline.ips_max)
    if others:
        power = PowerSummary(ips, vp.ips_max, duty.baseline.power(ips), vp.power(ips),
                             savings_at(duty, asg.label, ips), crossover_ips(duty, asg.label))
    else:
        p = vp.power(ips)
        power = PowerSummary(ips, vp.ips_max, p, p, None, None)
    return ScenarioReport(sc, asg.label, energy, lat, edp(energy, lat.latency), area, power,
                          inputs.digests, arch.name)


def run_scenario(sc: Scenario, tech: TechLibrary | None = None,
                 inputs: Inputs | None = None, profile: NetworkProfile | None = None) -> ScenarioReport:
    """Evaluate one point; failures surface as module-qualified ScenarioError."""
    try:
        inputs = inputs or Inputs.load(sc.workload, sc.arch, tech)
        profile = profile or map_network(inputs.network, inputs.arch)
        return _evaluate(sc, inputs, profile)
    except ScenarioError:
        raise
    except ValueError as exc:
        raise _qualify(exc) from exc


# ----------------------------------------------------------------------------- sweeps


@dataclass
class SweepPoint:
    scenario: Scenario
    report: ScenarioReport | None = None
    error: str | None = None


@dataclass
class SweepResult:
    points: list[SweepPoint]

    @property
    def errors(self) -> list[SweepPoint]:
        return [p for p in self.points if p.error is not None]

    @property
    def reports(self) -> list[ScenarioReport]:
        return [p.report for p in self.points if p.report is not None]

    def summary(self) -> Table:
        rows = [p.report.summary_row() for p in self.points if p.report is not None]
        digests = tuple(d for r in self.reports for d in r.digests)
        return Table("sweep", SUMMARY_COLUMNS, rows, digests)


def sweep_grid(base: Scenario, variants: Sequence[Variant], devices: Sequence[DeviceKind],
               nodes: Sequence[int], ips: Sequence[float] | None = None) -> list[Scenario]:
    """Grid order: node, then ips, then variant, then device. SRAM-only ignores devices."""
    grid = []
    for node in nodes:
        for rate in (ips or [base.ips_min]):
            for variant in variants:
                devs = [None] if variant is Variant.SRAM_ONLY else list(devices)
                for dev in devs:
                    grid.append(Scenario(base.workload, base.arch, variant, dev, node, rate))
    return grid


def run_sweep(base: Scenario, variants: Sequence[Variant], devices: Sequence[DeviceKind],
              nodes: Sequence[int], ips: Sequence[float] | None = None,
              tech: TechLibrary | None = None, workers: int = 4) -> SweepResult:
    """Evaluate the grid concurrently; results keep grid order, errors stay per point."""
    grid = sweep_grid(base, variants, devices, nodes, ips)
    if not grid:
        raise ScenarioError("sweep: empty grid")
    try:
        inputs = Inputs.load(base.workload, base.arch, tech)
        profile = map_network(inputs.network, inputs.arch)
    except ScenarioError as exc:
        return SweepResult([SweepPoint(sc, error=str(exc)) for sc in grid])
    except ValueError as exc:
        msg = str(_qualify(exc))
        return SweepResult([SweepPoint(sc, error=msg) for sc in grid])

    def one(sc: Scenario) -> SweepPoint:
        try:
            return SweepPoint(sc, run_scenario(sc, inputs=inputs, profile=profile))
        except ScenarioError as exc:
            return SweepPoint(sc, error=str(exc))

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        return SweepResult(list(pool.map(one, grid)))


# ----------- summary layouts

TABLE_ARCHS = ("simba-like-v2", "eyeriss-like-v2")
IPS_TABLE_COLUMNS = ("workload", "arch", "ips_min", "latency_p0_ms", "latency_p1_ms",
                     "savings_p0", "savings_p1")
AREA_TABLE_COLUMNS = ("arch", "sram_only_mm2", "p0_mm2", "p1_mm2", "savings_p0", "savings_p1")
CROSSOVER_COLUMNS = ("workload", "arch", "variant", "kind", "crossover_ips", "capped", "ips_max")
CURVE_COLUMNS = ("variant", "device", "ips", "total_w", "weight_w", "io_w")


def ips_table(tech: TechLibrary | None = None, device: DeviceKind = DeviceKind.VGSOT,
              node: int = 7, workloads: Sequence[str] = ("detnet", "edsnet"),
              archs: Sequence[str] = TABLE_ARCHS) -> Table:
    """P0/P1 latency and memory-power savings at each workload's application rate."""
    tech = tech or default_tech()
    rows, digests = [], []
    for wl in workloads:
        for name in archs:
            inp = Inputs.load(wl, name, tech)
            prof = map_network(inp.network, inp.arch)
            p0 = MemoryAssignment.p0(inp.arch, device)
            p1 = MemoryAssignment.p1(inp.arch, device)
            ips = APP_IPS_MIN.get(wl, 1.0)
            duty = build_scenario(prof, inp.arch, [p0, p1], node, ips, tech)
            rows.append((
                wl, name, ips,
                inference_latency(prof, inp.arch, p0, node, tech).latency_ms,
                inference_latency(prof, inp.arch, p1, node, tech).latency_ms,
                savings_at(duty, p0.label), savings_at(duty, p1.label),
            ))
            digests += inp.digests
    return Table("ips-table", IPS_TABLE_COLUMNS, rows, tuple(digests))


def area_table(tech: TechLibrary | None = None, device: DeviceKind = DeviceKind.VGSOT,
               node: int = 7, archs: Sequence[str] = TABLE_ARCHS) -> Table:
    """Total area of SRAM-only, P0 and P1 and the savings of the latter two."""
    tech = tech or default_tech()
    rows, digests = [], [("tech", tech.digest)]
    for name in archs:
        arch = resolve_architecture(name)
        s = total_area(arch, MemoryAssignment.sram_only(arch), node, tech)
        a0 = total_area(arch, MemoryAssignment.p0(arch, device), node, tech)
        a1 = total_area(arch, MemoryAssignment.p1(arch, device), node, tech)
        rows.append((arch.name, s.total, a0.total, a1.total, a0.savings, a1.savings))
        digests.append(("arch", arch_digest(arch)))
    return Table("area-table", AREA_TABLE_COLUMNS, rows, tuple(digests))


def power_curves(workload: str, arch: str, variant: Variant, tech: TechLibrary | None = None,
                 node: int = 7, grid: Sequence[float] | None = None,
                 devices: Sequence[DeviceKind] = MRAM) -> tuple[Table, list[tuple]]:
    """SRAM curve plus one NVM curve per device, and their crossover rows."""
    tech = tech or default_tech()
    grid = list(grid or log_grid(1e-2, 1e3))
    inp = Inputs.load(workload, arch, tech)
    prof = map_network(inp.network, inp.arch)
    asgs = [MemoryAssignment.make(inp.arch, variant, d) for d in devices]
    duty = build_scenario(prof, inp.arch, asgs, node, grid[0], tech)
    rows, cross = [], []
    curves = [(duty.baseline, "SRAM")] + [(duty.get(a.label), a.nvm_device.value)
                                          for a in asgs]
    for vp, dev in curves:
        for ips in grid:
            if ips > vp.ips_max:
                break
            s = vp.sample(ips)
            rows.append((vp.label, dev, ips, s.total_w, s.weight_w, s.io_w))
    for a in asgs:
        c = crossover_ips(duty, a.label)
        cross.append((workload, arch, a.label, c.kind.value, c.ips, int(c.capped),
                      duty.get(a.label).ips_max))
    return Table("curve", CURVE_COLUMNS, rows, inp.digests), cross


def power_sweep(tech: TechLibrary | None = None, node: int = 7,
                grid: Sequence[float] | None = None,
                workloads: Sequence[str] = ("detnet", "edsnet"),
                archs: Sequence[str] = TABLE_ARCHS) -> tuple[dict[str, Table], Table]:
    """Eight curve files (arch x workload x P0/P1) plus a crossover summary."""
    files: dict[str, Table] = {}
    cross_rows, digests = [], []
    for name in archs:
        for variant in (Variant.P1, Variant.P0):
            for wl in workloads:
                t, cross = power_curves(wl, name, variant, tech, node, grid)
                files[f"power_{name}_{wl}_{variant.name.lower()}"] = t
                cross_rows += cross
                digests += t.digests
    return files, Table("crossover", CROSSOVER_COLUMNS, cross_rows, tuple(digests))
