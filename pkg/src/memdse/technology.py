"""Device parameters per node, node scaling and SRAM to MRAM substitution.

Library file layout (``tech.json``)::

    nodes            known process nodes, ordered; scaling walks adjacent pairs
    scaling          [{from, to, energy, latency, area}] for adjacent nodes
    devices          {kind: {node: {read_pj_bit, write_pj_bit, read_ns, write_ns}}}
    relative_to_sram {node: {kind: {read_energy, write_energy, read_latency, write_latency}}}
    mac_pj           {node: {precision: pJ}}
    mac_area_um2     {node: {precision: um^2}}
    periphery        capacity brackets of area overhead factors
    bank_kbit        bank size used to turn read power into macro standby power

A device resolves at a node from an absolute entry at that node, else from a
relative entry (SRAM at the node times the ratios), else by scaling the nearest
entry it has. Read and write figures are scaled independently so MRAM
asymmetry survives.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, replace
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Any

from .arch import MemoryAssignment, MemoryLevel
from .kinds import DeviceKind

TECH_ENV = "MEMDSE_TECH"


class TechnologyError(ValueError):
    pass


@dataclass(frozen=True)
class MemDeviceParams:
    device: DeviceKind
    node: int
    read_energy: float  # pJ/bit
    write_energy: float  # pJ/bit
    read_latency: float  # ns
    write_latency: float  # ns
    standby_ratio: float  # standby current / read current
    wakeup_time: float  # us
    bitcell_area: float  # F^2 at this node

    def __post_init__(self):
        for name in ("read_energy", "write_energy", "read_latency", "write_latency",
                     "standby_ratio", "wakeup_time", "bitcell_area"):
            if not getattr(self, name) > 0:
                raise TechnologyError(f"{self.device.value}@{self.node}nm: {name} must be > 0")
        if self.standby_ratio > 1:
            raise TechnologyError(f"{self.device.value}@{self.node}nm: standby_ratio must be <= 1")

    def read_power_w(self, word_width: int) -> float:
        """Power of one bank reading a word every read latency."""
        return self.read_energy * word_width / self.read_latency * 1e-3

    def standby_power_w(self, capacity_bits: int, word_width: int, bank_bits: int) -> float:
        """Retention draw of a macro: every bank leaks ``standby_ratio`` of its read power."""
        return self.standby_ratio * self.read_power_w(word_width) * capacity_bits / bank_bits

    def wakeup_energy_j(self, standby_w: float) -> float:
        """Standby-power equivalent held over the wakeup time."""
        return standby_w * self.wakeup_time * 1e-6


@dataclass(frozen=True)
class ScaleFactors:
    energy: float = 1.0
    latency: float = 1.0
    area: float = 1.0

    def __mul__(self, other: "ScaleFactors") -> "ScaleFactors":
        return ScaleFactors(self.energy * other.energy, self.latency * other.latency,
                            self.area * other.area)

    def inverse(self) -> "ScaleFactors":
        return ScaleFactors(1 / self.energy, 1 / self.latency, 1 / self.area)


class TechLibrary:
    """Immutable view of one tech file."""

    def __init__(self, doc: dict[str, Any], source: str = "<dict>", digest: str = ""):
        self.doc = doc
        self.source = source
        self.digest = digest or hashlib.sha256(
            json.dumps(doc, sort_keys=True).encode()).hexdigest()
        try:
            self.nodes: tuple[int, ...] = tuple(int(n) for n in doc["nodes"])
            self.standby_ratio = float(doc.get("standby_ratio", 0.01))
            self.wakeup_time_us = float(doc.get("wakeup_time_us", 100.0))
            self.bank_bits = int(float(doc.get("bank_kbit", 256)) * 1024)
            self._steps: dict[tuple[int, int], ScaleFactors] = {}
            for entry in doc["scaling"]:
                a, b = int(entry["from"]), int(entry["to"])
                f = ScaleFactors(float(entry["energy"]), float(entry["latency"]), float(entry["area"]))
                if min(f.energy, f.latency, f.area) <= 0:
                    raise TechnologyError(f"scaling {a}->{b}: factors must be positive")
                self._steps[(a, b)] = f
                self._steps[(b, a)] = f.inverse()
            self._absolute = {
                DeviceKind.parse(kind): {int(n): v for n, v in per_node.items()}
                for kind, per_node in doc["devices"].items()
            }
            self._relative = {
                int(n): {DeviceKind.parse(k): v for k, v in per_dev.items()}
                for n, per_dev in doc.get("relative_to_sram", {}).items()
            }
            self._ratio = {DeviceKind.parse(k): float(v) for k, v in doc["bitcell_ratio"].items()}
            self._sram_cell = {int(n): float(v) for n, v in doc["sram_cell_um2"].items()}
            self._mac_pj = {int(n): {int(p): float(e) for p, e in v.items()}
                            for n, v in doc["mac_pj"].items()}
            self._mac_area = {int(n): {int(p): float(e) for p, e in v.items()}
                              for n, v in doc["mac_area_um2"].items()}
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, TechnologyError):
                raise
            raise TechnologyError(f"tech library {source}: malformed ({exc})") from exc

    # ------------------------------------------------------------------ scaling

    def check_node(self, node: int) -> None:
        if node not in self.nodes:
            raise TechnologyError(
                f"tech library {self.source}: node {node}nm not present (known: {list(self.nodes)})")

    def factors(self, src: int, dst: int) -> ScaleFactors:
        self.check_node(src)
        self.check_node(dst)
        i, j = self.nodes.index(src), self.nodes.index(dst)
        step = 1 if j >= i else -1
        total = ScaleFactors()
        for k in range(i, j, step):
            pair = (self.nodes[k], self.nodes[k + step])
            if pair not in self._steps:
                raise TechnologyError(f"tech library {self.source}: no scaling entry {pair[0]}->{pair[1]}")
            total = total * self._steps[pair]
        return total

    def scale_energy(self, e: float, src: int, dst: int) -> float:
        return e * self.factors(src, dst).energy

    def scale_latency(self, t: float, src: int, dst: int) -> float:
        return t * self.factors(src, dst).latency

    def scale_area(self, a: float, src: int, dst: int) -> float:
        return a * self.factors(src, dst).area

    def _nearest(self, table: dict[int, Any], node: int) -> int:
        if node in table:
            return node
        if not table:
            raise TechnologyError(f"tech library {self.source}: empty table")
        return min(table, key=lambda n: (abs(self.nodes.index(n) - self.nodes.index(node)), n))

    # ------------------------------------------------------------------ devices

    def bitcell_ratio(self, device: DeviceKind) -> float:
        return self._ratio[device]

    def sram_cell_um2(self, node: int) -> float:
        base = self._nearest(self._sram_cell, node)
        return self.scale_area(self._sram_cell[base], base, node)

    def device_params(self, device: DeviceKind, node: int) -> MemDeviceParams:
        self.check_node(node)
        return _cached_params(self, device, node)

    def _entry_at(self, device: DeviceKind, node: int) -> MemDeviceParams | None:
        cell_f2 = self.sram_cell_um2(node) / (node * 1e-3) ** 2 * self._ratio[device]
        common = dict(device=device, node=node, standby_ratio=self.standby_ratio,
                      wakeup_time=self.wakeup_time_us, bitcell_area=cell_f2)
        absolute = self._absolute.get(device, {}).get(node)
        if absolute is not None:
            return MemDeviceParams(
                read_energy=float(absolute["read_pj_bit"]), write_energy=float(absolute["write_pj_bit"]),
                read_latency=float(absolute["read_ns"]), write_latency=float(absolute["write_ns"]),
                **common)
        rel = self._relative.get(node, {}).get(device)
        if rel is not None:
            sram = self.device_params(DeviceKind.SRAM, node)
            return MemDeviceParams(
                read_energy=sram.read_energy * float(rel["read_energy"]),
                write_energy=sram.write_energy * float(rel["write_energy"]),
                read_latency=sram.read_latency * float(rel["read_latency"]),
                write_latency=sram.write_latency * float(rel["write_latency"]),
                **common)
        return None

    def _resolve_uncached(self, device: DeviceKind, node: int) -> MemDeviceParams:
        direct = self._entry_at(device, node)
        if direct is not None:
            return direct
        have = sorted(
            {n for n in self._absolute.get(device, {})}
            | {n for n, per in self._relative.items() if device in per})
        if not have:
            raise TechnologyError(f"tech library {self.source}: no entry for {device.value}")
        base = self._nearest(dict.fromkeys(have), node)
        p = self._entry_at(device, base)
        f = self.factors(base, node)
        cell_f2 = self.sram_cell_um2(node) / (node * 1e-3) ** 2 * self._ratio[device]
        return replace(
            p, node=node,
            read_energy=p.read_energy * f.energy, write_energy=p.write_energy * f.energy,
            read_latency=p.read_latency * f.latency, write_latency=p.write_latency * f.latency,
            bitcell_area=cell_f2)

    def resolve(self, level: MemoryLevel, asg: MemoryAssignment, node: int) -> MemDeviceParams:
        return self.device_params(asg.device(level.technology_slot), node)

    # ------------------------------------------------------------------ compute

    def mac_energy(self, node: int, precision: int) -> float:
        self.check_node(node)
        base = self._nearest(self._mac_pj, node)
        table = self._mac_pj[base]
        if precision not in table:
            raise TechnologyError(f"tech library {self.source}: no MAC energy for {precision}-bit")
        return self.scale_energy(table[precision], base, node)

    def mac_area_um2(self, node: int, precision: int) -> float:
        self.check_node(node)
        base = self._nearest(self._mac_area, node)
        table = self._mac_area[base]
        if precision not in table:
            raise TechnologyError(f"tech library {self.source}: no MAC area for {precision}-bit")
        return self.scale_area(table[precision], base, node)


@lru_cache(maxsize=None)
def _cached_params(lib: TechLibrary, device: DeviceKind, node: int) -> MemDeviceParams:
    return lib._resolve_uncached(device, node)


def load_tech(path: str | Path) -> TechLibrary:
    path = Path(path)
    try:
        raw = path.read_bytes()
        doc = json.loads(raw)
    except (OSError, json.JSONDecodeError) as exc:
        raise TechnologyError(f"tech library {path}: {exc}") from exc
    return TechLibrary(doc, source=str(path), digest=hashlib.sha256(raw).hexdigest())


def _bundled_bytes() -> bytes:
    return resources.files("memdse.data").joinpath("tech.json").read_bytes()


@lru_cache(maxsize=None)
def _default(env_path: str | None) -> TechLibrary:
    if env_path:
        return load_tech(env_path)
    raw = _bundled_bytes()
    return TechLibrary(json.loads(raw), source="bundled tech.json",
                       digest=hashlib.sha256(raw).hexdigest())


def default_tech() -> TechLibrary:
    """Bundled library, or the file named by ``MEMDSE_TECH``."""
    return _default(os.environ.get(TECH_ENV) or None)
