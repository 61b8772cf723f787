"""Accelerator organisations: PE array, dataflow and on-chip memory hierarchy."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from dataclasses import replace as dc_replace
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from .kinds import DataType, DeviceKind


class ArchitectureError(ValueError):
    pass


class AssignmentError(ValueError):
    pass


class Sharing(str, Enum):
    PER_PE = "PerPE"
    PER_ROW = "PerRow"
    GLOBAL = "Global"


class Dataflow(str, Enum):
    ROW_STATIONARY = "RowStationary"
    WEIGHT_STATIONARY = "WeightStationary"
    SEQUENTIAL_CPU = "SequentialCPU"


class Variant(str, Enum):
    SRAM_ONLY = "SramOnly"
    P0 = "P0"
    P1 = "P1"

    @classmethod
    def parse(cls, text: str) -> "Variant":
        key = text.strip().lower()
        for v in cls:
            if key in (v.value.lower(), v.name.lower()) or (key == "sram" and v is cls.SRAM_ONLY):
                return v
        raise ValueError(f"unknown variant {text!r}; choose from sram, p0, p1")


@dataclass(frozen=True)
class MemoryLevel:
    name: str
    held_data: frozenset[DataType]
    capacity: int  # bytes, per instance
    word_width: int  # bits
    sharing: Sharing
    max_bandwidth: int = 1  # words per access, per instance
    technology_slot: str = ""

    def __post_init__(self):
        object.__setattr__(self, "held_data", frozenset(DataType(d) for d in self.held_data))
        if not self.technology_slot:
            object.__setattr__(self, "technology_slot", self.name)
        if not self.held_data:
            raise ArchitectureError(f"level {self.name}: holds no data")
        if self.word_width < 1 or self.capacity * 8 < self.word_width:
            raise ArchitectureError(f"level {self.name}: capacity smaller than one word")
        if self.max_bandwidth < 1:
            raise ArchitectureError(f"level {self.name}: max_bandwidth must be >= 1")

    def holds(self, dt: DataType) -> bool:
        return dt in self.held_data

    @property
    def capacity_words(self) -> int:
        return self.capacity * 8 // self.word_width

    @property
    def capacity_bits(self) -> int:
        return self.capacity * 8


@dataclass(frozen=True)
class ArchitectureSpec:
    name: str
    pe_rows: int
    pe_cols: int
    dataflow: Dataflow
    mac_precision: int
    levels: tuple[MemoryLevel, ...]  # innermost first
    base_node: int  # nm
    base_frequency: float  # Hz
    cpu_mem_word: int | None = None  # bits, SequentialCPU only
    description: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "dataflow", Dataflow(self.dataflow))
        object.__setattr__(self, "levels", tuple(self.levels))
        if not self.levels:
            raise ArchitectureError(f"{self.name}: no memory levels")
        if self.pe_rows < 1 or self.pe_cols < 1:
            raise ArchitectureError(f"{self.name}: PE array must be at least 1x1")
        if self.dataflow is Dataflow.SEQUENTIAL_CPU and (self.pe_rows, self.pe_cols) != (1, 1):
            raise ArchitectureError(f"{self.name}: SequentialCPU requires a 1x1 PE array")
        names = [lv.name for lv in self.levels]
        if len(set(names)) != len(names):
            raise ArchitectureError(f"{self.name}: duplicate level names")
        if any("dram" in n.lower() for n in names):
            raise ArchitectureError(f"{self.name}: off-chip DRAM levels are not modelled")
        for dt in DataType:
            chain = self.chain(dt)
            if not chain:
                raise ArchitectureError(f"{self.name}: no level holds {dt.value}")
            if chain[-1].sharing is not Sharing.GLOBAL:
                raise ArchitectureError(
                    f"{self.name}: outermost {dt.value} level {chain[-1].name} must be Global"
                )

    def chain(self, dt: DataType) -> list[MemoryLevel]:
        """Levels holding ``dt``, innermost first."""
        return [lv for lv in self.levels if lv.holds(dt)]

    def top(self, dt: DataType) -> MemoryLevel:
        return self.chain(dt)[-1]

    def level(self, name: str) -> MemoryLevel:
        for lv in self.levels:
            if lv.name == name:
                return lv
        raise KeyError(name)

    def instance_count(self, level: MemoryLevel) -> int:
        if level.sharing is Sharing.PER_PE:
            return self.pe_rows * self.pe_cols
        if level.sharing is Sharing.PER_ROW:
            return self.pe_rows
        return 1

    @property
    def num_pes(self) -> int:
        return self.pe_rows * self.pe_cols

    @property
    def slots(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for lv in self.levels:
            seen.setdefault(lv.technology_slot, None)
        return tuple(seen)

    @property
    def weight_slots(self) -> frozenset[str]:
        return frozenset(lv.technology_slot for lv in self.levels if lv.holds(DataType.WEIGHTS))

    def with_levels(self, **capacities: int) -> "ArchitectureSpec":
        """Copy with some level capacities (bytes) replaced."""
        levels = tuple(
            MemoryLevel(
                lv.name, lv.held_data, capacities.get(lv.name, lv.capacity), lv.word_width,
                lv.sharing, lv.max_bandwidth, lv.technology_slot,
            )
            for lv in self.levels
        )
        return replace_arch(self, levels=levels)

    # ----------------------------------------------------------------- (de)serialisation

    def to_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "name": self.name,
            "pe_rows": self.pe_rows,
            "pe_cols": self.pe_cols,
            "dataflow": self.dataflow.value,
            "mac_precision": self.mac_precision,
            "base_node": self.base_node,
            "base_frequency": self.base_frequency,
            "levels": [
                {
                    "name": lv.name,
                    "held_data": sorted(d.value for d in lv.held_data),
                    "capacity": lv.capacity,
                    "word_width": lv.word_width,
                    "sharing": lv.sharing.value,
                    "max_bandwidth": lv.max_bandwidth,
                    "technology_slot": lv.technology_slot,
                }
                for lv in self.levels
            ],
        }
        if self.cpu_mem_word is not None:
            doc["cpu_mem_word"] = self.cpu_mem_word
        if self.description:
            doc["description"] = self.description
        return doc

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "ArchitectureSpec":
        try:
            levels = tuple(
                MemoryLevel(
                    name=lv["name"],
                    held_data=frozenset(DataType(d) for d in lv["held_data"]),
                    capacity=int(lv["capacity"]),
                    word_width=int(lv["word_width"]),
                    sharing=Sharing(lv["sharing"]),
                    max_bandwidth=int(lv.get("max_bandwidth", 1)),
                    technology_slot=lv.get("technology_slot", ""),
                )
                for lv in doc["levels"]
            )
            return cls(
                name=doc["name"],
                pe_rows=int(doc["pe_rows"]),
                pe_cols=int(doc["pe_cols"]),
                dataflow=Dataflow(doc["dataflow"]),
                mac_precision=int(doc["mac_precision"]),
                levels=levels,
                base_node=int(doc["base_node"]),
                base_frequency=float(doc["base_frequency"]),
                cpu_mem_word=doc.get("cpu_mem_word"),
                description=doc.get("description", ""),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ArchitectureError):
                raise
            raise ArchitectureError(f"bad architecture document: {exc}") from exc


def replace_arch(arch: ArchitectureSpec, **changes: Any) -> ArchitectureSpec:
    doc = {f: getattr(arch, f) for f in arch.__dataclass_fields__}
    doc.update(changes)
    return ArchitectureSpec(**doc)


def load_architecture(path: str | Path) -> ArchitectureSpec:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ArchitectureError(f"{path}: parse error: {exc}") from exc
    return ArchitectureSpec.from_dict(doc)


def _builtin_doc() -> dict[str, Any]:
    text = resources.files("memdse.data").joinpath("architectures.json").read_text()
    return json.loads(text)


def builtin_architectures() -> list[ArchitectureSpec]:
    """cpu, eyeriss-like, simba-like and their 64x64 "-v2" variants."""
    doc = _builtin_doc()
    raw = doc["architectures"]
    archs = [ArchitectureSpec.from_dict(a) for a in raw]
    v2 = doc.get("v2_array", {})
    for a, a_doc in zip(list(archs), raw):
        if a.dataflow is not Dataflow.SEQUENTIAL_CPU and v2:
            # the larger array gets wider ports where the file says so
            bw = a_doc.get("v2_bandwidth", {})
            levels = tuple(dc_replace(lv, max_bandwidth=int(bw.get(lv.name, lv.max_bandwidth)))
                           for lv in a.levels)
            archs.append(replace_arch(a, name=f"{a.name}-v2", pe_rows=int(v2["pe_rows"]),
                                      pe_cols=int(v2["pe_cols"]), levels=levels))
    return archs


# short names accepted for the builtins
ALIASES = {"simba": "simba-like", "eyeriss": "eyeriss-like",
           "simba-v2": "simba-like-v2", "eyeriss-v2": "eyeriss-like-v2"}


def builtin_architecture(name: str) -> ArchitectureSpec:
    name = ALIASES.get(name, name)
    for a in builtin_architectures():
        if a.name == name:
            return a
    raise ArchitectureError(
        f"no builtin architecture {name!r}; have {[a.name for a in builtin_architectures()]}"
    )


def resolve_architecture(ref: str | Path) -> ArchitectureSpec:
    """Builtin name or path to an architecture file."""
    names = {a.name for a in builtin_architectures()} | set(ALIASES)
    if str(ref) in names:
        return builtin_architecture(str(ref))
    if not Path(ref).is_file():
        raise ArchitectureError(f"{str(ref)!r} is neither a builtin ({sorted(names)}) nor a file")
    return load_architecture(ref)


def toy_architectures() -> list[ArchitectureSpec]:
    """Tiny 3x3 organisations with small buffers so that tiling kicks in on small layers."""
    W, I, O = DataType.WEIGHTS, DataType.INPUTS, DataType.OUTPUTS
    big = 1 << 20
    return [
        ArchitectureSpec(
            name="toy-cpu", pe_rows=1, pe_cols=1, dataflow=Dataflow.SEQUENTIAL_CPU,
            mac_precision=8, base_node=40, base_frequency=1e6, cpu_mem_word=64,
            levels=(MemoryLevel("mem", frozenset({W, I, O}), big, 64, Sharing.GLOBAL),),
        ),
        ArchitectureSpec(
            name="toy-rs", pe_rows=3, pe_cols=3, dataflow=Dataflow.ROW_STATIONARY,
            mac_precision=8, base_node=40, base_frequency=1e6,
            levels=(
                MemoryLevel("spad_w", frozenset({W}), 12, 8, Sharing.PER_PE),
                MemoryLevel("spad_i", frozenset({I}), 12, 8, Sharing.PER_PE),
                MemoryLevel("spad_o", frozenset({O}), 10, 20, Sharing.PER_PE),
                MemoryLevel("gwb", frozenset({W}), big, 8, Sharing.GLOBAL),
                MemoryLevel("glb", frozenset({I, O}), big, 8, Sharing.GLOBAL, 4),
            ),
        ),
        ArchitectureSpec(
            name="toy-ws", pe_rows=3, pe_cols=3, dataflow=Dataflow.WEIGHT_STATIONARY,
            mac_precision=8, base_node=40, base_frequency=1e6,
            levels=(
                MemoryLevel("wbuf", frozenset({W}), 64, 8, Sharing.PER_ROW),
                MemoryLevel("ibuf", frozenset({I}), 128, 8, Sharing.PER_ROW, 3),
                MemoryLevel("abuf", frozenset({O}), 30, 20, Sharing.PER_ROW, 3),
                MemoryLevel("gwb", frozenset({W}), big, 8, Sharing.GLOBAL),
                MemoryLevel("gb", frozenset({I, O}), big, 8, Sharing.GLOBAL, 4),
            ),
        ),
    ]


# ------------------------------------------------------------------------ assignments


@dataclass(frozen=True)
class MemoryAssignment:
    variant: Variant
    device_per_slot: Mapping[str, DeviceKind]

    def device(self, slot: str) -> DeviceKind:
        try:
            return self.device_per_slot[slot]
        except KeyError:
            raise AssignmentError(f"assignment has no device for slot {slot!r}") from None

    @property
    def nvm_device(self) -> DeviceKind | None:
        nvm = {d for d in self.device_per_slot.values() if d.is_nvm}
        return next(iter(nvm)) if len(nvm) == 1 else None

    @property
    def label(self) -> str:
        dev = self.nvm_device
        return self.variant.value if dev is None else f"{self.variant.value}-{dev.value}"

    @classmethod
    def sram_only(cls, arch: ArchitectureSpec) -> "MemoryAssignment":
        return cls(Variant.SRAM_ONLY, {s: DeviceKind.SRAM for s in arch.slots})

    @classmethod
    def p0(cls, arch: ArchitectureSpec, device: DeviceKind) -> "MemoryAssignment":
        ws = arch.weight_slots
        return cls(Variant.P0, {s: (device if s in ws else DeviceKind.SRAM) for s in arch.slots})

    @classmethod
    def p1(cls, arch: ArchitectureSpec, device: DeviceKind) -> "MemoryAssignment":
        return cls(Variant.P1, {s: device for s in arch.slots})

    @classmethod
    def make(cls, arch: ArchitectureSpec, variant: Variant, device: DeviceKind | None = None):
        if variant is Variant.SRAM_ONLY:
            return cls.sram_only(arch)
        if device is None or not device.is_nvm:
            raise AssignmentError(f"{variant.value} needs an MRAM device, got {device}")
        return cls.p0(arch, device) if variant is Variant.P0 else cls.p1(arch, device)


def validate_assignment(
    arch: ArchitectureSpec, asg: MemoryAssignment
) -> tuple[ArchitectureSpec, MemoryAssignment]:
    slots = set(arch.slots)
    given = set(asg.device_per_slot)
    if given - slots:
        raise AssignmentError(f"{arch.name}: unknown slot(s) {sorted(given - slots)}")
    if slots - given:
        raise AssignmentError(f"{arch.name}: no device for slot(s) {sorted(slots - given)}")
    ws = arch.weight_slots
    for slot in arch.slots:
        dev = asg.device_per_slot[slot]
        if asg.variant is Variant.SRAM_ONLY:
            ok = dev is DeviceKind.SRAM
        elif asg.variant is Variant.P1:
            ok = dev.is_nvm
        else:
            ok = dev.is_nvm if slot in ws else dev is DeviceKind.SRAM
        if not ok:
            raise AssignmentError(
                f"{arch.name}: {asg.variant.value} cannot place {dev.value} in slot {slot!r}"
            )
    return arch, asg
