"""Memory power against inference rate with power gating between inferences.

Every buffer follows one of two affine rules in the inference rate ``x``:

* volatile (SRAM) buffers keep their contents in retention standby between
  inferences: ``P = x*E + P_sb*(1 - x*t_active)``
* non-volatile buffers are cut off between inferences and pay a wakeup per
  inference: ``P = x*(E + E_wu)``

A P0 design mixes both rules across its buffers. Standby power scales with
stored bits: each bank of a macro draws ``standby_ratio`` times the power of
reading one word per read latency. The wakeup energy is that standby power
held over the wakeup time.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from enum import Enum

from .arch import ArchitectureSpec, MemoryAssignment, validate_assignment
from .energy import inference_energy
from .mapper import NetworkProfile
from .technology import TechLibrary, default_tech
from .timing import inference_latency


class DutyCycleError(ValueError):
    pass


@dataclass(frozen=True)
class BufferPower:
    level: str
    group: str  # "weight" or "io"
    energy_j: float  # per inference
    standby_w: float  # retention draw between inferences, all instances
    wakeup_j: float  # per wake, all instances
    gated: bool

    def slope(self, t_active: float) -> float:
        if self.gated:
            return self.energy_j + self.wakeup_j
        return self.energy_j - self.standby_w * t_active

    def intercept(self) -> float:
        return 0.0 if self.gated else self.standby_w


@dataclass(frozen=True)
class PowerSample:
    ips: float
    total_w: float
    weight_w: float
    io_w: float


@dataclass(frozen=True)
class VariantPower:
    """Power model of one design point: buffers, active time and wakeup time."""

    label: str
    buffers: tuple[BufferPower, ...]
    active_time: float  # s
    wakeup_time: float  # s

    def __post_init__(self):
        if not self.active_time > 0:
            raise DutyCycleError(f"{self.label}: active time must be positive")
        if self.wakeup_time < 0:
            raise DutyCycleError(f"{self.label}: wakeup time must be >= 0")

    @property
    def gated(self) -> bool:
        return any(b.gated for b in self.buffers)

    @property
    def ips_max(self) -> float:
        return 1.0 / (self.active_time + (self.wakeup_time if self.gated else 0.0))

    def coefficients(self, group: str | None = None) -> tuple[float, float]:
        """(intercept W, slope J) of the affine power curve."""
        bufs = [b for b in self.buffers if group is None or b.group == group]
        return (
            math.fsum(b.intercept() for b in bufs),
            math.fsum(b.slope(self.active_time) for b in bufs),
        )

    def power(self, ips: float, group: str | None = None) -> float:
        if ips < 0 or ips > self.ips_max * (1 + 1e-12):
            raise DutyCycleError(f"{self.label}: ips {ips:g} outside [0, {self.ips_max:g}]")
        a, b = self.coefficients(group)
        return a + b * ips

    def sample(self, ips: float) -> PowerSample:
        return PowerSample(ips, self.power(ips), self.power(ips, "weight"), self.power(ips, "io"))


class CrossoverKind(str, Enum):
    CROSSOVER = "crossover"  # NVM cheaper below the returned rate
    NVM_ALWAYS = "nvm-always"
    SRAM_ALWAYS = "sram-always"
    REVERSED = "reversed"  # NVM cheaper above the returned rate
    EQUAL = "equal"


@dataclass(frozen=True)
class Crossover:
    kind: CrossoverKind
    ips: float | None = None
    capped: bool = False


@dataclass
class DutyCycleScenario:
    baseline: VariantPower
    variants: dict[str, VariantPower] = field(default_factory=dict)
    ips_min: float = 1.0

    def __post_init__(self):
        if not self.ips_min > 0:
            raise DutyCycleError("ips_min must be positive")

    def get(self, label: str) -> VariantPower:
        if label == self.baseline.label:
            return self.baseline
        try:
            return self.variants[label]
        except KeyError:
            raise DutyCycleError(f"no variant {label!r} (have {sorted(self.variants)})") from None


def memory_power(scenario: DutyCycleScenario, variant: str, ips: float) -> PowerSample:
    return scenario.get(variant).sample(ips)


def crossover_ips(scenario: DutyCycleScenario, nvm_variant: str) -> Crossover:
    return crossover_between(scenario.baseline, scenario.get(nvm_variant))


def crossover_between(sram: VariantPower, nvm: VariantPower) -> Crossover:
    a_s, b_s = sram.coefficients()
    a_n, b_n = nvm.coefficients()
    limit = min(sram.ips_max, nvm.ips_max)
    if b_s == b_n:
        if a_s == a_n:
            return Crossover(CrossoverKind.EQUAL)
        return Crossover(CrossoverKind.NVM_ALWAYS if a_n < a_s else CrossoverKind.SRAM_ALWAYS)
    x = (a_n - a_s) / (b_s - b_n)
    if x <= 0:
        # no intersection at positive rates: the cheaper slope wins everywhere
        return Crossover(CrossoverKind.NVM_ALWAYS if b_n < b_s else CrossoverKind.SRAM_ALWAYS)
    kind = CrossoverKind.CROSSOVER if a_n < a_s else CrossoverKind.REVERSED
    if x > limit:
        if kind is CrossoverKind.CROSSOVER:
            return Crossover(kind, limit, capped=True)
        return Crossover(CrossoverKind.SRAM_ALWAYS)
    return Crossover(kind, x)


def savings_at(scenario: DutyCycleScenario, nvm_variant: str, ips: float | None = None) -> float:
    ips = scenario.ips_min if ips is None else ips
    p_sram = scenario.baseline.power(ips)
    if p_sram == 0:
        raise DutyCycleError("SRAM baseline draws no power; savings undefined")
    return 1.0 - scenario.get(nvm_variant).power(ips) / p_sram


# ------------------------------------------------------------------------- builders


def variant_power(
    profile: NetworkProfile,
    arch: ArchitectureSpec,
    asg: MemoryAssignment,
    node: int,
    tech: TechLibrary | None = None,
) -> VariantPower:
    tech = tech or default_tech()
    validate_assignment(arch, asg)
    energy = inference_energy(profile.total, arch, asg, node, tech)
    t_active = inference_latency(profile, arch, asg, node, tech).latency
    weights = arch.weight_slots
    buffers = []
    wake = 0.0
    for level in arch.levels:
        dev = tech.resolve(level, asg, node)
        gated = dev.device.is_nvm
        standby = arch.instance_count(level) * dev.standby_power_w(
            level.capacity_bits, level.word_width, tech.bank_bits)
        buffers.append(BufferPower(
            level=level.name,
            group="weight" if level.technology_slot in weights else "io",
            energy_j=energy.level_energy(level.name) * 1e-12,
            standby_w=0.0 if gated else standby,
            wakeup_j=dev.wakeup_energy_j(standby) if gated else 0.0,
            gated=gated,
        ))
        if gated:
            wake = max(wake, dev.wakeup_time * 1e-6)
    return VariantPower(asg.label, tuple(buffers), t_active, wake)


def build_scenario(
    profile: NetworkProfile,
    arch: ArchitectureSpec,
    assignments: list[MemoryAssignment],
    node: int,
    ips_min: float,
    tech: TechLibrary | None = None,
) -> DutyCycleScenario:
    base = variant_power(profile, arch, MemoryAssignment.sram_only(arch), node, tech)
    others = {a.label: variant_power(profile, arch, a, node, tech) for a in assignments}
    return DutyCycleScenario(baseline=base, variants=others, ips_min=ips_min)


def log_grid(lo: float = 1e-2, hi: float = 1e3, per_decade: int = 10) -> list[float]:
    decades = math.log10(hi / lo)
    n = max(1, round(decades * per_decade))
    return [lo * 10 ** (decades * i / n) for i in range(n + 1)]


def sweep_rows(vp: VariantPower, grid: list[float], device: str) -> list[tuple]:
    rows = []
    for ips in grid:
        if ips > vp.ips_max:
            break
        s = vp.sample(ips)
        rows.append((vp.label, device, s.ips, s.total_w, s.weight_w, s.io_w))
    return rows


def sweep_csv(rows: list[tuple]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["variant", "device", "ips", "total_w", "weight_w", "io_w"])
    for r in rows:
        w.writerow([r[0], r[1], f"{r[2]:.6g}", *(f"{v:.6e}" for v in r[3:])])
    return buf.getvalue()
