"""Inference latency with a memory-limited chip clock.

One clock serves the whole chip. Its frequency is the scaled base frequency
unless some level cannot keep up: an instance with port bandwidth ``bw`` that
must serve ``d_r`` reads and ``d_w`` writes per cycle at device latencies
``t_r``/``t_w`` limits the clock to ``bw / (d_r*t_r + d_w*t_w)``. Multi-cycle
accesses therefore stretch the clock instead of stalling the pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .arch import ArchitectureSpec, MemoryAssignment, validate_assignment
from .mapper import AccessProfile, NetworkProfile
from .technology import TechLibrary, default_tech


@dataclass(frozen=True)
class LatencyEstimate:
    compute_cycles: int
    base_frequency: float  # Hz, scaled to the node
    memory_limited_frequency: float  # Hz, effective clock
    limiting_level: str  # "" when the base clock binds
    level_frequency: dict[str, float] = field(default_factory=dict)
    # Cycles lost against the base clock, attributed to the limiting level.
    stall_cycles: dict[str, int] = field(default_factory=dict)

    @property
    def latency(self) -> float:
        return self.compute_cycles / self.memory_limited_frequency

    @property
    def latency_ms(self) -> float:
        return self.latency * 1e3


def _level_limit(d_r: float, d_w: float, bw: int, t_r_ns: float, t_w_ns: float) -> float:
    busy = (d_r * t_r_ns + d_w * t_w_ns) * 1e-9
    return float("inf") if busy == 0 else bw / busy


def inference_latency(
    profile: AccessProfile | NetworkProfile,
    arch: ArchitectureSpec,
    asg: MemoryAssignment,
    node: int,
    tech: TechLibrary | None = None,
) -> LatencyEstimate:
    tech = tech or default_tech()
    validate_assignment(arch, asg)
    layers = profile.layers if isinstance(profile, NetworkProfile) else [profile]
    total = profile.total if isinstance(profile, NetworkProfile) else profile
    base = arch.base_frequency / tech.factors(arch.base_node, node).latency

    limits: dict[str, float] = {}
    for level in arch.levels:
        if level.max_bandwidth <= 0:
            raise ValueError(f"{arch.name}: level {level.name} has zero bandwidth")
        dev = tech.resolve(level, asg, node)
        f = float("inf")
        for prof in layers:
            d_r, d_w = prof.peak_demand.get(level.name, (0.0, 0.0))
            f = min(f, _level_limit(d_r, d_w, level.max_bandwidth, dev.read_latency, dev.write_latency))
        limits[level.name] = f

    eff, limiting = base, ""
    for name, f in limits.items():
        if f < eff:
            eff, limiting = f, name
    cycles = total.compute_cycles
    stalls = {}
    if limiting:
        stalls[limiting] = round(cycles * (base / eff - 1))
    return LatencyEstimate(
        compute_cycles=cycles,
        base_frequency=base,
        memory_limited_frequency=eff,
        limiting_level=limiting,
        level_frequency=limits,
        stall_cycles=stalls,
    )
