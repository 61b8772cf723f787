"""Energy, latency, area and duty-cycled memory power of edge inference accelerators
with SRAM and MRAM memory hierarchies."""

__version__ = "0.1.0"

from .arch import ArchitectureSpec, MemoryAssignment, MemoryLevel, Variant  # noqa: E402
from .kinds import DataType, DeviceKind  # noqa: E402
from .workload import LayerKind, LayerSpec, NetworkDescriptor  # noqa: E402

__all__ = [
    "ArchitectureSpec", "DataType", "DeviceKind", "LayerKind", "LayerSpec",
    "MemoryAssignment", "MemoryLevel", "NetworkDescriptor", "Variant", "__version__",
]
