"""Layer-shape workloads and the arithmetic derived from them.

A network is an ordered list of :class:`LayerSpec`. Shapes are resolved at load
time (padding, channel chaining, up-sampling, concatenation) so every layer is
self-contained and can be analysed on its own.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any


class WorkloadError(ValueError):
    """Malformed or inconsistent workload description."""


class LayerKind(str, Enum):
    CONV2D = "Conv2D"
    DEPTHWISE = "DepthwiseConv2D"
    POINTWISE = "PointwiseConv2D"
    FULLY_CONNECTED = "FullyConnected"


@dataclass(frozen=True)
class LayerSpec:
    kind: LayerKind
    in_channels: int
    out_channels: int
    height: int = 1
    width: int = 1
    kernel_h: int = 1
    kernel_w: int = 1
    stride: int = 1
    padding: int = 0
    weight_bits: int = 8
    activation_bits: int = 8
    name: str = ""

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        label = self.name or self.kind.value
        dims = {
            "in_channels": self.in_channels,
            "out_channels": self.out_channels,
            "height": self.height,
            "width": self.width,
            "kernel_h": self.kernel_h,
            "kernel_w": self.kernel_w,
            "stride": self.stride,
            "weight_bits": self.weight_bits,
            "activation_bits": self.activation_bits,
        }
        for key, value in dims.items():
            if int(value) != value or value < 1:
                raise WorkloadError(f"{label}: {key} must be a positive integer, got {value}")
        if self.padding < 0:
            raise WorkloadError(f"{label}: padding must be >= 0")
        if self.kind is LayerKind.DEPTHWISE and self.out_channels != self.in_channels:
            raise WorkloadError(
                f"{label}: depthwise layer needs out_channels == in_channels "
                f"({self.out_channels} != {self.in_channels})"
            )
        if self.kind is LayerKind.POINTWISE and (self.kernel_h, self.kernel_w) != (1, 1):
            raise WorkloadError(f"{label}: pointwise layer needs a 1x1 kernel")
        if self.kind is LayerKind.FULLY_CONNECTED and (
            self.height, self.width, self.kernel_h, self.kernel_w, self.stride, self.padding
        ) != (1, 1, 1, 1, 1, 0):
            raise WorkloadError(f"{label}: fully-connected layer must be 1x1 spatial")
        if self.out_h < 1 or self.out_w < 1:
            raise WorkloadError(f"{label}: kernel larger than padded input")

    @property
    def out_h(self) -> int:
        return (self.height + 2 * self.padding - self.kernel_h) // self.stride + 1

    @property
    def out_w(self) -> int:
        return (self.width + 2 * self.padding - self.kernel_w) // self.stride + 1

    @property
    def reduction_channels(self) -> int:
        """Input channels summed into one output element."""
        return 1 if self.kind is LayerKind.DEPTHWISE else self.in_channels

    def input_channel(self, m: int, ci: int) -> int:
        """Input channel read by output channel ``m`` at reduction index ``ci``."""
        return m if self.kind is LayerKind.DEPTHWISE else ci


@dataclass(frozen=True)
class TensorFootprint:
    weight_words: int
    input_words: int
    output_words: int
    weight_bits: int = 8
    activation_bits: int = 8

    @property
    def weight_bytes(self) -> int:
        return math.ceil(self.weight_words * self.weight_bits / 8)

    @property
    def input_bytes(self) -> int:
        return math.ceil(self.input_words * self.activation_bits / 8)

    @property
    def output_bytes(self) -> int:
        return math.ceil(self.output_words * self.activation_bits / 8)


@dataclass(frozen=True)
class NetworkDescriptor:
    name: str
    layers: tuple[LayerSpec, ...]
    metadata: dict[str, Any] = field(default_factory=dict, compare=False, hash=False)
    # Indices of the layers feeding each layer (-1 is the network input).
    sources: tuple[tuple[int, ...], ...] = ()
    chained: bool = True

    def __post_init__(self):
        if not self.layers:
            raise WorkloadError(f"network {self.name!r}: layer list is empty")
        if not self.sources:
            object.__setattr__(self, "sources", tuple((i - 1,) for i in range(len(self.layers))))
        if self.chained:
            for i, layer in enumerate(self.layers):
                srcs = [s for s in self.sources[i] if s >= 0]
                if srcs and len(srcs) == 1 and layer.kind is not LayerKind.FULLY_CONNECTED:
                    prev = self.layers[srcs[0]]
                    if prev.out_channels != layer.in_channels:
                        raise WorkloadError(
                            f"layer {i} ({layer.name}): in_channels {layer.in_channels} does not "
                            f"match layer {srcs[0]} out_channels {prev.out_channels}"
                        )

    def footprint(self) -> TensorFootprint:
        """Whole-network footprint: total weights, first input, last output."""
        sizes = [tensor_sizes(layer) for layer in self.layers]
        return TensorFootprint(
            weight_words=sum(s.weight_words for s in sizes),
            input_words=sizes[0].input_words,
            output_words=sizes[-1].output_words,
            weight_bits=self.layers[0].weight_bits,
            activation_bits=self.layers[0].activation_bits,
        )

    def weight_bytes(self) -> int:
        return sum(tensor_sizes(layer).weight_bytes for layer in self.layers)

    def total_macs(self) -> int:
        return sum(mac_count(layer) for layer in self.layers)

    def peak_activation_bytes(self) -> int:
        """Largest input+output activation pair of any single layer."""
        return max(
            tensor_sizes(layer).input_bytes + tensor_sizes(layer).output_bytes
            for layer in self.layers
        )


def mac_count(layer: LayerSpec) -> int:
    p, q = layer.out_h, layer.out_w
    window = layer.kernel_h * layer.kernel_w
    if layer.kind is LayerKind.DEPTHWISE:
        return layer.in_channels * p * q * window
    return layer.in_channels * layer.out_channels * p * q * window


def tensor_sizes(layer: LayerSpec) -> TensorFootprint:
    window = layer.kernel_h * layer.kernel_w
    if layer.kind is LayerKind.DEPTHWISE:
        weights = layer.in_channels * window
    else:
        weights = layer.in_channels * layer.out_channels * window
    return TensorFootprint(
        weight_words=weights,
        input_words=layer.in_channels * layer.height * layer.width,
        output_words=layer.out_channels * layer.out_h * layer.out_w,
        weight_bits=layer.weight_bits,
        activation_bits=layer.activation_bits,
    )


# --------------------------------------------------------------------------- loading

_KIND_ALIASES = {
    "conv2d": LayerKind.CONV2D,
    "conv": LayerKind.CONV2D,
    "depthwiseconv2d": LayerKind.DEPTHWISE,
    "depthwise": LayerKind.DEPTHWISE,
    "dw": LayerKind.DEPTHWISE,
    "pointwiseconv2d": LayerKind.POINTWISE,
    "pointwise": LayerKind.POINTWISE,
    "pw": LayerKind.POINTWISE,
    "fullyconnected": LayerKind.FULLY_CONNECTED,
    "fc": LayerKind.FULLY_CONNECTED,
    "dense": LayerKind.FULLY_CONNECTED,
}

SCHEMA_VERSION = 1


def _resolve_padding(pad: Any, kernel: int, index: int) -> int:
    if pad is None or pad == "valid":
        return 0
    if pad == "same":
        return (kernel - 1) // 2
    if isinstance(pad, int) and not isinstance(pad, bool) and pad >= 0:
        return pad
    raise WorkloadError(f"layer {index}: bad padding {pad!r}")


def network_from_dict(doc: dict[str, Any]) -> NetworkDescriptor:
    """Build a network from the JSON document layout.

    Shapes are inferred by walking the layers in order: each layer consumes the
    output of the previous layer unless ``from`` names another layer index
    (``-1`` is the network input). ``concat`` lists extra layer indices whose
    outputs are stacked channel-wise onto the source after ``upsample`` (an
    integer nearest-neighbour factor) has been applied to it. A fully-connected
    layer implies global pooling of its source.
    """
    if not isinstance(doc, dict):
        raise WorkloadError("network document must be a JSON object")
    if doc.get("schema", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise WorkloadError(f"unsupported network schema {doc.get('schema')!r}")
    try:
        name = str(doc["name"])
        inp = doc["input"]
        shape_in = (int(inp["h"]), int(inp["w"]), int(inp["c"]))
        act_bits_default = int(inp.get("bits", 8))
        raw_layers = doc["layers"]
    except (KeyError, TypeError, ValueError) as exc:
        raise WorkloadError(f"network document missing field: {exc}") from exc
    if not isinstance(raw_layers, list) or not raw_layers:
        raise WorkloadError(f"network {name!r}: layer list is empty")

    layers: list[LayerSpec] = []
    out_shapes: list[tuple[int, int, int]] = []
    sources: list[tuple[int, ...]] = []

    def shape_of(idx: int, at: int) -> tuple[int, int, int]:
        if idx == -1:
            return shape_in
        if not 0 <= idx < at:
            raise WorkloadError(f"layer {at}: source index {idx} out of range")
        return out_shapes[idx]

    for i, raw in enumerate(raw_layers):
        try:
            kind = _KIND_ALIASES[str(raw["kind"]).replace("_", "").lower()]
        except KeyError as exc:
            raise WorkloadError(f"layer {i}: unknown or missing kind {raw.get('kind')!r}") from exc
        src = int(raw.get("from", i - 1))
        concat = [int(c) for c in raw.get("concat", [])]
        h, w, c = shape_of(src, i)
        up = int(raw.get("upsample", 1))
        h, w = h * up, w * up
        for extra in concat:
            eh, ew, ec = shape_of(extra, i)
            if (eh, ew) != (h, w):
                raise WorkloadError(
                    f"layer {i}: concat source {extra} spatial {eh}x{ew} does not match {h}x{w}"
                )
            c += ec
        r = int(raw.get("r", 1))
        s = int(raw.get("s", r))
        stride = int(raw.get("stride", 1))
        try:
            if kind is LayerKind.FULLY_CONNECTED:
                h = w = 1
                r = s = stride = 1
                pad = 0
            else:
                pad = _resolve_padding(raw.get("pad", "same"), max(r, s), i)
            if "c" in raw and int(raw["c"]) != c:
                raise WorkloadError(
                    f"layer {i}: declared input channels {raw['c']} but source provides {c}"
                )
            m = c if kind is LayerKind.DEPTHWISE and "m" not in raw else int(raw["m"])
            layer = LayerSpec(
                kind=kind,
                in_channels=c,
                out_channels=m,
                height=h,
                width=w,
                kernel_h=r,
                kernel_w=s,
                stride=stride,
                padding=pad,
                weight_bits=int(raw.get("weight_bits", 8)),
                activation_bits=int(raw.get("act_bits", act_bits_default)),
                name=str(raw.get("name", f"L{i}")),
            )
        except WorkloadError as exc:
            msg = str(exc)
            raise WorkloadError(msg if msg.startswith(f"layer {i}") else f"layer {i}: {msg}") from exc
        except (KeyError, TypeError, ValueError) as exc:
            raise WorkloadError(f"layer {i}: bad field {exc}") from exc
        layers.append(layer)
        out_shapes.append((layer.out_h, layer.out_w, layer.out_channels))
        sources.append((src, *concat))

    meta = dict(doc.get("metadata", {}))
    return NetworkDescriptor(name=name, layers=tuple(layers), metadata=meta, sources=tuple(sources))


def load_network(path: str | Path) -> NetworkDescriptor:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise WorkloadError(f"{path}: parse error: {exc}") from exc
    return network_from_dict(doc)


BUNDLED_NETWORKS = ("detnet", "edsnet")


def bundled_network(name: str) -> NetworkDescriptor:
    if name not in BUNDLED_NETWORKS:
        raise WorkloadError(f"no bundled network {name!r}; choose from {BUNDLED_NETWORKS}")
    text = resources.files("memdse.data.networks").joinpath(f"{name}.json").read_text()
    return network_from_dict(json.loads(text))


def resolve_network(ref: str | Path) -> NetworkDescriptor:
    """Bundled name or path to a network file."""
    if str(ref) in BUNDLED_NETWORKS:
        return bundled_network(str(ref))
    if not Path(ref).is_file():
        raise WorkloadError(f"{str(ref)!r} is neither a bundled network {BUNDLED_NETWORKS} nor a file")
    return load_network(ref)
