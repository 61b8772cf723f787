"""Layer generators shared by the oracle and conservation suites."""

from __future__ import annotations

import itertools
import random

from memdse.workload import LayerKind, LayerSpec, WorkloadError

CONV, DW, PW, FC = LayerKind.CONV2D, LayerKind.DEPTHWISE, LayerKind.POINTWISE, LayerKind.FULLY_CONNECTED
DIM = range(1, 9)


def _make(**kw) -> LayerSpec | None:
    try:
        return LayerSpec(**kw)
    except WorkloadError:
        return None  # kernel larger than the padded input


def exhaustive_small_layers() -> list[LayerSpec]:
    """Every layer of the five families below with each swept dimension in 1..8.

    spatial: Conv2D (C=2, M=3) and DepthwiseConv2D (C=3), square H in 1..8,
             square kernel in 1..min(H+2*pad, 8), stride 1..3, pad 0..kernel-1
    channels: Conv2D C, M in 1..8 on a 4x4 input, 3x3 kernel, pad 1
    pointwise: C, M, H in 1..8 (W = H)
    fully connected: C, M in 1..8
    rectangular: Conv2D C=2, M=2, H, W in 1..8, kernel 2x3 and 3x1, stride 1..2
    """
    out: list[LayerSpec | None] = []
    for kind, c, m in ((CONV, 2, 3), (DW, 3, 3)):
        for h, r, s in itertools.product(DIM, DIM, (1, 2, 3)):
            for pad in range(r):
                out.append(_make(kind=kind, in_channels=c, out_channels=m, height=h, width=h,
                                 kernel_h=r, kernel_w=r, stride=s, padding=pad))
    for c, m in itertools.product(DIM, DIM):
        out.append(_make(kind=CONV, in_channels=c, out_channels=m, height=4, width=4,
                         kernel_h=3, kernel_w=3, padding=1))
        out.append(_make(kind=FC, in_channels=c, out_channels=m))
        for h in DIM:
            out.append(_make(kind=PW, in_channels=c, out_channels=m, height=h, width=h))
    for h, w, (r, q), s in itertools.product(DIM, DIM, ((2, 3), (3, 1)), (1, 2)):
        out.append(_make(kind=CONV, in_channels=2, out_channels=2, height=h, width=w,
                         kernel_h=r, kernel_w=q, stride=s))
    return [x for x in out if x is not None]


def random_layer(rng: random.Random, max_dim: int = 8) -> LayerSpec:
    """A valid random layer with every dimension <= max_dim."""
    while True:
        kind = rng.choice(list(LayerKind))
        c = rng.randint(1, max_dim)
        m = c if kind is DW else rng.randint(1, max_dim)
        if kind is FC:
            return LayerSpec(kind=kind, in_channels=c, out_channels=m)
        k = (1, 1) if kind is PW else (rng.randint(1, min(5, max_dim)), rng.randint(1, min(5, max_dim)))
        layer = _make(kind=kind, in_channels=c, out_channels=m,
                      height=rng.randint(1, max_dim), width=rng.randint(1, max_dim),
                      kernel_h=k[0], kernel_w=k[1], stride=rng.randint(1, 3),
                      padding=rng.randint(0, max(k) - 1))
        if layer is not None:
            return layer


def random_layers(n: int, seed: int, max_dim: int = 8) -> list[LayerSpec]:
    rng = random.Random(seed)
    return [random_layer(rng, max_dim) for _ in range(n)]


def random_power_pair(rng: random.Random):
    """An SRAM baseline and a gated NVM design with random affine coefficients.

    The NVM side gates its weight buffer and, half of the time, its I/O buffer
    too (P1-like); otherwise the I/O buffer stays volatile (P0-like).
    """
    from memdse.dutycycle import BufferPower, VariantPower

    def mag(lo, hi):
        return 10 ** rng.uniform(lo, hi)

    t_act = mag(-6, -2)
    sram = VariantPower("SramOnly", (
        BufferPower("w", "weight", mag(-7, -4), mag(-6, -3), 0.0, False),
        BufferPower("io", "io", mag(-7, -4), mag(-6, -3), 0.0, False),
    ), t_act, 0.0)
    p1 = rng.random() < 0.5
    io = (BufferPower("io", "io", mag(-7, -4), 0.0, mag(-9, -6), True) if p1
          else sram.buffers[1])
    nvm = VariantPower("P1" if p1 else "P0", (
        BufferPower("w", "weight", mag(-7, -4), 0.0, mag(-9, -6), True), io,
    ), t_act * rng.uniform(1.0, 1.5), mag(-6, -3))
    return sram, nvm


def closed_form_crossover(sram, nvm) -> float | None:
    """Intersection rate of the two power lines, written out from the buffer rules."""
    def line(vp):
        a = sum(b.standby_w for b in vp.buffers if not b.gated)
        s = sum(b.energy_j + b.wakeup_j if b.gated else b.energy_j - b.standby_w * vp.active_time
                for b in vp.buffers)
        return a, s

    a_s, s_s = line(sram)
    a_n, s_n = line(nvm)
    if s_s == s_n:
        return None
    x = (a_n - a_s) / (s_s - s_n)
    return x if x > 0 else None
