import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from memdse.workload import (
    LayerKind,
    LayerSpec,
    WorkloadError,
    bundled_network,
    load_network,
    mac_count,
    network_from_dict,
    tensor_sizes,
)

from sweeps import exhaustive_small_layers

CONV, DW, PW, FC = LayerKind.CONV2D, LayerKind.DEPTHWISE, LayerKind.POINTWISE, LayerKind.FULLY_CONNECTED


def brute_force(layer: LayerSpec):
    """Seven-deep loop nest: count MACs and collect the touched tensor elements."""
    macs = 0
    weights, inputs, outputs = set(), set(), set()
    for m, p, q in itertools.product(range(layer.out_channels), range(layer.out_h), range(layer.out_w)):
        outputs.add((m, p, q))
        for ci in range(layer.reduction_channels):
            for r, s in itertools.product(range(layer.kernel_h), range(layer.kernel_w)):
                macs += 1
                c = layer.input_channel(m, ci)
                weights.add((m if layer.kind is not DW else 0, c, r, s))
    for c, h, w in itertools.product(range(layer.in_channels), range(layer.height), range(layer.width)):
        inputs.add((c, h, w))
    return macs, len(weights), len(inputs), len(outputs)


def test_mac_count_examples():
    assert mac_count(LayerSpec(CONV, 1, 1)) == 1
    assert mac_count(LayerSpec(FC, 10, 5)) == 50
    assert mac_count(LayerSpec(CONV, 3, 8, 6, 6, 3, 3)) == 3456


def test_tensor_size_examples():
    t = tensor_sizes(LayerSpec(CONV, 1, 1))
    assert (t.weight_words, t.input_words, t.output_words) == (1, 1, 1)
    t = tensor_sizes(LayerSpec(DW, 8, 8, 6, 6, 3, 3))
    assert (t.weight_words, t.input_words, t.output_words) == (72, 288, 128)
    t = tensor_sizes(LayerSpec(FC, 10, 5))
    assert (t.weight_words, t.input_words, t.output_words) == (50, 10, 5)


def test_byte_rounding():
    t = tensor_sizes(LayerSpec(CONV, 1, 3, weight_bits=4, activation_bits=6))
    assert t.weight_bytes == 2  # ceil(3 * 4 / 8)
    assert t.output_bytes == 3  # ceil(3 * 6 / 8)


def test_exhaustive_agreement_with_loop_nest():
    for layer in exhaustive_small_layers()[::7]:
        macs, w, i, o = brute_force(layer)
        t = tensor_sizes(layer)
        assert (mac_count(layer), t.weight_words, t.input_words, t.output_words) == (macs, w, i, o), layer


@given(c=st.integers(1, 8), m=st.integers(1, 8), h=st.integers(1, 8), w=st.integers(1, 8))
def test_pointwise_equals_unit_conv(c, m, h, w):
    assert mac_count(LayerSpec(PW, c, m, h, w)) == mac_count(LayerSpec(CONV, c, m, h, w, 1, 1))


@given(kind=st.sampled_from([CONV, DW]), c=st.integers(1, 6), m=st.integers(1, 6),
       h=st.integers(3, 9), r=st.integers(1, 3), stride=st.integers(1, 2))
def test_macs_are_filter_size_times_outputs(kind, c, m, h, r, stride):
    m = c if kind is DW else m
    layer = LayerSpec(kind, c, m, h, h, r, r, stride)
    t = tensor_sizes(layer)
    per_output = r * r * layer.reduction_channels
    assert mac_count(layer) == per_output * t.output_words


def test_validation_errors():
    with pytest.raises(WorkloadError, match="depthwise"):
        LayerSpec(DW, 4, 8, 4, 4, 3, 3, name="dw1")
    with pytest.raises(WorkloadError, match="positive"):
        LayerSpec(CONV, 0, 1)
    with pytest.raises(WorkloadError, match="kernel larger"):
        LayerSpec(CONV, 1, 1, 2, 2, 3, 3)


def _doc(layers):
    return {"schema": 1, "name": "t", "input": {"h": 8, "w": 8, "c": 3, "bits": 8}, "layers": layers}


def test_empty_network_rejected():
    with pytest.raises(WorkloadError, match="empty"):
        network_from_dict(_doc([]))


def test_depthwise_mismatch_names_layer():
    doc = _doc([{"kind": "Conv2D", "m": 4, "r": 3},
                {"name": "bad_dw", "kind": "DepthwiseConv2D", "m": 8, "r": 3}])
    with pytest.raises(WorkloadError, match=r"layer 1.*bad_dw"):
        network_from_dict(doc)


def test_parse_error_and_channel_chaining(tmp_path):
    p = tmp_path / "broken.json"
    p.write_text("{not json")
    with pytest.raises(WorkloadError, match="parse error"):
        load_network(p)
    doc = _doc([{"kind": "Conv2D", "m": 4, "r": 3}, {"kind": "Conv2D", "c": 5, "m": 4, "r": 3}])
    with pytest.raises(WorkloadError, match="layer 1"):
        network_from_dict(doc)


def test_padding_resolution():
    net = network_from_dict(_doc([{"kind": "conv", "m": 4, "r": 3, "pad": "same"},
                                  {"kind": "conv", "m": 4, "r": 3, "pad": "valid"},
                                  {"kind": "fc", "m": 2}]))
    assert [l.padding for l in net.layers] == [1, 0, 0]
    assert (net.layers[1].out_h, net.layers[2].in_channels) == (6, 4)


def test_bundled_detnet_profile():
    net = bundled_network("detnet")
    first = net.layers[0]
    assert first.height * first.width >= 1_000_000
    # about 12 kB of 8-bit weights
    assert 11_000 <= net.weight_bytes() <= 13_000
    assert net.metadata["approximate"] is True


def test_bundled_edsnet_is_approximate_and_larger():
    eds, det = bundled_network("edsnet"), bundled_network("detnet")
    assert eds.metadata["approximate"] is True
    assert eds.total_macs() > 100 * det.total_macs()
