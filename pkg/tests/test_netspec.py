import json
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from padlens.netspec import (ADD, CONV, DEPTHWISE, MAXPOOL, RELU, LayerSpec, NetworkSpec,
                             NetworkSpecError, add, conv, maxpool, override_padding,
                             parse_network, relu, serialize_network)
from padlens.padding import PaddingMode
from padlens.presets import PRESETS, preset, vgg
from padlens.tensor import KernelSet
from padlens.weights import (WeightFormatError, WeightSet, load_weights, random_weights,
                             save_weights)

MINIMAL = {"name": "one", "input_channels": 3, "layers": [
    {"kind": "conv", "k": [3, 3], "s": [1, 1], "d": [1, 1],
     "pad": {"mode": "zero", "amount": "same"}, "in": 3, "out": 8}]}


def test_parse_minimal():
    spec = parse_network(json.dumps(MINIMAL))
    assert len(spec) == 1
    layer = spec.layers[0]
    assert layer.kind == CONV and layer.kernel == (3, 3)
    assert layer.padding == PaddingMode("zero", None)
    assert (layer.in_channels, layer.out_channels) == (3, 8)


def test_parse_channel_mismatch_reports_layer():
    cfg = json.loads(json.dumps(MINIMAL))
    cfg["layers"].append({"kind": "conv", "k": 3, "in": 4, "out": 4})
    with pytest.raises(NetworkSpecError, match="layer 1"):
        parse_network(json.dumps(cfg))


@pytest.mark.parametrize("bad,match", [
    ("{", "malformed JSON"),
    ('{"input_channels": 1, "layers": [{"kind": "pool", "k": 2}]}', "layer 0: unknown layer kind"),
    ('{"input_channels": 1, "layers": [{"kind": "relu"}, {"kind": "add", "add_from": 1}]}',
     "layer 1: add_from"),
    ('{"input_channels": 1, "layers": [{"kind": "relu"}, {"kind": "add", "add_from": 5}]}',
     "layer 1"),
    ('{"input_channels": 1, "layers": [{"kind": "conv", "k": 3, "in": 1, "out": 2, '
     '"pad": {"mode": "zero", "amount": [1, 1]}}]}', "layer 0: pad amount"),
    ('{"input_channels": 1, "layers": []}', "non-empty"),
    ('{"input_channels": 1, "layers": [{"kind": "conv", "k": 0, "in": 1, "out": 1}]}',
     "layer 0: kernel"),
    ('{"input_channels": 2, "layers": [{"kind": "depthwise_conv", "k": 3, "in": 2, "out": 4}]}',
     "layer 0: depthwise"),
    ('{"input_channels": 1, "layers": [{"kind": "conv", "k": 3, "in": 1, "out": 1, '
     '"pad": {"mode": "mirror"}}]}', "layer 0: unknown padding"),
])
def test_parse_errors(bad, match):
    with pytest.raises(NetworkSpecError, match=match):
        parse_network(bad)


def test_add_from_checks():
    with pytest.raises(NetworkSpecError, match="layer 2"):
        NetworkSpec(1, (conv(3, 1, 4), conv(3, 4, 4), add(-1, 4)))
    with pytest.raises(NetworkSpecError, match="layer 2: add_from layer 0 has 2 channels"):
        NetworkSpec(1, (conv(3, 1, 2), conv(3, 2, 4), add(0, 4)))
    NetworkSpec(1, (conv(3, 1, 4), conv(3, 4, 4), add(0, 4)))


def test_vgg16_preset_text():
    spec = parse_network(serialize_network(preset("vgg16")))
    kinds = [layer.kind for layer in spec.layers]
    assert kinds.count(CONV) == 13
    assert kinds.count(MAXPOOL) == 5
    assert kinds.count(RELU) == 13
    for i, layer in enumerate(spec.layers):
        if layer.kind == CONV:
            assert spec.layers[i + 1].kind == RELU
        if layer.kind == MAXPOOL:
            assert layer.kernel == (2, 2) and layer.stride == (2, 2)
            assert layer.padding.mode == "valid"


@pytest.mark.parametrize("name,convs", [("vgg16", 13), ("vgg19", 16)])
def test_vgg_counts(name, convs):
    spec = preset(name)
    assert sum(layer.kind == CONV for layer in spec.layers) == convs
    assert sum(layer.kind == MAXPOOL for layer in spec.layers) == 5


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_every_preset_has_five_downsampling_layers(name):
    spec = preset(name)
    assert len(spec.downsampling_layers) == 5
    for i in spec.downsampling_layers:
        assert spec.layers[i].stride == (2, 2)
    assert parse_network(serialize_network(spec)) == spec


@pytest.mark.parametrize("name", ["resnet18_skeleton", "resnet50_skeleton"])
def test_resnet_geometry(name):
    spec = preset(name)
    down = [spec.layers[i] for i in spec.downsampling_layers]
    assert down[0].kernel == (7, 7) and down[0].padding.amounts == (3, 3, 3, 3)
    for layer in down[1:]:
        assert layer.kernel == (3, 3) and layer.padding.amounts == (1, 1, 1, 1)
    assert any(layer.kind == ADD for layer in spec.layers)


def test_mobilenet_has_depthwise():
    spec = preset("mobilenetv1_skeleton")
    assert sum(layer.kind == DEPTHWISE for layer in spec.layers) == 13


def test_unknown_preset():
    with pytest.raises(NetworkSpecError, match="unknown preset"):
        preset("alexnet")


def test_override_padding():
    spec = override_padding(preset("vgg19"), "circular")
    for layer in spec.layers:
        if layer.kind == CONV:
            assert layer.padding.mode == "circular"
        if layer.kind == MAXPOOL:
            assert layer.padding.mode == "valid"
    full = override_padding(vgg(19, dilation=2), "full")
    assert full.layers[0].padding.amounts == (4, 4, 4, 4)


# --- round-trip property -----------------------------------------------------

MODES = ["zero", "circular", "symmetric", "reflect", "replicate", "partialconv", "distribution"]


@st.composite
def networks(draw):
    cin = draw(st.integers(1, 4))
    ch = cin
    layers = []
    for _ in range(draw(st.integers(1, 6))):
        kind = draw(st.sampled_from([CONV, DEPTHWISE, MAXPOOL, RELU, ADD]))
        if kind == ADD:
            candidates = [i for i, layer in enumerate(layers) if layer.out_channels == ch]
            if not candidates:
                continue
            layers.append(add(draw(st.sampled_from(candidates)), ch))
            continue
        if kind == RELU:
            layers.append(relu(ch))
            continue
        k = (draw(st.integers(1, 5)), draw(st.integers(1, 5)))
        s = (draw(st.integers(1, 3)), draw(st.integers(1, 3)))
        d = (draw(st.integers(1, 3)), draw(st.integers(1, 3)))
        pad = draw(st.sampled_from(["valid"] + MODES))
        amounts = draw(st.one_of(st.none(), st.tuples(*[st.integers(0, 3)] * 4)))
        if kind == MAXPOOL:
            layers.append(LayerSpec(MAXPOOL, k, s, (1, 1), _pm(pad, amounts), ch, ch))
        elif kind == DEPTHWISE:
            layers.append(LayerSpec(DEPTHWISE, k, s, d, _pm(pad, amounts), ch, ch))
        else:
            out = draw(st.integers(1, 5))
            layers.append(LayerSpec(CONV, k, s, d, _pm(pad, amounts), ch, out))
            ch = out
    if not layers:
        layers.append(relu(ch))
    return NetworkSpec(cin, tuple(layers), draw(st.text(max_size=8)))


def _pm(mode, amounts):
    return PaddingMode("valid") if mode == "valid" else PaddingMode(mode, amounts)


@settings(max_examples=100)
@given(networks())
def test_parse_serialize_roundtrip(spec):
    assert parse_network(serialize_network(spec)) == spec


# --- weights -----------------------------------------------------------------

def small_net():
    return NetworkSpec(2, (conv(3, 2, 4), relu(4), maxpool(2, 4),
                           LayerSpec(DEPTHWISE, (5, 5), padding=PaddingMode("zero", None),
                                     in_channels=4, out_channels=4)))


def test_weights_roundtrip_bitwise(tmp_path):
    spec = small_net()
    ws = random_weights(spec, seed=3)
    save_weights(ws, tmp_path / "w.padw")
    back = load_weights(tmp_path / "w.padw", spec)
    assert back == ws
    for i in ws:
        assert back[i].weights.tobytes() == ws[i].weights.tobytes()
        assert back[i].biases.tobytes() == ws[i].biases.tobytes()


def test_weights_file_layout(tmp_path):
    ws = WeightSet({0: KernelSet(np.arange(4.0).reshape(1, 1, 2, 2), [9.0])})
    save_weights(ws, tmp_path / "w.padw")
    raw = (tmp_path / "w.padw").read_bytes()
    assert raw[:5] == b"PADW1"
    (n,) = struct.unpack("<Q", raw[5:13])
    manifest = json.loads(raw[13:13 + n])
    assert manifest == [{"layer_index": 0, "out": 1, "in": 1, "kh": 2, "kw": 2,
                         "weight_offset": 0, "bias_offset": 32}]
    assert np.frombuffer(raw[13 + n:], "<f8").tolist() == [0, 1, 2, 3, 9]


def test_truncated_file(tmp_path):
    spec = small_net()
    save_weights(random_weights(spec, 1), tmp_path / "w.padw")
    raw = (tmp_path / "w.padw").read_bytes()
    (tmp_path / "t.padw").write_bytes(raw[:-8])
    with pytest.raises(WeightFormatError, match="blob bytes"):
        load_weights(tmp_path / "t.padw")


def test_bad_magic(tmp_path):
    (tmp_path / "x.padw").write_bytes(b"NOPE!" + bytes(20))
    with pytest.raises(WeightFormatError, match="magic"):
        load_weights(tmp_path / "x.padw")


def test_shape_mismatch(tmp_path):
    k3 = NetworkSpec(1, (conv(3, 1, 1),))
    k5 = NetworkSpec(1, (conv(5, 1, 1),))
    save_weights(random_weights(k3, 0), tmp_path / "w.padw")
    with pytest.raises(WeightFormatError, match="does not match"):
        load_weights(tmp_path / "w.padw", k5)


def test_random_weights_deterministic():
    spec = preset("vgg16")
    assert random_weights(spec, 42) == random_weights(spec, 42)
    assert random_weights(spec, 42) != random_weights(spec, 43)


def test_constant_zero_weights():
    ws = random_weights(small_net(), 0, "constant:0")
    for ks in ws.values():
        assert not ks.weights.any() and not ks.biases.any()


def test_uniform_weights_mean():
    spec = NetworkSpec(1, (conv((100, 100), 1, 1, pad="valid"),))
    w = random_weights(spec, 5, "uniform:0.1")[0]
    assert w.weights.size == 10_000
    # std of U(-0.1, 0.1) is 0.0577; the mean of 1e4 draws has std 5.8e-4
    assert abs(w.weights.mean()) < 0.005
    assert w.weights.min() >= -0.1 and w.weights.max() < 0.1
    assert 0 <= w.biases.min()


def test_depthwise_weight_shape():
    ws = random_weights(small_net(), 0)
    assert ws[3].weights.shape == (4, 1, 5, 5)
