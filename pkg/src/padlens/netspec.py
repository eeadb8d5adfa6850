"""Declarative network descriptions and their JSON config format."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from .padding import (FULL, MODE_TO_CONFIG, VALID, ZERO_FILL_MODES, PaddingError,
                      PaddingMode, full_amounts, parse_mode)

CONV = "conv"
DEPTHWISE = "depthwise_conv"
MAXPOOL = "maxpool"
RELU = "relu"
ADD = "add"

KINDS = (CONV, DEPTHWISE, MAXPOOL, RELU, ADD)
SPATIAL_KINDS = (CONV, DEPTHWISE, MAXPOOL)
WEIGHTED_KINDS = (CONV, DEPTHWISE)


class NetworkSpecError(ValueError):
    """Invalid network description.  ``layer`` is the offending index, if any."""

    def __init__(self, message, layer=None):
        self.layer = layer
        if layer is not None:
            message = f"layer {layer}: {message}"
        super().__init__(message)


def _pair(v, name="value"):
    if isinstance(v, bool):
        raise NetworkSpecError(f"{name} must be an int or [h, w]")
    if isinstance(v, int):
        return (v, v)
    try:
        a, b = v
    except (TypeError, ValueError):
        raise NetworkSpecError(f"{name} must be an int or [h, w], got {v!r}") from None
    if not (isinstance(a, int) and isinstance(b, int)) or isinstance(a, bool) or isinstance(b, bool):
        raise NetworkSpecError(f"{name} must hold integers, got {v!r}")
    return (a, b)


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    kernel: tuple[int, int] = (1, 1)
    stride: tuple[int, int] = (1, 1)
    dilation: tuple[int, int] = (1, 1)
    padding: PaddingMode = field(default_factory=PaddingMode)
    in_channels: int = 0
    out_channels: int = 0
    add_from: int | None = None

    @property
    def is_spatial(self) -> bool:
        return self.kind in SPATIAL_KINDS

    @property
    def is_downsampling(self) -> bool:
        return self.is_spatial and max(self.stride) > 1

    @property
    def effective_kernel(self) -> tuple[int, int]:
        return tuple(d * (k - 1) + 1 for k, d in zip(self.kernel, self.dilation))


@dataclass(frozen=True)
class NetworkSpec:
    input_channels: int
    layers: tuple[LayerSpec, ...]
    name: str = "network"

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        validate(self)

    def __len__(self):
        return len(self.layers)

    @property
    def downsampling_layers(self) -> list[int]:
        return [i for i, layer in enumerate(self.layers) if layer.is_downsampling]

    @property
    def output_channels(self) -> int:
        return self.layers[-1].out_channels


def validate(spec: NetworkSpec) -> None:
    if spec.input_channels < 1:
        raise NetworkSpecError("input_channels must be >= 1")
    if not spec.layers:
        raise NetworkSpecError("a network needs at least one layer")
    channels = spec.input_channels
    for i, layer in enumerate(spec.layers):
        if layer.kind not in KINDS:
            raise NetworkSpecError(f"unknown layer kind {layer.kind!r}", i)
        if layer.is_spatial:
            for name, v in (("kernel", layer.kernel), ("stride", layer.stride),
                            ("dilation", layer.dilation)):
                if min(v) < 1:
                    raise NetworkSpecError(f"{name} must be >= 1, got {v}", i)
            if layer.padding.mode == FULL and layer.padding.amounts is not None:
                if layer.padding.amounts != full_amounts(layer.kernel, layer.dilation):
                    raise NetworkSpecError("full padding amounts must equal effective kernel - 1", i)
        if layer.in_channels != channels:
            raise NetworkSpecError(
                f"expects {layer.in_channels} input channels, previous layer gives {channels}", i)
        if layer.kind == DEPTHWISE and layer.out_channels != layer.in_channels:
            raise NetworkSpecError("depthwise_conv needs out_channels == in_channels", i)
        if layer.kind in (MAXPOOL, RELU, ADD) and layer.out_channels != layer.in_channels:
            raise NetworkSpecError(f"{layer.kind} cannot change the channel count", i)
        if layer.kind == ADD:
            j = layer.add_from
            if j is None or not 0 <= j < i:
                raise NetworkSpecError(f"add_from must reference an earlier layer, got {j}", i)
            if spec.layers[j].out_channels != channels:
                raise NetworkSpecError(
                    f"add_from layer {j} has {spec.layers[j].out_channels} channels, "
                    f"expected {channels}", i)
        elif layer.add_from is not None:
            raise NetworkSpecError("only add layers take add_from", i)
        if layer.out_channels < 1:
            raise NetworkSpecError("out_channels must be >= 1", i)
        channels = layer.out_channels


def conv(k, cin, cout, s=1, d=1, pad="zero", amounts=None) -> LayerSpec:
    """Shorthand for building conv layers in code.  ``amounts=None`` means SAME
    (or no padding for ``pad="valid"``)."""
    return _spatial(CONV, k, s, d, pad, amounts, cin, cout)


def depthwise(k, channels, s=1, d=1, pad="zero", amounts=None) -> LayerSpec:
    return _spatial(DEPTHWISE, k, s, d, pad, amounts, channels, channels)


def maxpool(k, channels, s=None, pad="valid", amounts=None) -> LayerSpec:
    return _spatial(MAXPOOL, k, k if s is None else s, 1, pad, amounts, channels, channels)


def relu(channels) -> LayerSpec:
    return LayerSpec(RELU, in_channels=channels, out_channels=channels)


def add(add_from, channels) -> LayerSpec:
    return LayerSpec(ADD, in_channels=channels, out_channels=channels, add_from=add_from)


def _spatial(kind, k, s, d, pad, amounts, cin, cout):
    mode = parse_mode(pad)
    if mode == VALID:
        padding = PaddingMode(VALID)
    elif isinstance(amounts, int):
        padding = PaddingMode(mode, (amounts,) * 4)
    else:
        padding = PaddingMode(mode, amounts)
    return LayerSpec(kind, _pair(k), _pair(s), _pair(d), padding, cin, cout)


def override_padding(spec: NetworkSpec, mode) -> NetworkSpec:
    """Swap the padding algorithm of a network.

    ``valid`` and ``full`` rewrite the amounts of conv layers only.  Any other
    mode replaces the algorithm on every layer that pads, keeping its amounts.
    Max-pooling treats partial-conv padding like zero padding.
    """
    mode = parse_mode(mode)
    layers = []
    for layer in spec.layers:
        if layer.is_spatial:
            pads = layer.padding.is_same or any(layer.padding.amounts)
            if mode == VALID and layer.kind != MAXPOOL:
                layer = replace(layer, padding=PaddingMode(VALID))
            elif mode == FULL and layer.kind != MAXPOOL:
                layer = replace(layer, padding=PaddingMode(FULL, full_amounts(layer.kernel, layer.dilation)))
            elif mode not in (VALID, FULL) and pads:
                layer = replace(layer, padding=PaddingMode(mode, layer.padding.amounts))
        layers.append(layer)
    return NetworkSpec(spec.input_channels, tuple(layers), spec.name)


def uses_zero_fill(layer: LayerSpec) -> bool:
    return layer.padding.mode in ZERO_FILL_MODES


# --- JSON config -------------------------------------------------------------

def _parse_layer(i, obj, channels):
    if not isinstance(obj, dict):
        raise NetworkSpecError("layer entry must be an object", i)
    kind = obj.get("kind")
    if kind == "add_from":
        kind = ADD
    if kind not in KINDS:
        raise NetworkSpecError(f"unknown layer kind {kind!r}", i)
    try:
        if kind in (RELU, ADD):
            cin = obj.get("in", channels)
            cout = obj.get("out", cin)
            add_from = obj.get("add_from") if kind == ADD else None
            if kind == ADD and not isinstance(add_from, int):
                raise NetworkSpecError("add layer needs an integer add_from", i)
            return LayerSpec(kind, in_channels=cin, out_channels=cout, add_from=add_from)
        if "k" not in obj:
            raise NetworkSpecError(f"{kind} layer needs a kernel size 'k'", i)
        kernel = _pair(obj["k"], "k")
        stride = _pair(obj.get("s", 1), "s")
        dilation = _pair(obj.get("d", 1), "d")
        padding = _parse_pad(obj.get("pad", {"mode": "valid"}), kernel, dilation)
        if kind == CONV:
            if "in" not in obj or "out" not in obj:
                raise NetworkSpecError("conv layer needs 'in' and 'out'", i)
            cin, cout = obj["in"], obj["out"]
        else:
            cin = obj.get("in", channels)
            cout = obj.get("out", cin)
        if not all(isinstance(c, int) and not isinstance(c, bool) for c in (cin, cout)):
            raise NetworkSpecError("channel counts must be integers", i)
        return LayerSpec(kind, kernel, stride, dilation, padding, cin, cout)
    except NetworkSpecError as e:
        if e.layer is None:
            raise NetworkSpecError(str(e), i) from None
        raise
    except PaddingError as e:
        raise NetworkSpecError(str(e), i) from None


def _parse_pad(obj, kernel, dilation):
    if isinstance(obj, str):
        obj = {"mode": obj}
    if not isinstance(obj, dict) or "mode" not in obj:
        raise NetworkSpecError("pad must be an object with a 'mode'")
    mode = parse_mode(obj["mode"])
    amount = obj.get("amount")
    if mode == VALID:
        if amount not in (None, 0, [0, 0, 0, 0]):
            raise NetworkSpecError("valid padding takes no amount")
        return PaddingMode(VALID)
    if mode == FULL and amount in (None, "same"):
        return PaddingMode(FULL, full_amounts(kernel, dilation))
    if amount is None or amount == "same":
        return PaddingMode(mode, None)
    if isinstance(amount, int) and not isinstance(amount, bool):
        return PaddingMode(mode, (amount,) * 4)
    if isinstance(amount, list) and len(amount) == 4 and all(isinstance(a, int) for a in amount):
        return PaddingMode(mode, tuple(amount))
    raise NetworkSpecError(f"pad amount must be 'same' or [top, bottom, left, right], got {amount!r}")


def network_from_dict(obj) -> NetworkSpec:
    if not isinstance(obj, dict):
        raise NetworkSpecError("network config must be a JSON object")
    layers_obj = obj.get("layers")
    if not isinstance(layers_obj, list) or not layers_obj:
        raise NetworkSpecError("'layers' must be a non-empty list")
    channels = obj.get("input_channels")
    if not isinstance(channels, int) or isinstance(channels, bool):
        raise NetworkSpecError("'input_channels' must be an integer")
    layers = []
    for i, lobj in enumerate(layers_obj):
        layer = _parse_layer(i, lobj, channels)
        layers.append(layer)
        channels = layer.out_channels
    return NetworkSpec(obj["input_channels"], tuple(layers), str(obj.get("name", "network")))


def parse_network(text: str) -> NetworkSpec:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise NetworkSpecError(f"malformed JSON: {e}") from None
    return network_from_dict(obj)


def load_network(path) -> NetworkSpec:
    with open(path, encoding="utf-8") as f:
        return parse_network(f.read())


def layer_to_dict(layer: LayerSpec) -> dict:
    if layer.kind == RELU:
        return {"kind": RELU}
    if layer.kind == ADD:
        return {"kind": ADD, "add_from": layer.add_from}
    pad = {"mode": MODE_TO_CONFIG[layer.padding.mode]}
    if layer.padding.mode != VALID:
        amounts = layer.padding.amounts
        pad["amount"] = "same" if amounts is None else list(amounts)
    d = {"kind": layer.kind, "k": list(layer.kernel), "s": list(layer.stride),
         "d": list(layer.dilation), "pad": pad}
    if layer.kind != MAXPOOL:
        d["in"] = layer.in_channels
        d["out"] = layer.out_channels
    return d


def network_to_dict(spec: NetworkSpec) -> dict:
    return {"name": spec.name, "input_channels": spec.input_channels,
            "layers": [layer_to_dict(layer) for layer in spec.layers]}


def serialize_network(spec: NetworkSpec, indent=None) -> str:
    return json.dumps(network_to_dict(spec), indent=indent)
