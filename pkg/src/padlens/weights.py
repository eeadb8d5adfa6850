"""Per-layer kernel sets, the PADW1 weight file, and random initialisation.

PADW1 layout::

    b"PADW1"                       5-byte magic
    <u64 little-endian>            manifest length in bytes
    manifest                       UTF-8 JSON list, one entry per weighted layer:
                                   {layer_index, out, in, kh, kw,
                                    weight_offset, bias_offset}
    blobs                          little-endian float64; offsets are relative
                                   to the first blob byte; weights are stored
                                   in (out, in, kh, kw) order
"""

from __future__ import annotations

import json
import struct
from collections.abc import Mapping

import numpy as np

from .netspec import DEPTHWISE, WEIGHTED_KINDS, NetworkSpec
from .tensor import KernelSet

MAGIC = b"PADW1"
_F64 = np.dtype("<f8")


class WeightFormatError(ValueError):
    pass


class WeightSet(Mapping):
    """Read-only mapping from layer index to :class:`KernelSet`."""

    def __init__(self, kernels):
        self._kernels = {int(i): k for i, k in sorted(dict(kernels).items())}

    def __getitem__(self, index):
        return self._kernels[index]

    def __iter__(self):
        return iter(self._kernels)

    def __len__(self):
        return len(self._kernels)

    def __eq__(self, other):
        if not isinstance(other, WeightSet):
            return NotImplemented
        return self._kernels.keys() == other._kernels.keys() and all(
            self._kernels[i] == other._kernels[i] for i in self._kernels)

    def __repr__(self):
        return f"WeightSet(layers={list(self._kernels)})"


def expected_shape(layer) -> tuple[int, int, int, int]:
    cin = 1 if layer.kind == DEPTHWISE else layer.in_channels
    return (layer.out_channels, cin) + tuple(layer.kernel)


def check_weights(spec: NetworkSpec, ws: WeightSet) -> None:
    wanted = {i for i, layer in enumerate(spec.layers) if layer.kind in WEIGHTED_KINDS}
    missing = wanted - set(ws)
    if missing:
        raise WeightFormatError(f"no weights for layers {sorted(missing)}")
    extra = set(ws) - wanted
    if extra:
        raise WeightFormatError(f"weights given for non-conv layers {sorted(extra)}")
    for i in sorted(wanted):
        shape = expected_shape(spec.layers[i])
        if ws[i].weights.shape != shape:
            raise WeightFormatError(
                f"layer {i}: weight shape {ws[i].weights.shape} does not match "
                f"the network's {shape}")


def save_weights(ws: WeightSet, path) -> None:
    manifest = []
    blobs = []
    offset = 0
    for i, ks in ws.items():
        w = np.ascontiguousarray(ks.weights, dtype=_F64).tobytes()
        b = np.ascontiguousarray(ks.biases, dtype=_F64).tobytes()
        out, cin, kh, kw = ks.weights.shape
        manifest.append({"layer_index": i, "out": out, "in": cin, "kh": kh, "kw": kw,
                         "weight_offset": offset, "bias_offset": offset + len(w)})
        blobs += [w, b]
        offset += len(w) + len(b)
    head = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<Q", len(head)))
        f.write(head)
        for blob in blobs:
            f.write(blob)


def load_weights(path, spec: NetworkSpec | None = None) -> WeightSet:
    with open(path, "rb") as f:
        raw = f.read()
    if raw[:5] != MAGIC:
        raise WeightFormatError(f"{path}: bad magic, not a PADW1 file")
    if len(raw) < 13:
        raise WeightFormatError(f"{path}: truncated header")
    (n,) = struct.unpack("<Q", raw[5:13])
    if 13 + n > len(raw):
        raise WeightFormatError(f"{path}: manifest length {n} runs past end of file")
    try:
        manifest = json.loads(raw[13:13 + n].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise WeightFormatError(f"{path}: unreadable manifest ({e})") from None
    blob = raw[13 + n:]
    try:
        expected = sum(8 * (e["out"] * e["in"] * e["kh"] * e["kw"] + e["out"]) for e in manifest)
    except (KeyError, TypeError):
        raise WeightFormatError(f"{path}: malformed manifest entry") from None
    if expected != len(blob):
        raise WeightFormatError(
            f"{path}: manifest describes {expected} blob bytes, file holds {len(blob)}")
    kernels = {}
    for e in manifest:
        shape = (e["out"], e["in"], e["kh"], e["kw"])
        try:
            w = np.frombuffer(blob, _F64, int(np.prod(shape)), e["weight_offset"])
            b = np.frombuffer(blob, _F64, e["out"], e["bias_offset"])
        except (KeyError, ValueError):
            raise WeightFormatError(f"{path}: layer {e['layer_index']} blob offsets out of range") from None
        kernels[e["layer_index"]] = KernelSet(w.reshape(shape).astype(np.float64), b.astype(np.float64))
    ws = WeightSet(kernels)
    if spec is not None:
        check_weights(spec, ws)
    return ws


def parse_distribution(dist):
    """``"uniform"``, ``"uniform:a"``, ``"constant:c"`` or a (name, value) tuple."""
    if isinstance(dist, str):
        name, _, value = dist.partition(":")
        dist = (name, float(value) if value else None)
    name, value = dist
    if name == "uniform":
        return "uniform", 0.1 if value is None else float(value)
    if name == "constant":
        return "constant", 0.0 if value is None else float(value)
    raise ValueError(f"unknown weight distribution {name!r}")


def random_weights(spec: NetworkSpec, seed=0, distribution="uniform") -> WeightSet:
    """Weights for every conv layer of ``spec``.

    ``uniform:a`` draws weights from U(-a, a) and biases from U(0, a);
    ``constant:c`` sets everything to c.
    """
    name, value = parse_distribution(distribution)
    rng = np.random.default_rng(seed)
    kernels = {}
    for i, layer in enumerate(spec.layers):
        if layer.kind not in WEIGHTED_KINDS:
            continue
        shape = expected_shape(layer)
        if name == "constant":
            kernels[i] = KernelSet(np.full(shape, value), np.full(shape[0], value))
        else:
            w = rng.uniform(-value, value, size=shape)
            b = rng.uniform(0.0, value, size=shape[0])
            kernels[i] = KernelSet(w, b)
    return WeightSet(kernels)


def ones_weights(spec: NetworkSpec) -> WeightSet:
    """All-ones kernels with zero biases."""
    return WeightSet({i: KernelSet(np.ones(expected_shape(layer)), np.zeros(layer.out_channels))
                      for i, layer in enumerate(spec.layers) if layer.kind in WEIGHTED_KINDS})
