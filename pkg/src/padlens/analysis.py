"""Kernel asymmetry metrics and feature-map artifact probes."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .convarith import resolve_padding, trace_shapes
from .engine import forward_arrays
from .netspec import NetworkSpec, WEIGHTED_KINDS, override_padding
from .tensor import FeatureMap, accumulate_mean, channel_mean

DEFAULT_SAMPLES = 30
DEFAULT_Z = 4.0


@dataclass(frozen=True)
class AsymmetryScore:
    horizontal: float
    vertical: float
    kernel: np.ndarray


def mean_kernel(weights, layer_index: int) -> np.ndarray:
    """Average (kh, kw) kernel of a layer over all output and input channels."""
    try:
        ks = weights[layer_index]
    except KeyError:
        raise ValueError(f"layer {layer_index} has no kernels") from None
    return ks.weights.mean(axis=(0, 1))


def asymmetry(kernel) -> AsymmetryScore:
    """Mirror asymmetry of a kernel about its vertical and horizontal axes.

    ``horizontal`` compares K with its left-right mirror, ``vertical`` with its
    top-bottom mirror; both are sum|K - mirror| / (2 sum|K|), 0 for a zero
    kernel.
    """
    k = np.asarray(kernel, dtype=np.float64)
    mass = np.abs(k).sum()
    if mass == 0:
        return AsymmetryScore(0.0, 0.0, k)
    horiz = np.abs(k - k[:, ::-1]).sum() / (2 * mass)
    vert = np.abs(k - k[::-1, :]).sum() / (2 * mass)
    return AsymmetryScore(float(horiz), float(vert), k)


def asymmetry_sweep(weights, spec: NetworkSpec) -> list[dict]:
    """One row (layer, kh, kw, horiz, vert) per layer with a spatial kernel."""
    rows = []
    for i, layer in enumerate(spec.layers):
        if layer.kind not in WEIGHTED_KINDS or layer.kernel == (1, 1):
            continue
        score = asymmetry(mean_kernel(weights, i))
        rows.append({"layer": i, "kh": layer.kernel[0], "kw": layer.kernel[1],
                     "horiz": score.horizontal, "vert": score.vertical})
    return rows


def format_asymmetry_csv(rows) -> str:
    lines = ["layer,kh,kw,horiz,vert"]
    for r in rows:
        lines.append(f"{r['layer']},{r['kh']},{r['kw']},{r['horiz']:.17g},{r['vert']:.17g}")
    return "\n".join(lines) + "\n"


# --- artifact probes ---------------------------------------------------------

@dataclass(frozen=True)
class LineFlags:
    rows: tuple[int, ...]
    cols: tuple[int, ...]
    row_z: np.ndarray
    col_z: np.ndarray
    margin: int

    def __bool__(self):
        return bool(self.rows or self.cols)


def border_profile(mean_map) -> np.ndarray:
    """Mean activation of each ring at distance 0, 1, ... from the border."""
    m = np.asarray(mean_map, dtype=np.float64)
    if m.ndim == 3:
        m = m[0]
    h, w = m.shape
    y, x = np.mgrid[0:h, 0:w]
    dist = np.minimum(np.minimum(y, x), np.minimum(h - 1 - y, w - 1 - x))
    return np.array([m[dist == d].mean() for d in range(min(h, w) // 2)])


def line_artifact_flags(mean_map, z_threshold: float = DEFAULT_Z, margin: int | None = None) -> LineFlags:
    """Flag rows/columns whose mean departs from the interior baseline.

    The baseline is the mean and standard deviation of the central region left
    after removing ``margin`` pixels on every side (capped at a quarter of the
    shorter side).  Row means are taken over the central columns and column
    means over the central rows, so a deviating left/right border does not
    leak into every row.
    """
    m = np.asarray(mean_map, dtype=np.float64)
    if m.ndim == 3:
        m = m[0]
    h, w = m.shape
    cap = min(h, w) // 4
    margin = cap if margin is None else max(0, min(int(margin), cap))
    center = m[margin:h - margin, margin:w - margin]
    base = center.mean()
    std = max(center.std(), 1e-12 * (1.0 + abs(base)))
    row_z = np.abs(m[:, margin:w - margin].mean(axis=1) - base) / std
    col_z = np.abs(m[margin:h - margin, :].mean(axis=0) - base) / std
    return LineFlags(tuple(int(i) for i in np.nonzero(row_z > z_threshold)[0]),
                     tuple(int(i) for i in np.nonzero(col_z > z_threshold)[0]),
                     row_z, col_z, margin)


def border_depths(spec: NetworkSpec, input_shape) -> list[int]:
    """Per layer, how many pixels from the border can be reached by padding
    (in that layer's own output coordinates)."""
    trace = trace_shapes(spec, input_shape)
    depth = 0
    depths = []
    for i, layer in enumerate(spec.layers):
        if layer.is_spatial:
            top, bottom, left, right = resolve_padding(layer, trace.layer_input(i))
            reach = max(top, bottom, left, right)
            depth = math.ceil((depth + reach) / max(layer.stride))
        depths.append(depth)
    return depths


@dataclass(frozen=True)
class LayerArtifacts:
    index: int
    kind: str
    mean_map: FeatureMap
    profile: np.ndarray
    flags: LineFlags


@dataclass(frozen=True)
class ArtifactReport:
    network: str
    input_mode: str
    samples: int
    layers: tuple[LayerArtifacts, ...]

    @property
    def flagged(self) -> bool:
        return any(layer.flags for layer in self.layers)

    def summary(self) -> dict:
        return {
            "network": self.network,
            "input_mode": self.input_mode,
            "samples": self.samples,
            "flagged": self.flagged,
            "layers": [{
                "index": la.index,
                "kind": la.kind,
                "shape": [la.mean_map.height, la.mean_map.width],
                "margin": la.flags.margin,
                "flagged_rows": list(la.flags.rows),
                "flagged_cols": list(la.flags.cols),
                "profile": [float(v) for v in la.profile],
            } for la in self.layers],
        }


def probe_inputs(spec: NetworkSpec, input_shape, input_mode="zeros", seed: int = 0) -> list[np.ndarray]:
    """Input samples for a probe.

    ``input_mode`` is ``"zeros"``, ``"const:c"`` or ``"random:n"`` (n samples
    uniform on [0, 1), drawn in order from one generator seeded with ``seed``).
    """
    shape = (spec.input_channels,) + tuple(int(v) for v in input_shape)
    name, value = parse_input_mode(input_mode)
    if name == "zeros":
        return [np.zeros(shape)]
    if name == "const":
        return [np.full(shape, value)]
    rng = np.random.default_rng(seed)
    return [rng.random(shape) for _ in range(value)]


def parse_input_mode(input_mode) -> tuple[str, float | int | None]:
    name, _, arg = str(input_mode).partition(":")
    try:
        if name == "zeros" and not arg:
            return "zeros", None
        if name in ("const", "constant"):
            return "const", float(arg or 0.0)
        if name == "random":
            n = int(arg) if arg else DEFAULT_SAMPLES
            if n >= 1:
                return "random", n
    except ValueError:
        pass
    raise ValueError(f"bad probe input mode {input_mode!r}; expected zeros, const:c or random:n")


def artifact_probe(spec: NetworkSpec, weights, input_shape=None, input_mode="zeros",
                   padding_override=None, seed: int = 0, inputs=None,
                   z_threshold: float = DEFAULT_Z) -> ArtifactReport:
    """Channel-averaged feature maps per layer, averaged over input samples,
    with border profiles and line-artifact flags.

    Pass ``inputs`` (a list of (C, H, W) arrays) to probe explicit samples
    instead of generating them from ``input_mode``.
    """
    if padding_override is not None:
        spec = override_padding(spec, padding_override)
    if inputs is None:
        inputs = probe_inputs(spec, input_shape, input_mode, seed)
        label = str(input_mode)
    else:
        inputs = [np.asarray(x, dtype=np.float64) for x in inputs]
        label = "explicit"
    input_shape = inputs[0].shape[1:]
    per_layer = [[] for _ in spec.layers]
    for x in inputs:
        for i, out in enumerate(forward_arrays(spec, weights, x)):
            per_layer[i].append(channel_mean(out))
    depths = border_depths(spec, input_shape)
    layers = []
    for i, maps in enumerate(per_layer):
        mean = accumulate_mean(maps)
        layers.append(LayerArtifacts(i, spec.layers[i].kind, mean, border_profile(mean.data),
                                     line_artifact_flags(mean.data, z_threshold, depths[i])))
    return ArtifactReport(spec.name, label, len(inputs), tuple(layers))
