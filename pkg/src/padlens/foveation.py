"""Foveation maps: how many input->output paths start at each input pixel.

All weights are set to one, biases to zero and ReLUs act as identity, so the
effective receptive field of the summed final map reduces to a path count.
Channels are collapsed to one (the true count is the single-channel count
times a spatially constant factor).  Max-pooling is counted by window
membership, i.e. it behaves like sum-pooling with ones.

Counts are float64 and exact while they stay below 2**53.  Partial
convolution and distribution padding produce fractional contributions; for
those, ``exact=True`` runs the same computation in rational arithmetic and
rounds once at the end.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from .convarith import resolve_padding, trace_shapes
from .engine import _taps, forward_arrays, to_fractions, valid_tap_counts
from .netspec import (ADD, CONV, DEPTHWISE, MAXPOOL, RELU, LayerSpec, NetworkSpec,
                      override_padding)
from .padding import PARTIAL_CONV, ZERO, ZERO_FILL_MODES, PaddingMode, pad_adjoint
from .weights import ones_weights

EXACT_LIMIT = 2.0 ** 53


@dataclass(frozen=True, eq=False)
class FoveationMap:
    counts: np.ndarray

    def __post_init__(self):
        c = np.array(self.counts, dtype=np.float64)
        c.setflags(write=False)
        object.__setattr__(self, "counts", c)

    @property
    def height(self) -> int:
        return self.counts.shape[0]

    @property
    def width(self) -> int:
        return self.counts.shape[1]

    @property
    def is_integral(self) -> bool:
        return bool(np.all(self.counts == np.round(self.counts)))

    @property
    def exact(self) -> bool:
        """True when every count is an integer known to be represented exactly."""
        return self.is_integral and float(self.counts.max()) < EXACT_LIMIT

    @property
    def is_uniform(self) -> bool:
        return float(self.counts.max()) == float(self.counts.min())

    def __eq__(self, other):
        if not isinstance(other, FoveationMap):
            return NotImplemented
        return np.array_equal(self.counts, other.counts)


def collapse(spec: NetworkSpec) -> NetworkSpec:
    """Single-channel counting network: every conv/depthwise/pool layer becomes a
    one-channel conv with the same geometry and padding."""
    layers = []
    for layer in spec.layers:
        if layer.kind == MAXPOOL:
            pad = layer.padding
            if pad.mode in ZERO_FILL_MODES and pad.mode != ZERO and (pad.is_same or any(pad.amounts)):
                pad = PaddingMode(ZERO, pad.amounts)
            layer = replace(layer, kind=CONV, padding=pad)
        elif layer.kind == DEPTHWISE:
            layer = replace(layer, kind=CONV)
        layers.append(replace(layer, in_channels=1, out_channels=1))
    return NetworkSpec(1, tuple(layers), spec.name)


def _prepare(spec, padding_override):
    if padding_override is not None:
        spec = override_padding(spec, padding_override)
    return collapse(spec)


def _conv_adjoint(grad, layer: LayerSpec, in_hw):
    amounts = resolve_padding(layer, in_hw)
    top, bottom, left, right = amounts
    out_hw = grad.shape[1:]
    mode = layer.padding.mode
    if mode == PARTIAL_CONV:
        valid = valid_tap_counts(layer, in_hw, amounts, out_hw)
        full = layer.kernel[0] * layer.kernel[1]
        if grad.dtype == object:
            scale = np.array([Fraction(full, int(v)) for v in valid.ravel()],
                             dtype=object).reshape(valid.shape)
        else:
            scale = full / valid
        grad = grad * scale
        mode = ZERO
    padded = np.zeros((grad.shape[0], in_hw[0] + top + bottom, in_hw[1] + left + right),
                      dtype=grad.dtype)
    if grad.dtype == object:
        padded[...] = Fraction(0)
    for _, _, rs, cs in _taps(layer, out_hw):
        padded[:, rs, cs] += grad
    return pad_adjoint(padded, in_hw, mode, amounts)


def foveation_map(spec: NetworkSpec, input_shape, padding_override=None,
                  exact: bool = False) -> FoveationMap:
    """Path counts via one backward sweep.

    Start from ones over the final map and apply the transpose of each layer:
    all-ones transposed convolution, then the padding transpose, which hands
    the credit of every padded cell to the pixel it was copied from.  Skip
    connections send their credit down both branches.
    """
    net = _prepare(spec, padding_override)
    trace = trace_shapes(net, input_shape)
    n = len(net.layers)
    one = Fraction(1) if exact else 1.0
    out_shape = (1,) + trace.output_shape
    start = np.empty(out_shape, dtype=object) if exact else np.empty(out_shape)
    start[...] = one
    grads = {n - 1: start}
    for i in range(n - 1, -1, -1):
        g = grads.pop(i)
        layer = net.layers[i]
        if layer.kind == CONV:
            g = _conv_adjoint(g, layer, trace.layer_input(i))
        elif layer.kind == ADD:
            j = layer.add_from
            grads[j] = grads[j] + g if j in grads else g
        elif layer.kind != RELU:
            raise ValueError(f"unexpected layer kind {layer.kind}")
        if i > 0:
            grads[i - 1] = grads[i - 1] + g if i - 1 in grads else g
        else:
            result = g
    counts = result[0]
    if exact:
        counts = np.array([float(v) for v in counts.ravel()]).reshape(counts.shape)
    return FoveationMap(counts)


def _batched(net: NetworkSpec, n: int) -> NetworkSpec:
    """Depthwise copy of ``net`` carrying ``n`` independent channels."""
    layers = []
    for layer in net.layers:
        kind = DEPTHWISE if layer.kind == CONV else layer.kind
        layers.append(replace(layer, kind=kind, in_channels=n, out_channels=n))
    return NetworkSpec(n, tuple(layers), net.name)


def oracle_foveation(spec: NetworkSpec, input_shape, padding_override=None,
                     exact: bool = False) -> FoveationMap:
    """Brute-force path counts by forward propagation.

    For every pixel p a one-hot image at p is pushed through the counting
    network and the final map is summed.  All one-hot images travel together
    as the channels of a depthwise copy of the network, which keeps them
    independent.  Intended for small inputs.
    """
    net = _prepare(spec, padding_override)
    h, w = (int(v) for v in input_shape)
    n = h * w
    batched = _batched(net, n)
    x = np.eye(n).reshape(n, h, w)
    weights = ones_weights(batched)
    if exact:
        x = to_fractions(x)
    final = forward_arrays(batched, weights, x)[-1]
    if exact:
        counts = np.array([float(sum(final[c].ravel().tolist(), Fraction(0))) for c in range(n)])
    else:
        counts = final.reshape(n, -1).sum(axis=1)
    return FoveationMap(counts.reshape(h, w))


def uniformity_stats(fmap: FoveationMap) -> dict:
    c = fmap.counts
    lo, hi, mean = float(c.min()), float(c.max()), float(c.mean())
    return {"min": lo, "max": hi, "mean": mean,
            "relative_spread": (hi - lo) / mean if mean else 0.0}


def plateau_value(spec: NetworkSpec) -> int:
    """Interior count of an unbounded input: product of kernel tap counts."""
    total = 1
    for layer in collapse(spec).layers:
        if layer.kind == CONV:
            total *= layer.kernel[0] * layer.kernel[1]
    return total
