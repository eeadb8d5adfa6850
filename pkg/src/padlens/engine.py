"""Forward execution of a NetworkSpec on feature maps.

Convolution is cross-correlation (no kernel flip).  The array-level helpers
accept float64 arrays or object arrays of :class:`fractions.Fraction`; the
latter give exact rational results for the foveation oracle.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .convarith import ShapeError, output_shape, resolve_padding
from .netspec import ADD, CONV, DEPTHWISE, MAXPOOL, RELU, LayerSpec, NetworkSpec
from .padding import PARTIAL_CONV, ZERO, ZERO_FILL_MODES, pad_array
from .tensor import FeatureMap, KernelSet, as_feature_map


def _taps(layer: LayerSpec, out_hw):
    """Yield (i, j, row_slice, col_slice) for every kernel tap."""
    (kh, kw), (sh, sw), (dh, dw) = layer.kernel, layer.stride, layer.dilation
    ho, wo = out_hw
    for i in range(kh):
        rows = slice(i * dh, i * dh + sh * (ho - 1) + 1, sh)
        for j in range(kw):
            yield i, j, rows, slice(j * dw, j * dw + sw * (wo - 1) + 1, sw)


def _exact(x) -> bool:
    return x.dtype == object


def to_fractions(a) -> np.ndarray:
    a = np.asarray(a)
    return np.array([Fraction(v) for v in a.ravel().tolist()], dtype=object).reshape(a.shape)


def _zeros(shape, like):
    if _exact(like):
        out = np.empty(shape, dtype=object)
        out[...] = Fraction(0)
        return out
    return np.zeros(shape)


def _correlate(xp, weights, layer, out_hw):
    """Bias-free valid cross-correlation of an already padded (C, Hp, Wp) array."""
    n_out = weights.shape[0]
    out = _zeros((n_out,) + tuple(out_hw), xp)
    depthwise = layer.kind == DEPTHWISE
    for i, j, rs, cs in _taps(layer, out_hw):
        patch = xp[:, rs, cs]
        if depthwise:
            out += weights[:, 0, i, j][:, None, None] * patch
        else:
            out += np.tensordot(weights[:, :, i, j], patch, axes=(1, 0))
    return out


def _check_input(x, kernels: KernelSet, layer: LayerSpec):
    cin = x.shape[0]
    want = kernels.out_channels if layer.kind == DEPTHWISE else kernels.in_channels
    if cin != want:
        raise ShapeError(f"map has {cin} channels, kernels expect {want}")
    if (kernels.kernel_h, kernels.kernel_w) != tuple(layer.kernel):
        raise ShapeError(f"kernel shape {(kernels.kernel_h, kernels.kernel_w)} "
                         f"does not match layer kernel {tuple(layer.kernel)}")


def _weights_of(kernels: KernelSet, exact: bool):
    if exact:
        return to_fractions(kernels.weights), to_fractions(kernels.biases)
    return kernels.weights, kernels.biases


def valid_tap_counts(layer: LayerSpec, in_hw, amounts, out_hw) -> np.ndarray:
    """Number of kernel taps landing inside the image, per output position."""
    mask = np.ones((1,) + tuple(in_hw), dtype=np.int64)
    mp = pad_array(mask, ZERO, amounts, fill=0)
    counts = np.zeros(tuple(out_hw), dtype=np.int64)
    for _, _, rs, cs in _taps(layer, out_hw):
        counts += mp[0, rs, cs]
    return counts


def conv_array(x, kernels: KernelSet, layer: LayerSpec):
    if layer.padding.mode == PARTIAL_CONV:
        return partial_conv_array(x, kernels, layer)
    _check_input(x, kernels, layer)
    in_hw = x.shape[1:]
    amounts = resolve_padding(layer, in_hw)
    out_hw = output_shape(layer, in_hw)
    w, b = _weights_of(kernels, _exact(x))
    xp = pad_array(x, layer.padding.mode, amounts, fill=Fraction(0) if _exact(x) else 0.0)
    return _correlate(xp, w, layer, out_hw) + b[:, None, None]


def partial_conv_array(x, kernels: KernelSet, layer: LayerSpec):
    _check_input(x, kernels, layer)
    in_hw = x.shape[1:]
    amounts = resolve_padding(layer, in_hw)
    out_hw = output_shape(layer, in_hw)
    exact = _exact(x)
    w, b = _weights_of(kernels, exact)
    xp = pad_array(x, ZERO, amounts, fill=Fraction(0) if exact else 0.0)
    raw = _correlate(xp, w, layer, out_hw)
    valid = valid_tap_counts(layer, in_hw, amounts, out_hw)
    if np.any(valid == 0):
        raise ShapeError("partial convolution window lies entirely in the padding")
    full = layer.kernel[0] * layer.kernel[1]
    if exact:
        scale = np.array([Fraction(full, int(v)) for v in valid.ravel()],
                         dtype=object).reshape(valid.shape)
    else:
        scale = full / valid
    return raw * scale + b[:, None, None]


def maxpool_array(x, layer: LayerSpec):
    in_hw = x.shape[1:]
    amounts = resolve_padding(layer, in_hw)
    out_hw = output_shape(layer, in_hw)
    mode = layer.padding.mode
    if mode in ZERO_FILL_MODES:
        xp = pad_array(x, ZERO, amounts, fill=-np.inf)
    else:
        xp = pad_array(x, mode, amounts)
    out = None
    for _, _, rs, cs in _taps(layer, out_hw):
        patch = xp[:, rs, cs]
        out = patch.copy() if out is None else np.maximum(out, patch)
    return out


def relu_array(x):
    if _exact(x):
        return np.where(x > 0, x, Fraction(0))
    return np.maximum(x, 0.0)


def conv2d(fmap, kernels: KernelSet, layer: LayerSpec) -> FeatureMap:
    """Cross-correlate with bias under the layer's padding.

    ``out[o, y, x] = bias[o] + sum_{c,i,j} W[o,c,i,j] * padded[c, y*s + i*d, x*s + j*d]``.
    Layers padded with ``partial_conv`` are routed to :func:`partial_conv2d`.
    """
    return FeatureMap(conv_array(as_feature_map(fmap).data, kernels, layer))


def partial_conv2d(fmap, kernels: KernelSet, layer: LayerSpec) -> FeatureMap:
    """Zero-padded convolution whose window sums are rescaled by
    (window size / in-image taps); the bias is added after rescaling."""
    return FeatureMap(partial_conv_array(as_feature_map(fmap).data, kernels, layer))


def maxpool(fmap, layer: LayerSpec) -> FeatureMap:
    """Windowed maximum.  Zero-style padding never wins (it is -inf here)."""
    return FeatureMap(maxpool_array(as_feature_map(fmap).data, layer))


def relu(fmap) -> FeatureMap:
    return FeatureMap(relu_array(as_feature_map(fmap).data))


def forward_arrays(spec: NetworkSpec, weights, x):
    """Run every layer on a (C, H, W) array and return all layer outputs."""
    if x.shape[0] != spec.input_channels:
        raise ShapeError(f"input has {x.shape[0]} channels, network expects {spec.input_channels}")
    outputs = []
    cur = x
    for i, layer in enumerate(spec.layers):
        try:
            if layer.kind in (CONV, DEPTHWISE):
                cur = conv_array(cur, weights[i], layer)
            elif layer.kind == MAXPOOL:
                cur = maxpool_array(cur, layer)
            elif layer.kind == RELU:
                cur = relu_array(cur)
            elif layer.kind == ADD:
                other = outputs[layer.add_from]
                if other.shape != cur.shape:
                    raise ShapeError(f"cannot add layer {layer.add_from} output {other.shape} "
                                     f"to {cur.shape}")
                cur = cur + other
        except ShapeError as e:
            if e.layer is None:
                raise ShapeError(str(e), i) from None
            raise
        except KeyError:
            raise ShapeError("no weights for this layer", i) from None
        outputs.append(cur)
    return outputs


def forward(spec: NetworkSpec, weights, fmap, record: str = "all") -> list[FeatureMap]:
    """Apply the network to ``fmap``.

    ``record="all"`` returns one map per layer, ``"last"`` only the final one.
    """
    if record not in ("all", "last"):
        raise ValueError(f"record must be 'all' or 'last', got {record!r}")
    outs = forward_arrays(spec, weights, as_feature_map(fmap).data)
    if record == "last":
        outs = outs[-1:]
    return [FeatureMap(o) for o in outs]
