"""Convolution shape arithmetic and the even-padding audit.

For a layer with stride s, kernel k and dilation d the kernel windows cover

    consumed = s * (out - 1) + d * (k - 1) + 1

rows of the padded input.  Windows start at the top/left edge, so whatever
is left over (``padded - consumed``) is cut from the bottom/right.  A
downsampling layer is *even* along a dimension when nothing is left over and
the padding consumed at both ends matches.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

from .netspec import ADD, FULL, VALID, LayerSpec, NetworkSpec
from .padding import full_amounts


class ShapeError(ValueError):
    def __init__(self, message, layer=None):
        self.layer = layer
        if layer is not None:
            message = f"layer {layer}: {message}"
        super().__init__(message)


def _ceil_div(a, b):
    return -(-a // b)


def same_total(n: int, stride: int, eff_kernel: int) -> int:
    """Total SAME padding along one dimension (framework convention)."""
    return max(0, stride * (_ceil_div(n, stride) - 1) + eff_kernel - n)


def resolve_padding(layer: LayerSpec, in_shape) -> tuple[int, int, int, int]:
    """Concrete (top, bottom, left, right) amounts for ``layer`` on ``in_shape``."""
    pad = layer.padding
    if not layer.is_spatial or pad.mode == VALID:
        return (0, 0, 0, 0)
    if pad.amounts is not None:
        return pad.amounts
    if pad.mode == FULL:
        return full_amounts(layer.kernel, layer.dilation)
    amounts = []
    for n, s, k in zip(in_shape, layer.stride, layer.effective_kernel):
        total = same_total(n, s, k)
        amounts += [total // 2, total - total // 2]
    return tuple(amounts)


def output_extent(n: int, kernel: int, stride: int, dilation: int, before: int, after: int) -> int:
    eff = dilation * (kernel - 1) + 1
    padded = n + before + after
    if padded < eff:
        raise ShapeError(f"padded extent {padded} is smaller than the kernel extent {eff}")
    return (padded - eff) // stride + 1


def output_shape(layer: LayerSpec, in_shape) -> tuple[int, int]:
    h, w = in_shape
    if not layer.is_spatial:
        return (h, w)
    top, bottom, left, right = resolve_padding(layer, in_shape)
    return (output_extent(h, layer.kernel[0], layer.stride[0], layer.dilation[0], top, bottom),
            output_extent(w, layer.kernel[1], layer.stride[1], layer.dilation[1], left, right))


def consumed_extent(out_extent: int, stride: int, kernel: int, dilation: int = 1) -> int:
    """Rows (or columns) of the padded input the kernel windows actually touch."""
    if out_extent < 1:
        raise ShapeError(f"output extent must be >= 1, got {out_extent}")
    return stride * (out_extent - 1) + dilation * (kernel - 1) + 1


@dataclass(frozen=True)
class ShapeTrace:
    """Spatial shape before the first layer and after every layer."""

    shapes: tuple[tuple[int, int], ...]

    @property
    def input_shape(self):
        return self.shapes[0]

    def layer_input(self, i):
        return self.shapes[i]

    def layer_output(self, i):
        return self.shapes[i + 1]

    @property
    def output_shape(self):
        return self.shapes[-1]


def trace_shapes(spec: NetworkSpec, input_shape) -> ShapeTrace:
    shape = tuple(int(v) for v in input_shape)
    if min(shape) < 1:
        raise ShapeError(f"input shape must be positive, got {shape}")
    shapes = [shape]
    for i, layer in enumerate(spec.layers):
        try:
            out = output_shape(layer, shape)
        except ShapeError as e:
            raise ShapeError(str(e), i) from None
        if layer.kind == ADD and shapes[layer.add_from + 1] != shape:
            raise ShapeError(f"add_from layer {layer.add_from} output {shapes[layer.add_from + 1]} "
                             f"does not match input {shape}", i)
        shapes.append(out)
        shape = out
    return ShapeTrace(tuple(shapes))


@dataclass(frozen=True)
class AxisBalance:
    """One dimension of one downsampling layer."""

    size_in: int
    size_out: int
    pad_before: int
    pad_after: int
    padded: int
    consumed: int
    unconsumed: int
    consumed_before: int
    consumed_after: int
    eroded: int      # real (non-padding) rows/cols never touched by the kernel
    even: bool
    status: str      # "even", "uneven" or "eroding"


def balance_axis(n_in, n_out, kernel, stride, dilation, before, after) -> AxisBalance:
    padded = n_in + before + after
    consumed = consumed_extent(n_out, stride, kernel, dilation)
    unconsumed = padded - consumed
    consumed_before = min(before, consumed)
    consumed_after = max(0, after - unconsumed)
    eroded = max(0, unconsumed - after)
    even = unconsumed == 0 and consumed_before == consumed_after
    if even:
        status = "even"
    elif before == after == 0:
        status = "eroding"
    else:
        status = "uneven"
    return AxisBalance(n_in, n_out, before, after, padded, consumed, unconsumed,
                       consumed_before, consumed_after, eroded, even, status)


@dataclass(frozen=True)
class LayerBalance:
    index: int
    kind: str
    kernel: tuple[int, int]
    stride: tuple[int, int]
    height: AxisBalance
    width: AxisBalance

    @property
    def even(self) -> bool:
        return self.height.even and self.width.even

    @property
    def consumed_padding(self):
        """Consumed padding per side as (top, bottom, left, right)."""
        return (self.height.consumed_before, self.height.consumed_after,
                self.width.consumed_before, self.width.consumed_after)


@dataclass(frozen=True)
class BalanceReport:
    network: str
    input_shape: tuple[int, int]
    layers: tuple[LayerBalance, ...]
    trace: ShapeTrace = field(repr=False)

    @property
    def even(self) -> bool:
        return all(layer.even for layer in self.layers)

    def to_dict(self) -> dict:
        return {
            "network": self.network,
            "input_shape": list(self.input_shape),
            "even": self.even,
            "shapes": [list(s) for s in self.trace.shapes],
            "layers": [{"index": lb.index, "kind": lb.kind, "kernel": list(lb.kernel),
                        "stride": list(lb.stride), "even": lb.even,
                        "height": asdict(lb.height), "width": asdict(lb.width)}
                       for lb in self.layers],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def format_table(self) -> str:
        head = (f"{'layer':>5} {'kind':<15} {'k':>5} {'s':>5} {'in':>11} {'padded':>11} "
                f"{'consumed':>11} {'used pad t/b/l/r':>17}  {'height':<8} {'width':<8}")
        lines = [f"{self.network} @ {self.input_shape[0]}x{self.input_shape[1]}", head]
        for lb in self.layers:
            h, w = lb.height, lb.width
            lines.append(
                f"{lb.index:>5} {lb.kind:<15} {lb.kernel[0]:>2}x{lb.kernel[1]:<2} "
                f"{lb.stride[0]:>2}x{lb.stride[1]:<2} {h.size_in:>5}x{w.size_in:<5} "
                f"{h.padded:>5}x{w.padded:<5} {h.consumed:>5}x{w.consumed:<5} "
                f"{'/'.join(str(v) for v in lb.consumed_padding):>17}  {h.status:<8} {w.status:<8}")
        lines.append("even" if self.even else "UNEVEN")
        return "\n".join(lines)


def check_even_padding(spec: NetworkSpec, input_shape) -> BalanceReport:
    trace = trace_shapes(spec, input_shape)
    records = []
    for i in spec.downsampling_layers:
        layer = spec.layers[i]
        n_in, n_out = trace.layer_input(i), trace.layer_output(i)
        top, bottom, left, right = resolve_padding(layer, n_in)
        hb = balance_axis(n_in[0], n_out[0], layer.kernel[0], layer.stride[0],
                          layer.dilation[0], top, bottom)
        wb = balance_axis(n_in[1], n_out[1], layer.kernel[1], layer.stride[1],
                          layer.dilation[1], left, right)
        records.append(LayerBalance(i, layer.kind, layer.kernel, layer.stride, hb, wb))
    return BalanceReport(spec.name, trace.input_shape, tuple(records), trace)


def _axis_even(spec: NetworkSpec, n: int, axis: int) -> bool:
    """Whether size ``n`` along ``axis`` is even at every downsampling layer.

    The other dimension is held at the same size; layers act on the two
    dimensions independently, so only this axis matters.
    """
    shape = (n, n)
    try:
        report = check_even_padding(spec, shape)
    except ShapeError:
        return False
    return all((lb.height if axis == 0 else lb.width).even for lb in report.layers)


def admissible_sizes(spec: NetworkSpec, lo: int, hi: int, axis: int = 0) -> list[int]:
    """Sizes in [lo, hi] for which every downsampling layer pads evenly."""
    return [n for n in range(max(lo, 1), hi + 1) if _axis_even(spec, n, axis)]


def _nearest(spec, n, axis, step, limit):
    m = n
    while 1 <= m <= limit:
        if _axis_even(spec, m, axis):
            return m
        m += step
    return None


def suggest_size(spec: NetworkSpec, desired_shape, limit: int | None = None) -> dict:
    """Closest admissible sizes at or below and at or above each dimension.

    ``pad_to`` is the nearest size reachable by padding (never shrinking);
    ``resize_to`` lists the admissible neighbours.
    """
    out = {}
    for axis, name in enumerate(("height", "width")):
        n = int(desired_shape[axis])
        cap = limit if limit is not None else 4 * n + 64
        below = _nearest(spec, n, axis, -1, cap)
        above = _nearest(spec, n, axis, +1, cap)
        resize = sorted({v for v in (below, above) if v is not None})
        out[name] = {
            "desired": n,
            "admissible": below == n,
            "below": below,
            "above": above,
            "pad_to": above,
            "pad_delta": None if above is None else above - n,
            "resize_to": resize,
        }
    return out
