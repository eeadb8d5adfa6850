"""Padding algorithms as explicit map -> padded-map transforms.

Every mode that reuses feature-map values is separable: each padded row
(column) copies one source row (column) of the original map.  Those modes
expose the copy pattern as a :class:`PadSourceMap`, which the foveation code
uses to route path counts back from the padding ring to the pixels that
filled it.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .tensor import FeatureMap, as_feature_map

VALID = "valid"
ZERO = "zero"
FULL = "full_zero"
CIRCULAR = "circular"
SYMMETRIC = "mirror_symmetric"
REFLECT = "mirror_reflect"
REPLICATE = "replicate"
PARTIAL_CONV = "partial_conv"
DISTRIBUTION = "distribution"

MODES = (VALID, ZERO, FULL, CIRCULAR, SYMMETRIC, REFLECT, REPLICATE,
         PARTIAL_CONV, DISTRIBUTION)

# Names used in network config files and on the command line.
CONFIG_NAMES = {
    "valid": VALID,
    "zero": ZERO,
    "full": FULL,
    "circular": CIRCULAR,
    "symmetric": SYMMETRIC,
    "reflect": REFLECT,
    "replicate": REPLICATE,
    "partialconv": PARTIAL_CONV,
    "distribution": DISTRIBUTION,
}
MODE_TO_CONFIG = {v: k for k, v in CONFIG_NAMES.items()}

REUSING_MODES = (CIRCULAR, SYMMETRIC, REFLECT, REPLICATE)
# Modes whose border is filled with zeros (partial conv pads with zeros and
# rescales inside the convolution).
ZERO_FILL_MODES = (VALID, ZERO, FULL, PARTIAL_CONV)


class PaddingError(ValueError):
    pass


def parse_mode(name: str) -> str:
    """Accept either a config name ("symmetric") or an internal one."""
    if name in CONFIG_NAMES:
        return CONFIG_NAMES[name]
    if name in MODES:
        return name
    raise PaddingError(f"unknown padding mode {name!r}; "
                       f"expected one of {sorted(CONFIG_NAMES)}")


@dataclass(frozen=True)
class PaddingMode:
    """A padding algorithm plus per-side amounts (top, bottom, left, right).

    ``amounts=None`` means SAME: the amounts are resolved from the layer
    geometry and input shape at execution time.
    """

    mode: str = VALID
    amounts: tuple[int, int, int, int] | None = (0, 0, 0, 0)

    def __post_init__(self):
        object.__setattr__(self, "mode", parse_mode(self.mode))
        if self.amounts is not None:
            amounts = tuple(int(a) for a in self.amounts)
            if len(amounts) != 4 or min(amounts) < 0:
                raise PaddingError(f"amounts must be four non-negative ints, got {self.amounts}")
            object.__setattr__(self, "amounts", amounts)
        if self.mode == VALID:
            if self.amounts is None or any(self.amounts):
                raise PaddingError("valid padding takes no amounts")

    @property
    def is_same(self) -> bool:
        return self.amounts is None


def same_amounts(kernel, dilation=(1, 1), stride=1):
    """Per-side SAME amounts for a stride-1 layer.

    The odd pixel of an uneven split goes to the bottom/right side.
    """
    if stride != 1:
        raise PaddingError("same_amounts covers stride 1 only; strided layers "
                           "are resolved against their input shape")
    kh, kw = _pair(kernel)
    dh, dw = _pair(dilation)
    th, tw = dh * (kh - 1), dw * (kw - 1)
    return (th // 2, th - th // 2, tw // 2, tw - tw // 2)


def full_amounts(kernel, dilation=(1, 1)):
    kh, kw = _pair(kernel)
    dh, dw = _pair(dilation)
    return (dh * (kh - 1),) * 2 + (dw * (kw - 1),) * 2


def _pair(v):
    if isinstance(v, (int, np.integer)):
        return int(v), int(v)
    a, b = v
    return int(a), int(b)


def check_bounds(mode: str, amounts, height: int, width: int) -> None:
    top, bottom, left, right = amounts
    for axis, n, lo, hi in (("height", height, top, bottom), ("width", width, left, right)):
        amount = max(lo, hi)
        if mode == REFLECT and amount > n - 1:
            raise PaddingError(f"{mode} padding of {amount} exceeds {axis} - 1 = {n - 1}")
        if mode in (SYMMETRIC, REPLICATE, CIRCULAR) and amount > n:
            raise PaddingError(f"{mode} padding of {amount} exceeds {axis} = {n}")


def source_indices(mode: str, n: int, before: int, after: int) -> np.ndarray:
    """Source index along one axis for every padded position; -1 marks a
    synthetic (zero or resized) cell."""
    q = np.arange(-before, n + after)
    if mode == CIRCULAR:
        return np.mod(q, n)
    if mode == SYMMETRIC:
        return np.where(q < 0, -q - 1, np.where(q >= n, 2 * n - 1 - q, q))
    if mode == REFLECT:
        return np.where(q < 0, -q, np.where(q >= n, 2 * n - 2 - q, q))
    if mode == REPLICATE:
        return np.clip(q, 0, n - 1)
    return np.where((q >= 0) & (q < n), q, -1)


@dataclass(frozen=True, eq=False)
class PadSourceMap:
    """Row and column source indices of a padded map (-1 = synthetic).

    Padded cell (y, x) copies original pixel (rows[y], cols[x]) unless either
    index is -1.
    """

    rows: np.ndarray
    cols: np.ndarray

    def source(self, y: int, x: int):
        r, c = int(self.rows[y]), int(self.cols[x])
        if r < 0 or c < 0:
            return None
        return r, c

    def selection_matrices(self, height: int, width: int, dtype=np.float64):
        """0/1 matrices S_r (Hp x H) and S_c (Wp x W) with padded = S_r X S_c^T
        wherever neither index is synthetic."""
        return _selection(self.rows, height, dtype), _selection(self.cols, width, dtype)


def _selection(idx, n, dtype):
    m = np.zeros((len(idx), n), dtype=dtype)
    ok = idx >= 0
    m[np.nonzero(ok)[0], idx[ok]] = 1
    return m


def pad_array(x: np.ndarray, mode: str, amounts, fill=0.0) -> np.ndarray:
    """Pad a (C, H, W) array of any dtype.  ``fill`` is used for synthetic
    cells of the zero-fill modes."""
    mode = parse_mode(mode)
    amounts = tuple(int(a) for a in amounts)
    _, h, w = x.shape
    if not any(amounts):
        return x.copy()
    check_bounds(mode, amounts, h, w)
    if mode == DISTRIBUTION:
        return _distribution_array(x, amounts)
    top, bottom, left, right = amounts
    rows = source_indices(mode, h, top, bottom)
    cols = source_indices(mode, w, left, right)
    out = x[:, np.maximum(rows, 0)][:, :, np.maximum(cols, 0)]
    if mode in ZERO_FILL_MODES:
        out[:, rows < 0, :] = fill
        out[:, :, cols < 0] = fill
    return out


def pad(fmap, mode, amounts):
    """Pad a feature map.

    Returns the padded :class:`FeatureMap` and a :class:`PadSourceMap`
    describing where each padded cell came from.  Distribution padding
    reports every ring cell as synthetic; its ring values are bilinear blends,
    see :func:`distribution_pad`.
    """
    fmap = as_feature_map(fmap)
    mode = parse_mode(mode)
    amounts = tuple(int(a) for a in amounts)
    if mode == VALID and any(amounts):
        raise PaddingError("valid padding takes no amounts")
    out = pad_array(fmap.data, mode, amounts)
    top, bottom, left, right = amounts
    src_mode = ZERO if mode == DISTRIBUTION else mode
    src = PadSourceMap(source_indices(src_mode, fmap.height, top, bottom),
                       source_indices(src_mode, fmap.width, left, right))
    return FeatureMap(out), src


def resize_matrix(n_out: int, n_in: int, exact: bool = False) -> np.ndarray:
    """Corner-aligned linear interpolation weights, shape (n_out, n_in).

    Output position q samples input coordinate q * (n_in - 1) / (n_out - 1).
    With ``exact`` the entries are :class:`fractions.Fraction`.
    """
    m = np.zeros((n_out, n_in), dtype=object if exact else np.float64)
    if exact:
        m[...] = Fraction(0)
    den = max(n_out - 1, 1)
    for q in range(n_out):
        num = q * (n_in - 1)
        i0, rem = divmod(num, den)
        if exact:
            m[q, i0] += Fraction(den - rem, den)
            if rem:
                m[q, i0 + 1] += Fraction(rem, den)
        else:
            m[q, i0] += (den - rem) / den
            if rem:
                m[q, i0 + 1] += rem / den
    return m


def _resize_axis(x, n_out, axis):
    """Corner-aligned linear resize along ``axis`` of a (C, H, W) array.

    Written as a + f * (b - a) so constant inputs stay exactly constant.
    """
    n_in = x.shape[axis]
    exact = x.dtype == object
    den = max(n_out - 1, 1)
    i0, rem = np.divmod(np.arange(n_out) * (n_in - 1), den)
    i1 = np.minimum(i0 + 1, n_in - 1)
    if exact:
        f = np.array([Fraction(int(r), den) for r in rem], dtype=object)
    else:
        f = rem / den
    a = np.take(x, i0, axis=axis)
    b = np.take(x, i1, axis=axis)
    shape = [1, 1, 1]
    shape[axis] = n_out
    return a + f.reshape(shape) * (b - a)


def _distribution_array(x, amounts):
    top, bottom, left, right = amounts
    _, h, w = x.shape
    out = _resize_axis(_resize_axis(x, h + top + bottom, 1), w + left + right, 2)
    out[:, top:top + h, left:left + w] = x
    return out


def distribution_pad(fmap, amounts) -> FeatureMap:
    """Fill the padding ring from a bilinear resize of the map itself.

    The map is resized (corner-aligned bilinear) to the padded shape and the
    original values are written back into the central region.
    """
    fmap = as_feature_map(fmap)
    return FeatureMap(_distribution_array(fmap.data, tuple(int(a) for a in amounts)))


def pad_adjoint(grad: np.ndarray, in_hw, mode: str, amounts) -> np.ndarray:
    """Transpose of :func:`pad_array` (a linear map) applied to ``grad``.

    ``grad`` has the padded shape (C, Hp, Wp).  Each padded cell hands its
    value back to the original pixel(s) it was filled from; zero-filled cells
    hand back nothing.
    """
    mode = parse_mode(mode)
    top, bottom, left, right = (int(a) for a in amounts)
    h, w = in_hw
    if mode == DISTRIBUTION:
        exact = grad.dtype == object
        rh = resize_matrix(h + top + bottom, h, exact)
        rw = resize_matrix(w + left + right, w, exact)
        ring = grad.copy()
        ring[:, top:top + h, left:left + w] = 0
        out = np.stack([rh.T @ ring[i] @ rw for i in range(grad.shape[0])])
        out += grad[:, top:top + h, left:left + w]
        return out
    rows = source_indices(mode, h, top, bottom)
    cols = source_indices(mode, w, left, right)
    dtype = grad.dtype
    sr = _selection(rows, h, dtype)
    sc = _selection(cols, w, dtype)
    return np.stack([sr.T @ grad[i] @ sc for i in range(grad.shape[0])])
