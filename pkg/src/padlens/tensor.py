"""Dense feature maps and the few elementwise reductions built on them."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """A (channels, height, width) grid of float64 activations.

    The backing array is copied on construction and marked read-only.
    """

    data: np.ndarray

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[np.newaxis]
        if arr.ndim != 3:
            raise ValueError(f"expected a (C, H, W) array, got shape {arr.shape}")
        if min(arr.shape) < 1:
            raise ValueError(f"every extent must be >= 1, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("feature map contains NaN or Inf")
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.data
        return self.data.astype(dtype)

    def __eq__(self, other):
        if not isinstance(other, FeatureMap):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.data, other.data)

    def __repr__(self):
        return f"FeatureMap({self.channels}x{self.height}x{self.width})"


@dataclass(frozen=True, eq=False)
class KernelSet:
    """Weights of shape (out, in, kh, kw) and one bias per output channel."""

    weights: np.ndarray
    biases: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        b = np.array(self.biases, dtype=np.float64).reshape(-1)
        if w.ndim != 4:
            raise ValueError(f"kernel weights must be 4-D (out, in, kh, kw), got {w.shape}")
        if w.shape[2] < 1 or w.shape[3] < 1:
            raise ValueError(f"kernel extents must be >= 1, got {w.shape[2:]}")
        if b.shape[0] != w.shape[0]:
            raise ValueError(f"{b.shape[0]} biases for {w.shape[0]} output channels")
        w.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "biases", b)

    @property
    def out_channels(self) -> int:
        return self.weights.shape[0]

    @property
    def in_channels(self) -> int:
        return self.weights.shape[1]

    @property
    def kernel_h(self) -> int:
        return self.weights.shape[2]

    @property
    def kernel_w(self) -> int:
        return self.weights.shape[3]

    def __eq__(self, other):
        if not isinstance(other, KernelSet):
            return NotImplemented
        return (np.array_equal(self.weights, other.weights)
                and np.array_equal(self.biases, other.biases))


def as_feature_map(x) -> FeatureMap:
    if isinstance(x, FeatureMap):
        return x
    return FeatureMap(x)


def channel_mean(fmap) -> FeatureMap:
    """Average over channels, keeping a single channel."""
    fmap = as_feature_map(fmap)
    if fmap.channels == 1:
        return fmap
    return FeatureMap(fmap.data.mean(axis=0, keepdims=True))


def accumulate_mean(maps: Sequence) -> FeatureMap:
    """Elementwise mean of same-shape maps.

    Sums left to right and divides once, so identical input order gives
    bitwise-identical output.
    """
    maps = [as_feature_map(m) for m in maps]
    if not maps:
        raise ValueError("accumulate_mean needs at least one map")
    shape = maps[0].shape
    total = maps[0].data.copy()
    for i, m in enumerate(maps[1:], start=1):
        if m.shape != shape:
            raise ValueError(f"map {i} has shape {m.shape}, expected {shape}")
        total += m.data
    return FeatureMap(total / len(maps))


def format_csv(grid) -> str:
    """Render a 2-D grid (or single-channel map) as CSV, 17 significant digits."""
    arr = np.asarray(grid, dtype=np.float64)
    if arr.ndim == 3:
        if arr.shape[0] != 1:
            raise ValueError("CSV emitter takes single-channel maps only")
        arr = arr[0]
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D grid, got shape {arr.shape}")
    rows = (",".join("%.17g" % v for v in row) for row in arr)
    return "\n".join(rows) + "\n"


def write_csv(path, grid) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(format_csv(grid))


def read_csv(path) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2)
