"""16-bit binary PGM output with min/max sidecars."""

from __future__ import annotations

import json

import numpy as np

MAXVAL = 65535


def normalize16(grid) -> tuple[np.ndarray, float, float]:
    g = np.asarray(grid, dtype=np.float64)
    lo, hi = float(g.min()), float(g.max())
    if hi > lo:
        scaled = np.rint((g - lo) / (hi - lo) * MAXVAL)
    else:
        scaled = np.zeros_like(g)
    return scaled.astype(">u2"), lo, hi


def encode_pgm(grid) -> tuple[bytes, float, float]:
    g = np.asarray(grid, dtype=np.float64)
    if g.ndim == 3:
        if g.shape[0] != 1:
            raise ValueError("PGM output takes single-channel maps only")
        g = g[0]
    pix, lo, hi = normalize16(g)
    h, w = g.shape
    return f"P5\n{w} {h}\n{MAXVAL}\n".encode("ascii") + pix.tobytes(), lo, hi


def write_pgm(path, grid, sidecar=True, extra=None) -> tuple[float, float]:
    """Write ``grid`` min-max normalised to 0..65535.

    With ``sidecar`` the (min, max) used for normalisation go to a JSON file
    next to the image (``x.pgm`` -> ``x.json``), merged with ``extra``.
    """
    data, lo, hi = encode_pgm(grid)
    with open(path, "wb") as f:
        f.write(data)
    if sidecar:
        meta = {"min": lo, "max": hi}
        meta.update(extra or {})
        side = str(path)[:-4] + ".json" if str(path).endswith(".pgm") else str(path) + ".json"
        with open(side, "w", encoding="utf-8", newline="\n") as f:
            json.dump(meta, f, indent=2, sort_keys=True)
            f.write("\n")
    return lo, hi


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as f:
        raw = f.read()
    parts = raw.split(b"\n", 3)
    if parts[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM")
    w, h = (int(v) for v in parts[1].split())
    maxval = int(parts[2])
    dtype = ">u2" if maxval > 255 else "u1"
    return np.frombuffer(parts[3], dtype=dtype).reshape(h, w)


def upscale(grid, factor: int) -> np.ndarray:
    return np.kron(np.asarray(grid, dtype=np.float64), np.ones((factor, factor)))
