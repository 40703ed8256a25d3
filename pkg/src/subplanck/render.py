"""Minimal PNG heatmaps for phase-space grids (no plotting stack)."""

from __future__ import annotations

import struct
import zlib

import numpy as np

from .analysis import PhaseGrid

__all__ = ["PALETTES", "PALETTE_VERSION", "colorize", "encode_png", "render_png"]

PALETTE_VERSION = 1

# anchor colours, interpolated linearly in RGB
PALETTES = {
    # blue - white - red, centred on zero
    "diverging": np.array(
        [[5, 48, 97], [67, 147, 195], [247, 247, 247], [214, 96, 77], [103, 0, 31]], dtype=float
    ),
    # light yellow to dark blue
    "sequential": np.array(
        [[255, 255, 217], [199, 233, 180], [65, 182, 196], [34, 94, 168], [8, 29, 88]], dtype=float
    ),
}


def _limits(values: np.ndarray, palette: str) -> tuple[float, float]:
    if palette == "diverging":
        m = float(np.max(np.abs(values)))
        m = m if m > 0 else 1.0
        return -m, m
    lo, hi = float(values.min()), float(values.max())
    if hi <= lo:
        hi = lo + 1.0
    return lo, hi


def colorize(values: np.ndarray, palette: str) -> tuple[np.ndarray, tuple[float, float]]:
    """Map values to uint8 RGB. Returns the image and the colour-bar limits."""
    if palette not in PALETTES:
        raise ValueError(f"unknown palette {palette!r}")
    vals = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(vals)):
        raise ValueError("cannot render non-finite values")
    lo, hi = _limits(vals, palette)
    anchors = PALETTES[palette]
    t = np.clip((vals - lo) / (hi - lo), 0.0, 1.0) * (len(anchors) - 1)
    k = np.minimum(t.astype(int), len(anchors) - 2)
    f = (t - k)[..., None]
    rgb = anchors[k] * (1 - f) + anchors[k + 1] * f
    return np.rint(rgb).astype(np.uint8), (lo, hi)


def _chunk(tag: bytes, data: bytes) -> bytes:
    return struct.pack(">I", len(data)) + tag + data + struct.pack(">I", zlib.crc32(tag + data) & 0xFFFFFFFF)


def encode_png(rgb: np.ndarray) -> bytes:
    """Encode an (h, w, 3) uint8 array as an 8-bit RGB PNG."""
    h, w, _ = rgb.shape
    raw = b"".join(b"\x00" + rgb[i].tobytes() for i in range(h))
    ihdr = struct.pack(">IIBBBBB", w, h, 8, 2, 0, 0, 0)
    return b"\x89PNG\r\n\x1a\n" + _chunk(b"IHDR", ihdr) + _chunk(b"IDAT", zlib.compress(raw, 9)) + _chunk(b"IEND", b"")


def render_png(grid: PhaseGrid, palette: str, path=None, scale: int = 1) -> tuple[bytes, dict]:
    """Heatmap of the grid with p increasing upwards.

    Returns the PNG bytes and colour-bar metadata; writes them to ``path``
    when given.
    """
    rgb, (lo, hi) = colorize(grid.values[::-1], palette)
    if scale > 1:
        rgb = np.repeat(np.repeat(rgb, scale, axis=0), scale, axis=1)
    data = encode_png(rgb)
    if path is not None:
        try:
            with open(path, "wb") as fh:
                fh.write(data)
        except OSError as exc:
            raise OSError(f"cannot write PNG to {path}: {exc.strerror}") from exc
    meta = {"palette": palette, "palette_version": PALETTE_VERSION, "vmin": lo, "vmax": hi}
    return data, meta
