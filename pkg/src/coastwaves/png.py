"""Minimal PNG heatmaps (zlib + struct) with a fixed diverging colormap."""
from __future__ import annotations

import struct
import zlib
from pathlib import Path

import numpy as np

__all__ = ["encode_png", "diverging", "heatmap", "physical_heatmap", "write_png"]

# blue -> white -> red
_ANCHORS = np.array([[0.23, 0.30, 0.75], [0.865, 0.865, 0.865], [0.71, 0.016, 0.15]])
_BACKGROUND = np.array([255, 255, 255], dtype=np.uint8)


def _chunk(tag: bytes, data: bytes) -> bytes:
    body = tag + data
    return struct.pack(">I", len(data)) + body + struct.pack(">I", zlib.crc32(body) & 0xFFFFFFFF)


def encode_png(rgb: np.ndarray) -> bytes:
    """8-bit RGB image of shape (height, width, 3) to PNG bytes."""
    rgb = np.ascontiguousarray(rgb, dtype=np.uint8)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError("expected an (H, W, 3) array")
    h, w, _ = rgb.shape
    raw = b"".join(b"\x00" + rgb[i].tobytes() for i in range(h))
    header = struct.pack(">IIBBBBB", w, h, 8, 2, 0, 0, 0)
    return b"\x89PNG\r\n\x1a\n" + _chunk(b"IHDR", header) + _chunk(b"IDAT", zlib.compress(raw, 9)) + _chunk(b"IEND", b"")


def diverging(x: np.ndarray) -> np.ndarray:
    """Map values in [-1, 1] to RGB; 0 maps to the neutral middle colour."""
    t = (np.clip(np.asarray(x, dtype=float), -1, 1) + 1) / 2
    lo = t < 0.5
    s = np.where(lo, 2 * t, 2 * t - 1)[..., None]
    rgb = np.where(lo[..., None], _ANCHORS[0] + s * (_ANCHORS[1] - _ANCHORS[0]), _ANCHORS[1] + s * (_ANCHORS[2] - _ANCHORS[1]))
    return np.round(255 * rgb).astype(np.uint8)


def _symmetric(values: np.ndarray) -> np.ndarray:
    scale = float(np.max(np.abs(values)))
    return values / scale if scale > 0 else values


def heatmap(values: np.ndarray) -> np.ndarray:
    """values[i_u, i_v] to an image with v along x and u increasing upwards."""
    return diverging(_symmetric(np.asarray(values, dtype=float))[::-1])


def physical_heatmap(us: np.ndarray, vs: np.ndarray, values: np.ndarray, size: int = 512) -> np.ndarray:
    """Raster in x = e^u (cos v, sin v) by nearest-node lookup; points off the cylinder stay blank."""
    values = _symmetric(np.asarray(values, dtype=float))
    rmax = float(np.exp(us[-1]))
    x = np.linspace(-rmax, rmax, size)
    X, Y = np.meshgrid(x, x[::-1])
    with np.errstate(divide="ignore"):
        U = np.log(np.hypot(X, Y))
    V = np.mod(np.arctan2(Y, X), 2 * np.pi)
    inside = (U >= us[0]) & (U <= us[-1])
    iu = np.clip(np.rint((U - us[0]) / (us[1] - us[0])), 0, us.size - 1).astype(int)
    dv = 2 * np.pi / vs.size
    iv = np.rint((V - vs[0]) / dv).astype(int) % vs.size
    img = np.empty((size, size, 3), dtype=np.uint8)
    img[...] = _BACKGROUND
    img[inside] = diverging(values[iu[inside], iv[inside]])
    return img


def write_png(rgb: np.ndarray, path: Path) -> Path:
    Path(path).write_bytes(encode_png(rgb))
    return path
