"""Binary PGM/PPM rasters of maps, skeletons and intent heatmaps."""

from __future__ import annotations

import numpy as np

from mapfkit.grid import GridMap


def encode_pgm(gray: np.ndarray) -> bytes:
    """Binary P5 image from a uint8 (H, W) array."""
    gray = np.ascontiguousarray(gray, dtype=np.uint8)
    if gray.ndim != 2:
        raise ValueError("PGM data must be 2-D")
    h, w = gray.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + gray.tobytes()


def encode_ppm(rgb: np.ndarray) -> bytes:
    """Binary P6 image from a uint8 (H, W, 3) array."""
    rgb = np.ascontiguousarray(rgb, dtype=np.uint8)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError("PPM data must have shape (H, W, 3)")
    h, w, _ = rgb.shape
    return f"P6\n{w} {h}\n255\n".encode("ascii") + rgb.tobytes()


def decode_pnm(data: bytes) -> tuple[str, np.ndarray]:
    """Parse a P5/P6 image written by this module; returns (magic, pixels)."""
    fields = data.split(b"\n", 3)
    if len(fields) != 4 or fields[0] not in (b"P5", b"P6"):
        raise ValueError("not a binary PGM/PPM image")
    magic = fields[0].decode()
    w, h = (int(v) for v in fields[1].split())
    if int(fields[2]) != 255:
        raise ValueError("only 8-bit images are supported")
    depth = 1 if magic == "P5" else 3
    body = np.frombuffer(fields[3], dtype=np.uint8)
    if body.size != w * h * depth:
        raise ValueError(f"expected {w * h * depth} pixel bytes, found {body.size}")
    shape = (h, w) if depth == 1 else (h, w, 3)
    return magic, body.reshape(shape)


def _upscale(img: np.ndarray, scale: int) -> np.ndarray:
    if scale < 1:
        raise ValueError("scale must be >= 1")
    return np.repeat(np.repeat(img, scale, axis=0), scale, axis=1)


def render_map(grid: GridMap, scale: int = 1) -> bytes:
    """Obstacles black, free space white."""
    gray = np.where(grid.obstacles, 0, 255).astype(np.uint8)
    return encode_pgm(_upscale(gray, scale))


def render_skeleton(grid: GridMap, skeleton_mask: np.ndarray, nodes=(), scale: int = 1) -> bytes:
    """Map in gray tones with skeleton pixels in blue and graph nodes in red."""
    rgb = np.empty((grid.height, grid.width, 3), dtype=np.uint8)
    rgb[...] = 255
    rgb[grid.obstacles] = (40, 40, 40)
    rgb[np.asarray(skeleton_mask, dtype=bool)] = (40, 90, 220)
    for node in nodes:
        x, y = node.position if hasattr(node, "position") else node
        rgb[y, x] = (220, 40, 40)
    return encode_ppm(_upscale(rgb, scale))


def render_heatmap(grid: GridMap, heat: np.ndarray, scale: int = 1) -> bytes:
    """Heat in [0, 1] drawn from white to red over the free cells."""
    heat = np.clip(np.asarray(heat, dtype=np.float64), 0.0, 1.0)
    fade = np.round(255 * (1.0 - heat)).astype(np.uint8)
    rgb = np.stack([np.full_like(fade, 255), fade, fade], axis=-1)
    rgb[grid.obstacles] = (40, 40, 40)
    return encode_ppm(_upscale(rgb, scale))
