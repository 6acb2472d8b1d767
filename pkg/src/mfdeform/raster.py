"""Flat PPM (P6) rasterization of 2D point sets for quick visual diffs."""

from __future__ import annotations

import numpy as np

from .errors import DegenerateInput


def splat_ppm(positions: np.ndarray, path, width: int = 512) -> None:
    """White 1px points on black, bounding-box fit with a 5% margin."""
    pos = np.asarray(positions, dtype=np.float64)
    if pos.ndim != 2 or pos.shape[1] != 2:
        raise DegenerateInput("PPM rasterization supports 2D point sets only")
    lo = pos.min(axis=0)
    hi = pos.max(axis=0)
    span = hi - lo
    span[span == 0.0] = 1.0
    margin = 0.05 * span
    lo, hi = lo - margin, hi + margin
    span = hi - lo

    height = max(1, int(round(width * span[1] / span[0])))
    img = np.zeros((height, width), dtype=np.uint8)
    px = ((pos[:, 0] - lo[0]) / span[0] * (width - 1)).round().astype(int)
    py = ((pos[:, 1] - lo[1]) / span[1] * (height - 1)).round().astype(int)
    img[height - 1 - py, px] = 255  # y up

    with open(path, "wb") as fh:
        fh.write(f"P6\n{width} {height}\n255\n".encode())
        fh.write(np.repeat(img[:, :, None], 3, axis=2).tobytes())
