"""Small numeric helpers shared across modules."""
from __future__ import annotations

import numpy as np


def moving_average(x: np.ndarray, width: int) -> np.ndarray:
    """Centered moving average with mirror (reflect) edge handling.

    `width` is in samples and should be odd so the window is symmetric;
    width <= 1 returns a copy. The mirror pad is clamped for inputs shorter
    than the half window.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if width <= 1 or n <= 1:
        return x.copy()
    half = width // 2
    pad = min(half, n - 1)
    xp = np.pad(x, half, mode="reflect") if pad == half else np.pad(
        np.pad(x, pad, mode="reflect"), half - pad, mode="edge")
    kernel = np.full(2 * half + 1, 1.0 / (2 * half + 1))
    return np.convolve(xp, kernel, mode="valid")


def boolean_runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Half-open [start, stop) index ranges of the True runs in a 1-D mask."""
    m = np.asarray(mask, dtype=bool)
    if m.size == 0:
        return []
    edges = np.flatnonzero(np.diff(m.astype(np.int8)))
    starts = list(edges[m[edges + 1]] + 1)
    stops = list(edges[~m[edges + 1]] + 1)
    if m[0]:
        starts.insert(0, 0)
    if m[-1]:
        stops.append(m.size)
    return list(zip(starts, stops))
