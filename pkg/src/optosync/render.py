"""Heatmap rendering of sweep CSVs.

Each grid point becomes a square block of pixels. ``axis2`` runs left to
right and ``axis1`` bottom to top, both in increasing order. Values map
linearly onto a dark-blue to yellow ramp; NaN points (failed runs) are drawn
in the sentinel color magenta ``(255, 0, 255)``, which the ramp never
produces.
"""
from __future__ import annotations

import io
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ConfigError
from .sweep import SweepRecord, read_sweep_csv
from .util import atomic_write

__all__ = ["MEASURES", "NAN_COLOR", "grid_from_records", "colorize", "render_heatmap"]

MEASURES = {"Sp": "mean_Sp", "DG": "mean_DG", "EN": "mean_EN"}
NAN_COLOR = (255, 0, 255)
CELL = 16
# anchor colors of the ramp, evenly spaced over [0, 1]
_RAMP = np.array(
    [[13, 8, 135], [84, 2, 163], [139, 10, 165], [185, 50, 137], [219, 92, 104],
     [244, 136, 73], [254, 188, 43], [240, 249, 33]],
    dtype=float,
)


def grid_from_records(records: list[SweepRecord], column: str):
    """Arrange one measure column into a ``(n1, n2)`` array.

    Returns ``(values, axis1_values, axis2_values)``. The grid must be
    complete: every (axis1, axis2) pair exactly once.
    """
    a1 = sorted({r.axis1_value for r in records})
    a2 = sorted({r.axis2_value for r in records})
    if len(records) != len(a1) * len(a2):
        raise ConfigError(f"sweep CSV is not a complete grid ({len(records)} rows for {len(a1)}x{len(a2)})")
    i1 = {v: k for k, v in enumerate(a1)}
    i2 = {v: k for k, v in enumerate(a2)}
    grid = np.full((len(a1), len(a2)), np.nan)
    seen = np.zeros(grid.shape, dtype=bool)
    for r in records:
        k = (i1[r.axis1_value], i2[r.axis2_value])
        if seen[k]:
            raise ConfigError(f"duplicate grid point ({r.axis1_value}, {r.axis2_value})")
        seen[k] = True
        grid[k] = getattr(r, column)
    return grid, np.array(a1), np.array(a2)


def colorize(values: np.ndarray) -> np.ndarray:
    """Map an array to RGB bytes with a linear scale over its finite range."""
    values = np.asarray(values, dtype=float)
    finite = np.isfinite(values)
    rgb = np.empty(values.shape + (3,), dtype=np.uint8)
    rgb[...] = NAN_COLOR
    if not finite.any():
        return rgb
    lo, hi = values[finite].min(), values[finite].max()
    span = hi - lo
    u = np.zeros_like(values) if span <= 0 else np.clip((values - lo) / span, 0.0, 1.0)
    u[~finite] = 0.0  # overwritten by the sentinel below
    pos = u * (len(_RAMP) - 1)
    k = np.minimum(np.floor(pos).astype(int), len(_RAMP) - 2)
    w = (pos - k)[..., None]
    col = _RAMP[k] * (1.0 - w) + _RAMP[k + 1] * w
    rgb[finite] = np.rint(col[finite]).astype(np.uint8)
    return rgb


def _sidecar_text(measure, grid, a1, a2, names) -> str:
    lines = [f"measure: {measure}", f"axis1: {names[0]} (rows, bottom to top)", f"axis2: {names[1]} (columns, left to right)"]
    finite = np.isfinite(grid)
    if finite.any():
        kmin = np.unravel_index(np.nanargmin(grid), grid.shape)
        kmax = np.unravel_index(np.nanargmax(grid), grid.shape)
        for label, k in (("min", kmin), ("max", kmax)):
            lines.append(f"{label}: {float(grid[k])!r} at {names[0]}={float(a1[k[0]])!r}, "
                         f"{names[1]}={float(a2[k[1]])!r}")
    else:
        lines += ["min: nan", "max: nan"]
    lines.append(f"nan points: {int((~finite).sum())} (drawn as rgb{NAN_COLOR})")
    return "\n".join(lines) + "\n"


def sidecar_path(out: Path) -> Path:
    return out.with_name(out.name + ".txt")


def render_heatmap(csv_path, measure: str, out_path, cell: int = CELL) -> Path:
    """Render ``measure`` (``Sp``, ``DG`` or ``EN``) from a sweep CSV.

    Writes the image (PNG, or binary PPM for a ``.ppm`` suffix) and a
    sidecar ``<out>.txt`` with the value range. Returns the sidecar path.
    """
    if measure not in MEASURES:
        raise ConfigError(f"unknown measure {measure!r}; choose from {', '.join(MEASURES)}")
    out = Path(out_path)
    fmt = "PPM" if out.suffix.lower() in (".ppm", ".pnm") else "PNG"
    records = read_sweep_csv(csv_path)
    grid, a1, a2 = grid_from_records(records, MEASURES[measure])
    rgb = colorize(grid)[::-1]  # axis1 increases upward
    big = np.repeat(np.repeat(rgb, cell, axis=0), cell, axis=1)
    buf = io.BytesIO()
    Image.fromarray(big, mode="RGB").save(buf, format=fmt)
    names = (records[0].axis1_name, records[0].axis2_name)
    side = sidecar_path(out)
    with atomic_write(out, "wb") as fh:
        fh.write(buf.getvalue())
    with atomic_write(side) as fh:
        fh.write(_sidecar_text(measure, grid, a1, a2, names))
    return side

