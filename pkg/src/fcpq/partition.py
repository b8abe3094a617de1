"""Fixed-depth tiling of a picture into 2Nx2N coding blocks."""

from __future__ import annotations

import dataclasses
import math

SUPPORTED_CU_SIZES = (16, 32, 64)


@dataclasses.dataclass(frozen=True)
class Region:
    x: int
    y: int
    w: int
    h: int

    @property
    def area(self) -> int:
        return self.w * self.h

    @property
    def slices(self) -> tuple[slice, slice]:
        """Row/column slices for indexing a ``(height, width)`` plane."""
        return slice(self.y, self.y + self.h), slice(self.x, self.x + self.w)


@dataclasses.dataclass(frozen=True)
class CuRegion(Region):
    """A coding block footprint plus its quadrant sub-blocks.

    ``sub`` holds four quadrants in raster order, or a single entry equal
    to the region itself when ``degenerate`` (width or height below 2).
    """

    sub: tuple[Region, ...] = ()
    degenerate: bool = False


def sub_blocks(region: Region) -> tuple[tuple[Region, ...], bool]:
    """Split ``region`` at floor midpoints; returns ``(quadrants, degenerate)``."""
    x, y, w, h = region.x, region.y, region.w, region.h
    if w < 2 or h < 2:
        return (Region(x, y, w, h),), True
    hw, hh = w // 2, h // 2
    quads = (
        Region(x, y, hw, hh),
        Region(x + hw, y, w - hw, hh),
        Region(x, y + hh, hw, h - hh),
        Region(x + hw, y + hh, w - hw, h - hh),
    )
    return quads, False


def make_cu_region(x: int, y: int, w: int, h: int) -> CuRegion:
    quads, degenerate = sub_blocks(Region(x, y, w, h))
    return CuRegion(x, y, w, h, sub=quads, degenerate=degenerate)


@dataclasses.dataclass(frozen=True)
class CuGrid:
    width: int
    height: int
    cu_size: int
    cols: int
    rows: int
    regions: tuple[CuRegion, ...]

    def __len__(self):
        return len(self.regions)

    @property
    def full_cols(self) -> int:
        """Columns whose blocks are a full ``cu_size`` wide."""
        return self.width // self.cu_size

    @property
    def full_rows(self) -> int:
        return self.height // self.cu_size


def build_grid(width: int, height: int, cu_size: int) -> CuGrid:
    if cu_size not in SUPPORTED_CU_SIZES:
        raise ValueError(f"unsupported CU size {cu_size}; expected one of {SUPPORTED_CU_SIZES}")
    if width < 2 or height < 2:
        raise ValueError(f"picture {width}x{height} too small; need at least 2x2")
    cols = math.ceil(width / cu_size)
    rows = math.ceil(height / cu_size)
    regions = []
    for r in range(rows):
        y = r * cu_size
        h = min(cu_size, height - y)
        for c in range(cols):
            x = c * cu_size
            regions.append(make_cu_region(x, y, min(cu_size, width - x), h))
    return CuGrid(width, height, cu_size, cols, rows, tuple(regions))
