"""Sub-block variances and spatial activity per coding block.

The same computation serves every channel; only the plane differs. Luma
activity ``l``, Cb activity ``b`` and Cr activity ``r`` are each
``1 + min`` of the population variances of the block's four quadrants,
and each picture-level mean is the plain average over all blocks.
"""

from __future__ import annotations

import dataclasses
import math
from collections.abc import Sequence

import numpy as np

from .partition import CuGrid, Region

DEFAULT_STRENGTH = 6


def block_variance(plane: np.ndarray, region: Region) -> float:
    """Population variance (divide by m) of ``plane`` over ``region``."""
    if region.w < 1 or region.h < 1:
        raise ValueError(f"empty region {region}")
    block = np.asarray(plane[region.slices], dtype=np.float64)
    if block.size == 0:
        raise ValueError(f"region {region} lies outside the plane")
    mean = block.mean()
    return float(np.mean((block - mean) ** 2))


def cb_activity(plane: np.ndarray, cu_region) -> float:
    return 1.0 + min(block_variance(plane, sub) for sub in cu_region.sub)


def picture_mean_activity(activities: Sequence[float]) -> float:
    values = [float(a) for a in np.ravel(activities)]
    if not values:
        raise ValueError("picture mean needs at least one coding block")
    return math.fsum(values) / len(values)


def scaling_factor(strength: int) -> float:
    """``2 ** (A / 6)``: the bound on the normalised activity."""
    return 2.0 ** (strength / 6)


def normalize_activity(act, picture_mean, f):
    """Map activity onto ``(1/f, f)``, with 1 where it equals the picture mean.

    Works elementwise on arrays.
    """
    return (f * act + picture_mean) / (act + f * picture_mean)


@dataclasses.dataclass(frozen=True)
class ChannelActivity:
    """Per-block statistics for one channel of one picture.

    ``sub_variances``, ``sub_means`` and ``sub_sizes`` have shape
    ``(count, 4)`` in quadrant raster order; degenerate blocks fill only
    column 0 and leave NaN (or 0 for sizes) elsewhere.
    """

    sub_variances: np.ndarray
    sub_means: np.ndarray
    sub_sizes: np.ndarray
    activities: np.ndarray
    picture_mean: float

    @property
    def count(self) -> int:
        return len(self.activities)

    def normalized(self, f: float) -> np.ndarray:
        return normalize_activity(self.activities, self.picture_mean, f)


def _full_block_stats(plane: np.ndarray, grid: CuGrid):
    """Quadrant stats for every full-size block at once, shape ``(R, C, 4)``."""
    n = grid.cu_size // 2
    R, C = grid.full_rows, grid.full_cols
    tiles = np.asarray(plane[: R * grid.cu_size, : C * grid.cu_size], dtype=np.float64)
    tiles = tiles.reshape(2 * R, n, 2 * C, n)
    means = tiles.mean(axis=(1, 3))
    var = ((tiles - means[:, None, :, None]) ** 2).mean(axis=(1, 3))

    def by_quadrant(a):
        # (2R, 2C) -> (R, C, 4) with quadrant order TL, TR, BL, BR
        return a.reshape(R, 2, C, 2).transpose(0, 2, 1, 3).reshape(R, C, 4)

    return by_quadrant(var), by_quadrant(means)


def channel_activity(plane: np.ndarray, grid: CuGrid) -> ChannelActivity:
    """First pass for one channel: block activities and their picture mean."""
    plane = np.asarray(plane)
    if plane.shape != (grid.height, grid.width):
        raise ValueError(f"plane shape {plane.shape} does not match grid {grid.height}x{grid.width}")
    count = len(grid.regions)
    variances = np.full((count, 4), np.nan)
    means = np.full((count, 4), np.nan)
    sizes = np.zeros((count, 4), dtype=np.int64)

    full_var, full_mean = _full_block_stats(plane, grid)
    n = grid.cu_size // 2
    for i, region in enumerate(grid.regions):
        r, c = divmod(i, grid.cols)
        if r < grid.full_rows and c < grid.full_cols:
            variances[i] = full_var[r, c]
            means[i] = full_mean[r, c]
            sizes[i] = n * n
            continue
        for q, sub in enumerate(region.sub):
            block = np.asarray(plane[sub.slices], dtype=np.float64)
            mu = block.mean()
            means[i, q] = mu
            variances[i, q] = np.mean((block - mu) ** 2)
            sizes[i, q] = sub.area

    activities = 1.0 + np.nanmin(variances, axis=1)
    return ChannelActivity(
        sub_variances=variances,
        sub_means=means,
        sub_sizes=sizes,
        activities=activities,
        picture_mean=picture_mean_activity(activities),
    )
