"""Toy intra transform coder for comparing QP maps.

Each coding block of each channel is offset by the mid-level sample value,
transformed with an orthonormal 2-D DCT-II, quantized with a uniform
rounding quantizer at the block's QStep, and reconstructed. Rate is the
zero-order entropy of each channel's quantized levels over the frame.
"""

from __future__ import annotations

import dataclasses
import math
from collections import defaultdict
from collections.abc import Sequence

import numpy as np
from scipy import fft

from .partition import build_grid
from .qp_policy import QpMap, compute_qp_map, qp_to_qstep
from .video_io import FrameBuffer

RD_CSV_COLUMNS = (
    "policy", "base_qp",
    "bits_c0", "bits_c1", "bits_c2", "total_bits",
    "psnr_c0", "psnr_c1", "psnr_c2",
)


def transform_block(samples: np.ndarray, bit_depth: int) -> np.ndarray:
    """Forward DCT of ``samples - 2**(bit_depth - 1)`` over the last two axes.

    Leading axes, if any, index independent blocks of the same size.
    """
    residual = np.asarray(samples, dtype=np.float64) - (1 << (bit_depth - 1))
    return fft.dctn(residual, type=2, norm="ortho", axes=(-2, -1))


def inverse_transform_block(coefficients: np.ndarray, bit_depth: int) -> np.ndarray:
    return fft.idctn(coefficients, type=2, norm="ortho", axes=(-2, -1)) + (1 << (bit_depth - 1))


def quantize_urq(coefficients, qstep) -> np.ndarray:
    """``sign(c) * floor(|c| / qstep + 0.5)``, i.e. round half away from zero."""
    c = np.asarray(coefficients, dtype=np.float64)
    if np.any(np.asarray(qstep) <= 0):
        raise ValueError("QStep must be positive")
    return (np.sign(c) * np.floor(np.abs(c) / qstep + 0.5)).astype(np.int64)


def dequantize(levels, qstep) -> np.ndarray:
    return np.asarray(levels, dtype=np.float64) * qstep


def entropy_bits(levels) -> float:
    """Zero-order empirical entropy of ``levels`` in total bits."""
    levels = np.ravel(levels)
    if levels.size == 0:
        return 0.0
    _, counts = np.unique(levels, return_counts=True)
    counts = counts.astype(np.float64)
    return float(np.sum(counts * np.log2(levels.size / counts)))


def psnr(original: np.ndarray, reconstructed: np.ndarray, bit_depth: int) -> float:
    """PSNR in dB with peak ``2**bit_depth - 1``; ``inf`` when identical."""
    a = np.asarray(original, dtype=np.float64)
    b = np.asarray(reconstructed, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"plane shapes differ: {a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    peak = (1 << bit_depth) - 1
    return 10.0 * math.log10(peak * peak / mse)


@dataclasses.dataclass(frozen=True)
class RdPoint:
    policy: str
    base_qp: int
    bits: tuple[float, float, float]
    psnr: tuple[float, float, float]

    @property
    def total_bits(self) -> float:
        return math.fsum(self.bits)

    def row(self) -> dict:
        return {
            "policy": self.policy,
            "base_qp": self.base_qp,
            "bits_c0": self.bits[0],
            "bits_c1": self.bits[1],
            "bits_c2": self.bits[2],
            "total_bits": self.total_bits,
            "psnr_c0": self.psnr[0],
            "psnr_c1": self.psnr[1],
            "psnr_c2": self.psnr[2],
        }


def _shape_groups(qp_map: QpMap) -> dict[tuple[int, int], list[int]]:
    groups = defaultdict(list)
    for i, reg in enumerate(qp_map.grid.regions):
        groups[(reg.h, reg.w)].append(i)
    return groups


def simulate_frame(frame: FrameBuffer, qp_map: QpMap) -> tuple[RdPoint, FrameBuffer]:
    grid = qp_map.grid
    if (frame.width, frame.height) != (grid.width, grid.height):
        raise ValueError(
            f"QP map grid {grid.width}x{grid.height} does not match frame "
            f"{frame.width}x{frame.height}"
        )
    regions = grid.regions
    groups = _shape_groups(qp_map)
    recon = np.empty(frame.planes.shape, dtype=np.uint16)
    bits, quality = [], []

    for ch in range(3):
        plane = frame.plane(ch)
        qsteps = qp_to_qstep(qp_map.qps[:, ch].astype(np.float64))
        all_levels = []
        for idx in groups.values():
            blocks = np.stack([plane[regions[i].slices] for i in idx])
            step = qsteps[idx][:, None, None]
            levels = quantize_urq(transform_block(blocks, frame.bit_depth), step)
            all_levels.append(levels.ravel())
            rec = inverse_transform_block(dequantize(levels, step), frame.bit_depth)
            rec = np.clip(np.rint(rec), 0, frame.max_value).astype(np.uint16)
            for k, i in enumerate(idx):
                recon[ch][regions[i].slices] = rec[k]
        bits.append(entropy_bits(np.concatenate(all_levels)))
        quality.append(psnr(plane, recon[ch], frame.bit_depth))

    point = RdPoint(qp_map.policy, qp_map.base_qp, tuple(bits), tuple(quality))
    return point, FrameBuffer(frame.width, frame.height, frame.bit_depth, recon)


def combine_points(points: Sequence[RdPoint]) -> RdPoint:
    """Sequence-level point: bits summed, PSNR averaged over frames."""
    if not points:
        raise ValueError("no RD points to combine")
    first = points[0]
    bits = tuple(math.fsum(p.bits[ch] for p in points) for ch in range(3))
    quality = tuple(float(np.mean([p.psnr[ch] for p in points])) for ch in range(3))
    return RdPoint(first.policy, first.base_qp, bits, quality)


def simulate_sequence(
    frames: Sequence[FrameBuffer],
    cu_size: int,
    base_qp: int,
    policy: str,
    strength: int = 6,
) -> tuple[RdPoint, list[FrameBuffer]]:
    if not frames:
        raise ValueError("no frames to simulate")
    grid = build_grid(frames[0].width, frames[0].height, cu_size)
    points, recons = [], []
    for index, frame in enumerate(frames):
        qp_map = compute_qp_map(frame, grid, base_qp, strength, policy, index)
        point, recon = simulate_frame(frame, qp_map)
        points.append(point)
        recons.append(recon)
    return combine_points(points), recons
