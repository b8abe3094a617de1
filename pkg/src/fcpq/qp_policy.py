"""Perceptual QP assignment per coding block.

Three policies share one data path:

* ``uniform``: every block of every channel gets the base QP.
* ``adaptiveqp``: one QP per CU from luma activity, copied to all channels.
* ``fcpq``: luma, Cb and Cr blocks each get a QP from their own activity.

Offsets are ``ceil(6 * log2(normalized activity))``, added to the base QP
and clamped to [0, 51].
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .activity import DEFAULT_STRENGTH, ChannelActivity, channel_activity, scaling_factor
from .partition import CuGrid
from .video_io import FrameBuffer

QP_MIN = 0
QP_MAX = 51
POLICIES = ("fcpq", "adaptiveqp", "uniform")
_CEIL_TOL = 1e-9

QP_CSV_COLUMNS = (
    "frame", "cb_index", "x", "y", "w", "h",
    "l", "b", "r", "L", "B", "R",
    "off_y", "off_cb", "off_cr", "qp_y", "qp_cb", "qp_cr",
)


def qp_to_qstep(qp) -> float:
    return 2.0 ** ((qp - 4) / 6)


def qstep_to_qp(qstep: float) -> int:
    if qstep <= 0:
        raise ValueError(f"QStep must be positive, got {qstep}")
    # log2 of an exact power 2**(k/6) can land a few ulps above k/6
    return math.ceil(6 * math.log2(qstep) - _CEIL_TOL) + 4


def _raw_offsets(normalized, strength: int) -> np.ndarray:
    normalized = np.asarray(normalized, dtype=np.float64)
    if np.any(normalized <= 0):
        raise ValueError("normalized activity must be positive")
    offsets = np.ceil(6 * np.log2(normalized))
    # The exact offset never exceeds A; this only absorbs rounding of
    # activities that land on the upper bound f in floating point.
    return np.minimum(offsets, strength).astype(np.int64)


def perceptual_qp(base_qp: int, normalized: float, strength: int = DEFAULT_STRENGTH) -> tuple[int, int]:
    """Return ``(raw_offset, clamped_qp)`` for one block and channel."""
    offset = int(_raw_offsets(normalized, strength))
    return offset, min(max(base_qp + offset, QP_MIN), QP_MAX)


@dataclasses.dataclass(frozen=True)
class QpAssignment:
    base_qp: int
    pq_y: int
    pq_cb: int
    pq_cr: int
    off_y: int
    off_cb: int
    off_cr: int
    L: float
    B: float
    R: float


@dataclasses.dataclass(frozen=True)
class QpMap:
    """Per-block QPs for one frame.

    ``offsets`` and ``qps`` have shape ``(count, 3)`` in channel order
    C0, C1, C2. ``activity`` holds the first-pass statistics of each
    channel, and ``normalized`` the ``(count, 3)`` normalised activities.
    """

    policy: str
    frame_index: int
    base_qp: int
    strength: int
    grid: CuGrid
    activity: tuple[ChannelActivity, ChannelActivity, ChannelActivity]
    normalized: np.ndarray
    offsets: np.ndarray
    qps: np.ndarray

    def __len__(self):
        return len(self.grid.regions)

    def assignment(self, index: int) -> QpAssignment:
        off = self.offsets[index]
        qp = self.qps[index]
        nrm = self.normalized[index]
        return QpAssignment(
            self.base_qp, int(qp[0]), int(qp[1]), int(qp[2]),
            int(off[0]), int(off[1]), int(off[2]),
            float(nrm[0]), float(nrm[1]), float(nrm[2]),
        )

    def rows(self):
        """Records following ``QP_CSV_COLUMNS``."""
        acts = [a.activities for a in self.activity]
        for i, reg in enumerate(self.grid.regions):
            yield {
                "frame": self.frame_index, "cb_index": i,
                "x": reg.x, "y": reg.y, "w": reg.w, "h": reg.h,
                "l": float(acts[0][i]), "b": float(acts[1][i]), "r": float(acts[2][i]),
                "L": float(self.normalized[i, 0]),
                "B": float(self.normalized[i, 1]),
                "R": float(self.normalized[i, 2]),
                "off_y": int(self.offsets[i, 0]),
                "off_cb": int(self.offsets[i, 1]),
                "off_cr": int(self.offsets[i, 2]),
                "qp_y": int(self.qps[i, 0]),
                "qp_cb": int(self.qps[i, 1]),
                "qp_cr": int(self.qps[i, 2]),
            }


def _check_inputs(frame: FrameBuffer, grid: CuGrid, base_qp: int, strength: int) -> None:
    if (frame.width, frame.height) != (grid.width, grid.height):
        raise ValueError(
            f"frame {frame.width}x{frame.height} does not match grid {grid.width}x{grid.height}"
        )
    if not QP_MIN <= base_qp <= QP_MAX:
        raise ValueError(f"base QP {base_qp} outside [{QP_MIN}, {QP_MAX}]")
    if strength < 1:
        raise ValueError(f"strength A must be >= 1, got {strength}")


def compute_qp_map(
    frame: FrameBuffer,
    grid: CuGrid,
    base_qp: int,
    strength: int = DEFAULT_STRENGTH,
    policy: str = "fcpq",
    frame_index: int = 0,
) -> QpMap:
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}; expected one of {POLICIES}")
    _check_inputs(frame, grid, base_qp, strength)
    f = scaling_factor(strength)

    # pass 1: activities and picture means for all three channels
    stats = tuple(channel_activity(frame.plane(ch), grid) for ch in range(3))
    normalized = np.stack([s.normalized(f) for s in stats], axis=1)

    # pass 2: offsets per policy
    if policy == "fcpq":
        offsets = _raw_offsets(normalized, strength)
    elif policy == "adaptiveqp":
        luma = _raw_offsets(normalized[:, 0], strength)
        offsets = np.repeat(luma[:, None], 3, axis=1)
    else:
        offsets = np.zeros(normalized.shape, dtype=np.int64)
    qps = np.clip(base_qp + offsets, QP_MIN, QP_MAX)

    return QpMap(policy, frame_index, base_qp, strength, grid, stats, normalized, offsets, qps)


def compute_qp_map_fcpq(frame, grid, base_qp, strength=DEFAULT_STRENGTH, frame_index=0) -> QpMap:
    return compute_qp_map(frame, grid, base_qp, strength, "fcpq", frame_index)


def compute_qp_map_adaptiveqp(frame, grid, base_qp, strength=DEFAULT_STRENGTH, frame_index=0) -> QpMap:
    return compute_qp_map(frame, grid, base_qp, strength, "adaptiveqp", frame_index)


def compute_qp_map_uniform(frame, grid, base_qp, strength=DEFAULT_STRENGTH, frame_index=0) -> QpMap:
    return compute_qp_map(frame, grid, base_qp, strength, "uniform", frame_index)
