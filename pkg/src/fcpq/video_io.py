"""Raw planar 4:4:4 frame I/O and synthetic test frames.

Files are headerless, frame-major, with planes stored in channel order
C0, C1, C2 (Y/Cb/Cr or G/B/R). Samples deeper than 8 bits occupy two
little-endian bytes with the unused high bits zero.
"""

from __future__ import annotations

import dataclasses
import os
from collections.abc import Iterable, Sequence
from typing import Union

import numpy as np

SUPPORTED_BIT_DEPTHS = (8, 10, 12)
COLOR_SPACES = ("ycbcr", "gbr")
CHANNEL_NAMES = {"ycbcr": ("Y", "Cb", "Cr"), "gbr": ("G", "B", "R")}


class VideoFormatError(ValueError):
    """Raised when raw video data does not match its descriptor."""


def _check_bit_depth(bit_depth: int) -> None:
    if bit_depth not in SUPPORTED_BIT_DEPTHS:
        raise ValueError(
            f"unsupported bit depth {bit_depth}; expected one of {SUPPORTED_BIT_DEPTHS}"
        )


@dataclasses.dataclass(frozen=True)
class FrameBuffer:
    """One 4:4:4 picture: three equal-sized planes of unsigned samples.

    ``planes`` has shape ``(3, height, width)`` and dtype ``uint16``. The
    array is made read-only on construction.
    """

    width: int
    height: int
    bit_depth: int
    planes: np.ndarray

    def __post_init__(self):
        _check_bit_depth(self.bit_depth)
        planes = np.asarray(self.planes)
        if planes.shape != (3, self.height, self.width):
            raise ValueError(
                f"planes must have shape (3, {self.height}, {self.width}), got {planes.shape}"
            )
        if planes.size and (planes.min() < 0 or planes.max() > self.max_value):
            raise ValueError(
                f"sample values must lie in [0, {self.max_value}] for {self.bit_depth}-bit video"
            )
        planes = np.array(planes, dtype=np.uint16)
        planes.setflags(write=False)
        object.__setattr__(self, "planes", planes)

    @property
    def max_value(self) -> int:
        return (1 << self.bit_depth) - 1

    def plane(self, channel: int) -> np.ndarray:
        return self.planes[channel]

    def __eq__(self, other):
        if not isinstance(other, FrameBuffer):
            return NotImplemented
        return (
            (self.width, self.height, self.bit_depth)
            == (other.width, other.height, other.bit_depth)
            and np.array_equal(self.planes, other.planes)
        )

    __hash__ = None


@dataclasses.dataclass(frozen=True)
class VideoDescriptor:
    width: int
    height: int
    bit_depth: int
    frame_count: int
    color_space: str = "ycbcr"

    def __post_init__(self):
        _check_bit_depth(self.bit_depth)
        if self.width < 1 or self.height < 1:
            raise ValueError(f"invalid picture size {self.width}x{self.height}")
        if self.frame_count < 0:
            raise ValueError(f"frame_count must be >= 0, got {self.frame_count}")
        if self.color_space not in COLOR_SPACES:
            raise ValueError(
                f"unknown color space {self.color_space!r}; expected one of {COLOR_SPACES}"
            )

    @property
    def bytes_per_sample(self) -> int:
        return 1 if self.bit_depth == 8 else 2

    @property
    def dtype(self) -> np.dtype:
        return np.dtype(np.uint8) if self.bit_depth == 8 else np.dtype("<u2")

    @property
    def frame_bytes(self) -> int:
        return 3 * self.width * self.height * self.bytes_per_sample

    @property
    def file_bytes(self) -> int:
        return self.frame_count * self.frame_bytes

    @property
    def channel_names(self) -> tuple[str, str, str]:
        return CHANNEL_NAMES[self.color_space]


def read_frames(path: Union[str, os.PathLike], descriptor: VideoDescriptor) -> list[FrameBuffer]:
    actual = os.path.getsize(path)
    if actual != descriptor.file_bytes:
        raise VideoFormatError(
            f"{os.fspath(path)}: expected {descriptor.file_bytes} bytes "
            f"({descriptor.frame_count} frames of {descriptor.width}x{descriptor.height} "
            f"{descriptor.bit_depth}-bit 4:4:4), found {actual} bytes"
        )
    data = np.fromfile(path, dtype=descriptor.dtype)
    shape = (descriptor.frame_count, 3, descriptor.height, descriptor.width)
    data = data.reshape(shape)

    limit = (1 << descriptor.bit_depth) - 1
    frames = []
    for index in range(descriptor.frame_count):
        planes = data[index]
        over = np.flatnonzero(planes > limit)
        if over.size:
            offset = int(over[0])
            raise VideoFormatError(
                f"{os.fspath(path)}: frame {index}, sample offset {offset} "
                f"has value {int(planes.flat[offset])} > {limit}"
            )
        frames.append(
            FrameBuffer(descriptor.width, descriptor.height, descriptor.bit_depth, planes)
        )
    return frames


def write_frames(
    path: Union[str, os.PathLike],
    frames: Iterable[FrameBuffer],
    descriptor: VideoDescriptor,
) -> None:
    with open(path, "wb") as fh:
        for index, frame in enumerate(frames):
            if (frame.width, frame.height, frame.bit_depth) != (
                descriptor.width,
                descriptor.height,
                descriptor.bit_depth,
            ):
                raise VideoFormatError(
                    f"frame {index} is {frame.width}x{frame.height} {frame.bit_depth}-bit, "
                    f"descriptor says {descriptor.width}x{descriptor.height} "
                    f"{descriptor.bit_depth}-bit"
                )
            fh.write(frame.planes.astype(descriptor.dtype).tobytes())


# Synthetic frame specifications. Each one fills a (3, h, w) array.


@dataclasses.dataclass(frozen=True)
class Constant:
    values: tuple[int, int, int]


@dataclasses.dataclass(frozen=True)
class Checkerboard:
    low: int
    high: int
    tile: int = 1


@dataclasses.dataclass(frozen=True)
class Noise:
    """Uniform integer noise, inclusive ``(lo, hi)`` range per channel."""

    ranges: tuple[tuple[int, int], tuple[int, int], tuple[int, int]]


@dataclasses.dataclass(frozen=True)
class HalfSplit:
    """``left`` fills columns ``[0, width // 2)``, ``right`` the rest."""

    left: "SynthSpec"
    right: "SynthSpec"


SynthSpec = Union[Constant, Checkerboard, Noise, HalfSplit]


def _spec_values(spec: SynthSpec) -> list[int]:
    if isinstance(spec, Constant):
        return list(spec.values)
    if isinstance(spec, Checkerboard):
        return [spec.low, spec.high]
    if isinstance(spec, Noise):
        return [v for pair in spec.ranges for v in pair]
    return _spec_values(spec.left) + _spec_values(spec.right)


def _render(spec: SynthSpec, height: int, width: int, rng: np.random.Generator) -> np.ndarray:
    if isinstance(spec, Constant):
        out = np.empty((3, height, width), dtype=np.uint16)
        out[:] = np.asarray(spec.values, dtype=np.uint16)[:, None, None]
        return out
    if isinstance(spec, Checkerboard):
        yy, xx = np.indices((height, width))
        odd = ((yy // spec.tile) + (xx // spec.tile)) % 2 == 1
        plane = np.where(odd, spec.high, spec.low).astype(np.uint16)
        return np.broadcast_to(plane, (3, height, width)).copy()
    if isinstance(spec, Noise):
        return np.stack(
            [rng.integers(lo, hi, size=(height, width), endpoint=True) for lo, hi in spec.ranges]
        ).astype(np.uint16)
    if isinstance(spec, HalfSplit):
        split = width // 2
        left = _render(spec.left, height, split, rng)
        right = _render(spec.right, height, width - split, rng)
        return np.concatenate([left, right], axis=2)
    raise TypeError(f"unknown synth spec {spec!r}")


def synth_frame(width: int, height: int, bit_depth: int, spec: SynthSpec, seed: int = 0) -> FrameBuffer:
    """Render ``spec`` into a frame; noise draws come from ``seed`` only."""
    _check_bit_depth(bit_depth)
    limit = (1 << bit_depth) - 1
    values = _spec_values(spec)
    bad = [v for v in values if not 0 <= v <= limit]
    if bad:
        raise ValueError(f"synth values {bad} out of range [0, {limit}] for {bit_depth}-bit")
    if isinstance(spec, Checkerboard) and spec.tile < 1:
        raise ValueError("checkerboard tile must be >= 1")
    if isinstance(spec, Noise) and any(lo > hi for lo, hi in spec.ranges):
        raise ValueError(f"noise range low > high in {spec.ranges}")
    rng = np.random.default_rng(seed)
    return FrameBuffer(width, height, bit_depth, _render(spec, height, width, rng))


def synth_frames(
    width: int, height: int, bit_depth: int, spec: SynthSpec, count: int, seed: int = 0
) -> list[FrameBuffer]:
    """Frame ``i`` uses seed ``seed + i``."""
    return [synth_frame(width, height, bit_depth, spec, seed + i) for i in range(count)]


def _presets(bit_depth: int) -> dict[str, SynthSpec]:
    peak = (1 << bit_depth) - 1
    mid = 1 << (bit_depth - 1)
    # amplitudes are set for 10-bit and scaled with bit depth
    low = 48 << bit_depth >> 10
    high = 192 << bit_depth >> 10
    flat = (mid, mid)
    quiet = (mid - low, mid + low)
    busy = (mid - high, mid + high)
    return {
        "flat-luma-noisy-chroma": HalfSplit(
            Noise((flat, quiet, quiet)),
            Noise((flat, busy, busy)),
        ),
        "noisy-luma-flat-chroma": HalfSplit(
            Noise((quiet, flat, flat)),
            Noise((busy, flat, flat)),
        ),
        "noise": Noise(((0, peak), (0, peak), (0, peak))),
    }


PRESET_NAMES = ("flat-luma-noisy-chroma", "noisy-luma-flat-chroma", "noise")


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def parse_spec(text: str, bit_depth: int) -> SynthSpec:
    """Parse a synth spec string.

    Grammar::

        constant:V | constant:V0,V1,V2
        checkerboard:LOW,HIGH[,TILE]
        noise:LO-HI | noise:LO-HI,LO-HI,LO-HI
        half:LEFT|RIGHT          (LEFT/RIGHT are non-half specs)
        <preset name>            one of PRESET_NAMES
    """
    text = text.strip()
    presets = _presets(bit_depth)
    if text in presets:
        return presets[text]
    kind, sep, body = text.partition(":")
    if not sep:
        raise ValueError(f"bad synth spec {text!r}")
    try:
        if kind == "constant":
            vals = _ints(body)
            if len(vals) == 1:
                vals *= 3
            if len(vals) != 3:
                raise ValueError("constant needs 1 or 3 values")
            return Constant(tuple(vals))
        if kind == "checkerboard":
            vals = _ints(body)
            if len(vals) not in (2, 3):
                raise ValueError("checkerboard needs LOW,HIGH[,TILE]")
            return Checkerboard(*vals)
        if kind == "noise":
            pairs = []
            for item in body.split(","):
                lo, dash, hi = item.strip().partition("-")
                if not dash:
                    raise ValueError(f"noise range {item!r} must be LO-HI")
                pairs.append((int(lo), int(hi)))
            if len(pairs) == 1:
                pairs *= 3
            if len(pairs) != 3:
                raise ValueError("noise needs 1 or 3 ranges")
            return Noise(tuple(pairs))
        if kind == "half":
            left, bar, right = body.partition("|")
            if not bar:
                raise ValueError("half needs LEFT|RIGHT")
            return HalfSplit(parse_spec(left, bit_depth), parse_spec(right, bit_depth))
    except (TypeError, ValueError) as exc:
        raise ValueError(f"bad synth spec {text!r}: {exc}") from None
    raise ValueError(f"unknown synth spec kind {kind!r}")


def frames_equal(a: Sequence[FrameBuffer], b: Sequence[FrameBuffer]) -> bool:
    return len(a) == len(b) and all(x == y for x, y in zip(a, b))
