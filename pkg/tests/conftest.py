import numpy as np
import pytest

from fcpq.video_io import FrameBuffer


def checker_block(h, w, centre, amplitude):
    """centre +/- amplitude in a 1-pixel checkerboard: every even-sized
    sub-block has mean ``centre`` and population variance ``amplitude**2``."""
    yy, xx = np.indices((h, w))
    sign = np.where((yy + xx) % 2, 1, -1)
    return centre + amplitude * sign


def two_cb_frame(luma_amps, chroma_amps, bit_depth=10):
    """128x64 frame = two 64x64 CBs; each channel's left/right CB is a
    checkerboard with the given amplitudes (0 = flat)."""
    mid = 1 << (bit_depth - 1)
    planes = []
    for left, right in (luma_amps, chroma_amps, chroma_amps):
        planes.append(np.hstack([checker_block(64, 64, mid, left), checker_block(64, 64, mid, right)]))
    return FrameBuffer(128, 64, bit_depth, np.stack(planes))


@pytest.fixture
def rng():
    return np.random.default_rng(20170301)
