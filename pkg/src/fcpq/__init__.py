"""Coding-block perceptual QP maps (FCPQ and AdaptiveQP) for 4:4:4 video."""

__version__ = "0.1.0"

from .activity import (
    block_variance,
    cb_activity,
    channel_activity,
    normalize_activity,
    picture_mean_activity,
    scaling_factor,
)
from .codec_sim import (
    RdPoint,
    dequantize,
    entropy_bits,
    psnr,
    quantize_urq,
    simulate_frame,
    simulate_sequence,
    transform_block,
)
from .metrics import RdCurve, bd_rate
from .partition import CuGrid, CuRegion, Region, build_grid, sub_blocks
from .qp_policy import (
    QpMap,
    compute_qp_map,
    compute_qp_map_adaptiveqp,
    compute_qp_map_fcpq,
    perceptual_qp,
    qp_to_qstep,
    qstep_to_qp,
)
from .video_io import FrameBuffer, VideoDescriptor, read_frames, synth_frame, write_frames
