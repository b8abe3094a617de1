"""Command-line front end: synth, analyze, simulate, bdrate.

Every CSV starts with one ``#`` comment line recording the command and its
flags (output paths excluded, so reruns into another file stay
byte-identical), then a header row. ``--json`` writes the same records as
JSON lines instead, metadata first.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import warnings
from collections.abc import Iterable, Sequence
from pathlib import Path

import numpy as np

from . import __version__
from .activity import DEFAULT_STRENGTH
from .codec_sim import RD_CSV_COLUMNS, RdPoint, simulate_sequence
from .metrics import FIT_DESCRIPTION, BdRateError, RdCurve, bd_rate_detail
from .partition import SUPPORTED_CU_SIZES, build_grid
from .qp_policy import POLICIES, QP_CSV_COLUMNS, compute_qp_map
from .video_io import (
    COLOR_SPACES,
    SUPPORTED_BIT_DEPTHS,
    VideoDescriptor,
    VideoFormatError,
    parse_spec,
    read_frames,
    synth_frames,
    write_frames,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

DEFAULT_QPS = "22,27,32,37"
CHANNELS = ("c0", "c1", "c2")
BDRATE_COLUMNS = (
    "anchor", "test", "channel", "rate", "bd_rate_percent",
    "psnr_overlap_low", "psnr_overlap_high", "warnings",
)
ACTIVITY_COLUMNS = (
    "frame", "cb_index", "channel",
    "var_0", "var_1", "var_2", "var_3",
    "mean_0", "mean_1", "mean_2", "mean_3",
    "m_0", "m_1", "m_2", "m_3",
    "activity", "picture_mean", "count",
)

_OUTPUT_FLAGS = {"out", "activity_out", "recon_dir", "func", "command"}


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(value) -> str:
    if isinstance(value, np.floating):
        value = float(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    return str(value)


def _metadata(command: str, args: argparse.Namespace) -> dict:
    flags = {k: v for k, v in sorted(vars(args).items()) if k not in _OUTPUT_FLAGS}
    return {"tool": "fcpq", "version": __version__, "command": command, **flags}


def _render_records(meta: dict, columns: Sequence[str], records: Iterable[dict], as_json: bool) -> str:
    buf = io.StringIO()
    if as_json:
        buf.write(json.dumps({"meta": meta}, sort_keys=True) + "\n")
        for rec in records:
            clean = {k: (_fmt(v) if isinstance(v, float) and not math.isfinite(v) else v) for k, v in rec.items()}
            buf.write(json.dumps(clean) + "\n")
        return buf.getvalue()
    buf.write("# " + " ".join(f"{k}={_fmt(v)}" for k, v in meta.items()) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for rec in records:
        writer.writerow([_fmt(rec[c]) for c in columns])
    return buf.getvalue()


def _emit(text: str, out) -> None:
    if out is None or str(out) == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _add_geometry(p: argparse.ArgumentParser) -> None:
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--bit-depth", type=int, default=10, choices=SUPPORTED_BIT_DEPTHS)
    p.add_argument("--frames", type=int, default=1)
    p.add_argument("--color-space", default="ycbcr", choices=COLOR_SPACES)


def _add_analysis(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="raw planar 4:4:4 file")
    _add_geometry(p)
    p.add_argument("--cu-size", type=int, default=64, choices=SUPPORTED_CU_SIZES)
    p.add_argument("--strength", type=int, default=DEFAULT_STRENGTH, help="A, the maximum QP offset (default 6)")
    p.add_argument("--json", action="store_true", help="write JSON lines instead of CSV")


def _descriptor(args) -> VideoDescriptor:
    if args.width < 2 or args.height < 2:
        raise UsageError("--width and --height must be at least 2")
    if args.frames < 1:
        raise UsageError("--frames must be at least 1")
    return VideoDescriptor(args.width, args.height, args.bit_depth, args.frames, args.color_space)


def _check_strength(args) -> None:
    if args.strength < 1:
        raise UsageError("--strength must be >= 1")


def _parse_qps(text: str) -> list[int]:
    try:
        qps = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"--qps must be a comma-separated list of integers, got {text!r}") from None
    if not qps or any(not 0 <= q <= 51 for q in qps):
        raise UsageError(f"--qps values must lie in [0, 51], got {text!r}")
    return qps


def _parse_policies(text: str) -> list[str]:
    policies = [t.strip() for t in text.split(",") if t.strip()]
    bad = [p for p in policies if p not in POLICIES]
    if not policies or bad:
        raise UsageError(f"unknown policy in {text!r}; choose from {', '.join(POLICIES)}")
    return policies


def cmd_synth(args) -> int:
    desc = _descriptor(args)
    try:
        spec = parse_spec(args.spec, desc.bit_depth)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    frames = synth_frames(desc.width, desc.height, desc.bit_depth, spec, desc.frame_count, args.seed)
    write_frames(args.out, frames, desc)
    return EXIT_OK


def _activity_records(qp_map):
    for ch, stats in enumerate(qp_map.activity):
        for i in range(stats.count):
            rec = {"frame": qp_map.frame_index, "cb_index": i, "channel": CHANNELS[ch]}
            for q in range(4):
                rec[f"var_{q}"] = float(stats.sub_variances[i, q])
                rec[f"mean_{q}"] = float(stats.sub_means[i, q])
                rec[f"m_{q}"] = int(stats.sub_sizes[i, q])
            rec["activity"] = float(stats.activities[i])
            rec["picture_mean"] = stats.picture_mean
            rec["count"] = stats.count
            yield rec


def cmd_analyze(args) -> int:
    desc = _descriptor(args)
    _check_strength(args)
    if not 0 <= args.qp <= 51:
        raise UsageError("--qp must lie in [0, 51]")
    frames = read_frames(args.input, desc)
    grid = build_grid(desc.width, desc.height, args.cu_size)
    maps = [
        compute_qp_map(frame, grid, args.qp, args.strength, args.policy, index)
        for index, frame in enumerate(frames)
    ]
    meta = _metadata("analyze", args)
    rows = (row for m in maps for row in m.rows())
    _emit(_render_records(meta, QP_CSV_COLUMNS, rows, args.json), args.out)
    if args.activity_out:
        recs = (rec for m in maps for rec in _activity_records(m))
        _emit(_render_records(meta, ACTIVITY_COLUMNS, recs, args.json), args.activity_out)
    return EXIT_OK


def run_simulation(frames, cu_size, qps, policies, strength) -> list[tuple[RdPoint, list]]:
    results = []
    for policy in policies:
        for qp in qps:
            results.append(simulate_sequence(frames, cu_size, qp, policy, strength))
    return results


def cmd_simulate(args) -> int:
    desc = _descriptor(args)
    _check_strength(args)
    qps = _parse_qps(args.qps)
    policies = _parse_policies(args.policy)
    frames = read_frames(args.input, desc)
    results = run_simulation(frames, args.cu_size, qps, policies, args.strength)
    if args.recon_dir:
        os.makedirs(args.recon_dir, exist_ok=True)
        for point, recon in results:
            name = f"recon_{point.policy}_qp{point.base_qp}.raw"
            write_frames(Path(args.recon_dir) / name, recon, desc)
    meta = _metadata("simulate", args)
    rows = (point.row() for point, _ in results)
    _emit(_render_records(meta, RD_CSV_COLUMNS, rows, args.json), args.out)
    return EXIT_OK


def read_rd_csv(path) -> list[RdPoint]:
    """Parse an RD-point CSV written by ``simulate``; comment lines are skipped."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror or exc}") from None
    lines = [(n, line) for n, line in enumerate(text.splitlines(), 1) if line and not line.startswith("#")]
    if not lines:
        raise DataError(f"{path}: no header row")
    header_no, header = lines[0]
    columns = next(csv.reader([header]))
    missing = [c for c in RD_CSV_COLUMNS if c not in columns]
    if missing:
        raise DataError(f"{path}: line {header_no}: header lacks columns {missing}")
    points = []
    for line_no, line in lines[1:]:
        values = next(csv.reader([line]))
        if len(values) != len(columns):
            raise DataError(f"{path}: line {line_no}: expected {len(columns)} fields, got {len(values)}")
        rec = dict(zip(columns, values))
        try:
            points.append(
                RdPoint(
                    rec["policy"],
                    int(rec["base_qp"]),
                    tuple(float(rec[f"bits_c{i}"]) for i in range(3)),
                    tuple(float(rec[f"psnr_c{i}"]) for i in range(3)),
                )
            )
        except ValueError as exc:
            raise DataError(f"{path}: line {line_no}: {exc}") from None
    if not points:
        raise DataError(f"{path}: no data rows")
    return points


def _select(points: list[RdPoint], policy, path) -> tuple[str, list[RdPoint]]:
    policies = sorted({p.policy for p in points})
    if policy is None:
        if len(policies) != 1:
            raise UsageError(f"{path} holds policies {policies}; pick one with --anchor-policy/--test-policy")
        policy = policies[0]
    chosen = sorted((p for p in points if p.policy == policy), key=lambda p: p.base_qp)
    if not chosen:
        raise DataError(f"{path}: no rows for policy {policy!r}")
    return policy, chosen


def _curve(points: list[RdPoint], ch: int, rate: str, label: str) -> RdCurve:
    rates = [p.total_bits if rate == "total" else p.bits[ch] for p in points]
    return RdCurve(rates, [p.psnr[ch] for p in points], label, CHANNELS[ch])


def bdrate_records(anchor_pts, test_pts, anchor_name, test_name, channels, rate, strict=True):
    """One report record per channel.

    With ``strict=False`` a channel whose curves admit no BD-Rate (for
    example a lossless channel with infinite PSNR) yields NaN and the
    reason instead of raising.
    """
    records = []
    for ch in channels:
        rec = {"anchor": anchor_name, "test": test_name, "channel": CHANNELS[ch], "rate": rate}
        try:
            a = _curve(anchor_pts, ch, rate, anchor_name)
            t = _curve(test_pts, ch, rate, test_name)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                res = bd_rate_detail(a, t)
        except BdRateError as exc:
            if strict:
                raise
            rec.update(bd_rate_percent=math.nan, psnr_overlap_low=math.nan,
                       psnr_overlap_high=math.nan, warnings=str(exc))
        else:
            rec.update(bd_rate_percent=res.percent, psnr_overlap_low=res.psnr_low,
                       psnr_overlap_high=res.psnr_high, warnings="; ".join(res.warnings))
        records.append(rec)
    return records


def cmd_bdrate(args) -> int:
    anchor_policy, anchor_pts = _select(read_rd_csv(args.anchor), args.anchor_policy, args.anchor)
    test_policy, test_pts = _select(read_rd_csv(args.test), args.test_policy, args.test)
    every = args.channel == "all"
    channels = range(3) if every else [CHANNELS.index(args.channel)]
    try:
        records = bdrate_records(
            anchor_pts, test_pts, anchor_policy, test_policy, channels, args.rate, strict=not every
        )
    except BdRateError as exc:
        raise DataError(str(exc)) from None
    meta = _metadata("bdrate", args)
    meta["fit"] = FIT_DESCRIPTION
    meta["anchor_file"] = Path(args.anchor).name
    meta["test_file"] = Path(args.test).name
    meta.pop("anchor")
    meta.pop("test")
    _emit(_render_records(meta, BDRATE_COLUMNS, records, args.json), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fcpq", description="Per-block perceptual QP maps for 4:4:4 video.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="write a deterministic synthetic raw video")
    _add_geometry(p)
    p.add_argument("--spec", required=True, help="e.g. constant:512, noise:0-1023, flat-luma-noisy-chroma")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("analyze", help="per-block QP map CSV")
    _add_analysis(p)
    p.add_argument("--qp", type=int, required=True, help="base QP")
    p.add_argument("--policy", default="fcpq", choices=POLICIES)
    p.add_argument("--out", default="-")
    p.add_argument("--activity-out", help="also write per-block activity statistics here")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="RD points from the toy intra coder")
    _add_analysis(p)
    p.add_argument("--qps", default=DEFAULT_QPS)
    p.add_argument("--policy", default="fcpq", help="one or more of fcpq,adaptiveqp,uniform (comma-separated)")
    p.add_argument("--out", default="-")
    p.add_argument("--recon-dir", help="write reconstructed frames per policy and QP here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("bdrate", help="BD-Rate of a test RD CSV against an anchor")
    p.add_argument("--anchor", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--anchor-policy")
    p.add_argument("--test-policy")
    p.add_argument("--channel", default="all", choices=(*CHANNELS, "all"))
    p.add_argument(
        "--rate", default="total", choices=("total", "channel"),
        help="rate axis: total bits of all channels (default) or the channel's own bits",
    )
    p.add_argument("--json", action="store_true")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_bdrate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"fcpq {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, VideoFormatError, BdRateError, ValueError, OSError) as exc:
        print(f"fcpq {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
