import csv
import hashlib
import io
import json
import math
from pathlib import Path

import pytest

from fcpq.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, DataError, main, read_rd_csv
from fcpq.codec_sim import RD_CSV_COLUMNS

FIXTURES = Path(__file__).parent / "fixtures"
TWO_CB = ["--input", str(FIXTURES / "two_cb_flat_luma.raw"), "--width", "128", "--height", "64"]
NOISE = ["--input", str(FIXTURES / "noise_96x64_10b_2f.raw"), "--width", "96", "--height", "64", "--frames", "2"]


def run(*argv):
    return main([str(a) for a in argv])


def exit_code(argv):
    """main's return value, or the code argparse exits with."""
    try:
        return main(argv)
    except SystemExit as exc:
        return exc.code


def table(path):
    lines = [line for line in Path(path).read_text().splitlines() if not line.startswith("#")]
    return list(csv.DictReader(lines))


def write_rd(path, policy, points):
    """points: (qp, total_bits, psnr) with bits split evenly across channels."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RD_CSV_COLUMNS)
    for qp, bits, q in points:
        w.writerow([policy, qp, bits / 3, bits / 3, bits / 3, bits, q, q, q])
    Path(path).write_text("# hand-made\n" + buf.getvalue())
    return path


RD_ANCHOR = [(22, 800.0, 39.0), (27, 400.0, 36.0), (32, 200.0, 33.0), (37, 100.0, 30.0)]


def test_synth_constant(tmp_path):
    out = tmp_path / "c.raw"
    assert run("synth", "--width", 4, "--height", 2, "--spec", "constant:7", "--out", out) == EXIT_OK
    assert out.read_bytes() == b"\x07\x00" * 24


def test_synth_reproduces_committed_fixture(tmp_path):
    out = tmp_path / "n.raw"
    run("synth", "--width", 96, "--height", 64, "--frames", 2, "--spec", "noise:0-1023", "--seed", 7, "--out", out)
    assert out.read_bytes() == (FIXTURES / "noise_96x64_10b_2f.raw").read_bytes()


def test_synth_preset_matches_digest(tmp_path):
    out = tmp_path / "p.raw"
    run("synth", "--width", 256, "--height", 256, "--frames", 10,
        "--spec", "flat-luma-noisy-chroma", "--seed", 2017, "--out", out)
    expected = (FIXTURES / "flat_luma_noisy_chroma_256x256_10b_10f.sha256").read_text().split()[0]
    assert hashlib.sha256(out.read_bytes()).hexdigest() == expected


def test_analyze_two_cb_policies(tmp_path):
    run("analyze", *TWO_CB, "--cu-size", 64, "--qp", 32, "--policy", "fcpq", "--out", tmp_path / "f.csv")
    run("analyze", *TWO_CB, "--cu-size", 64, "--qp", 32, "--policy", "adaptiveqp", "--out", tmp_path / "a.csv")
    fc, aq = table(tmp_path / "f.csv"), table(tmp_path / "a.csv")
    assert [(r["off_cb"], r["off_cr"]) for r in aq] == [("0", "0")] * 2
    assert [(r["off_cb"], r["qp_cb"]) for r in fc] == [("-5", "27"), ("2", "34")]
    assert all(r["qp_y"] == "32" for r in fc + aq)


def test_analyze_constant_input(tmp_path):
    raw = tmp_path / "c.raw"
    run("synth", "--width", 80, "--height", 48, "--spec", "constant:100,600,1000", "--out", raw)
    run("analyze", "--input", raw, "--width", 80, "--height", 48, "--cu-size", 16, "--qp", 27,
        "--out", tmp_path / "q.csv")
    rows = table(tmp_path / "q.csv")
    assert len(rows) == 15
    assert all(r[c] == "27" for r in rows for c in ("qp_y", "qp_cb", "qp_cr"))


def test_analyze_activity_and_json(tmp_path):
    run("analyze", *TWO_CB, "--qp", 32, "--out", tmp_path / "q.csv", "--activity-out", tmp_path / "act.csv")
    acts = table(tmp_path / "act.csv")
    assert len(acts) == 6
    cb = [r for r in acts if r["channel"] == "c1"]
    assert [float(r["activity"]) for r in cb] == [5.0, 401.0]
    assert float(cb[0]["picture_mean"]) == 203.0
    run("analyze", *TWO_CB, "--qp", 32, "--json", "--out", tmp_path / "q.jsonl")
    lines = [json.loads(x) for x in (tmp_path / "q.jsonl").read_text().splitlines()]
    assert lines[0]["meta"]["command"] == "analyze"
    assert [r["qp_cb"] for r in lines[1:]] == [27, 34]


def test_simulate_rows_and_monotonicity(tmp_path):
    out = tmp_path / "rd.csv"
    assert run("simulate", *NOISE, "--cu-size", 32, "--policy", "fcpq,adaptiveqp", "--out", out) == EXIT_OK
    rows = table(out)
    assert len(rows) == 8
    for policy in ("fcpq", "adaptiveqp"):
        mine = [r for r in rows if r["policy"] == policy]
        assert [int(r["base_qp"]) for r in mine] == [22, 27, 32, 37]
        bits = [float(r["total_bits"]) for r in mine]
        assert all(a >= b for a, b in zip(bits, bits[1:]))


def test_simulate_constant_uniform_equals_fcpq(tmp_path):
    raw = tmp_path / "c.raw"
    run("synth", "--width", 64, "--height", 64, "--spec", "constant:300,500,700", "--out", raw)
    out = tmp_path / "rd.csv"
    run("simulate", "--input", raw, "--width", 64, "--height", 64, "--policy", "uniform,fcpq", "--out", out)
    rows = table(out)
    strip = [{k: v for k, v in r.items() if k != "policy"} for r in rows]
    assert strip[:4] == strip[4:]


def test_simulate_recon_dir(tmp_path):
    run("simulate", *NOISE, "--qps", "37", "--out", tmp_path / "rd.csv", "--recon-dir", tmp_path / "rec")
    recon = tmp_path / "rec" / "recon_fcpq_qp37.raw"
    assert recon.stat().st_size == (FIXTURES / "noise_96x64_10b_2f.raw").stat().st_size


def test_bdrate_identical_and_halved(tmp_path):
    anchor = write_rd(tmp_path / "a.csv", "anchor", RD_ANCHOR)
    half = write_rd(tmp_path / "h.csv", "half", [(qp, b / 2, q) for qp, b, q in RD_ANCHOR])
    run("bdrate", "--anchor", anchor, "--test", anchor, "--out", tmp_path / "same.csv")
    assert all(abs(float(r["bd_rate_percent"])) < 1e-9 for r in table(tmp_path / "same.csv"))
    run("bdrate", "--anchor", anchor, "--test", half, "--channel", "c1", "--out", tmp_path / "half.csv")
    (row,) = table(tmp_path / "half.csv")
    assert float(row["bd_rate_percent"]) == pytest.approx(-50.0, abs=1e-6)
    assert (row["anchor"], row["test"], row["channel"]) == ("anchor", "half", "c1")


def test_bdrate_all_channels_tolerates_lossless_channel(tmp_path):
    rd = tmp_path / "rd.csv"
    raw = tmp_path / "c.raw"
    run("synth", "--width", 64, "--height", 64, "--spec", "half:constant:512|noise:0-1023", "--seed", 3, "--out", raw)
    run("simulate", "--input", raw, "--width", 64, "--height", 64, "--cu-size", 32,
        "--policy", "adaptiveqp,fcpq", "--out", rd)
    assert run("bdrate", "--anchor", rd, "--test", rd, "--anchor-policy", "adaptiveqp",
               "--test-policy", "fcpq", "--out", tmp_path / "bd.csv") == EXIT_OK
    assert len(table(tmp_path / "bd.csv")) == 3


def test_bdrate_needs_policy_choice(tmp_path, capsys):
    rd = tmp_path / "rd.csv"
    run("simulate", *NOISE, "--qps", "22,27,32,37", "--policy", "fcpq,uniform", "--out", rd)
    assert run("bdrate", "--anchor", rd, "--test", rd) == EXIT_USAGE
    assert "--anchor-policy" in capsys.readouterr().err


def test_malformed_csv_names_line(tmp_path, capsys):
    bad = write_rd(tmp_path / "bad.csv", "x", RD_ANCHOR)
    lines = bad.read_text().splitlines()
    lines[3] = "x,27,lots,1.0,1.0,3.0,36.0,36.0,36.0"
    bad.write_text("\n".join(lines) + "\n")
    with pytest.raises(DataError, match="line 4"):
        read_rd_csv(bad)
    assert run("bdrate", "--anchor", bad, "--test", bad) == EXIT_DATA
    assert "line 4" in capsys.readouterr().err


def test_bdrate_single_channel_without_overlap_is_data_error(tmp_path):
    anchor = write_rd(tmp_path / "a.csv", "a", RD_ANCHOR)
    far = write_rd(tmp_path / "f.csv", "f", [(qp, b, q + 30) for qp, b, q in RD_ANCHOR])
    assert run("bdrate", "--anchor", anchor, "--test", far, "--channel", "c0") == EXIT_DATA


@pytest.mark.parametrize(
    "argv",
    [
        ["analyze", *TWO_CB, "--qp", "60"],
        ["analyze", *TWO_CB, "--qp", "30", "--cu-size", "8"],
        ["simulate", *TWO_CB, "--qps", "22,x"],
        ["simulate", *TWO_CB, "--policy", "cbaq"],
        ["synth", "--width", "8", "--height", "8", "--spec", "bogus:1", "--out", "unused.raw"],
        ["analyze", "--qp", "30"],
    ],
)
def test_usage_errors(argv, capsys, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert exit_code(argv) == EXIT_USAGE
    assert capsys.readouterr().err


def test_wrong_geometry_is_data_error(capsys):
    assert main(["analyze", *TWO_CB[:2], "--width", "96", "--height", "64", "--qp", "30"]) == EXIT_DATA
    assert "bytes" in capsys.readouterr().err


def test_missing_input_is_data_error():
    assert main(["analyze", "--input", "/nonexistent.raw", "--width", "8", "--height", "8", "--qp", "30"]) == EXIT_DATA


def test_nan_and_inf_rendering(tmp_path):
    raw = tmp_path / "c.raw"
    run("synth", "--width", 32, "--height", 32, "--spec", "constant:520,300,1000", "--out", raw)
    run("simulate", "--input", raw, "--width", 32, "--height", 32, "--cu-size", 16, "--qps", "4",
        "--policy", "uniform", "--out", tmp_path / "rd.csv")
    (row,) = table(tmp_path / "rd.csv")
    assert row["psnr_c0"] == "inf" and math.isinf(float(row["psnr_c0"]))
