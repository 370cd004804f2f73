import numpy as np
import pytest

from conftest import ALFONSINO, SEABASS
from viakern import cli, io

SB = ["--species-scalars", str(SEABASS[0]), "--species-ages", str(SEABASS[1])]
AL = ["--species-scalars", str(ALFONSINO[0]), "--species-ages", str(ALFONSINO[1])]
PRES = ["--toy-dynamics", "2*exp(-u)*(x/(1+x))", "--toy-control", "0,0.5", "--toy-steady", "1",
        "--toy-contraction", "0.5", "--toy-constraint", "x>=1", "--toy-constraint=-u>=-0.1"]
PROD = ["--toy-dynamics", "x*exp(0.1-u)", "--toy-control", "0,0.3",
        "--toy-constraint", "x>=1", "--toy-constraint", "u*x>=0.05"]


def run(args, tmp_path, name="out"):
    out = tmp_path / name
    return cli.main(args + ["--out", str(out)]), out


def test_thresholds_seabass(tmp_path, capsys):
    code, out = run(["thresholds"] + SB, tmp_path)
    assert code == 0
    rows = io.parse_report((out / "thresholds.csv").read_text())
    assert float(rows["max_yield_tons_full"]) == pytest.approx(15166, rel=0.01)
    assert "phi_G: 0.852144" in capsys.readouterr().out


def test_thresholds_alfonsino_conventions(tmp_path):
    code, out = run(["thresholds"] + AL, tmp_path)
    assert code == 0
    lines = (out / "conventions.tsv").read_text().splitlines()
    assert len(lines) == 5 and lines[0].startswith("convention\t")
    rows = io.parse_report((out / "thresholds.csv").read_text())
    assert rows["convention"] == "ssb=female_only,female_recruit_share=1"


def test_corrupt_file_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("A = 36\nalpha = oops\n")
    code, _ = run(["thresholds", "--species-scalars", str(bad), "--species-ages", str(SEABASS[1])], tmp_path)
    assert code == 2
    assert "alpha" in capsys.readouterr().err


def test_missing_options_exit_2(tmp_path):
    assert run(["thresholds"], tmp_path)[0] == 2
    assert cli.main(["nonsense"]) == 2
    assert cli.main([]) == 2


def trajectory_rows(out):
    lines = (out / "trajectory.tsv").read_text().splitlines()
    header = lines[0].split("\t")
    return [dict(zip(header, line.split("\t"))) for line in lines[1:]]


def test_simulate_constant_at_equilibrium(tmp_path):
    code, out = run(["simulate"] + SB + ["--x0", "equilibrium@lambda_min", "--lambda", "0", "--steps", "5"],
                    tmp_path)
    assert code == 0
    rows = trajectory_rows(out)
    assert len(rows) == 6
    assert {r["ssb_tons"] for r in rows} == {rows[0]["ssb_tons"]}
    assert float(rows[0]["ssb_tons"]) == pytest.approx(56521, rel=0.01)


def test_simulate_zero_steps(tmp_path):
    code, out = run(["simulate"] + SB + ["--steps", "0"], tmp_path)
    assert code == 0 and len(trajectory_rows(out)) == 1


def test_simulate_harvest_declines(tmp_path):
    code, out = run(["simulate"] + SB + ["--lambda", "0.39", "--steps", "30"], tmp_path)
    ylds = [float(r["yield_tons"]) for r in trajectory_rows(out)]
    assert ylds[0] == pytest.approx(15166, rel=0.01)
    assert all(b < a for a, b in zip(ylds, ylds[1:10]))


def test_simulate_out_of_bounds_warns(tmp_path, capsys):
    code, _ = run(["simulate"] + SB + ["--lambda", "0.6", "--steps", "2"], tmp_path)
    assert code == 0 and "warning" in capsys.readouterr().err


def test_simulate_schedule(tmp_path):
    code, out = run(["simulate"] + SB + ["--schedule", "0,0.39", "--steps", "2"], tmp_path)
    assert code == 0
    assert [r["lambda"] for r in trajectory_rows(out)] == ["0", "0.39", "0.39"]
    assert run(["simulate"] + SB + ["--schedule", "0", "--steps", "2"], tmp_path)[0] == 2


def write_series(tmp_path, values, name="s.csv"):
    path = tmp_path / name
    path.write_text(io.write_series(io.ObservedSeries(tuple(range(1990, 1990 + len(values))), tuple(values))))
    return str(path)


def test_check_series_zero_and_note(tmp_path, capsys):
    code, _ = run(["check-series"] + SB + ["--series", write_series(tmp_path, [0.0] * 5)], tmp_path)
    assert code == 0
    code, out = run(["check-series"] + AL + ["--series", write_series(tmp_path, [9000.0, 12000.0]), "--svg"],
                    tmp_path)
    assert code == 0 and "cannot conclude non-viability" in capsys.readouterr().out
    assert (out / "audit.svg").read_text().startswith("<svg")


def test_check_series_ssb_kind(tmp_path):
    code, _ = run(["check-series"] + SB + ["--series", write_series(tmp_path, [60000.0]), "--kind", "ssb"],
                  tmp_path)
    assert code == 1


def test_check_series_bad_file(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("year,value_tons\n1990,-5\n")
    assert run(["check-series"] + SB + ["--series", str(bad)], tmp_path)[0] == 2


def kernel_rows(out):
    return io.parse_report((out / "kernel_test.csv").read_text())


def test_kernel_test_seabass_empty(tmp_path):
    code, out = run(["kernel-test"] + SB + ["--ymin", "20000", "--emptiness"], tmp_path)
    assert code == 1 and kernel_rows(out)["verdict"] == "kernel_empty"


def test_kernel_test_seabass_protect(tmp_path):
    code, out = run(["kernel-test"] + SB + ["--set", "protect", "--blim", "50000", "--emptiness"], tmp_path)
    rows = kernel_rows(out)
    assert code == 0 and rows["verdict"] == "kernel_nonempty" and "witness_l1" in rows


def test_kernel_test_x0_outside(tmp_path):
    zeros = ",".join(["0"] * 36)
    code, out = run(["kernel-test"] + SB + ["--ymin", "100", "--x0", zeros], tmp_path)
    assert code == 1 and kernel_rows(out)["conclusion"] == "not_in_kernel"


def test_kernel_test_toy_membership(tmp_path):
    code, out = run(["kernel-test"] + PRES + ["--x0", "3"], tmp_path)
    assert code == 0 and kernel_rows(out)["conclusion"] == "in_kernel"
    code, out = run(["kernel-test"] + PROD + ["--x0", "0.5"], tmp_path)
    assert code == 1


def test_kernel_test_mixed_exit_2(tmp_path, capsys):
    args = ["--toy-dynamics", "x", "--toy-control", "0,1", "--toy-constraint", "u>=0",
            "--toy-constraint=-u>=-1", "--x0", "1"]
    code, _ = run(["kernel-test"] + args, tmp_path)
    assert code == 2 and "mixes" in capsys.readouterr().err


def test_kernel_test_rejects_non_monotone_toy(tmp_path):
    assert run(["kernel-test", "--toy-dynamics", "1/(1+x)", "--toy-control", "0,1", "--x0", "1"], tmp_path)[0] == 2


def test_kernel_slice_toy(tmp_path):
    code, out = run(["kernel-slice"] + PROD + ["--box", "0,4", "--resolution", "64", "--svg"], tmp_path)
    assert code == 0
    lines = (out / "grid.tsv").read_text().splitlines()
    assert lines[0] == "x1\tlower\tupper\tconclusion" and len(lines) == 65
    upper = [line.split("\t")[2] != "false" for line in lines[1:]]
    first = upper.index(True)
    assert all(upper[first:]) and not any(upper[:first])
    assert (out / "grid.svg").exists()


def test_kernel_slice_preservation_no_unknown(tmp_path):
    code, out = run(["kernel-slice"] + PRES + ["--box", "0,4", "--resolution", "17"], tmp_path)
    assert code == 0
    assert "unknown" not in (out / "grid.tsv").read_text()


def test_kernel_slice_resolution(tmp_path):
    assert run(["kernel-slice"] + PROD + ["--box", "0,4", "--resolution", "1"], tmp_path)[0] == 2


def test_kernel_slice_species_plane(tmp_path):
    code, out = run(["kernel-slice"] + SB + ["--ymin", "100", "--box", "0,1e5,0,1e5", "--axes", "1,2",
                                             "--resolution", "3", "--horizon", "50"], tmp_path)
    assert code == 0
    assert len((out / "grid.tsv").read_text().splitlines()) == 10


def test_outputs_deterministic(tmp_path, monkeypatch):
    monkeypatch.setenv("VIAKERN_SEED", "42")
    blobs = []
    for name in ("a", "b"):
        run(["kernel-slice"] + PROD + ["--box", "0,4", "--resolution", "8", "--svg"], tmp_path, name)
        run(["thresholds"] + AL, tmp_path, name)
        out = tmp_path / name
        blobs.append([(out / f).read_bytes() for f in ("grid.tsv", "grid.svg", "thresholds.csv", "conventions.tsv")])
    assert blobs[0] == blobs[1]


def test_bad_seed(tmp_path, monkeypatch):
    monkeypatch.setenv("VIAKERN_SEED", "abc")
    assert run(["kernel-test"] + PROD + ["--x0", "2"], tmp_path)[0] == 2
