import numpy as np
import pytest

from isar_rcs.cli import EXIT_BAD_CSV, EXIT_BUDGET, EXIT_INVALID, EXIT_OK, EXIT_USAGE, main
from isar_rcs.io import load_rcs_csv, read_sweep_summary


@pytest.fixture(scope="module")
def rcs_file(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    path = d / "rcs.csv"
    assert main(["simulate", "--out", str(path), "--no-timestamp"]) == EXIT_OK
    return path


def test_simulate_default_scenario(rcs_file):
    lines = rcs_file.read_text().splitlines()
    assert lines[0] == "freq_hz,angle_deg,re,im"
    assert len(lines) == 1 + 41 * 41
    geom, y = load_rcs_csv(rcs_file)
    assert geom.size == 1681


def test_image_bp_normalized(rcs_file, tmp_path):
    out = tmp_path / "bp.csv"
    assert main(["image", "--rcs", str(rcs_file), "--method", "bp", "--out", str(out),
                 "--no-timestamp"]) == EXIT_OK
    db = np.loadtxt(out, delimiter=",", skiprows=1)[:, 4]
    assert db.max() == 0.0 and db.size == 101 * 101


def test_outputs_are_byte_identical(rcs_file, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        main(["image", "--rcs", str(rcs_file), "--out", str(p), "--no-timestamp"])
    assert a.read_bytes() == b.read_bytes()
    c = tmp_path / "c.csv"
    main(["image", "--rcs", str(rcs_file), "--out", str(c)])
    assert c.read_text().startswith("# generated")
    assert c.read_text().split("\n", 1)[1] == a.read_text()


def test_image_isr_snapshots_and_log(rcs_file, tmp_path):
    out = tmp_path / "isr.csv"
    log = tmp_path / "log.csv"
    code = main(["image", "--rcs", str(rcs_file), "--method", "isr", "--out", str(out),
                 "--snapshots", "--solver-log", str(log), "--no-timestamp"])
    assert code == EXIT_OK
    for t in range(1, 5):
        assert (tmp_path / f"isr_iter{t}.csv").exists()
        assert (tmp_path / f"log_iter{t}.csv").read_text().startswith("outer_iter,tau")
    assert (tmp_path / "isr_iter4.csv").read_bytes() == out.read_bytes()


def test_extract_raster_and_end_to_end(rcs_file, tmp_path, capsys):
    out = tmp_path / "bp.csv"
    main(["image", "--rcs", str(rcs_file), "--method", "bp", "--out", str(out)])
    capsys.readouterr()
    assert main(["extract", "--raster", str(out), "--method", "bp", "--gate-x", "0.075",
                 "--gate-y", "0", "--gate-radius", "0.05"]) == EXIT_OK
    bp_val = float(capsys.readouterr().out.strip())
    assert abs(bp_val) < 1.0
    assert main(["extract", "--rcs", str(rcs_file), "--method", "l1", "--gate-x", "-0.075",
                 "--gate-y", "0"]) == EXIT_OK
    assert abs(float(capsys.readouterr().out.strip())) < 0.5


def test_two_point(tmp_path, capsys):
    assert main(["two-point", "--separation", "0.15", "--method", "bp", "--out-dir",
                 str(tmp_path), "--no-timestamp"]) == EXIT_OK
    peaks = (tmp_path / "peaks.csv").read_text().splitlines()
    assert peaks[0] == "x_m,y_m,mag_db" and len(peaks) == 3
    assert (tmp_path / "raster.csv").exists()
    assert "2 peaks" in capsys.readouterr().out


def test_sweep(tmp_path, capsys):
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--distance", "0.30", "--method", "bp", "--positions", "36",
                 "--jobs", "1", "--out", str(out)]) == EXIT_OK
    mean, p10, p90 = read_sweep_summary(out)
    assert abs(mean + 30) < 1.5 and p10 <= p90
    printed = capsys.readouterr().out.splitlines()
    assert printed[0] == "mean_dbsm,p10_dbsm,p90_dbsm"
    assert len(printed[1].split(",")) == 3


def test_usage_errors():
    assert main(["simulate", "--bogus"]) == EXIT_USAGE
    assert main(["frobnicate"]) == EXIT_USAGE
    assert main([]) == EXIT_USAGE


def test_malformed_csv_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("freq_hz,angle_deg,re,im\n1e9,0,1\n")
    assert main(["image", "--rcs", str(bad)]) == EXIT_BAD_CSV
    assert "bad.csv:2" in capsys.readouterr().err


def test_invalid_scenario_exit_code(tmp_path):
    sc = tmp_path / "s.cfg"
    sc.write_text("grid_spacing_m = -1\n")
    assert main(["simulate", "--scenario", str(sc)]) == EXIT_INVALID
    assert main(["simulate", "--scenario", str(tmp_path / "missing.cfg")]) == EXIT_INVALID


def test_budget_exhaustion_exit_code(rcs_file, tmp_path):
    sc = tmp_path / "s.cfg"
    sc.write_text("max_matvecs = 10\nmethod = l1\n")
    out = tmp_path / "l1.csv"
    assert main(["image", "--scenario", str(sc), "--rcs", str(rcs_file),
                 "--out", str(out)]) == EXIT_BUDGET
    assert out.read_text().startswith("# partial")
