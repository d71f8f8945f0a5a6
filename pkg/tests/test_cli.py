import csv

import pytest

from nuvbinary.cli import main


def test_solve_flappy(tmp_path):
    assert main(["solve", "flappy", "--out", str(tmp_path), "--no-timestamp"]) == 0
    rows = list(csv.DictReader(open(tmp_path / "flappy_trajectory.csv")))
    assert len(rows) == 250
    for row in rows:
        assert bool(row["ybreve_k_1"]) == (float(row["w_k"]) == 1.0)


def test_solve_tiny_s2_exit_2(tmp_path):
    code = main(["solve", "flappy", "--s2", "1e-6", "--max-iters", "200", "--out", str(tmp_path)])
    assert code == 2
    assert '"binary": false' in (tmp_path / "flappy_report.json").read_text()


def test_solve_override_method(tmp_path, capsys):
    main(["solve", "flappy", "--method", "am", "--max-iters", "50", "--out", str(tmp_path),
          "--prefix", "am"])
    assert (tmp_path / "am_report.json").exists()
    assert '"method": "am"' in (tmp_path / "am_report.json").read_text()


def test_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("NUVBINARY_OUTPUT_DIR", str(tmp_path / "envout"))
    main(["solve", "flappy", "--max-iters", "5"])
    assert (tmp_path / "envout" / "flappy_report.json").exists()


def test_timestamp_line(tmp_path):
    main(["solve", "flappy", "--max-iters", "5", "--out", str(tmp_path)])
    assert (tmp_path / "flappy_trace.csv").read_text().startswith("# created ")


@pytest.mark.parametrize("argv", [
    ["solve", "no/such/file.scenario"],
    ["solve", "flappy", "--bogus"],
    ["oracle-compare", "--K", "30"],
    ["bench", "flappy", "--horizons", "100"],
    ["characteristic", "--steps", "1"],
    [],
])
def test_error_exit_1(argv, tmp_path, capsys):
    try:
        code = main(argv + (["--out", str(tmp_path / "o")] if argv and argv[0] != "bench" else []))
    except SystemExit as exc:
        code = exc.code
    assert code == 1


def test_bad_scenario_file_exit_1(tmp_path, capsys):
    p = tmp_path / "bad.scenario"
    p.write_text("model: {A: [[1]], B: [1], C: [[1]]}\ntarget: {ybreve: [0, 1], weights: [1, -1]}\n")
    assert main(["solve", str(p), "--out", str(tmp_path)]) == 1
    assert "target.weights[1]" in capsys.readouterr().err


def test_characteristic(tmp_path):
    out = tmp_path / "c.csv"
    assert main(["characteristic", "--s2", "10,0.01", "--steps", "21", "--out", str(out),
                 "--no-timestamp"]) == 0
    rows = list(csv.DictReader(open(out)))
    assert len(rows) == 42 and rows[0]["method"] == "em"
    big = [r for r in rows if float(r["s2"]) == 10.0 and abs(float(r["mu"]) - 0.5) > 1e-9]
    assert all(r["binary_flag"] == "1" for r in big)


def test_characteristic_two_point_grid(tmp_path):
    out = tmp_path / "c.csv"
    main(["characteristic", "--method", "am", "--steps", "2", "--mu-min", "0", "--mu-max", "1",
          "--out", str(out)])
    rows = list(csv.DictReader(line for line in open(out) if not line.startswith("#")))
    assert [round(float(r["x_hat"]), 9) for r in rows] == [0.0, 1.0]


def test_oracle_compare(tmp_path):
    out = tmp_path / "oc.csv"
    assert main(["oracle-compare", "--K", "10", "--trials", "6", "--out", str(out),
                 "--no-timestamp"]) == 0
    rows = list(csv.DictReader(open(out)))
    assert len(rows) == 6 and all(r["hamming"] == "0" for r in rows)
    first = out.read_bytes()
    main(["oracle-compare", "--K", "10", "--trials", "6", "--out", str(out), "--no-timestamp"])
    assert out.read_bytes() == first


def test_oracle_compare_from_scenario_and_empty(tmp_path):
    out = tmp_path / "oc.csv"
    assert main(["oracle-compare", "dac", "--K", "10", "--trials", "2", "--out", str(out)]) == 0
    assert main(["oracle-compare", "--trials", "0", "--out", str(out), "--no-timestamp"]) == 0
    assert out.read_text() == ("instance,K,cost_opt,cost_ikie,ratio_or_gap,hamming,"
                               "ikie_iterations,binary_flag\n")


def test_bench(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["bench", "flappy", "--horizons", "100,100", "--iterations", "5",
                 "--repeats", "3", "--out", str(out)]) == 0
    rows = list(csv.DictReader(open(out)))
    t0, t1 = (float(r["seconds_per_iteration"]) for r in rows)
    assert 0.5 < t1 / t0 < 2.0


def test_make_scenario(tmp_path):
    out = tmp_path / "d.scenario"
    assert main(["make-scenario", "dac", str(out)]) == 0
    assert out.read_text().startswith("# generated by")
    from nuvbinary.io import load_scenario
    assert load_scenario(out).horizon == 450
