"""End-to-end runs of the command-line interface: schema-valid JSON,
stable CSV, honest exit codes, and byte-identical reruns."""

import json
import pathlib

import jsonschema
import pytest

from mapcount.cli import main

SCHEMA = json.loads(
    (pathlib.Path(__file__).resolve().parent.parent
     / "docs" / "schemas" / "report.schema.json").read_text())


def run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def run_json(capsys, argv):
    code, out, err = run(capsys, argv)
    payload = json.loads(out)
    jsonschema.validate(payload, SCHEMA)
    return code, payload, err


def test_count_fixture_with_oracle(capsys):
    code, payload, _ = run_json(capsys, [
        "count", "--potential", "t1*(x1^4)", "--root", "x1^4",
        "--k", "1", "--oracle"])
    assert code == 0
    row = payload["results"][0]
    assert row["map_count"] == "72"
    assert row["per_pair_count"] == "36"
    assert row["rooted_count"] == "18"
    assert row["oracle_count"] == "72"
    assert row["agree"] is True


def test_count_unit_root(capsys):
    code, out, _ = run(capsys, [
        "count", "--potential", "t1*(x1^4)", "--root", "1",
        "--k", "1", "--format", "csv"])
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].startswith("root,orders,map_count")
    assert lines[1].split(",")[2] == "0"


def test_series_tail_certification(capsys):
    code, payload, _ = run_json(capsys, [
        "series", "--potential", "t1*(x1^4)", "--set", "t1=1/8192",
        "--root", "x1^2", "--order", "4", "--tight"])
    assert code == 0
    row = payload["results"][0]
    assert row["certified"] is True
    assert "/" in row["tail_bound"]
    code2, payload2, _ = run_json(capsys, [
        "series", "--potential", "t1*(x1^4)", "--set", "t1=1/20",
        "--root", "x1^2", "--order", "4"])
    assert code2 == 0
    row2 = payload2["results"][0]
    assert row2["certified"] is False
    assert row2["tail_bound"] is None
    assert any("outside the certified radius" in n for n in payload2["notes"])


def test_series_free_energy(capsys):
    code, payload, _ = run_json(capsys, [
        "series", "--potential", "t1*(x1^4)", "--set", "t1=1/100",
        "--order", "2", "--free-energy"])
    assert code == 0
    counts = {r["orders"]: r["count"] for r in payload["results"]}
    assert counts["1"] == "4"
    assert counts["2"] == "144"
    assert "free_energy" in payload["summary"]
    assert "entropy" in payload["summary"]


def test_genus_census(capsys):
    code, out, _ = run(capsys, ["genus", "x1^4", "--format", "csv"])
    assert code == 0
    assert out.splitlines() == ["genus,count", "0,2", "1,1"]


def test_oracle_exclusive_words(capsys):
    code, payload, _ = run_json(capsys, [
        "oracle", "--root", "x1*x2", "--star", "x1*x2=3",
        "--exclusive", "x1*x2"])
    assert code == 0
    assert payload["summary"]["planar"] == "0"


def test_ising_dressed_check(capsys):
    code, payload, _ = run_json(capsys, [
        "ising", "--root", "x1^2", "--ta", "0,1/10", "--tb", "0,1/10",
        "--link", "1/5", "--order", "3", "--check-dressed"])
    assert code == 0
    assert payload["summary"]["dressed_matches"] is True


def test_ising_algebraic_series(capsys):
    code, payload, _ = run_json(capsys, [
        "ising", "--algebraic", "1/3", "--order", "2"])
    assert code == 0
    assert payload["summary"]["constant_term"] == "-1/8"
    rows = {(r["x_power"], r["y_power"]): r["rooted_series"]
            for r in payload["results"]}
    assert rows[("0", "1")] == "2"
    assert rows[("2", "0")] == "1"


def test_onematrix_quadratic_endpoints(capsys):
    code, payload, _ = run_json(capsys, [
        "onematrix", "--potential", "0", "--moments", "2"])
    assert code == 0
    values = {r["quantity"]: r["value"] for r in payload["results"]}
    assert abs(values["a"] + 2) < 1e-9
    assert abs(values["b"] - 2) < 1e-9
    assert abs(values["moment_2"] - 1) < 1e-6


def test_mc_minimal_run(capsys, tmp_path):
    cfg = tmp_path / "mc.cfg"
    cfg.write_text("N = 8\nsweeps = 400\nburn_in = 100\nchains = 1\nseed = 3\n")
    code, out, _ = run(capsys, [
        "mc", "--potential", "t1*(x1^2)", "--set", "t1=0",
        "--config", str(cfg), "--word", "x1^2", "--assert-convex"])
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "word,mean,stderr,n_samples"
    word, mean, stderr, n = lines[1].split(",")
    assert word == "x1^2"
    assert abs(float(mean) - 1.0) < 0.2
    assert int(n) == 400


def test_mc_refuses_without_convexity_or_cutoff(capsys, tmp_path):
    code, _, err = run(capsys, [
        "mc", "--potential", "t1*(x1^4)", "--set", "t1=1/20",
        "--word", "x1^2", "--sweeps", "200", "--burn-in", "50",
        "--chains", "1", "--n", "8"])
    assert code == 2
    assert "cutoff" in err or "convex" in err


def test_verify_battery(capsys):
    code, payload, _ = run_json(capsys, ["verify"])
    assert code == 0
    assert payload["summary"]["all_ok"] is True
    assert all(r["status"] == "ok" for r in payload["results"])


def test_byte_identical_reruns(capsys):
    argv = ["count", "--potential", "t1*(x1^4) + t2*(x1^2)",
            "--root", "x1^2", "--k", "2,1", "--oracle"]
    _, first, _ = run(capsys, argv)
    _, second, _ = run(capsys, argv)
    assert first == second


def test_timing_flag_adds_wall_time(capsys):
    code, out, _ = run(capsys, [
        "genus", "x1^4", "--timing"])
    payload = json.loads(out)
    jsonschema.validate(payload, SCHEMA)
    assert code == 0
    assert payload["wall_time_s"] >= 0


def test_parse_errors_exit_two(capsys):
    for argv in (
        ["count", "--potential", "t1*(x1^", "--root", "1", "--k", "1"],
        ["count", "--potential", "t1*(x1^4)", "--root", "x1", "--k", "1,2"],
        ["series", "--potential", "t1*(x1^4)", "--root", "x1^2"],
        ["mc", "--potential", "t1*(x1^2)", "--set", "t1=0",
         "--assert-convex"],
    ):
        code, _, err = run(capsys, argv)
        assert code == 2, argv
        assert err.startswith("error:")


def test_unknown_subcommand_exits_two():
    with pytest.raises(SystemExit) as exc:
        main(["snark"])
    assert exc.value.code == 2
