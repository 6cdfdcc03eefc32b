import json
from pathlib import Path

import pytest

from ricmerge.cli import main

REPO = Path(__file__).resolve().parent.parent
GOLDEN = Path(__file__).resolve().parent / "golden"


def run_cli(capsys, *argv):
    code = main([str(a) for a in argv])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestRun:
    def test_small_scenario_matches_golden(self, capsys):
        code, out, _ = run_cli(capsys, "run", REPO / "configs" / "small.cfg")
        assert code == 0
        assert out == (GOLDEN / "run_small.csv").read_text()

    def test_json_format_matches_golden(self, capsys):
        code, out, _ = run_cli(
            capsys, "run", REPO / "configs" / "small.cfg", "--format", "json"
        )
        assert code == 0
        assert out == (GOLDEN / "run_small.json").read_text()
        assert json.loads(out)[2]["saved_watts"] == pytest.approx(8.4132)

    def test_identical_invocations_identical_bytes(self, capsys):
        _, first, _ = run_cli(capsys, "run", REPO / "configs" / "medium.cfg")
        _, second, _ = run_cli(capsys, "run", REPO / "configs" / "medium.cfg")
        assert first == second

    def test_seed_override_changes_duplicate_placement_not_totals(self, capsys):
        _, base, _ = run_cli(capsys, "run", REPO / "configs" / "small.cfg")
        _, reseeded, _ = run_cli(
            capsys, "run", REPO / "configs" / "small.cfg", "--seed", "99"
        )
        assert base == reseeded  # totals are placement-independent

    def test_out_file(self, capsys, tmp_path):
        target = tmp_path / "rows.csv"
        code, out, _ = run_cli(
            capsys, "run", REPO / "configs" / "small.cfg", "--out", target
        )
        assert code == 0 and out == ""
        assert target.read_text() == (GOLDEN / "run_small.csv").read_text()

    def test_large_scenario_max_redundancy_row(self, capsys):
        code, out, _ = run_cli(capsys, "run", REPO / "configs" / "large.cfg")
        assert code == 0
        merged = [l for l in out.strip().split("\n") if ",per_kpi_merge," in l]
        fields = merged[0].split(",")
        assert float(fields[6]) == pytest.approx(1262, abs=1)
        assert float(fields[7]) == pytest.approx(87.84, abs=0.05)

    def test_missing_config_exits_2(self, capsys):
        code, _, err = run_cli(capsys, "run", "/nonexistent/missing.cfg")
        assert code == 2
        assert "cannot read" in err

    def test_invalid_config_exits_2(self, capsys, tmp_path):
        bad = tmp_path / "bad.cfg"
        bad.write_text("[scenario]\nnodes = -3\nkpis_per_node = 1\n")
        code, _, err = run_cli(capsys, "run", bad)
        assert code == 2
        assert err.startswith("error:")

    def test_unknown_flag_exits_2(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["run", "x.cfg", "--bogus"])
        assert exc.value.code == 2


class TestSweep:
    def test_node_sweep_matches_golden(self, capsys):
        code, out, _ = run_cli(
            capsys, "sweep", REPO / "configs" / "node_sweep.cfg", "--axis", "nodes"
        )
        assert code == 0
        assert out == (GOLDEN / "sweep_nodes.csv").read_text()
        lines = out.strip().split("\n")
        assert len(lines) == 61  # header + one projection row per node count
        assert lines[-1].split(",")[5] == "54.1308"

    def test_kpi_sweep_matches_golden(self, capsys):
        code, out, _ = run_cli(
            capsys, "sweep", REPO / "configs" / "kpi_sweep.cfg", "--axis", "kpis"
        )
        assert code == 0
        assert out == (GOLDEN / "sweep_kpis.csv").read_text()
        assert out.strip().split("\n")[-1].split(",")[5] == "49.4568"

    def test_explicit_range(self, capsys):
        code, out, _ = run_cli(
            capsys,
            "sweep", REPO / "configs" / "node_sweep.cfg",
            "--axis", "nodes", "--range", "10:12",
        )
        assert code == 0
        values = [line.split(",")[0] for line in out.strip().split("\n")[1:]]
        assert values == ["10", "11", "12"]

    def test_redundancy_sweep_emits_all_modes(self, capsys):
        code, out, _ = run_cli(
            capsys,
            "sweep", REPO / "configs" / "small.cfg",
            "--axis", "redundancy", "--range", "0:0.2:0.1",
        )
        assert code == 0
        assert len(out.strip().split("\n")) == 1 + 3 * 3

    def test_bad_range_exits_2(self, capsys):
        code, _, err = run_cli(
            capsys,
            "sweep", REPO / "configs" / "small.cfg",
            "--axis", "nodes", "--range", "banana",
        )
        assert code == 2 and "range" in err


class TestCalibrate:
    def test_fit_from_points_file(self, capsys, tmp_path):
        points = tmp_path / "points.csv"
        points.write_text("rate,watts\n0,34.5\n500000,268.2\n")
        code, out, _ = run_cli(capsys, "calibrate", points, "--format", "json")
        assert code == 0
        doc = json.loads(out)
        assert doc["ric_static_watts"] == pytest.approx(34.5)
        assert doc["watts_per_sample_rate"] == pytest.approx(4.674e-4)

    def test_csv_output(self, capsys, tmp_path):
        points = tmp_path / "points.csv"
        points.write_text("0,30\n1000,31\n2000,32\n")
        code, out, _ = run_cli(capsys, "calibrate", points)
        assert code == 0
        assert out.startswith("ric_static_watts,watts_per_sample_rate\n30,0.001\n")

    def test_degenerate_points_exit_2(self, capsys, tmp_path):
        points = tmp_path / "points.csv"
        points.write_text("10,30\n10,31\n")
        code, _, err = run_cli(capsys, "calibrate", points)
        assert code == 2 and "distinct" in err
