"""CLI contract: artifacts, schemas, determinism, exit codes."""

import json
import subprocess
import sys

import numpy as np
import pytest

from zograd import (
    BoundQuery,
    cfd_worst_case_mse,
    general_minimax_lower,
    linear_minimax_lower,
    optimal_delta,
)
from zograd.cli import main


def run_cli(argv, capsys):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def parse_csv(text):
    lines = [ln for ln in text.strip().splitlines() if ln]
    header = lines[0].split(",")
    rows = [ln.split(",") for ln in lines[1:]]
    return header, rows


class TestBounds:
    def test_values_match_operations(self, capsys):
        code, out, _ = run_cli(["bounds", "--a", "1", "--b", "1", "--n", "64", "--p", "1"], capsys)
        assert code == 0
        header, rows = parse_csv(out)
        assert header == ["a", "b", "n", "p", "q", "bound", "value"]
        table = {row[5]: float(row[6]) for row in rows}
        assert table["linear_lower"] == pytest.approx(0.035772320, abs=1e-8)
        assert table["general_lower"] == pytest.approx(0.0041716822, abs=1e-9)
        assert table["linear_lower"] == linear_minimax_lower(BoundQuery(64, 1, 1))
        assert table["general_lower"] == general_minimax_lower(64, 1, 1)
        assert table["optimal_delta"] == optimal_delta(1, 1, 64)
        assert table["cfd_upper"] == cfd_worst_case_mse(64, 1, 1, 1, optimal_delta(1, 1, 64))

    def test_json_output_validates_against_schema(self, capsys, tmp_path):
        import importlib.resources as resources

        import jsonschema

        out_file = tmp_path / "bounds.json"
        code, _, _ = run_cli(
            ["bounds", "--n", "8", "--p", "2", "--q", "inf", "--format", "json",
             "--out", str(out_file)],
            capsys,
        )
        assert code == 0
        payload = json.loads(out_file.read_text())
        schema = json.loads(
            resources.files("zograd").joinpath("schemas/output.schema.json").read_text()
        )
        jsonschema.validate(payload, schema)
        assert payload["command"] == "bounds"

    def test_json_to_stdout(self, capsys):
        code, out, _ = run_cli(["bounds", "--n", "2", "--format", "json"], capsys)
        assert code == 0
        payload = json.loads(out)
        assert payload["columns"][-2:] == ["bound", "value"]

    def test_requires_n(self, capsys):
        code, _, err = run_cli(["bounds", "--a", "1"], capsys)
        assert code == 2
        assert "requires --n" in err


class TestWorstcase:
    def test_1d_csv_max_at_one(self, capsys):
        code, out, _ = run_cli(["worstcase", "--eps", "1", "--a", "1", "--p", "1"], capsys)
        assert code == 0
        header, rows = parse_csv(out)
        assert header == ["x", "f_star"]
        xs = np.array([float(r[0]) for r in rows])
        ys = np.array([float(r[1]) for r in rows])
        k = int(np.argmax(np.abs(ys)))
        assert abs(ys[k]) == pytest.approx(1.0 / 3.0, rel=1e-9)
        assert abs(xs[k]) == pytest.approx(1.0, abs=1e-9)

    def test_1d_svg(self, capsys, tmp_path):
        out_file = tmp_path / "fstar.svg"
        code, _, _ = run_cli(
            ["worstcase", "--eps", "1", "--a", "1", "--p", "1", "--format", "svg",
             "--out", str(out_file)],
            capsys,
        )
        assert code == 0
        text = out_file.read_text()
        assert text.startswith("<svg")
        assert "<polyline" in text

    def test_2d_lattice(self, capsys):
        code, out, _ = run_cli(["worstcase", "--eps", "1", "--a", "1", "--p", "2",
                                "--q", "1"], capsys)
        assert code == 0
        header, rows = parse_csv(out)
        assert header == ["x1", "x2", "f_star"]
        assert len(rows) == 101 * 101
        origin = [r for r in rows if float(r[0]) == 0.0 and float(r[1]) == 0.0]
        assert float(origin[0][2]) == 0.0

    def test_2d_svg_lattice(self, capsys, tmp_path):
        out_file = tmp_path / "fstar2.svg"
        code, _, _ = run_cli(
            ["worstcase", "--eps", "1", "--p", "2", "--format", "svg", "--out", str(out_file)],
            capsys,
        )
        assert code == 0
        assert "<rect" in out_file.read_text()

    def test_plot_written(self, capsys, tmp_path):
        png = tmp_path / "fstar.png"
        code, _, _ = run_cli(
            ["worstcase", "--eps", "1", "--p", "1", "--out", str(tmp_path / "w.csv"),
             "--plot", str(png)],
            capsys,
        )
        assert code == 0
        assert png.exists() and png.stat().st_size > 0

    def test_p3_rejected(self, capsys):
        code, _, err = run_cli(["worstcase", "--p", "3"], capsys)
        assert code == 2


class TestSpDemo:
    def test_rows_and_analytic(self, capsys):
        code, out, _ = run_cli(
            ["sp-demo", "--p", "3", "--n", "2", "--rho-list", "1,2", "--reps", "5000",
             "--seed", "1"],
            capsys,
        )
        assert code == 0
        header, rows = parse_csv(out)
        assert header == ["rho", "empirical", "analytic", "std_error"]
        assert float(rows[0][2]) == 6.0
        assert float(rows[1][2]) == 24.0


class TestRiskCurve:
    def test_cfd_rows_track_bound(self, capsys):
        code, out, _ = run_cli(
            ["risk-curve", "--estimator", "cfd", "--n-list", "2,8", "--reps", "20000",
             "--seed", "5"],
            capsys,
        )
        assert code == 0
        header, rows = parse_csv(out)
        assert header == ["n", "mse", "bias_sq", "variance", "std_error", "bound"]
        for row in rows:
            n, mse, _, _, se, bound = (float(v) for v in row)
            assert bound == pytest.approx(
                cfd_worst_case_mse(int(n), 1, 1, 1, optimal_delta(1, 1, int(n))), rel=1e-12
            )
            assert abs(mse - bound) <= 5.0 * se

    def test_custom_design(self, capsys, tmp_path):
        design_file = tmp_path / "design.json"
        design_file.write_text(json.dumps(
            {"deltas": [[1.0], [-1.0]], "weights": [[0.5], [-0.5]]}
        ))
        code, out, _ = run_cli(
            ["risk-curve", "--estimator", f"custom:{design_file}", "--reps", "20000",
             "--seed", "2"],
            capsys,
        )
        assert code == 0
        _, rows = parse_csv(out)
        assert len(rows) == 1
        assert float(rows[0][5]) == pytest.approx(0.52777778, abs=1e-7)

    def test_sp_estimator_rows(self, capsys):
        code, out, _ = run_cli(
            ["risk-curve", "--estimator", "sp", "--p", "3", "--n-list", "2", "--b", "0",
             "--reps", "20000", "--seed", "9"],
            capsys,
        )
        assert code == 0
        _, rows = parse_csv(out)
        n, mse, _, _, se, bound = (float(v) for v in rows[0])
        assert bound == 6.0  # 2 p (p-1) / n on the unit ramp, noiseless
        assert abs(mse - bound) <= 5.0 * se

    def test_ffd_multidim_rejected(self, capsys):
        code, _, err = run_cli(["risk-curve", "--estimator", "ffd", "--p", "2",
                                "--n-list", "4"], capsys)
        assert code == 2


class TestConfigHandling:
    def test_unknown_key_rejected_with_line(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text('{\n  "n": 8,\n  "bogus_key": 1\n}\n')
        code, _, err = run_cli(["bounds", "--config", str(cfg)], capsys)
        assert code == 2
        assert "bogus_key" in err
        assert ":3:" in err  # the offending line number

    def test_invalid_json_reports_position(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text('{\n  "n": 8,\n}\n')
        code, _, err = run_cli(["bounds", "--config", str(cfg)], capsys)
        assert code == 2
        assert "invalid JSON" in err

    def test_flags_override_config(self, capsys, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text('{"n": 2, "a": 1.0, "b": 1.0}')
        code, out, _ = run_cli(["bounds", "--config", str(cfg), "--n", "4"], capsys)
        assert code == 0
        _, rows = parse_csv(out)
        assert all(row[2] == "4" for row in rows)

    def test_env_seed_used(self, capsys, tmp_path, monkeypatch):
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        monkeypatch.setenv("ZOGRAD_SEED", "99")
        assert main(["sp-demo", "--rho-list", "1", "--reps", "2000",
                     "--out", str(out1)]) == 0
        monkeypatch.delenv("ZOGRAD_SEED")
        assert main(["sp-demo", "--rho-list", "1", "--reps", "2000", "--seed", "99",
                     "--out", str(out2)]) == 0
        capsys.readouterr()
        assert out1.read_text() == out2.read_text()


class TestVerifyCommand:
    def test_byte_identical_reports(self, capsys):
        code1, out1, _ = run_cli(["verify", "--seed", "7", "--reps", "200"], capsys)
        code2, out2, _ = run_cli(["verify", "--seed", "7", "--reps", "200"], capsys)
        assert out1 == out2
        assert code1 == code2
        assert len(out1.strip().splitlines()) == 9  # 8 criteria + summary

    def test_report_file(self, capsys, tmp_path):
        out_file = tmp_path / "report.json"
        code, _, _ = run_cli(
            ["verify", "--seed", "7", "--reps", "200", "--format", "json",
             "--out", str(out_file)],
            capsys,
        )
        payload = json.loads(out_file.read_text())
        assert payload["command"] == "verify"
        assert len(payload["rows"]) == 8


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "zograd.cli", "bounds", "--n", "2"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert "linear_lower" in proc.stdout
