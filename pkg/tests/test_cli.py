import json

import pytest

from paracity.cli import (
    CSV_HEADER,
    fielbaum_mu,
    grid_points,
    main,
    run_sweep,
)
from paracity.city import ValidationError


SMALL_CFG = """
n = 4
T = 30
g = 0.5
Y = 200
a = 0.8
alpha = 0.3
beta = 0.4
gamma = 0.3
K = 10
"""

EXTREME_CFG = """
n = 8
T = 30
g = 0.125
Y = 1000
a = 0.8
alpha = 0.3
beta = 0.4
gamma = 0.3
K = 1000
"""


def write_cfg(tmp_path, text, name="city.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestFielbaumMu:
    def test_reference_value(self):
        assert fielbaum_mu(10.65, 1.48) == pytest.approx(0.87799, abs=1e-5)

    def test_equal_rates(self):
        assert fielbaum_mu(1.0, 1.0) == 0.5

    def test_rejects_nonpositive(self):
        with pytest.raises(ValidationError):
            fielbaum_mu(0.0, 1.0)
        with pytest.raises(ValidationError):
            fielbaum_mu(10.0, -1.0)


class TestGrid:
    def test_fine_grid_row_count(self):
        assert len(grid_points(0.025, 0.0)) == 741

    def test_coarse_grid_row_count(self):
        assert len(grid_points(0.1, 0.0)) == 55

    def test_deterministic_order(self):
        pts = grid_points(0.1, 0.0)
        assert pts == sorted(pts)

    def test_min_beta_filter(self):
        pts = grid_points(0.1, 0.3)
        assert all(1.0 - a - g > 0.3 for a, g in pts)

    def test_all_points_valid_shares(self):
        for a, g in grid_points(0.025, 0.0):
            b = 1.0 - a - g
            assert 0 < a < 1 and 0 < b < 1 and 0 < g < 1


class TestSolveCommand:
    def test_extreme_alpp_objective(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, EXTREME_CFG)
        assert main(["solve", "--config", cfg, "--model", "alpp"]) == 0
        report = json.loads(capsys.readouterr().out)
        import math

        r_8 = 2 * math.sin(math.pi / 8)
        assert report["objective"] == pytest.approx(30 * (4 + 7 * r_8), rel=1e-6)
        assert report["status"] == "Optimal"

    def test_extreme_alpps_objective(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, EXTREME_CFG)
        assert main(["solve", "--config", cfg, "--model", "alpps"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["objective"] == pytest.approx(18 * 30, rel=1e-6)

    def test_umcfp_model(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, SMALL_CFG)
        assert main(["solve", "--config", cfg, "--model", "umcfp"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["objective"] == pytest.approx(report["oracle"], rel=1e-9)

    def test_malformed_config_names_field(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, SMALL_CFG.replace("alpha = 0.3", ""))
        assert main(["solve", "--config", cfg]) == 1
        assert "alpha" in capsys.readouterr().err

    def test_infeasible_exit_code(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, SMALL_CFG + "\nLambda = 2\n")
        assert main(["solve", "--config", cfg, "--model", "alpps"]) == 2

    def test_line_plan_report(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, SMALL_CFG)
        assert main(["solve", "--config", cfg, "--model", "alpps", "--lines"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert all({"nodes", "frequency", "length"} == set(e) for e in report["line_plan"])


class TestSweepCommand:
    def test_csv_schema_and_footer(self, tmp_path):
        cfg = write_cfg(tmp_path, SMALL_CFG)
        out = tmp_path / "sweep.csv"
        assert main(
            ["sweep", "--config", cfg, "--step", "0.3", "--out", str(out)]
        ) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == ",".join(CSV_HEADER)
        assert lines[-1].startswith("#")
        assert "asymmetric_share" in lines[-1] and "max_gap" in lines[-1]

    def test_rows_match_grid(self, tmp_path):
        cfg = write_cfg(tmp_path, SMALL_CFG)
        out = tmp_path / "sweep.csv"
        main(["sweep", "--config", cfg, "--step", "0.3", "--out", str(out)])
        rows = [l for l in out.read_text().splitlines()[1:] if not l.startswith("#")]
        assert len(rows) == len(grid_points(0.3, 0.0))

    def test_deterministic_apart_from_timings(self, tmp_path):
        cfg = write_cfg(tmp_path, SMALL_CFG)
        outputs = []
        for name in ("a.csv", "b.csv"):
            out = tmp_path / name
            main(["sweep", "--config", cfg, "--step", "0.3", "--out", str(out)])
            rows = [
                ",".join(line.split(",")[:-2])
                for line in out.read_text().splitlines()
                if not line.startswith("#")
            ]
            outputs.append(rows)
        assert outputs[0] == outputs[1]

    def test_gap_dominated_by_bound_column(self, tmp_path):
        cfg = write_cfg(tmp_path, SMALL_CFG)
        out = tmp_path / "sweep.csv"
        main(["sweep", "--config", cfg, "--step", "0.3", "--out", str(out)])
        for line in out.read_text().splitlines()[1:]:
            if line.startswith("#"):
                continue
            cells = dict(zip(CSV_HEADER, line.split(",")))
            if cells["classification"] in ("Symmetric", "Asymmetric"):
                assert float(cells["gamma_rel"]) <= float(cells["bound_cn_ag"]) + 1e-6

    def test_json_format(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, SMALL_CFG)
        assert main(["sweep", "--config", cfg, "--step", "0.4", "--format", "json"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert set(payload) == {"rows", "summary"}
        assert all(set(r) == set(CSV_HEADER) for r in payload["rows"])

    def test_run_sweep_parallel_matches_serial(self):
        base = dict(n=4, T=30.0, g=0.5, Y=200.0, a=0.8, K=10.0, mu=1.0)
        serial, _ = run_sweep(base, step=0.4)
        parallel, _ = run_sweep(base, step=0.4, jobs=2)
        strip = lambda rows: [
            (r.alpha, r.gamma, r.opt_alpp, r.opt_alpps, r.classification) for r in rows
        ]
        assert strip(serial) == strip(parallel)


class TestBoundsCommand:
    def test_json_report(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, SMALL_CFG)
        assert main(["bounds", "--config", cfg, "--format", "json"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["lambda_lo"] <= payload["lambda_val"] <= payload["lambda_hi"]

    def test_text_report_has_labels_and_json(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, SMALL_CFG)
        assert main(["bounds", "--config", cfg]) == 0
        out = capsys.readouterr().out
        assert "kappa:" in out
        assert json.loads(out.splitlines()[-1])["kappa"] > 1


class TestGapAndLpaCommands:
    def test_gap_report(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, SMALL_CFG)
        assert main(["gap", "--config", cfg]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["classification"] in ("Symmetric", "Asymmetric")
        assert payload["gamma_abs"] >= -1e-9

    def test_gap_infeasible_exit_code(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, SMALL_CFG + "\nLambda = 2\n")
        assert main(["gap", "--config", cfg]) == 2

    def test_lpa_report(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, SMALL_CFG)
        assert main(["lpa", "--config", cfg]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["status"] == "Optimal"
        assert payload["line_plan"]

    def test_lpa_infeasible_exit_code(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, SMALL_CFG + "\nLambda = 2\n")
        assert main(["lpa", "--config", cfg]) == 2
