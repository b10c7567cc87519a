import json

import numpy as np
import pytest

from renyigof.cli import main
from renyigof.distributions import gaussian
from renyigof.knn import renyi_estimate
from renyigof.sampler import RngStream, read_csv, sample, write_csv


def _run(capsys, argv):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


class TestSampleCommand:
    def test_writes_deterministic_csv(self, tmp_path, capsys):
        path = tmp_path / "s.csv"
        argv = ["sample", "--family", "student", "--nu", "5", "--dim", "2",
                "--n", "1000", "--seed", "7", "-o", str(path)]
        code, out, _ = _run(capsys, argv)
        assert code == 0
        assert json.loads(out)["n"] == 1000
        first = path.read_bytes()
        lines = first.splitlines()
        # metadata comments, then the column header, then 1000 rows
        meta = [l for l in lines if l.startswith(b"#")]
        assert any(l.startswith(b"# renyigof") for l in meta)
        assert any(b"master_seed 7" in l for l in meta)
        assert lines[len(meta)] == b"x1,x2"
        assert len(lines) == len(meta) + 1001
        code, _, _ = _run(capsys, argv)
        assert code == 0
        assert path.read_bytes() == first

    def test_invalid_eta_exits_2(self, tmp_path, capsys):
        code, _, err = _run(capsys, ["sample", "--family", "pearson2", "--eta", "-1",
                                     "--dim", "1", "--n", "10", "--seed", "1",
                                     "-o", str(tmp_path / "x.csv")])
        assert code == 2
        assert "eta > 0" in err

    def test_missing_family_param_exits_2(self, tmp_path, capsys):
        code, _, err = _run(capsys, ["sample", "--family", "student", "--dim", "1",
                                     "--n", "10", "--seed", "1", "-o", str(tmp_path / "x.csv")])
        assert code == 2
        assert "--nu" in err

    def test_usage_error_exits_2(self, tmp_path):
        with pytest.raises(SystemExit) as excinfo:
            main(["sample", "--family", "martian", "--dim", "1", "--n", "5",
                  "--seed", "0", "-o", str(tmp_path / "x.csv")])
        assert excinfo.value.code == 2


class TestEntropyCommand:
    def test_matches_library_value(self, tmp_path, capsys):
        path = tmp_path / "pts.csv"
        path.write_text("x1\n0.0\n1.0\n3.0\n")
        code, out, _ = _run(capsys, ["entropy", str(path), "--k", "1", "--q", "0.5"])
        assert code == 0
        record = json.loads(out)
        assert record["value"] == pytest.approx(1.886528613653193, rel=1e-12)
        assert record == {"value": record["value"], "q": 0.5, "k": 1, "n": 3, "dim": 1}

    def test_q_one_takes_shannon_path(self, tmp_path, capsys, rng):
        path = tmp_path / "pts.csv"
        write_csv(sample(gaussian([0.0], [[1.0]]), 100, RngStream(5)), path)
        code, out, _ = _run(capsys, ["entropy", str(path), "--k", "3", "--q", "1"])
        assert code == 0
        h1 = json.loads(out)["value"]
        s = read_csv(path)
        for q in (1.0 + 1e-4, 1.0 - 1e-4):
            assert renyi_estimate(s, 3, q).value == pytest.approx(h1, abs=1e-3)

    def test_duplicates_exit_3(self, tmp_path, capsys):
        path = tmp_path / "dup.csv"
        path.write_text("x1\n1.0\n1.0\n2.0\n")
        code, _, err = _run(capsys, ["entropy", str(path), "--k", "1", "--q", "0.5"])
        assert code == 3
        assert "duplicate" in err

    def test_k_below_q_minus_one_exit_2(self, tmp_path, capsys):
        path = tmp_path / "pts.csv"
        path.write_text("x1\n0.0\n1.0\n3.0\n")
        code, _, _ = _run(capsys, ["entropy", str(path), "--k", "1", "--q", "2.5"])
        assert code == 2

    def test_empty_file_exit_2(self, tmp_path, capsys):
        path = tmp_path / "empty.csv"
        path.write_text("")
        code, _, _ = _run(capsys, ["entropy", str(path), "--k", "1", "--q", "0.5"])
        assert code == 2


class TestTestCommand:
    def test_record_fields(self, tmp_path, capsys):
        path = tmp_path / "pts.csv"
        write_csv(sample(gaussian(np.zeros(2), np.eye(2)), 500, RngStream(6)), path)
        code, out, _ = _run(capsys, ["test", str(path), "--family", "student",
                                     "--nu0", "inf", "--k", "3"])
        assert code == 0
        record = json.loads(out)
        assert record["null_param"] == "inf"
        assert record["q"] == 1.0
        assert record["m"] == 2 and record["n"] == 500

    def test_alpha_without_table_exits_2(self, tmp_path, capsys):
        path = tmp_path / "pts.csv"
        write_csv(sample(gaussian([0.0], [[1.0]]), 100, RngStream(6)), path)
        code, _, err = _run(capsys, ["test", str(path), "--family", "student",
                                     "--nu0", "inf", "--k", "3", "--alpha", "0.05"])
        assert code == 2
        assert "experiment" in err

    def test_invalid_nu0_exits_2(self, tmp_path, capsys):
        path = tmp_path / "pts.csv"
        write_csv(sample(gaussian([0.0], [[1.0]]), 100, RngStream(6)), path)
        code, _, _ = _run(capsys, ["test", str(path), "--family", "student",
                                   "--nu0", "2", "--k", "3"])
        assert code == 2

    def test_decision_rows_against_table(self, tmp_path, capsys):
        config = {
            "schema_version": 1, "family": "student", "true_param": "inf",
            "null_param": "inf", "dim": 1, "n_grid": [500], "k": 3,
            "replicates": 100, "master_seed": 15,
        }
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(config))
        out_dir = tmp_path / "out"
        code, _, _ = _run(capsys, ["experiment", str(cfg_path), "--out-dir", str(out_dir)])
        assert code == 0

        data = tmp_path / "pts.csv"
        write_csv(sample(gaussian([0.0], [[1.0]]), 500, RngStream(66)), data)
        code, out, _ = _run(capsys, ["test", str(data), "--family", "student",
                                     "--nu0", "inf", "--k", "3",
                                     "--critical-table", str(out_dir / "summary.csv"),
                                     "--alpha", "0.05", "--alpha", "0.1"])
        assert code == 0
        lines = out.strip().splitlines()
        assert len(lines) == 3
        for line in lines[1:]:
            row = json.loads(line)
            assert set(row) == {"alpha", "critical", "reject"}

    def test_missing_table_row_exits_2(self, tmp_path, capsys):
        config = {
            "schema_version": 1, "family": "student", "true_param": "inf",
            "null_param": "inf", "dim": 1, "n_grid": [200], "k": 3,
            "replicates": 50, "master_seed": 16,
        }
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(config))
        out_dir = tmp_path / "out"
        _run(capsys, ["experiment", str(cfg_path), "--out-dir", str(out_dir)])
        data = tmp_path / "pts.csv"
        write_csv(sample(gaussian([0.0], [[1.0]]), 500, RngStream(66)), data)
        code, _, err = _run(capsys, ["test", str(data), "--family", "student",
                                     "--nu0", "inf", "--k", "3",
                                     "--critical-table", str(out_dir / "summary.csv"),
                                     "--alpha", "0.05"])
        assert code == 2
        assert "N=500" in err


class TestExperimentCommand:
    def test_smoke_run_emits_declared_files(self, tmp_path, capsys):
        config = {
            "schema_version": 1, "family": "pearson2", "true_param": 4.0,
            "null_param": 4.0, "dim": 1, "n_grid": [100, 200], "k": 3,
            "replicates": 10, "master_seed": 3, "include_replicates": True,
        }
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(config))
        out_dir = tmp_path / "out"
        code, out, _ = _run(capsys, ["experiment", str(cfg_path), "--out-dir", str(out_dir)])
        assert code == 0
        written = json.loads(out)["written"]
        assert str(out_dir / "summary.csv") in written
        assert (out_dir / "hist_100.csv").exists()
        assert (out_dir / "hist_200.csv").exists()
        assert (out_dir / "replicates.json").exists()

    def test_rerun_byte_identical(self, tmp_path, capsys):
        config = {
            "schema_version": 1, "family": "student", "true_param": 5.0,
            "null_param": 5.0, "dim": 1, "n_grid": [100], "k": 3,
            "replicates": 10, "master_seed": 4, "include_replicates": True,
        }
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(config))
        out_a, out_b = tmp_path / "a", tmp_path / "b"
        _run(capsys, ["experiment", str(cfg_path), "--out-dir", str(out_a), "--workers", "1"])
        _run(capsys, ["experiment", str(cfg_path), "--out-dir", str(out_b), "--workers", "2"])
        for name in ("summary.csv", "hist_100.csv", "replicates.json"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()

    def test_schema_violations_all_listed(self, tmp_path, capsys):
        config = {
            "schema_version": 1, "family": "student", "true_param": 1.0,
            "null_param": 1.0, "dim": 0, "n_grid": [10], "k": 0,
            "replicates": 1, "master_seed": 0,
        }
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(config))
        code, _, err = _run(capsys, ["experiment", str(cfg_path), "--out-dir", str(tmp_path / "o")])
        assert code == 2
        for fragment in ("dim", "replicates", "k must be", "true_param", "null_param"):
            assert fragment in err

    def test_missing_config_exits_2(self, tmp_path, capsys):
        code, _, _ = _run(capsys, ["experiment", str(tmp_path / "nope.json"),
                                   "--out-dir", str(tmp_path / "o")])
        assert code == 2

    def test_power_reference_fills_power_column(self, tmp_path, capsys):
        null_config = {
            "schema_version": 1, "family": "student", "true_param": 5.0,
            "null_param": 5.0, "dim": 1, "n_grid": [200], "k": 3,
            "replicates": 100, "master_seed": 21,
        }
        (tmp_path / "null.json").write_text(json.dumps(null_config))
        _run(capsys, ["experiment", str(tmp_path / "null.json"),
                      "--out-dir", str(tmp_path / "null_out")])

        alt_config = dict(null_config, true_param="inf", master_seed=22,
                          power_reference="null_out/summary.csv")
        (tmp_path / "alt.json").write_text(json.dumps(alt_config))
        code, _, _ = _run(capsys, ["experiment", str(tmp_path / "alt.json"),
                                   "--out-dir", str(tmp_path / "alt_out")])
        assert code == 0
        rows = [l for l in (tmp_path / "alt_out" / "summary.csv").read_text().splitlines()
                if not l.startswith("#")]
        header = rows[0].split(",")
        row = dict(zip(header, rows[1].split(",")))
        power = float(row["power_at_005"])
        assert 0.0 <= power <= 1.0
        # rejection rate against the null table exceeds the nominal level
        assert power > 0.05


class TestPaperScaleDecisions:
    """Cross-checks of the test command at published-table scale."""

    def test_gaussian_sample_accepts_gaussian_null(self, tmp_path, capsys):
        # W below the N=5000 Gaussian critical value 0.030 nearly always
        below = 0
        spec = gaussian([0.0], [[1.0]])
        for seed in range(100):
            s = sample(spec, 5000, RngStream(12000, seed))
            path = tmp_path / "pts.csv"
            write_csv(s, path)
            code, out, _ = _run(capsys, ["test", str(path), "--family", "student",
                                         "--nu0", "inf", "--k", "3"])
            assert code == 0
            if json.loads(out)["W"] < 0.030:
                below += 1
        assert below >= 90

    def test_gaussian_sample_rejects_nu0_3(self, tmp_path, capsys):
        # against a nu0=3 critical table, Gaussian data rejects essentially always
        config = {
            "schema_version": 1, "family": "student", "true_param": 3.0,
            "null_param": 3.0, "dim": 1, "n_grid": [5000], "k": 3,
            "replicates": 200, "master_seed": 77,
        }
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(config))
        out_dir = tmp_path / "null3"
        code, _, _ = _run(capsys, ["experiment", str(cfg_path), "--out-dir", str(out_dir)])
        assert code == 0

        rejects = 0
        spec = gaussian([0.0], [[1.0]])
        for seed in range(100):
            s = sample(spec, 5000, RngStream(12000, seed))
            path = tmp_path / "pts.csv"
            write_csv(s, path)
            code, out, _ = _run(capsys, ["test", str(path), "--family", "student",
                                         "--nu0", "3", "--k", "3",
                                         "--critical-table", str(out_dir / "summary.csv"),
                                         "--alpha", "0.05"])
            assert code == 0
            decision = json.loads(out.strip().splitlines()[1])
            rejects += bool(decision["reject"])
        assert rejects >= 95
