import csv
import json
import math

import pytest

from pdlab.cli import EXIT_ERROR, EXIT_OK, EXIT_VERDICT_FAILED, main


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestRate:
    def test_single_point(self, tmp_path):
        out = tmp_path / "r"
        assert main(["rate", "--x", "0.5", "--out", str(out)]) == EXIT_OK
        rows = _read_csv(out / "rates.csv")
        assert rows[0] == ["x", "I", "I2", "I3", "S2_diag"]
        assert math.isclose(float(rows[1][1]), math.log(2.0), rel_tol=1e-15)

    def test_grid_default(self, tmp_path):
        out = tmp_path / "r"
        assert main(["rate", "--out", str(out)]) == EXIT_OK
        assert len(_read_csv(out / "rates.csv")) == 101


class TestC0:
    def test_json_payload(self, tmp_path):
        out = tmp_path / "c"
        assert main(["c0", "--out", str(out)]) == EXIT_OK
        payload = json.loads((out / "c0.json").read_text())
        assert 2.2 < payload["c0"] < 2.5
        assert abs(payload["residual"]) <= 1e-12


class TestValidation:
    def test_negative_theta(self, tmp_path, capsys):
        code = main(["density", "--theta", "-1", "--out", str(tmp_path / "d")])
        assert code == EXIT_ERROR
        assert "theta must be positive" in capsys.readouterr().err

    def test_aggregated_errors(self, tmp_path, capsys):
        code = main(
            ["sample", "--theta", "-1", "--n-samples", "0", "--out", str(tmp_path / "s")]
        )
        assert code == EXIT_ERROR
        err = capsys.readouterr().err
        assert "theta must be positive" in err
        assert "n_samples must be a positive integer" in err

    def test_unknown_key_rejected(self, tmp_path):
        code = main(["density", "--theta", "2", "--gamma", "0.5", "--out", str(tmp_path / "d")])
        assert code == EXIT_ERROR

    def test_empty_thetas(self, tmp_path, capsys):
        code = main(
            ["verify-ldp", "--x", "0.5", "--thetas", ",", "--out", str(tmp_path / "v")]
        )
        assert code == EXIT_ERROR
        assert "thetas" in capsys.readouterr().err

    def test_no_artifacts_on_validation_failure(self, tmp_path):
        out = tmp_path / "d"
        main(["density", "--theta", "-1", "--out", str(out)])
        assert not out.exists() or not any(out.iterdir())


class TestDeterminismAndManifest:
    def test_byte_identical_rerun(self, tmp_path):
        args = ["verify-ldp", "--x", "0.6", "--thetas", "20,50", "--seed", "7",
                "--resolution", "60"]
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(args + ["--out", str(out1)]) == EXIT_OK
        assert main(args + ["--out", str(out2)]) == EXIT_OK
        assert (out1 / "report.csv").read_bytes() == (out2 / "report.csv").read_bytes()

    def test_manifest_replay(self, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        base = ["rate", "--x", "0.3", "--out", str(out1)]
        assert main(base) == EXIT_OK
        manifest = json.loads((out1 / "manifest.json").read_text())
        assert manifest["command"] == "rate" and manifest["version"]
        assert main(["replay", str(out1 / "manifest.json"), "--out", str(out2)]) == EXIT_OK
        assert (out1 / "rates.csv").read_bytes() == (out2 / "rates.csv").read_bytes()

    def test_full_precision_csv(self, tmp_path):
        out = tmp_path / "r"
        main(["rate", "--x", "0.5", "--out", str(out)])
        cell = _read_csv(out / "rates.csv")[1][1]
        assert float(cell) == math.log(2.0)  # 17 significant digits round-trip


class TestVerdictExit:
    def test_failed_verdict_is_exit_two(self, tmp_path):
        out = tmp_path / "g"
        code = main(
            ["verify-gumbel", "--thetas", "10,20", "--n-samples", "300",
             "--ks-threshold", "1e-9", "--out", str(out)]
        )
        assert code == EXIT_VERDICT_FAILED
        verdict = json.loads((out / "verdict.json").read_text())
        assert verdict["passed"] is False

    def test_passing_verdict_is_exit_zero(self, tmp_path):
        out = tmp_path / "v"
        code = main(
            ["verify-ldp", "--x", "0.6", "--thetas", "20,50", "--resolution", "60",
             "--out", str(out)]
        )
        assert code == EXIT_OK
        assert json.loads((out / "verdict.json").read_text())["passed"] is True


class TestArtifacts:
    def test_density_rows(self, tmp_path):
        out = tmp_path / "d"
        assert main(["density", "--theta", "2", "--resolution", "24", "--out", str(out)]) == EXIT_OK
        rows = _read_csv(out / "density.csv")
        assert rows[0] == ["band_k", "p", "g1", "tail"]
        assert len(rows) > 24

    def test_sample_rows(self, tmp_path):
        out = tmp_path / "s"
        code = main(["sample", "--theta", "5", "--n-samples", "4", "--k", "3",
                     "--seed", "1", "--out", str(out)])
        assert code == EXIT_OK
        rows = _read_csv(out / "samples.csv")
        assert len(rows) == 1 + 4 * 3

    def test_tilt_diagnostics(self, tmp_path):
        out = tmp_path / "t"
        code = main(["tilt", "--theta", "10", "--c", "1", "--gamma", "0.5",
                     "--n-samples", "150", "--seed", "2", "--out", str(out)])
        assert code == EXIT_OK
        diag = json.loads((out / "diagnostics.json").read_text())
        assert 1.0 <= diag["ess"] <= 150.0

    def test_phase_json(self, tmp_path):
        out = tmp_path / "p"
        assert main(["phase", "--c", "3", "--gamma", "1", "--out", str(out)]) == EXIT_OK
        payload = json.loads((out / "phase.json").read_text())
        assert payload["label"] == "tilted-rate"
        assert payload["branch"] == "supercritical"

    def test_moments_values(self, tmp_path):
        out = tmp_path / "m"
        assert main(["moments", "--theta", "10", "--k", "1", "--m", "2",
                     "--out", str(out)]) == EXIT_OK
        rows = _read_csv(out / "moments.csv")
        h2 = [float(r[2]) for r in rows[1:] if r[0] == "hm_mean"][0]
        assert math.isclose(h2, 1.0 / 11.0, rel_tol=1e-12)
