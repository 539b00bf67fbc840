"""
Tests for the command-line entry point
"""
import io

import pandas as pd
import pytest

from harmony.cli import main
from harmony.models.basis import read_basis, sidecar_path
from harmony.models.dem import parse_dem


@pytest.fixture
def model_path(tmp_path):
    path = tmp_path / "rep.dem"
    assert main(["gen", "--family", "repetition", "--d", "3", "--rounds", "1", "--p", "0.1", "--out", str(path)]) == 0
    return path


class TestGen:
    def test_writes_model_and_sidecar(self, model_path):
        """d = 3, one round: four detectors and five mechanisms"""
        h = parse_dem(model_path.read_text())
        assert h.num_detectors == 4
        assert len(h) == 5
        assert read_basis(sidecar_path(model_path)) == tuple("ZZZZ")

    def test_stdout(self, capsys):
        assert main(["gen", "--family", "rotated_surface", "--d", "3", "--rounds", "1", "--p", "0.01"]) == 0
        h = parse_dem(capsys.readouterr().out)
        assert h.num_detectors == 8

    def test_even_distance(self, capsys):
        """Invalid code parameters are usage errors"""
        assert main(["gen", "--family", "repetition", "--d", "4", "--p", "0.1"]) == 1
        assert "invalid parameters" in capsys.readouterr().err

    def test_missing_parameters(self):
        assert main(["gen", "--family", "repetition"]) == 1

    def test_internal_value_error_propagates(self, monkeypatch):
        """Only validation failures map to exit code 1; other ValueErrors are bugs and surface"""
        from harmony import cli

        def broken(args):
            raise ValueError("boom")

        monkeypatch.setitem(cli.COMMANDS, "gen", broken)
        with pytest.raises(ValueError, match="boom"):
            main(["gen", "--family", "repetition", "--d", "3", "--p", "0.1"])


class TestSampleAndDecode:
    def test_sample_then_decode(self, model_path, tmp_path):
        shots_path = tmp_path / "shots.txt"
        assert main(["sample", "--model", str(model_path), "--shots", "20", "--seed", "3", "--out", str(shots_path)]) == 0
        lines = shots_path.read_text().splitlines()
        assert len(lines) == 20
        detectors, observables = lines[0].split(" ")
        assert len(detectors) == 4
        assert len(observables) == 1

        out = tmp_path / "pred.csv"
        assert main(["decode", "--model", str(model_path), "--shots-file", str(shots_path), "--out", str(out)]) == 0
        frame = pd.read_csv(out, dtype={"prediction": str})
        assert frame.columns.tolist() == ["shot", "prediction", "correct"]
        assert len(frame) == 20

    def test_sample_is_seeded(self, model_path, capsys):
        main(["sample", "--model", str(model_path), "--shots", "10", "--seed", "5"])
        first = capsys.readouterr().out
        main(["sample", "--model", str(model_path), "--shots", "10", "--seed", "5"])
        assert capsys.readouterr().out == first

    def test_layered_columns(self, model_path, tmp_path, capsys):
        shots_path = tmp_path / "shots.txt"
        main(["sample", "--model", str(model_path), "--shots", "5", "--out", str(shots_path)])
        argv = ["decode", "--model", str(model_path), "--shots-file", str(shots_path),
                "--decoder", "layered", "--n1", "1", "--n2", "2"]
        assert main(argv) == 0
        frame = pd.read_csv(io.StringIO(capsys.readouterr().out))
        assert {"confidence", "triggered"} <= set(frame.columns)

    def test_missing_model_file(self, tmp_path):
        """A file that cannot be read is a runtime error"""
        assert main(["sample", "--model", str(tmp_path / "absent.dem"), "--shots", "1"]) == 2

    def test_malformed_model(self, tmp_path):
        bad = tmp_path / "bad.dem"
        bad.write_text("error(0.1) D0 Q7\n")
        assert main(["sample", "--model", str(bad), "--shots", "1"]) == 2


class TestBench:
    def test_unperturbed_single_member_equals_correlated(self, capsys):
        """N = 1 with zero alphas is correlated matching on the same shots"""
        argv = ["bench", "--family", "rotated_surface", "--d", "3", "--p", "0.05", "--rounds", "2",
                "--shots", "200", "--seed", "4", "--decoder", "correlated", "--decoder", "ensemble",
                "--n", "1", "--alphas", "0,0,0"]
        assert main(argv) == 0
        frame = pd.read_csv(io.StringIO(capsys.readouterr().out))
        assert frame["failures"].iloc[0] == frame["failures"].iloc[1]
        assert frame["N"].iloc[1] == 1

    def test_deterministic_csv(self, tmp_path):
        argv = ["bench", "--family", "repetition", "--d", "3,5", "--p", "0.05", "--shots", "100", "--seed", "9"]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(argv + ["--out", str(a)]) == 0
        assert main(argv + ["--out", str(b)]) == 0
        assert a.read_text() == b.read_text()
        assert len(pd.read_csv(a)) == 2

    def test_model_input_with_json(self, model_path, tmp_path):
        out, mirror = tmp_path / "b.csv", tmp_path / "b.json"
        argv = ["bench", "--model", str(model_path), "--shots", "50", "--decoder", "mwpm",
                "--out", str(out), "--json", str(mirror)]
        assert main(argv) == 0
        assert pd.read_csv(out)["family"].tolist() == ["model"]
        assert pd.read_json(mirror)["decoder"].tolist() == ["mwpm"]

    def test_missing_output_directory(self, tmp_path):
        argv = ["bench", "--d", "3", "--p", "0.05", "--shots", "10", "--out", str(tmp_path / "no" / "x.csv")]
        assert main(argv) == 1

    def test_zero_shots(self):
        assert main(["bench", "--d", "3", "--p", "0.05", "--shots", "0"]) == 1

    def test_bad_list(self):
        assert main(["bench", "--d", "3,x", "--p", "0.05", "--shots", "10"]) == 1


class TestLayeredAndScan:
    def test_n1_above_n2(self):
        assert main(["layered", "--d", "3", "--p", "0.05", "--n1s", "5", "--n2", "3", "--shots", "10"]) == 1

    def test_scan_chi(self, capsys):
        argv = ["scan-chi", "--family", "repetition", "--d", "3", "--rounds", "1", "--p", "0.05",
                "--chis", "1,4", "--shots", "20"]
        assert main(argv) == 0
        frame = pd.read_csv(io.StringIO(capsys.readouterr().out))
        assert frame["chi"].tolist() == [1, 4]


class TestHelp:
    def test_help(self, capsys):
        assert main(["--help"]) == 0
        assert "bench" in capsys.readouterr().out

    def test_subcommand_help(self, capsys):
        assert main(["bench", "--help"]) == 0
        assert "--shots" in capsys.readouterr().out

    def test_no_command(self):
        assert main([]) == 1
