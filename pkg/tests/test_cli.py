"""Tests for the command-line interface."""

import json
from pathlib import Path

import pytest

from sill.cli import (
    EXIT_INVALID,
    EXIT_OK,
    build_config,
    build_parser,
    main,
)


class TestParser:
    """Tests for argument parsing and configuration."""

    def test_version(self, capsys: pytest.CaptureFixture[str]) -> None:
        """--version prints the package version."""
        with pytest.raises(SystemExit) as excinfo:
            main(["--version"])
        assert excinfo.value.code == 0
        assert "sill" in capsys.readouterr().out

    def test_build_config(self) -> None:
        """Options land in a validated RunConfig."""
        args = build_parser().parse_args(
            ["classify", "--model", "m.json", "--schedule", "8,12", "--max-n", "10", "--jobs", "2"]
        )
        config = build_config(args)
        assert config.model_path == Path("m.json")
        assert config.n_schedule == (8, 12)
        assert config.schedule_or((4, 8)) == (8,)
        assert config.jobs == 2

    def test_k_points(self) -> None:
        """Repeated --k options keep their order."""
        args = build_parser().parse_args(["fiber-scan", "--k", "0,0,0", "--k", "1,0.5,-1"])
        assert build_config(args).k_list == ((0.0, 0.0, 0.0), (1.0, 0.5, -1.0))

    def test_k_grid_and_k_are_exclusive(self) -> None:
        """--k-grid and --k cannot be combined."""
        with pytest.raises(SystemExit):
            build_parser().parse_args(["fiber-scan", "--k-grid", "2x2x2", "--k", "0,0,0"])

    def test_alias(self) -> None:
        """coexistence is an alias of appendix-b."""
        args = build_parser().parse_args(["coexistence", "--max-n", "8"])
        assert args.handler.__name__ == "cmd_appendix_b"

    @pytest.mark.parametrize(
        "argv",
        [
            ["classify", "--grid-n", "7"],
            ["classify", "--tolerance", "bogus=1"],
            ["classify", "--tolerance", "eigenvalue_floor=0.5"],
            ["classify", "--schedule", "12,8"],
            ["fiber-scan", "--k-grid", "3x3"],
            ["fiber-scan", "--k", "4,0,0"],
            ["classify", "--jobs", "0"],
        ],
    )
    def test_invalid_configuration(
        self, argv: list[str], capsys: pytest.CaptureFixture[str]
    ) -> None:
        """Out-of-range options exit with status 1."""
        assert main(argv) == EXIT_INVALID
        assert "invalid configuration" in capsys.readouterr().err


class TestClassifyCommand:
    """Tests for sill classify."""

    def test_free_laplacian(self, data_dir: Path, capsys: pytest.CaptureFixture[str]) -> None:
        """The free Laplacian is case I."""
        status = main(
            ["classify", "--model", str(data_dir / "std_laplacian_mu0.json"), "--schedule", "4,8"]
        )
        assert status == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["case"] == "I"
        assert report["status"] == "determinate"

    def test_output_file(self, data_dir: Path, tmp_path: Path) -> None:
        """--out writes the report to a file."""
        target = tmp_path / "report.json"
        status = main(
            [
                "classify",
                "--model",
                str(data_dir / "std_laplacian_mu0.json"),
                "--grid-n",
                "8",
                "--out",
                str(target),
            ]
        )
        assert status == EXIT_OK
        report = json.loads(target.read_text(encoding="utf-8"))
        assert report["schedule"] == [4, 8]

    def test_missing_model(self, capsys: pytest.CaptureFixture[str]) -> None:
        """classify needs --model."""
        assert main(["classify"]) == EXIT_INVALID
        assert "--model" in capsys.readouterr().err

    def test_broken_hermiticity(self, data_dir: Path, capsys: pytest.CaptureFixture[str]) -> None:
        """Inconsistent conjugate entries exit with status 1."""
        status = main(["classify", "--model", str(data_dir / "broken_hermiticity.json")])
        assert status == EXIT_INVALID
        assert "$.hopping" in capsys.readouterr().err

    def test_malformed_json(self, data_dir: Path, capsys: pytest.CaptureFixture[str]) -> None:
        """Malformed JSON reports its line."""
        status = main(["classify", "--model", str(data_dir / "malformed.json")])
        assert status == EXIT_INVALID
        assert "line 4" in capsys.readouterr().err

    @pytest.mark.slow
    def test_coexistence_model(self, data_dir: Path, capsys: pytest.CaptureFixture[str]) -> None:
        """The coexistence model file is case IV."""
        status = main(
            [
                "classify",
                "--model",
                str(data_dir / "appendixB_coexist.json"),
                "--schedule",
                "8,12,16",
            ]
        )
        assert status == EXIT_OK
        report = json.loads(capsys.readouterr().out)
        assert report["case"] == "IV"
        kinds = sorted(witness["kind"] for witness in report["witnesses"])
        assert kinds.count("threshold_eigenvalue") == 3
        assert kinds.count("virtual_level") == 1


class TestFiberScanCommand:
    """Tests for sill fiber-scan."""

    ARGS = ["--grid-n", "8", "--k", "0,0,0", "--k", "3.141592653589793,0,0"]

    def test_free_pair(self, data_dir: Path, capsys: pytest.CaptureFixture[str]) -> None:
        """A free pair has no discrete spectrum anywhere."""
        model = str(data_dir / "std_laplacian_mu0.json")
        status = main(["fiber-scan", "--model", model, *self.ARGS])
        assert status == EXIT_OK
        captured = capsys.readouterr()
        lines = captured.out.splitlines()
        assert lines[0].startswith("k1,k2,k3,e_min,e_max")
        assert len(lines) == 3
        corner = lines[2].split(",")
        assert corner[:3] == ["3.14159265359", "0", "0"]
        assert float(corner[3]) == pytest.approx(4.0, abs=1e-9)
        assert float(corner[4]) == pytest.approx(20.0, abs=1e-9)
        assert all(line.split(",")[10] == "0" for line in lines[1:])
        assert "0 of 2 k-points" in captured.err

    def test_byte_identical_reruns(
        self, data_dir: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        """Serial and parallel runs print the same CSV."""
        model = str(data_dir / "std_laplacian_mu0.json")
        main(["fiber-scan", "--model", model, *self.ARGS])
        first = capsys.readouterr().out
        main(["fiber-scan", "--model", model, *self.ARGS, "--jobs", "2"])
        assert capsys.readouterr().out == first

    def test_output_file_and_counts(
        self, data_dir: Path, tmp_path: Path, capsys: pytest.CaptureFixture[str]
    ) -> None:
        """--out writes the CSV; --counts adds a summary line."""
        target = tmp_path / "scan.csv"
        model = str(data_dir / "std_laplacian_mu0.json")
        argv = ["fiber-scan", "--model", model, *self.ARGS, "--out", str(target), "--counts"]
        status = main(argv)
        assert status == EXIT_OK
        assert target.read_text(encoding="utf-8").count("\n") == 3
        assert "bound-state count" in capsys.readouterr().err


class TestAppendixBCommand:
    """Tests for sill appendix-b."""

    def test_resolution_cap_fails_identity_checks(
        self, capsys: pytest.CaptureFixture[str]
    ) -> None:
        """--max-n 8 leaves a single unconverged resolution and exits with 1."""
        assert main(["appendix-b", "--max-n", "8"]) == EXIT_INVALID
        assert capsys.readouterr().out == ""

    @pytest.mark.slow
    def test_default_run(self, tmp_path: Path) -> None:
        """The default schedules confirm coexistence."""
        target = tmp_path / "coexistence.json"
        assert main(["appendix-b", "--out", str(target), "--jobs", "2"]) == EXIT_OK
        report = json.loads(target.read_text(encoding="utf-8"))
        assert report["passed"] is True
        assert report["lambda_candidates"]["cardinality"] == 2
        assert any(run["case"] == "IV" for run in report["runs"])
