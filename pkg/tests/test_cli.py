"""
Tests for the command-line interface exit codes and outputs.
"""

import pytest

from cli import EXIT_CONFIG, EXIT_OK, EXIT_UNCERTIFIED, create_parser, main


class TestParser:
    """Test argument parsing."""

    def test_solve_flags(self):
        args = create_parser().parse_args(["solve", "--preset", "table4", "--h1-factor", "2", "--mesh-count", "3"])
        assert args.command == "solve"
        assert args.h1_factor == 2.0
        assert args.mesh_count == 3
        assert args.simplified_js is None

    def test_unknown_preset_exits(self):
        with pytest.raises(SystemExit) as exc_info:
            main(["solve", "--preset", "table9"])
        assert exc_info.value.code == 2

    def test_no_command(self):
        assert main([]) == EXIT_CONFIG


class TestSolveCommand:
    """Test the solve command end to end on small problems."""

    def test_inline_csv(self, tmp_path):
        out = tmp_path / "run.csv"
        code = main([
            "solve", "--integrand", "inv_linear", "--y0", "0", "--b", "0.5",
            "--eps", "1e-3", "--output", "csv", "--out-path", str(out),
        ])
        assert code == EXIT_OK
        lines = out.read_text(encoding="utf-8").splitlines()
        assert len(lines) == 2
        assert lines[0].startswith("x,y,y_display")

    def test_jsonl_to_stdout(self, capsys):
        code = main([
            "solve", "--problem", "linear", "--mesh", "0.25,0.5", "--eps", "1e-3",
            "--algorithm", "mesh", "--output", "jsonl",
        ])
        assert code == EXIT_OK
        assert len(capsys.readouterr().out.splitlines()) == 2

    def test_missing_y0(self):
        assert main(["solve", "--integrand", "inv_linear", "--b", "0.5"]) == EXIT_CONFIG

    def test_bad_mesh(self):
        assert main(["solve", "--problem", "linear", "--mesh", "0.5,abc"]) == EXIT_CONFIG

    def test_bad_config_file(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("problem = linear\ntolerance = 3\n", encoding="utf-8")
        assert main(["solve", "--config", str(path)]) == EXIT_CONFIG

    def test_uncertified_run(self, tmp_path):
        code = main([
            "solve", "--integrand", "inv_linear", "--y0", "0", "--b", "0.5",
            "--eps", "1e-3", "--node-cap", "5", "--output", "csv", "--out-path", str(tmp_path / "run.csv"),
        ])
        assert code == EXIT_UNCERTIFIED


class TestOtherCommands:
    """Test check, cost and contrast."""

    def test_check(self):
        assert main(["check", "--problem", "riccati", "--samples", "201"]) == EXIT_OK

    def test_cost(self):
        assert main(["cost", "--j-n", "13", "--j-s", "14", "--b", "1.6", "--eps", "1e-4"]) == EXIT_OK

    def test_cost_invalid(self):
        assert main(["cost", "--j-n", "15", "--j-s", "14", "--b", "1.6", "--eps", "1e-4"]) == EXIT_CONFIG

    def test_contrast(self):
        assert main(["contrast", "--problem", "linear", "--eps", "1e-3"]) == EXIT_OK
