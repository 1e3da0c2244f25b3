"""
Test Suite for the command-line surface
Tests argument parsing, config errors and exit codes, CSV schemas and
determinism of the subcommands on small instances

Run: pytest tests/test_cli.py -v
"""

import json
import math
import sys
from pathlib import Path

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent.parent))

import pandas as pd
import pytest

from engines.main import SUBCOMMANDS, build_parser, run
from output_formats import SCHEMAS
from shared.config.settings import RunConfig, load_run_config
from shared.middleware.error_handler import EXIT_CONFIG, EXIT_OK, EXIT_VALIDATION

TEST_MODE = ["profile.hyperbolic_test_mode=true", "profile.alpha=0"]
HYPERBOLIC = TEST_MODE + ['schottky.family="hyperbolic_pair"', 'schottky.model="EXACT_H2"',
                          'counting.R_grid=[6, 8, 10]']
OVERLAP = TEST_MODE + ['schottky.model="EXACT_H2"',
                       "schottky.intervals=[[[0.5, null], [null, -0.5]], [[0.6, 1.5], [-1.5, -0.6]]]"]


def _run(command, out: Path, overrides=(), extra=()):
    argv = [command, "--out", str(out)]
    for text in overrides:
        argv += ["--set", text]
    return run(argv + list(extra))


def _header(path: Path) -> list:
    return path.read_text(encoding="utf-8").splitlines()[0].split(",")


class TestParser:
    """Subcommands and shared options"""

    def test_every_subcommand_is_registered(self):
        parser = build_parser()
        for name in SUBCOMMANDS:
            args = parser.parse_args([name])
            assert args.command == name
            assert args.overrides == []
        assert set(SUBCOMMANDS) == set(SCHEMAS)

    def test_repeated_overrides_and_options(self):
        args = build_parser().parse_args(["count", "--set", "counting.k_max=4", "--set", "seed=7",
                                          "--workers", "3", "--verbose"])
        assert args.overrides == ["counting.k_max=4", "seed=7"]
        assert args.workers == 3 and args.verbose

    def test_selftest_only_filter(self):
        args = build_parser().parse_args(["selftest", "--only", "A1", "--only", "A2"])
        assert args.only == ["A1", "A2"]

    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["simulate"])


class TestConfig:
    """Loading, overrides and config exit codes"""

    def test_default_config_is_the_convergent_instance(self):
        config = load_run_config("config/default_run.json")
        assert config.schottky.family == "cusp_pair" and config.schottky.h_power == 8
        assert config.schottky.model == "MODIFIED_CUSP"
        assert config.transfer.trunc_N == 32 and config.transfer.mesh_points == 48
        R = config.counting.r_values()
        assert R[0] == 14.0 and R[-1] == 34.0 and len(R) == 21

    def test_overrides_parse_json_values(self):
        config = load_run_config(None, ["counting.k_max=3", "counting.R_grid=[9, 5, 7]", "output.directory=runs"])
        assert config.counting.k_max == 3
        assert config.counting.r_values() == [5.0, 7.0, 9.0]
        assert config.output.directory == "runs"

    def test_unknown_key_exits_with_config_code(self, tmp_path):
        assert _run("profile", tmp_path, ["profile.nope=1"]) == EXIT_CONFIG

    def test_out_of_range_value_exits_with_config_code(self, tmp_path):
        assert _run("profile", tmp_path, ["profile.A=1.5"]) == EXIT_CONFIG

    def test_unreadable_config_exits_with_config_code(self, tmp_path):
        broken = tmp_path / "broken.json"
        broken.write_text('{"seed": 1,', encoding="utf-8")
        assert run(["profile", "--config", str(broken), "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_alpha_needs_test_mode_below_one(self):
        with pytest.raises(Exception):
            RunConfig.model_validate({"profile": {"alpha": 0.5}})

    @pytest.mark.parametrize("override", ["profile.A=1", "profile.B=1", "profile.alpha=2.5"])
    def test_pinching_and_alpha_ranges_exit_with_config_code(self, tmp_path, override):
        assert _run("profile", tmp_path, [override]) == EXIT_CONFIG

    def test_alpha_above_two_needs_test_mode(self):
        with pytest.raises(Exception):
            RunConfig.model_validate({"profile": {"alpha": 2.5}})
        config = RunConfig.model_validate({"profile": {"alpha": 2.5, "hyperbolic_test_mode": True}})
        assert config.profile.alpha == 2.5


class TestGeometryCommands:
    """profile and geodesics in the hyperbolic test mode"""

    def test_profile_csv(self, tmp_path):
        assert _run("profile", tmp_path, TEST_MODE) == EXIT_OK
        assert _header(tmp_path / "profile.csv") == SCHEMAS["profile"]
        table = pd.read_csv(tmp_path / "profile.csv")
        assert len(table) > 100
        assert (table["K"] + 1.0).abs().max() < 1e-9
        assert (tmp_path / "summary.txt").exists()

    def test_geodesics_match_the_hyperbolic_formula(self, tmp_path):
        assert _run("geodesics", tmp_path, TEST_MODE) == EXIT_OK
        assert _header(tmp_path / "geodesics.csv") == SCHEMAS["geodesics"]
        table = pd.read_csv(tmp_path / "geodesics.csv")
        expected = table["n"].map(lambda n: math.acosh(1.0 + n * n / 2.0))
        assert (table["d_full"] - expected).abs().max() < 1e-6
        assert table["h_n"].is_monotonic_increasing

    def test_resolved_config_is_written(self, tmp_path):
        assert _run("profile", tmp_path, TEST_MODE + ["seed=11"]) == EXIT_OK
        resolved = json.loads((tmp_path / "resolved_config.json").read_text(encoding="utf-8"))
        assert resolved["seed"] == 11
        assert resolved["profile"]["hyperbolic_test_mode"] is True


class TestGroupCommands:
    """validate, words and count on the hyperbolic pair"""

    def test_validate_passes(self, tmp_path):
        assert _run("validate", tmp_path, HYPERBOLIC) == EXIT_OK
        assert _header(tmp_path / "validate.csv") == SCHEMAS["validate"]
        table = pd.read_csv(tmp_path / "validate.csv")
        assert table["ok"].all()

    def test_validate_default_config(self, tmp_path):
        assert _run("validate", tmp_path, extra=["--config", "config/default_run.json"]) == EXIT_OK
        table = pd.read_csv(tmp_path / "validate.csv")
        assert table["ok"].all() and len(table) == 2 * 2 * 6
        # powers of h^8 pile the images onto the attracting point -1
        h_rows = table[(table["factor"] == 1) & (table["power"] > 0)]
        assert (h_rows["image_left"] < -0.99).all() and (h_rows["image_right"] < -0.99).all()

    def test_validate_failure_exit_code(self, tmp_path):
        assert _run("validate", tmp_path, OVERLAP) == EXIT_VALIDATION
        table = pd.read_csv(tmp_path / "validate.csv")
        assert not table["ok"].all()

    def test_words_need_valid_data(self, tmp_path):
        assert _run("words", tmp_path, OVERLAP) == EXIT_VALIDATION

    def test_words_sorted_by_distance(self, tmp_path):
        assert _run("words", tmp_path, HYPERBOLIC) == EXIT_OK
        assert _header(tmp_path / "words.csv") == SCHEMAS["words"]
        table = pd.read_csv(tmp_path / "words.csv", keep_default_na=False)
        assert table["distance"].is_monotonic_increasing
        assert table.loc[0, "length"] == 0 and table.loc[0, "distance"] == 0.0
        assert (table["distance"] <= 6.0).all()

    def test_count_table(self, tmp_path):
        assert _run("count", tmp_path, HYPERBOLIC) == EXIT_OK
        assert _header(tmp_path / "count.csv") == SCHEMAS["count"]
        table = pd.read_csv(tmp_path / "count.csv")
        assert table["R"].tolist() == [6.0, 8.0, 10.0]
        assert table["N"].is_monotonic_increasing and table.loc[0, "N"] >= 1
        assert math.isnan(table.loc[0, "drift"])

    def test_count_is_independent_of_workers(self, tmp_path):
        single, multi = tmp_path / "single", tmp_path / "multi"
        assert _run("count", single, HYPERBOLIC, ["--workers", "1"]) == EXIT_OK
        assert _run("count", multi, HYPERBOLIC, ["--workers", "4"]) == EXIT_OK
        assert (single / "count.csv").read_bytes() == (multi / "count.csv").read_bytes()


class TestTransferCommands:
    """delta and renewal on the hyperbolic pair"""

    SMALL = HYPERBOLIC + ["transfer.trunc_N=8", "transfer.trunc_hyperbolic=8", "transfer.mesh_points=32"]

    def test_delta_curve(self, tmp_path):
        assert _run("delta", tmp_path, self.SMALL) == EXIT_OK
        assert _header(tmp_path / "delta.csv") == SCHEMAS["delta"]
        table = pd.read_csv(tmp_path / "delta.csv")
        assert table["s"].is_monotonic_increasing
        assert table["rho"].is_monotonic_decreasing

    def test_renewal_needs_convergence(self, tmp_path):
        # all-hyperbolic groups have rho(delta) >= 1 at the factor exponent 0
        assert _run("renewal", tmp_path, self.SMALL) != EXIT_OK


@pytest.mark.slow
class TestSelftest:
    def test_selected_criteria(self, tmp_path):
        code = run(["selftest", "--only", "A1", "--only", "A2", "--out", str(tmp_path)])
        table = pd.read_csv(tmp_path / "selftest.csv")
        assert _header(tmp_path / "selftest.csv") == SCHEMAS["selftest"]
        assert table["criterion"].tolist() == ["A1", "A2"]
        assert code == EXIT_OK and table["passed"].all()
        assert "Verdict" in (tmp_path / "summary.txt").read_text(encoding="utf-8")

    def test_unknown_criterion(self, tmp_path):
        assert run(["selftest", "--only", "A99", "--out", str(tmp_path)]) == EXIT_CONFIG
