"""Runner contract: config parsing, precedence, exit codes, report files."""

import csv
import json

import pytest

from tracelab import cli
from tracelab.errors import ConfigParseError


def run_main(argv):
    return cli.main(argv)


class TestRunConfig:
    def test_defaults(self):
        cfg = cli.RunConfig(suites=("pde",))
        assert cfg.meshes == ("square",)
        assert cfg.ns == (8,)
        assert cfg.trials == 100

    def test_empty_suites_rejected(self):
        with pytest.raises(ConfigParseError):
            cli.RunConfig(suites=())

    def test_unknown_suite_rejected(self):
        with pytest.raises(ConfigParseError):
            cli.RunConfig(suites=("magic",))

    def test_unknown_mesh_rejected(self):
        with pytest.raises(ConfigParseError):
            cli.RunConfig(suites=("pde",), meshes=("disc",))

    def test_nonpositive_refinement_rejected(self):
        with pytest.raises(ConfigParseError):
            cli.RunConfig(suites=("pde",), ns=(0,))

    def test_lshape_needs_even_levels(self):
        with pytest.raises(ConfigParseError):
            cli.RunConfig(suites=("pde",), meshes=("lshape",), ns=(4, 5))
        cli.RunConfig(suites=("pde",), meshes=("lshape",), ns=(4, 8))

    def test_trials_floor(self):
        with pytest.raises(ConfigParseError):
            cli.RunConfig(suites=("pde",), trials=0)

    def test_seed_width(self):
        with pytest.raises(ConfigParseError):
            cli.RunConfig(suites=("pde",), seed=2**64)
        cli.RunConfig(suites=("pde",), seed=2**64 - 1)


class TestCellSeed:
    def test_deterministic(self):
        assert cli.cell_seed(42, "pde:square:8") == cli.cell_seed(42, "pde:square:8")

    def test_distinct_cells_distinct_seeds(self):
        names = ["oplab:identity", "oplab:douglas", "pde:square:8", "pde:square:16"]
        seeds = {cli.cell_seed(7, name) for name in names}
        assert len(seeds) == len(names)

    def test_fits_64_bits(self):
        s = cli.cell_seed(2**63, "hhalf:lshape:16")
        assert 0 <= s < 2**64


class TestConfigFile:
    def test_full_file(self, tmp_path):
        f = tmp_path / "run.cfg"
        f.write_text(
            "# comment line\n"
            "\n"
            "suites = pde, hhalf\n"
            "meshes = interval\n"
            "ns = 1, 8\n"
            "seed = 99\n"
            "trials = 7\n"
            "out = somewhere\n"
            "tol.energy_split = 1e-8\n"
        )
        raw = cli.parse_config_file(str(f))
        assert raw["suites"] == ["pde", "hhalf"]
        assert raw["meshes"] == ["interval"]
        assert raw["ns"] == ["1", "8"]
        assert raw["seed"] == 99
        assert raw["trials"] == 7
        assert raw["out"] == "somewhere"
        assert raw["tol_overrides"] == {"energy_split": 1e-8}

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigParseError):
            cli.parse_config_file(str(tmp_path / "absent.cfg"))

    def test_bad_line_reports_position(self, tmp_path):
        f = tmp_path / "run.cfg"
        f.write_text("suites = pde\nnot a pair\n")
        with pytest.raises(ConfigParseError, match=":2"):
            cli.parse_config_file(str(f))

    def test_unknown_key(self, tmp_path):
        f = tmp_path / "run.cfg"
        f.write_text("colour = blue\n")
        with pytest.raises(ConfigParseError, match="colour"):
            cli.parse_config_file(str(f))

    def test_bad_integer(self, tmp_path):
        f = tmp_path / "run.cfg"
        f.write_text("seed = twelve\n")
        with pytest.raises(ConfigParseError):
            cli.parse_config_file(str(f))

    def test_bad_tolerance(self, tmp_path):
        f = tmp_path / "run.cfg"
        f.write_text("tol.x = much\n")
        with pytest.raises(ConfigParseError):
            cli.parse_config_file(str(f))


class TestPrecedence:
    def test_flags_override_file(self, tmp_path):
        f = tmp_path / "run.cfg"
        f.write_text("suites = pde\nseed = 1\nns = 4\nout = filedir\n")
        args = cli.make_parser().parse_args(
            [str(f), "--seed", "2", "--out", "flagdir", "--n", "8"]
        )
        cfg = cli.build_config(args)
        assert cfg.seed == 2
        assert cfg.out_dir == "flagdir"
        assert cfg.ns == (8,)
        assert cfg.suites == ("pde",)

    def test_env_fallback_for_out(self, tmp_path, monkeypatch):
        monkeypatch.setenv("TRACELAB_OUT", str(tmp_path / "envdir"))
        args = cli.make_parser().parse_args(["--suite", "pde"])
        cfg = cli.build_config(args)
        assert cfg.out_dir == str(tmp_path / "envdir")

    def test_default_out(self, monkeypatch):
        monkeypatch.delenv("TRACELAB_OUT", raising=False)
        args = cli.make_parser().parse_args(["--suite", "pde"])
        assert cli.build_config(args).out_dir == "tracelab_out"

    def test_comma_lists_and_dedupe(self):
        args = cli.make_parser().parse_args(
            ["--suite", "pde,hhalf", "--suite", "pde", "--mesh", "interval", "--n", "1,2"]
        )
        cfg = cli.build_config(args)
        assert cfg.suites == ("pde", "hhalf")
        assert cfg.ns == (1, 2)

    def test_tol_flag_merges_over_file(self, tmp_path):
        f = tmp_path / "run.cfg"
        f.write_text("suites = pde\ntol.a = 1.0\ntol.b = 2.0\n")
        args = cli.make_parser().parse_args([str(f), "--tol", "a=9.0", "--tol", "c=3.0"])
        cfg = cli.build_config(args)
        assert cfg.tol_overrides == {"a": 9.0, "b": 2.0, "c": 3.0}

    def test_bad_tol_flag(self):
        args = cli.make_parser().parse_args(["--suite", "pde", "--tol", "oops"])
        with pytest.raises(ConfigParseError):
            cli.build_config(args)


class TestRun:
    def test_oplab_suite_passes(self, tmp_path, capsys):
        out = tmp_path / "rep"
        code = run_main(["--suite", "oplab", "--trials", "20", "--seed", "42", "--out", str(out)])
        assert code == 0
        payload = json.loads((out / "report.json").read_text())
        assert payload["verdict"] == "pass"
        families = set()
        for rep in payload["results"]:
            families.update(rep["residuals"])
        assert len(families) >= 8
        assert "passed" in payload["results"][0]

    def test_hhalf_interval_hand_values(self, tmp_path):
        out = tmp_path / "rep"
        code = run_main(
            ["--suite", "hhalf", "--mesh", "interval", "--n", "1", "--trials", "5", "--out", str(out)]
        )
        assert code == 0
        payload = json.loads((out / "report.json").read_text())
        rep = payload["results"][0]
        c = rep["constants"]
        assert [c["s_00"], c["s_01"], c["s_10"], c["s_11"]] == [2.0, -1.0, -1.0, 2.0]
        assert c["split_total"] == 3.0
        assert c["split_l2"] == 1.0
        assert abs(c["split_extension"] - 2.0) <= 1e-12

    def test_empty_suites_exit_2_no_files(self, tmp_path, capsys):
        out = tmp_path / "rep"
        code = run_main(["--out", str(out)])
        assert code == 2
        assert not out.exists()
        assert "config error" in capsys.readouterr().err

    def test_config_error_message_for_unknown_suite(self, tmp_path, capsys):
        code = run_main(["--suite", "bogus", "--out", str(tmp_path / "x")])
        assert code == 2
        assert not (tmp_path / "x").exists()

    def test_failed_verdict_exit_1(self, tmp_path, capsys):
        out = tmp_path / "rep"
        code = run_main(
            [
                "--suite", "pde", "--mesh", "interval", "--n", "1",
                "--trials", "3", "--tol", "harmonic_two_path=1e-30",
                "--out", str(out),
            ]
        )
        assert code == 1
        payload = json.loads((out / "report.json").read_text())
        assert payload["verdict"] == "fail"
        assert "FAIL" in capsys.readouterr().out

    def test_csv_schema(self, tmp_path):
        out = tmp_path / "rep"
        run_main(
            ["--suite", "dual", "--mesh", "interval", "--n", "1", "--trials", "2", "--out", str(out)]
        )
        with (out / "report.csv").open() as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["suite", "mesh", "n", "metric", "value"]
        assert all(len(r) == 5 for r in rows[1:])
        metrics = {r[3] for r in rows[1:]}
        assert "dual_gram" in metrics
        # values survive a repr round-trip
        for r in rows[1:]:
            float(r[4])

    def test_stability_rows_appear_with_two_levels(self, tmp_path):
        out = tmp_path / "rep"
        code = run_main(
            [
                "--suite", "hhalf", "--mesh", "square", "--n", "4,8",
                "--trials", "5", "--out", str(out),
            ]
        )
        assert code == 0
        payload = json.loads((out / "report.json").read_text())
        suites = [rep["suite"] for rep in payload["results"]]
        assert "hhalf-stability" in suites
        stab = payload["results"][suites.index("hhalf-stability")]
        assert set(stab["residuals"]) == {"quotient_cmin", "quotient_cmax"}

    def test_no_stability_row_for_single_level(self, tmp_path):
        out = tmp_path / "rep"
        run_main(["--suite", "hhalf", "--mesh", "square", "--n", "4", "--trials", "5", "--out", str(out)])
        payload = json.loads((out / "report.json").read_text())
        assert all(rep["suite"] != "hhalf-stability" for rep in payload["results"])

    def test_determinism_byte_identical(self, tmp_path):
        out = tmp_path / "rep"
        argv = [
            "--suite", "pde,interp", "--mesh", "interval", "--n", "1,8",
            "--seed", "1234", "--trials", "5", "--out", str(out),
        ]
        assert run_main(argv) == 0
        first_json = (out / "report.json").read_bytes()
        first_csv = (out / "report.csv").read_bytes()
        assert run_main(argv) == 0
        assert (out / "report.json").read_bytes() == first_json
        assert (out / "report.csv").read_bytes() == first_csv

    def test_seed_changes_residuals(self, tmp_path):
        outs = []
        for seed in ("1", "2"):
            out = tmp_path / f"rep{seed}"
            run_main(
                ["--suite", "necas", "--mesh", "square", "--n", "4",
                 "--seed", seed, "--trials", "10", "--out", str(out)]
            )
            outs.append(json.loads((out / "report.json").read_text()))
        c1 = outs[0]["results"][0]["constants"]
        c2 = outs[1]["results"][0]["constants"]
        assert c1 != c2

    def test_config_file_end_to_end(self, tmp_path):
        f = tmp_path / "run.cfg"
        out = tmp_path / "rep"
        f.write_text(
            f"suites = h1\nmeshes = interval\nns = 1\nseed = 5\ntrials = 3\nout = {out}\n"
        )
        assert run_main([str(f)]) == 0
        payload = json.loads((out / "report.json").read_text())
        assert payload["config"]["suites"] == ["h1"]
        assert payload["results"][0]["constants"]["h1_cmin"] == pytest.approx(2.0)
        assert payload["results"][0]["constants"]["h1_cmax"] == pytest.approx(4.0)
