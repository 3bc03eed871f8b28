"""Command-line interface tests: parsing, output layout, property checks."""

import json
import os

import pytest

import parabest.cli as cli


def run_cli(argv):
    return cli.main(argv)


class TestParsing:
    def test_constant_override_syntax(self):
        assert cli._parse_constant("2,2=1.5") == (2, 2, 1.5)
        assert cli._parse_constant("7,1=0.25") == (7, 1, 0.25)
        import argparse
        for bad in ("2=1.5", "2,2", "a,b=c"):
            with pytest.raises(argparse.ArgumentTypeError):
                cli._parse_constant(bad)

    def test_missing_run_options_fail_fast(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run_cli(["run", "--problem", "slow"])
        assert exc.value.code == 2
        err = capsys.readouterr().err
        assert "--h0" in err and "--runs" in err

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            run_cli(["--version"])
        assert exc.value.code == 0


class TestScheduleFile:
    def test_round_trip(self, tmp_path):
        p = tmp_path / "sched.txt"
        p.write_text("# change the mesh twice\n"
                     "2 refine 0.3\n"
                     "\n"
                     "3 coarsen   # and undo it\n")
        sched = cli.load_schedule(str(p))
        assert sched == {2: ("refine", 0.3), 3: ("coarsen",)}

    def test_default_fraction(self, tmp_path):
        p = tmp_path / "sched.txt"
        p.write_text("4 refine\n")
        assert cli.load_schedule(str(p)) == {4: ("refine", 0.25)}

    def test_duplicate_step_rejected(self, tmp_path):
        p = tmp_path / "sched.txt"
        p.write_text("2 refine\n2 coarsen\n")
        with pytest.raises(ValueError):
            cli.load_schedule(str(p))

    def test_unknown_action_rejected(self, tmp_path):
        p = tmp_path / "sched.txt"
        p.write_text("2 wobble\n")
        with pytest.raises(ValueError):
            cli.load_schedule(str(p))


class TestConfigFile:
    def test_parse(self, tmp_path):
        p = tmp_path / "cfg.txt"
        p.write_text("problem = slow\n"
                     "# a comment\n"
                     "degree=1\n"
                     "tau0 = 0.25  # inline comment\n")
        cfg = cli.load_config_file(str(p))
        assert cfg == {"problem": "slow", "degree": "1", "tau0": "0.25"}

    def test_rejects_garbage(self, tmp_path):
        p = tmp_path / "cfg.txt"
        p.write_text("this line has no equals sign\n")
        with pytest.raises(ValueError):
            cli.load_config_file(str(p))

    def test_unknown_key_fails(self, tmp_path, capsys):
        p = tmp_path / "cfg.txt"
        p.write_text("temperature = hot\n")
        out = tmp_path / "o"
        with pytest.raises(SystemExit) as exc:
            run_cli(["run", "--config", str(p), "--out", str(out)])
        assert exc.value.code == 2


@pytest.fixture(scope="module")
def preset_outdir(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "preset1"
    code = run_cli(["preset", "1", "--runs", "1", "--out", str(out)])
    assert code == 0
    return out


class TestRunOutputs:
    def test_files_written(self, preset_outdir):
        names = sorted(os.listdir(preset_outdir))
        assert names == ["manifest.json", "plot.py", "steps.csv",
                         "summary.csv"]

    def test_manifest_contents(self, preset_outdir):
        m = json.loads((preset_outdir / "manifest.json").read_text())
        assert m["tool"] == "parabest"
        assert m["preset"] == "1"
        assert m["parameters"]["problem_label"] == "slow"
        assert m["parameters"]["runs"] == 1
        assert m["runs"][0]["steps"] == 25
        assert m["runs"][0]["max_pointwise_defect"] <= 1e-10
        assert m["wall_seconds"] >= 0.0

    def test_steps_csv_has_schema_header(self, preset_outdir):
        import parabest.benchmark as bm
        head = (preset_outdir / "steps.csv").read_text().splitlines()[0]
        assert head.split(",") == bm.STEP_COLUMNS

    def test_plot_script_compiles(self, preset_outdir):
        text = (preset_outdir / "plot.py").read_text()
        compile(text, "plot.py", "exec")

    def test_refuses_existing_outdir(self, preset_outdir, capsys):
        with pytest.raises(SystemExit):
            run_cli(["preset", "1", "--runs", "1",
                     "--out", str(preset_outdir)])

    def test_force_reuses_outdir(self, preset_outdir):
        code = run_cli(["preset", "1", "--runs", "1",
                        "--out", str(preset_outdir), "--force"])
        assert code == 0


class TestRunSubcommand:
    def test_custom_series_with_config_and_override(self, tmp_path):
        cfg = tmp_path / "cfg.txt"
        cfg.write_text("problem = slow\ndegree = 1\nk = 2\n"
                       "h0 = 0.5\ntau0 = 0.25\nruns = 2\n")
        out = tmp_path / "series"
        code = run_cli(["run", "--config", str(cfg), "--runs", "1",
                        "--out", str(out)])
        assert code == 0
        m = json.loads((out / "manifest.json").read_text())
        assert m["parameters"]["runs"] == 1          # flag beat the file
        assert m["parameters"]["h0"] == 0.5

    def test_env_var_outdir(self, tmp_path, monkeypatch):
        out = tmp_path / "from-env"
        monkeypatch.setenv("PARABEST_OUT", str(out))
        code = run_cli(["run", "--problem", "slow", "--degree", "1",
                        "--k", "2", "--h0", "0.5", "--tau0", "0.5",
                        "--runs", "1"])
        assert code == 0
        assert (out / "summary.csv").exists()

    def test_constant_and_alpha_recorded(self, tmp_path):
        out = tmp_path / "c"
        code = run_cli(["run", "--problem", "slow", "--degree", "1",
                        "--k", "2", "--h0", "0.5", "--tau0", "0.5",
                        "--runs", "1", "--constant", "2,2=2.0",
                        "--alpha", "1.0", "--out", str(out)])
        assert code == 0
        m = json.loads((out / "manifest.json").read_text())
        assert m["constants"] == [[2, 2, 2.0]]
        assert m["alpha"] == 1.0

    def test_schedule_through_cli(self, tmp_path):
        sched = tmp_path / "sched.txt"
        sched.write_text("2 refine 0.3\n3 coarsen\n")
        out = tmp_path / "s"
        code = run_cli(["run", "--problem", "slow", "--degree", "1",
                        "--k", "2", "--h0", "0.5", "--tau0", "0.25",
                        "--runs", "1", "--schedule", str(sched),
                        "--out", str(out)])
        assert code == 0
        rows = (out / "steps.csv").read_text().splitlines()
        assert len(rows) == 1 + 5                     # header + steps 0..4

    def test_parallel_jobs_match_serial(self, tmp_path):
        serial = tmp_path / "serial"
        parallel = tmp_path / "parallel"
        args = ["run", "--problem", "slow", "--degree", "1", "--k", "2",
                "--h0", "0.5", "--tau0", "0.25", "--runs", "2"]
        assert run_cli(args + ["--out", str(serial)]) == 0
        assert run_cli(args + ["--out", str(parallel), "--jobs", "2"]) == 0
        assert ((serial / "steps.csv").read_text()
                == (parallel / "steps.csv").read_text())


class TestCheck:
    def test_check_passes_and_reports(self, capsys):
        code = run_cli(["check", "--pairs", "3", "--seed", "1"])
        out = capsys.readouterr().out
        assert code == 0
        lines = [l for l in out.splitlines() if l.startswith("PASS")]
        assert len(lines) == 3
        assert "all checks passed" in out
