"""End-to-end tests of the command-line interface.

Commands run in-process through main() so exit codes and outputs are
asserted directly; one subprocess test exercises the installed script.
"""

import csv
import shutil
import subprocess

import pytest

from minutecast import cli
from minutecast.errors import ConfigError
from minutecast.marketdata import load_minute_bars
from minutecast.rolling import read_store


def write_config(tmp_path, text, name="run.conf"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestConfigParsing:
    def test_defaults(self):
        config = cli.load_run_config(None)
        assert config.seed == 0
        assert config.workers == 1
        assert config.models == ("naive", "ols-vix", "lstm")
        assert config.predictors == ("vix",)

    def test_file_values_and_comments(self, tmp_path):
        path = write_config(tmp_path, """
            # pipeline setup
            synth_days = 4
            seed = 7          # master seed
            models = naive, ols-rv
            predictors = vix, agg
            rf_max_features =
        """)
        config = cli.load_run_config(path)
        assert config.synth_days == 4
        assert config.seed == 7
        assert config.models == ("naive", "ols-rv")
        assert config.predictors == ("vix", "agg")
        assert config.rf_max_features is None

    def test_flags_override_file(self, tmp_path):
        path = write_config(tmp_path, "seed = 5\nworkers = 2\n")
        config = cli.load_run_config(path, {"seed": 9})
        assert config.seed == 9
        assert config.workers == 2

    def test_unknown_key(self, tmp_path):
        path = write_config(tmp_path, "epochs = 5\n")
        with pytest.raises(ConfigError):
            cli.load_run_config(path)

    def test_duplicate_key(self, tmp_path):
        path = write_config(tmp_path, "seed = 1\nseed = 2\n")
        with pytest.raises(ConfigError):
            cli.load_run_config(path)

    def test_bad_value(self, tmp_path):
        path = write_config(tmp_path, "seed = soon\n")
        with pytest.raises(ConfigError):
            cli.load_run_config(path)

    def test_missing_equals(self, tmp_path):
        path = write_config(tmp_path, "just a line\n")
        with pytest.raises(ConfigError):
            cli.load_run_config(path)

    def test_config_invariants(self):
        with pytest.raises(ConfigError):
            cli.RunConfig(models=())
        with pytest.raises(ConfigError):
            cli.RunConfig(predictors=())
        with pytest.raises(ConfigError):
            cli.RunConfig(seed=-1)
        with pytest.raises(ConfigError):
            cli.RunConfig(workers=0)

    def test_build_roster_expansion(self):
        config = cli.RunConfig(models=("naive", "ols", "lstm", "rf"),
                               predictors=("vix", "agg"))
        roster = cli.build_roster(config)
        keys = [spec.key for spec in roster]
        assert keys == [
            "naive:none",
            "ols-ar1:ar1", "ols-rv:rv", "ols-vix:vix", "ols-dvix:dvix", "ols-vrp:vrp",
            "lstm:vix", "lstm:agg",
            "rf:vix", "rf:agg",
        ]

    def test_build_roster_rejects_unknown_model(self):
        with pytest.raises(ConfigError):
            cli.build_roster(cli.RunConfig(models=("garch",)))


class TestSynth:
    def test_row_count_and_determinism(self, tmp_path, capsys):
        out = tmp_path / "bars.csv"
        argv = ["synth", "--days", "5", "--seed", "3", "--out", str(out)]
        assert cli.main(argv) == 0
        first = out.read_bytes()
        lines = first.decode().strip().split("\n")
        assert lines[0] == "date,time,spy_price,vix"
        assert len(lines) == 1 + 5 * 371
        assert cli.main(argv) == 0
        assert out.read_bytes() == first

    def test_zero_days_header_only(self, tmp_path):
        out = tmp_path / "bars.csv"
        assert cli.main(["synth", "--days", "0", "--out", str(out)]) == 0
        assert out.read_text() == "date,time,spy_price,vix\n"

    def test_output_loads_cleanly(self, tmp_path):
        out = tmp_path / "bars.csv"
        cli.main(["synth", "--days", "2", "--seed", "1", "--out", str(out)])
        days = load_minute_bars(out)
        assert len(days) == 2
        assert all(len(d.bars) == 371 for d in days)
        assert all(not d.has_gaps for d in days)

    def test_seed_changes_content(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        cli.main(["synth", "--days", "1", "--seed", "1", "--out", str(a)])
        cli.main(["synth", "--days", "1", "--seed", "2", "--out", str(b)])
        assert a.read_bytes() != b.read_bytes()

    def test_days_required(self, tmp_path, capsys):
        out = tmp_path / "bars.csv"
        assert cli.main(["synth", "--out", str(out)]) == 2
        assert "config error" in capsys.readouterr().err


def make_bars(tmp_path, mutate=None, name="bars.csv"):
    """A small clean file, optionally mutated line-wise."""
    out = tmp_path / name
    cli.main(["synth", "--days", "2", "--seed", "4", "--out", str(out)])
    if mutate is not None:
        lines = out.read_text().strip().split("\n")
        lines = mutate(lines)
        out.write_text("\n".join(lines) + "\n")
    return str(out)


class TestValidate:
    def test_clean_file(self, tmp_path, capsys):
        path = make_bars(tmp_path)
        assert cli.main(["validate", path]) == 0
        output = capsys.readouterr().out
        assert "0 errors" in output
        assert "2 days" in output
        assert "371 session bars" in output

    def test_duplicate_minute(self, tmp_path, capsys):
        path = make_bars(tmp_path, lambda lines: lines + [lines[-1]])
        assert cli.main(["validate", path]) == 3
        output = capsys.readouterr().out
        assert "1 errors" in output
        assert "duplicate bar" in output

    def test_out_of_session_row_warns_only(self, tmp_path, capsys):
        def add_early(lines):
            date = lines[1].split(",")[0]
            # pre-open print, placed where minutes stay monotone
            return lines[:1] + [f"{date},09:35,100.0,19.0"] + lines[1:]
        path = make_bars(tmp_path, add_early)
        assert cli.main(["validate", path]) == 0
        output = capsys.readouterr().out
        assert "out-of-session" in output
        assert "0 errors" in output

    def test_gap_warns_only(self, tmp_path, capsys):
        path = make_bars(tmp_path, lambda lines: lines[:50] + lines[60:])
        assert cli.main(["validate", path]) == 0
        output = capsys.readouterr().out
        assert "missing session minutes" in output
        assert "0 errors" in output

    def test_short_day_warns(self, tmp_path, capsys):
        path = make_bars(tmp_path, lambda lines: lines[:1 + 20])
        assert cli.main(["validate", path]) == 0
        assert "would be dropped" in capsys.readouterr().out

    def test_bad_header(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("time,price\n")
        assert cli.main(["validate", str(bad)]) == 3

    def test_malformed_field(self, tmp_path, capsys):
        def corrupt(lines):
            lines[5] = lines[5].rsplit(",", 1)[0] + ",not-a-number"
            return lines
        path = make_bars(tmp_path, corrupt)
        assert cli.main(["validate", path]) == 3
        assert "line 6" in capsys.readouterr().out

    def test_non_monotone(self, tmp_path, capsys):
        path = make_bars(tmp_path, lambda lines: lines[:10] + [lines[11], lines[10]] + lines[12:])
        assert cli.main(["validate", path]) == 3
        assert "non-monotone" in capsys.readouterr().out

    def test_missing_file(self, tmp_path, capsys):
        assert cli.main(["validate", str(tmp_path / "nope.csv")]) == 3
        assert "data error" in capsys.readouterr().err


SMALL_RUN = """
synth_days = 3
seed = 6
models = naive, ols-vix, lstm
predictors = vix
lstm_hidden_dim = 3
lstm_epochs = 2
"""


class TestRun:
    def test_record_counts_and_reports(self, tmp_path, capsys):
        config = write_config(tmp_path, SMALL_RUN)
        out = tmp_path / "out"
        assert cli.main(["run", "--config", config, "--out", str(out)]) == 0
        records = read_store(out / "predictions.csv")
        assert len(records) == 3 * 3 * 340
        table = capsys.readouterr().out
        assert "naive" in table and "lstm" in table and "ols-vix" in table
        with open(out / "aggregate_report.csv") as handle:
            rows = list(csv.DictReader(handle))
        naive_r2 = [r for r in rows if r["model"] == "naive" and r["metric"] == "r2_oos"][0]
        assert abs(float(naive_r2["mean"])) < 1e-12
        assert naive_r2["n_days_raw"] == "3"

    def test_rerun_is_byte_identical(self, tmp_path):
        config = write_config(tmp_path, SMALL_RUN)
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        assert cli.main(["run", "--config", config, "--out", str(out1)]) == 0
        assert cli.main(["run", "--config", config, "--out", str(out2)]) == 0
        for name in ("predictions.csv", "daily_metrics.csv", "aggregate_report.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_model_override_flag(self, tmp_path):
        config = write_config(tmp_path, SMALL_RUN)
        out = tmp_path / "out"
        assert cli.main(["run", "--config", config, "--out", str(out),
                         "--models", "naive"]) == 0
        records = read_store(out / "predictions.csv")
        assert len(records) == 3 * 340
        assert {r.model for r in records} == {"naive"}

    def test_rf_route(self, tmp_path):
        config = write_config(tmp_path, """
            synth_days = 1
            models = rf
            predictors = ar1
            rf_trees = 2
        """)
        out = tmp_path / "out"
        assert cli.main(["run", "--config", config, "--out", str(out)]) == 0
        records = read_store(out / "predictions.csv")
        assert len(records) == 340
        assert {r.model for r in records} == {"rf"}
        assert all(r.status == "ok" for r in records)

    def test_input_route_with_date_filter(self, tmp_path):
        bars = tmp_path / "bars.csv"
        assert cli.main(["synth", "--days", "5", "--seed", "2", "--out", str(bars)]) == 0
        config = write_config(tmp_path, f"""
            input = {bars}
            start_date = 2020-01-06
            models = naive
        """)
        out = tmp_path / "out"
        assert cli.main(["run", "--config", config, "--out", str(out)]) == 0
        records = read_store(out / "predictions.csv")
        # synth starts 2020-01-02: Thu, Fri, then Mon-Wed; the filter keeps 3
        assert len(records) == 3 * 340
        assert min(r.day for r in records).isoformat() == "2020-01-06"

    def test_requires_exactly_one_source(self, tmp_path, capsys):
        config = write_config(tmp_path, "models = naive\n")
        assert cli.main(["run", "--config", config]) == 2
        bars = make_bars(tmp_path)
        both = write_config(tmp_path, f"input = {bars}\nsynth_days = 2\n", name="b.conf")
        assert cli.main(["run", "--config", both]) == 2

    def test_unknown_model_exit_code(self, tmp_path, capsys):
        config = write_config(tmp_path, "synth_days = 1\nmodels = garch\n")
        assert cli.main(["run", "--config", config]) == 2
        assert "config error" in capsys.readouterr().err

    def test_unknown_config_key_exit_code(self, tmp_path, capsys):
        config = write_config(tmp_path, "synth_days = 1\nhorizon = 2\n")
        assert cli.main(["run", "--config", config]) == 2

    def test_missing_input_file_exit_code(self, tmp_path, capsys):
        config = write_config(tmp_path, "input = /nonexistent/bars.csv\n")
        assert cli.main(["run", "--config", config]) == 3


class TestReport:
    def test_reaggregates_identically(self, tmp_path):
        config = write_config(tmp_path, SMALL_RUN)
        out = tmp_path / "out"
        assert cli.main(["run", "--config", config, "--out", str(out)]) == 0
        redone = tmp_path / "redone"
        assert cli.main(["report", str(out / "predictions.csv"),
                         "--out", str(redone)]) == 0
        for name in ("daily_metrics.csv", "aggregate_report.csv", "predictions.csv"):
            assert (redone / name).read_bytes() == (out / name).read_bytes()

    def test_missing_store(self, tmp_path, capsys):
        assert cli.main(["report", str(tmp_path / "nope.csv")]) == 3

    def test_empty_store(self, tmp_path, capsys):
        from minutecast.rolling import write_store
        path = tmp_path / "empty.csv"
        write_store([], path)
        assert cli.main(["report", str(path), "--out", str(tmp_path / "o")]) == 3


class TestGradcheck:
    def test_passes(self, capsys):
        assert cli.main(["gradcheck", "--instances", "5"]) == 0
        output = capsys.readouterr().out
        assert "PASS" in output
        assert output.count("max_rel_err") == 5

    def test_corrupt_fails(self, capsys):
        assert cli.main(["gradcheck", "--instances", "3", "--corrupt"]) == 4
        assert "FAIL" in capsys.readouterr().out


class TestEntryPoint:
    def test_installed_script(self, tmp_path):
        exe = shutil.which("minutecast")
        assert exe is not None
        result = subprocess.run(
            [exe, "gradcheck", "--instances", "2"],
            capture_output=True, text=True, timeout=120,
        )
        assert result.returncode == 0
        assert "PASS" in result.stdout

    def test_unknown_subcommand_exits_2(self):
        with pytest.raises(SystemExit) as info:
            cli.main(["forecast"])
        assert info.value.code == 2
