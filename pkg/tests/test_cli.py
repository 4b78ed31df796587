import pytest
from click.testing import CliRunner

from seqboost.cli import main


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def corpus_file(tmp_path):
    path = tmp_path / "corpus.txt"
    path.write_text("a\na\na\nb\n")
    return str(path)


class TestFit:
    def test_reports_loss_and_writes_model(self, runner, corpus_file, tmp_path):
        out = tmp_path / "model.txt"
        result = runner.invoke(
            main, ["fit", "--corpus", corpus_file, "--length", "1", "--model-out", str(out)]
        )
        assert result.exit_code == 0
        assert "log-loss: 0.562335 nats" in result.output
        assert out.exists()

    def test_laplace_smoothing_shows_in_model_file(self, runner, corpus_file, tmp_path):
        out = tmp_path / "model.txt"
        result = runner.invoke(
            main,
            ["fit", "--corpus", corpus_file, "--length", "1", "--lam", "1", "--model-out", str(out)],
        )
        assert result.exit_code == 0
        assert "0.6666666666666666" in out.read_text()

    def test_missing_corpus_is_usage_error(self, runner, tmp_path):
        result = runner.invoke(main, ["fit", "--corpus", str(tmp_path / "nope.txt"), "--length", "1"])
        assert result.exit_code == 2

    def test_config_file_supplies_defaults(self, runner, corpus_file, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            f"corpus = {corpus_file}\n"
            "length = 1  # padded length\n"
            f"model_out = {tmp_path / 'm.txt'}\n"
        )
        result = runner.invoke(main, ["fit", "--config", str(cfg)])
        assert result.exit_code == 0
        assert "0.562335" in result.output

    def test_flag_overrides_config(self, runner, corpus_file, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(f"corpus = {corpus_file}\nlength = 1\nlambda = 0\n")
        result = runner.invoke(
            main,
            ["fit", "--config", str(cfg), "--lam", "1", "--model-out", str(tmp_path / "m.txt")],
        )
        assert result.exit_code == 0
        assert "0.6666666666666666" in (tmp_path / "m.txt").read_text()

    def test_malformed_config_rejected(self, runner, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("just some words\n")
        result = runner.invoke(main, ["fit", "--config", str(cfg)])
        assert result.exit_code == 2
        assert "line 1" in result.output


def run_boost_cli(runner, corpus_file, outdir, epsilon="0.01", extra=()):
    return runner.invoke(
        main,
        [
            "boost",
            "--corpus", corpus_file,
            "--length", "1",
            "--init", "uniform",
            "--oracle", "token-indicator",
            "--epsilon", epsilon,
            "--trace-out", str(outdir / "trace.csv"),
            "--model-out", str(outdir / "model.txt"),
            *extra,
        ],
    )


class TestBoost:
    def test_identical_reruns_give_identical_traces(self, runner, corpus_file, tmp_path):
        dirs = [tmp_path / "run1", tmp_path / "run2"]
        for d in dirs:
            d.mkdir()
            result = run_boost_cli(runner, corpus_file, d)
            assert result.exit_code == 0
        t1 = (dirs[0] / "trace.csv").read_bytes()
        t2 = (dirs[1] / "trace.csv").read_bytes()
        assert t1 == t2

    def test_trace_loss_is_nonincreasing(self, runner, corpus_file, tmp_path):
        result = run_boost_cli(runner, corpus_file, tmp_path)
        assert result.exit_code == 0
        rows = (tmp_path / "trace.csv").read_text().splitlines()[1:]
        losses = [float(r.split(",")[2]) for r in rows]
        assert losses == sorted(losses, reverse=True)

    def test_large_epsilon_terminates_in_one_probe(self, runner, corpus_file, tmp_path):
        result = run_boost_cli(runner, corpus_file, tmp_path, epsilon="0.9")
        assert result.exit_code == 0
        rows = (tmp_path / "trace.csv").read_text().splitlines()
        assert len(rows) == 2  # header plus the single sub-threshold probe

    def test_max_iters_exceeded_exits_3_but_writes_trace(self, runner, corpus_file, tmp_path):
        result = run_boost_cli(
            runner, corpus_file, tmp_path, epsilon="1e-6", extra=["--max-iters", "1"]
        )
        assert result.exit_code == 3
        assert (tmp_path / "trace.csv").exists()

    def test_boosted_model_beats_uniform(self, runner, corpus_file, tmp_path):
        result = run_boost_cli(runner, corpus_file, tmp_path)
        assert result.exit_code == 0
        assert "initial loss 0.693147" in result.output
        eval_result = runner.invoke(
            main,
            ["eval", "--model", str(tmp_path / "model.txt"), "--corpus", corpus_file,
             "--length", "1"],
        )
        assert eval_result.exit_code == 0
        loss = float(eval_result.output.split("log-loss: ")[1].split()[0])
        assert loss < 0.60

    def test_unknown_oracle_is_usage_error(self, runner, corpus_file, tmp_path):
        result = run_boost_cli(runner, corpus_file, tmp_path, extra=["--oracle", "psychic"])
        assert result.exit_code == 2


class TestDistinguish:
    def test_token_indicator_against_fitted_model(self, runner, corpus_file, tmp_path):
        model = tmp_path / "model.txt"
        runner.invoke(
            main, ["fit", "--corpus", corpus_file, "--length", "1", "--model-out", str(model)]
        )
        result = runner.invoke(
            main,
            ["distinguish", "--corpus", corpus_file, "--length", "1", "--model", str(model),
             "--distinguisher", "token-indicator:b"],
        )
        assert result.exit_code == 0
        assert "whole-sequence advantage: 0 " in result.output
        assert "step-wise advantage: 0" in result.output

    def test_monte_carlo_estimator_reports_sample_count(self, runner, corpus_file, tmp_path):
        model = tmp_path / "model.txt"
        runner.invoke(
            main, ["fit", "--corpus", corpus_file, "--length", "1", "--model-out", str(model)]
        )
        result = runner.invoke(
            main,
            ["distinguish", "--corpus", corpus_file, "--length", "1", "--model", str(model),
             "--distinguisher", "token-indicator:b", "--estimator", "monte-carlo",
             "--samples", "2000", "--seed", "1"],
        )
        assert result.exit_code == 0
        assert "(2000 samples)" in result.output

    def test_unknown_kind_rejected(self, runner, corpus_file, tmp_path):
        model = tmp_path / "model.txt"
        runner.invoke(
            main, ["fit", "--corpus", corpus_file, "--length", "1", "--model-out", str(model)]
        )
        result = runner.invoke(
            main,
            ["distinguish", "--corpus", corpus_file, "--length", "1", "--model", str(model),
             "--distinguisher", "telepathy:b"],
        )
        assert result.exit_code == 2


class TestEval:
    def test_table_comparison_of_exact_fit_gives_zero_divergences(
        self, runner, corpus_file, tmp_path
    ):
        model = tmp_path / "model.txt"
        runner.invoke(
            main, ["fit", "--corpus", corpus_file, "--length", "1", "--model-out", str(model)]
        )
        table = tmp_path / "table.csv"
        table.write_text("sequence,prob\na,0.75\nb,0.25\n")
        result = runner.invoke(main, ["eval", "--model", str(model), "--table", str(table)])
        assert result.exit_code == 0
        assert "kl(table||model): 0 nats" in result.output
        assert "tvd(table,model): 0" in result.output

    def test_nothing_to_evaluate(self, runner, corpus_file, tmp_path):
        model = tmp_path / "model.txt"
        runner.invoke(
            main, ["fit", "--corpus", corpus_file, "--length", "1", "--model-out", str(model)]
        )
        result = runner.invoke(main, ["eval", "--model", str(model)])
        assert result.exit_code == 2


class TestAgeExperiment:
    def test_default_distribution_report(self, runner, tmp_path):
        out = tmp_path / "report.csv"
        result = runner.invoke(main, ["age-experiment", "--report-out", str(out)])
        assert result.exit_code == 0
        assert "likelihood-best cap m = 119" in result.output
        assert "0.158333" in result.output
        assert "0.166667" in result.output
        rows = dict(
            line.split(",", 1) for line in out.read_text().splitlines()[1:]
        )
        assert rows["uniform_mle_m"] == "119"
        assert int(rows["tvd_min_m"]) < 100
        assert float(rows["tvd_at_min"]) < float(rows["tvd_at_mle"])

    def test_bad_length_input_rejected(self, runner, tmp_path):
        ages = tmp_path / "ages.txt"
        ages.write_text("0.5\n0.5\n")
        result = runner.invoke(main, ["age-experiment", "--ages", str(ages)])
        assert result.exit_code == 2


class TestOracleCheck:
    def test_all_suites_pass(self, runner, tmp_path):
        out = tmp_path / "check.csv"
        result = runner.invoke(main, ["oracle-check", "--report-out", str(out)])
        assert result.exit_code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "property,instances,min_slack,pass"
        assert all(line.endswith(",1") for line in lines[1:])
        assert "FAIL" not in result.output

    def test_fault_injection_is_detected(self, runner, tmp_path):
        out = tmp_path / "check.csv"
        result = runner.invoke(
            main, ["oracle-check", "--report-out", str(out), "--fault-z-scale", "1.01"]
        )
        assert result.exit_code == 3
        assert "FAIL  stepwise-reweight-bound" in result.output
