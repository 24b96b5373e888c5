"""Command-line interface tests: exit codes, formats, and reproducibility."""

import io
import json

import pytest

from bellqkd import cli
from bellqkd.cli import REFERENCE_GRID_T0, REFERENCE_GRID_T1, SWEEP_COLUMNS, main
from bellqkd.config import ConfigError, RunConfig


class TestTable:
    def test_verifies_and_exits_clean(self, capsys):
        assert main(["table"]) == 0
        out = capsys.readouterr().out
        assert "all 32 cells match the embedded reference" in out
        assert "Psi+@D1" in out and "Phi-@D2" in out

    def test_output_is_stable(self, capsys):
        main(["table"])
        first = capsys.readouterr().out
        main(["table"])
        second = capsys.readouterr().out
        assert first == second

    def test_corrupted_reference_is_caught(self):
        # swap one same-basis cell's expected detector and the live
        # computation must disagree, naming the cell on stderr
        bad = [list(row) for row in REFERENCE_GRID_T0]
        assert bad[0][0] == (1, "psi+")
        bad[0][0] = (2, "psi-")
        bad = tuple(tuple(row) for row in bad)
        out, err = io.StringIO(), io.StringIO()
        code = cli.cmd_table(out=out, err=err, golden_t0=bad,
                             golden_t1=REFERENCE_GRID_T1)
        assert code == 1
        message = err.getvalue()
        assert "window=T0" in message
        assert "alpha=0 beta=0" in message  # the offending pair is named

    def test_corrupted_uniform_cell_is_caught(self):
        bad = [list(row) for row in REFERENCE_GRID_T1]
        assert bad[0][1] is None
        bad[0][1] = (1, "phi+")  # cross-basis cells must stay inconclusive
        bad = tuple(tuple(row) for row in bad)
        out, err = io.StringIO(), io.StringIO()
        code = cli.cmd_table(out=out, err=err, golden_t0=REFERENCE_GRID_T0,
                             golden_t1=bad)
        assert code == 1
        assert "window=T1" in err.getvalue()


class TestConfigFile:
    def test_round_trip(self):
        cfg = RunConfig(distance_km=42.0, seed=9, bsm_mode="partial",
                        infinite_n=True, n_pulses=123456)
        again = RunConfig.from_text(cfg.to_text())
        assert again == cfg

    def test_default_round_trip(self):
        cfg = RunConfig()
        assert RunConfig.from_text(cfg.to_text()) == cfg

    def test_comments_and_blank_lines(self):
        cfg = RunConfig.from_text("# a comment\n\ndistance_km = 10\n")
        assert cfg.distance_km == 10.0

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            RunConfig.from_text("wavelength_nm = 1550\n")

    def test_bad_value_rejected(self):
        with pytest.raises(ConfigError):
            RunConfig.from_text("distance_km = far\n")

    def test_validation_rejects_nonsense(self):
        with pytest.raises(ConfigError):
            RunConfig(distance_km=-1.0).validate()
        with pytest.raises(ConfigError):
            RunConfig(bsm_mode="detailed").validate()
        with pytest.raises(ConfigError):
            RunConfig(seed=-3).validate()
        with pytest.raises(ConfigError):
            RunConfig(misalignment=0.7).validate()

    def test_cli_reads_config_file(self, tmp_path, capsys):
        path = tmp_path / "run.cfg"
        path.write_text("distance_km = 50\nn_pulses = 100000\nseed = 4\n")
        code = main(["analytic", "--config", str(path), "--format", "json"])
        assert code == 0
        data = json.loads(capsys.readouterr().out)
        assert data["distance_km"] == 50.0

    def test_flags_override_config_file(self, tmp_path, capsys):
        path = tmp_path / "run.cfg"
        path.write_text("distance_km = 50\n")
        code = main(["analytic", "--config", str(path), "--distance", "75",
                     "--format", "json"])
        assert code == 0
        data = json.loads(capsys.readouterr().out)
        assert data["distance_km"] == 75.0


class TestExitCodes:
    def test_bad_config_content_is_two(self, tmp_path, capsys):
        path = tmp_path / "run.cfg"
        path.write_text("distance_km = very far\n")
        assert main(["analytic", "--config", str(path)]) == 2

    def test_missing_config_file_is_three(self, capsys):
        assert main(["analytic", "--config", "/no/such/file.cfg"]) == 3

    def test_unwritable_output_is_three(self, capsys):
        assert main(["analytic", "--out", "/no/such/dir/out.csv"]) == 3

    def test_invalid_flag_value_is_two(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["simulate", "--mode", "bogus"])
        assert exc.value.code == 2

    def test_invalid_seed_is_two(self, capsys):
        assert main(["analytic", "--seed", "-1"]) == 2


class TestReports:
    def test_analytic_json_fields(self, capsys):
        code = main(["analytic", "--distance", "175", "--format", "json"])
        assert code == 0
        data = json.loads(capsys.readouterr().out)
        assert data["command"] == "analytic"
        for key in ("rate_per_pulse", "rate_asymptotic", "y1_lower", "e1_upper",
                    "qber_signal", "secret_length", "eta", "reason"):
            assert key in data
        assert data["rate_per_pulse"] > 0

    def test_analytic_csv_has_header_and_one_row(self, capsys):
        code = main(["analytic", "--distance", "100"])
        assert code == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 2
        assert lines[0].split(",")[0] == "command"

    def test_infinite_n_matches_asymptotic_column(self, capsys):
        code = main(["analytic", "--distance", "100", "--infinite-n",
                     "--format", "json"])
        assert code == 0
        data = json.loads(capsys.readouterr().out)
        assert data["rate_per_pulse"] == pytest.approx(
            data["rate_asymptotic"], abs=1e-12
        )

    def test_simulate_small_run(self, capsys):
        code = main(["simulate", "--distance", "25", "--pulses", "200000",
                     "--seed", "3", "--format", "json"])
        assert code == 0
        data = json.loads(capsys.readouterr().out)
        assert data["command"] == "simulate"
        # the denominator is rescaled to the nominal signal-block size, so
        # it sits within multinomial fluctuation of the requested count
        assert data["n_pulses_total"] == pytest.approx(200000, rel=0.01)
        # too few pulses for a positive finite key, but the report must
        # still carry the observed statistics
        assert data["qber_signal"] > 0
        assert data["reason"] in ("", "negative length", "estimation failure")

    def test_simulate_rejects_zero_pulses(self, capsys):
        assert main(["simulate", "--pulses", "0"]) == 2


class TestSweep:
    def test_csv_contract(self, capsys):
        code = main(["sweep"])
        assert code == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == ",".join(SWEEP_COLUMNS)
        assert lines[0].startswith(
            "distance_km,eta,Q_mu,Q_nu,E_mu,E_nu,y1_lower,e1_upper,"
            "rate_asymptotic,rate_finite"
        )
        assert len(lines) == 12  # 0..250 km in 25 km steps, plus header

    def test_default_sweep_shape(self, capsys):
        main(["sweep"])
        lines = capsys.readouterr().out.strip().splitlines()
        rows = {
            float(line.split(",")[0]): line.split(",") for line in lines[1:]
        }
        rate_at = {d: float(r[SWEEP_COLUMNS.index("rate_finite")])
                   for d, r in rows.items()}
        assert rate_at[175.0] > 0.0
        assert rate_at[250.0] == 0.0
        reason = rows[250.0][SWEEP_COLUMNS.index("reason")]
        assert reason != ""

    def test_json_sweep_keys_match_csv_columns(self, capsys):
        code = main(["sweep", "--format", "json"])
        assert code == 0
        data = json.loads(capsys.readouterr().out)
        assert isinstance(data, list) and len(data) == 11
        assert list(data[0].keys()) == list(SWEEP_COLUMNS)

    def test_out_file_and_determinism(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(["sweep", "--out", str(a)]) == 0
        assert main(["sweep", "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_monte_carlo_sweep_engine(self, tmp_path, capsys):
        path = tmp_path / "run.cfg"
        path.write_text(
            "sweep_engine = monte_carlo\n"
            "sweep_start_km = 0\nsweep_stop_km = 50\nsweep_step_km = 50\n"
            "n_pulses = 400000\n"
        )
        code = main(["sweep", "--config", str(path), "--seed", "6"])
        assert code == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 3
        q_mu = float(lines[1].split(",")[SWEEP_COLUMNS.index("Q_mu")])
        assert q_mu == pytest.approx(0.0286, abs=0.004)


class TestSimulateDeterminism:
    def test_same_seed_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        args = ["simulate", "--distance", "50", "--pulses", "300000",
                "--seed", "5", "--format", "json"]
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_different_seed_differs(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        base = ["simulate", "--distance", "50", "--pulses", "300000",
                "--format", "json"]
        assert main(base + ["--seed", "5", "--out", str(a)]) == 0
        assert main(base + ["--seed", "6", "--out", str(b)]) == 0
        assert a.read_bytes() != b.read_bytes()
