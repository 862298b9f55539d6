import json

import pytest

from chirplink import cli
from chirplink.config import (
    ExperimentConfig,
    load_config,
    parse_config_text,
    with_overrides,
)
from chirplink.errors import ConfigError, IntegrationDivergedError, PreconditionError


class TestParse:
    def test_defaults(self):
        cfg = parse_config_text("experiment = stability\n")
        assert cfg.experiment == "stability"
        assert cfg.rng_seed == 12345
        assert cfg.source.clock_rate == 2e9
        assert cfg.detector.efficiency == 0.14

    def test_full_file(self):
        text = """
        # comment
        experiment = bb84_sweep
        rng_seed = 7
        trials = 200000        # inline comment
        losses = 0, 10, 20, 30
        randomize_blocks = yes
        source.mean_photon_number = 0.25
        mzi.visibility = 0.952
        detector.efficiency = 0.14
        keyrate.mu = 0.5
        keyrate.nu = 0.1
        stability.duration = 3600
        """
        cfg = parse_config_text(text)
        assert cfg.rng_seed == 7
        assert cfg.trials == 200_000
        assert cfg.losses == [0.0, 10.0, 20.0, 30.0]
        assert cfg.randomize_blocks is True
        assert cfg.mzi.visibility == 0.952
        assert cfg.keyrate.nu == 0.1
        assert cfg.stability.duration == 3600.0

    def test_unknown_key_rejected(self):
        with pytest.raises(ConfigError):
            parse_config_text("experiment = stability\nbogus = 1\n")
        with pytest.raises(ConfigError):
            parse_config_text("experiment = stability\nmzi.bogus = 1\n")
        with pytest.raises(ConfigError):
            parse_config_text("experiment = stability\nbogus.visibility = 1\n")

    def test_malformed_line_rejected(self):
        with pytest.raises(ConfigError):
            parse_config_text("just words\n")

    def test_bad_number_rejected(self):
        with pytest.raises(ConfigError):
            parse_config_text("experiment = stability\nmzi.visibility = abc\n")

    def test_invariant_violation_becomes_config_error(self):
        with pytest.raises(ConfigError):
            parse_config_text("experiment = stability\ndetector.efficiency = 1.5\n")
        with pytest.raises(ConfigError):
            parse_config_text("experiment = bb84_sweep\nlosses = 10, 5\n")

    def test_unknown_experiment_rejected(self):
        with pytest.raises((ConfigError, PreconditionError)):
            parse_config_text("experiment = b92\n")

    def test_experiment_mismatch_rejected(self):
        with pytest.raises(ConfigError):
            parse_config_text("experiment = stability\n", experiment="bb84_sweep")

    def test_fiber_km_converts_to_losses(self):
        cfg = parse_config_text(
            "experiment = dps_sweep\nfiber_km = 0, 50, 100\nloss_per_km = 0.2\n"
        )
        assert cfg.losses == [0.0, 10.0, 20.0]

    def test_fiber_km_and_losses_conflict(self):
        with pytest.raises(ConfigError):
            parse_config_text(
                "experiment = dps_sweep\nlosses = 0, 10\nfiber_km = 0, 50\n"
            )

    def test_with_overrides(self):
        cfg = ExperimentConfig(experiment="stability")
        out = with_overrides(cfg, seed=99, out="x.csv")
        assert out.rng_seed == 99
        assert out.output_path == "x.csv"
        same = with_overrides(cfg)
        assert same == cfg

    def test_resolved_items_roundtrip_keys(self):
        cfg = ExperimentConfig(experiment="bb84_sweep")
        keys = [k for k, _ in cfg.resolved_items()]
        assert "experiment" in keys
        assert "source.mean_photon_number" in keys
        assert "stability.true_qber" in keys
        assert len(keys) == len(set(keys))

    def test_load_config(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("experiment = stability\nrng_seed = 3\n")
        cfg = load_config(path, "stability")
        assert cfg.rng_seed == 3


class TestCli:
    def test_exit_code_mapping(self):
        assert cli.exit_code_for(ConfigError("x")) == 2
        assert cli.exit_code_for(PreconditionError("x")) == 2
        assert cli.exit_code_for(IntegrationDivergedError(step_index=1)) == 3
        with pytest.raises(KeyError):
            cli.exit_code_for(KeyError("x"))

    def test_stability_run_writes_outputs(self, tmp_path):
        cfg = tmp_path / "stab.cfg"
        cfg.write_text(
            "experiment = stability\n"
            "stability.duration = 100\n"
            "stability.integration_time = 1\n"
        )
        out = tmp_path / "stab.csv"
        code = cli.main(["stability", "--config", str(cfg), "--seed", "5", "--out", str(out)])
        assert code == 0
        assert out.exists()
        summary = json.loads((tmp_path / "stab.csv.json").read_text())
        assert summary["n_sift_per_bin"] == 23500
        assert summary["config"]["rng_seed"] == "5"

    def test_rerun_is_byte_identical(self, tmp_path):
        cfg = tmp_path / "stab.cfg"
        cfg.write_text("experiment = stability\nstability.duration = 50\n")
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        assert cli.main(["stability", "--config", str(cfg), "--out", str(out1)]) == 0
        assert cli.main(["stability", "--config", str(cfg), "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_seed_changes_output(self, tmp_path):
        cfg = tmp_path / "stab.cfg"
        cfg.write_text("experiment = stability\nstability.duration = 50\n")
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        cli.main(["stability", "--config", str(cfg), "--seed", "1", "--out", str(out1)])
        cli.main(["stability", "--config", str(cfg), "--seed", "2", "--out", str(out2)])
        assert out1.read_bytes() != out2.read_bytes()

    def test_config_error_exit_code(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("experiment = stability\nbogus = 1\n")
        code = cli.main(["stability", "--config", str(cfg)])
        assert code == 2
        assert "error:" in capsys.readouterr().err

    def test_missing_config_file_exit_code(self, tmp_path):
        code = cli.main(["stability", "--config", str(tmp_path / "absent.cfg")])
        assert code == 2

    def test_experiment_mismatch_exit_code(self, tmp_path):
        cfg = tmp_path / "mismatch.cfg"
        cfg.write_text("experiment = dps_sweep\n")
        assert cli.main(["stability", "--config", str(cfg)]) == 2

    def test_sweep_subcommand_smoke(self, tmp_path):
        cfg = tmp_path / "sweep.cfg"
        cfg.write_text(
            "experiment = bb84_sweep\n"
            "trials = 20000\n"
            "losses = 0, 10\n"
            "mzi.visibility = 0.952\n"
        )
        out = tmp_path / "sweep.csv"
        code = cli.main(["bb84-sweep", "--config", str(cfg), "--out", str(out)])
        assert code == 0
        lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
        assert lines[0].startswith("loss_db,")
        assert len(lines) == 3
