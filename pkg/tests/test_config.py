"""Unit tests for config module."""

import os
import tempfile

import pytest

from laa_coexistence.config import (
    ConfigError,
    RunConfig,
    create_default_config,
    load_config,
    merge_config,
    parse_config,
    to_model_params,
    to_sim_config,
)
from laa_coexistence.distributions import Family
from laa_coexistence.model import SenseOffRule, ThresholdMode
from laa_coexistence.simulator import FastStartMode


class TestRunConfig:
    """Tests for RunConfig dataclass."""

    def test_default_values(self):
        """Test that default values are the LBT validation scenario."""
        config = RunConfig()
        assert config.scenario == "custom"
        assert config.lambda_laa == 25.0
        assert config.lambda_wifi == 5.0
        assert config.mu_laa == 25.0
        assert config.mu_wifi == 40.0
        assert config.servers == 1
        assert config.queue_size == 2
        assert config.threshold == 2
        assert config.lbt_enabled is True
        assert config.threshold_mode == "non_strict"
        assert config.sessions == 1_000_000
        assert config.distributions == {}

    def test_validate_valid_config(self):
        """Test validation passes for the defaults."""
        assert RunConfig().validate() == []

    def test_validate_bad_mode(self):
        """Test validation fails for unknown enumeration values."""
        errors = RunConfig(threshold_mode="sometimes", fast_start_mode="later").validate()
        assert any("threshold_mode" in error for error in errors)
        assert any("fast_start_mode" in error for error in errors)

    def test_validate_bad_parameters(self):
        """Test model and simulation parameter errors are reported."""
        errors = RunConfig(mu_laa=0, threshold=5).validate()
        assert len(errors) >= 2
        assert RunConfig(sessions=0).validate() != []

    def test_validate_lognormal_needs_cv(self):
        """Test a lognormal override without cv is rejected."""
        config = RunConfig(distributions={"laa_service": {"family": "lognormal"}})
        assert any("laa_service.cv" in error for error in config.validate())


class TestParseConfig:
    """Tests for parse_config function."""

    def test_equals_and_colon_forms(self):
        """Test both assignment styles and comments are accepted."""
        config = parse_config("lambda_laa = 50  # busy\nlambda_wifi: 7\n# comment only\n")
        assert config.lambda_laa == 50.0
        assert config.lambda_wifi == 7.0

    def test_aliases(self):
        """Test file keys map to their attributes."""
        config = parse_config("D = 3\nQ = 4\nQ_theta = 1\nlbt = false\nbuffering = false\n")
        assert config.servers == 3
        assert config.queue_size == 4
        assert config.threshold == 1
        assert config.lbt_enabled is False
        assert config.buffering_enabled is False

    def test_attribute_name_of_alias_rejected(self):
        """Test aliased attributes are only accepted under their file key."""
        with pytest.raises(ConfigError, match="servers"):
            parse_config("servers = 2\n")

    def test_unknown_key(self):
        """Test unknown keys are rejected."""
        with pytest.raises(ConfigError, match="packet_size"):
            parse_config("packet_size = 1500\n")

    def test_exponent_notation(self):
        """Test numbers in exponent notation are coerced."""
        assert parse_config("mu_on = 1e-3\n").mu_on == pytest.approx(1e-3)

    def test_bad_types(self):
        """Test mistyped values are rejected."""
        with pytest.raises(ConfigError):
            parse_config("lambda_laa = fast\n")
        with pytest.raises(ConfigError):
            parse_config("D = 1.5\n")
        with pytest.raises(ConfigError):
            parse_config("lbt = maybe\n")

    def test_only_true_false_are_booleans(self):
        """Test YAML 1.1 boolean spellings are not accepted as flags."""
        for spelling in ("yes", "no", "on", "off", "y", "1"):
            with pytest.raises(ConfigError, match="true or false"):
                parse_config(f"lbt = {spelling}\n")
        assert parse_config("lbt = True\n").lbt_enabled is True

    def test_large_seed_exact(self):
        """Test integers beyond double precision are kept exactly."""
        assert parse_config("seed = 9007199254740993\n").seed == 2 ** 53 + 1
        assert parse_config("sessions = 1e4\n").sessions == 10_000

    def test_numeric_scenario_kept_as_text(self):
        """Test a numeric-looking scenario label is not reformatted."""
        assert parse_config("scenario = 1.10\n").scenario == "1.10"

    def test_modes_lowercased(self):
        """Test enumeration values are case-insensitive."""
        config = parse_config("threshold_mode = STRICT\nsense_off_rule = Busy\n")
        assert config.threshold_mode == "strict"
        assert config.sense_off_rule == "busy"

    def test_scenario_kept_verbatim(self):
        """Test the scenario label keeps its case."""
        assert parse_config("scenario = Table2\n").scenario == "Table2"

    def test_distribution_override(self):
        """Test per-role distribution keys."""
        config = parse_config("laa_service.family = lognormal\nlaa_service.cv = 2\n")
        assert config.distributions == {"laa_service": {"family": "lognormal", "cv": 2.0}}

    def test_unknown_role(self):
        """Test unknown distribution roles are rejected."""
        with pytest.raises(ConfigError):
            parse_config("packet_size.family = lognormal\n")

    def test_empty_text(self):
        """Test an empty file gives the defaults."""
        assert parse_config("") == RunConfig()


class TestConversions:
    """Tests for building model and simulation configurations."""

    def test_to_model_params(self):
        """Test enumeration strings become enums."""
        params = to_model_params(RunConfig(threshold_mode="strict", sense_off_rule="busy", lambda_laa=50))
        assert params.threshold_mode is ThresholdMode.STRICT
        assert params.sense_off_rule is SenseOffRule.BUSY
        assert params.lambda_laa == 50.0

    def test_to_sim_config_keeps_mean(self):
        """Test overrides take their mean from the rates."""
        config = RunConfig(distributions={"laa_service": {"family": "lognormal", "cv": 2.0}},
                           fast_start_mode="immediate", sessions=1000)
        sim = to_sim_config(config)
        assert sim.laa_service.family is Family.LOGNORMAL
        assert sim.laa_service.mean == pytest.approx(1 / 25)
        assert sim.laa_service.cv == 2.0
        assert sim.fast_start_mode is FastStartMode.IMMEDIATE
        assert sim.sessions == 1000


class TestLoadConfig:
    """Tests for load_config function."""

    def test_load_nonexistent_file(self):
        """Test loading non-existent file returns None."""
        assert load_config("/nonexistent/path/config.conf") is None

    def test_load_valid_config(self):
        """Test loading a valid configuration file."""
        with tempfile.NamedTemporaryFile(mode='w', suffix='.conf', delete=False) as f:
            f.write("scenario = table2\nlambda_laa = 37\nlbt = false\n")
            config_path = f.name

        try:
            config = load_config(config_path)
            assert config is not None
            assert config.scenario == "table2"
            assert config.lambda_laa == 37.0
            assert config.lbt_enabled is False
        finally:
            os.unlink(config_path)

    def test_load_invalid_yaml(self):
        """Test loading malformed text raises ConfigError."""
        with tempfile.NamedTemporaryFile(mode='w', suffix='.conf', delete=False) as f:
            f.write("lambda_laa = [1, 2\n")
            config_path = f.name

        try:
            with pytest.raises(ConfigError):
                load_config(config_path)
        finally:
            os.unlink(config_path)


class TestCreateDefaultConfig:
    """Tests for create_default_config function."""

    def test_create_default_config(self):
        """Test the written defaults load back to the LBT scenario."""
        with tempfile.TemporaryDirectory() as tmpdir:
            config_path = os.path.join(tmpdir, "laa_config.conf")
            create_default_config(config_path)

            assert os.path.exists(config_path)
            assert load_config(config_path) == RunConfig(scenario="table1")

    def test_create_in_missing_directory(self):
        """Test an unwritable path raises ConfigError."""
        with pytest.raises(ConfigError):
            create_default_config("/nonexistent/dir/laa_config.conf")


class TestMergeConfig:
    """Tests for merge_config function."""

    def test_merge_with_no_file_config(self):
        """Test merging when no file config exists."""
        config = merge_config(None, {"seed": 5})
        assert config.seed == 5
        assert config.sessions == 1_000_000

    def test_cli_overrides_file(self):
        """Test CLI arguments override file config."""
        file_config = RunConfig(seed=1, sessions=500, replications=2)
        config = merge_config(file_config, {"seed": 9, "sessions": 100})
        assert config.seed == 9
        assert config.sessions == 100
        assert config.replications == 2

    def test_none_does_not_override(self):
        """Test None values in CLI args don't override file config."""
        file_config = RunConfig(seed=3)
        config = merge_config(file_config, {"seed": None})
        assert config.seed == 3

    def test_file_config_not_mutated(self):
        """Test merging leaves the loaded configuration unchanged."""
        file_config = RunConfig(seed=3, distributions={"laa_service": {"family": "deterministic"}})
        merged = merge_config(file_config, {"seed": 4})
        merged.distributions["laa_service"]["family"] = "exponential"
        assert file_config.seed == 3
        assert file_config.distributions["laa_service"]["family"] == "deterministic"
