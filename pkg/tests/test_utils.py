"""Tests for validators, configuration loading and run IDs."""

import pytest

from numerics import ConfigError
from utils import check_config, get_setting, load_config
from utils.config import CONFIG_ENV_VAR, LOG_LEVEL_ENV_VAR, REQUIRED_SECTIONS
from utils.run_id import generate_run_id, validate_run_id_format
from utils.validators import (
    validate_batch_size,
    validate_beta,
    validate_branch,
    validate_magnetization,
    validate_positive,
    validate_quadrature_rule,
    validate_scheme,
    validate_seed,
    validate_spin_count,
)


class TestValidators:

    def test_spin_count(self):
        assert validate_spin_count(10) == (True, "")
        assert not validate_spin_count(1)[0]
        assert not validate_spin_count(10.0)[0]

    def test_batch_size(self):
        assert validate_batch_size(10, None)[0]
        assert validate_batch_size(10, 3)[0]
        assert not validate_batch_size(10, 3, require_divides=True)[0]
        assert not validate_batch_size(10, 11)[0]
        assert not validate_batch_size(10, True)[0]

    def test_numbers(self):
        assert not validate_beta(0.0)[0]
        assert validate_beta(0.0, allow_zero=True)[0]
        assert not validate_positive(float("inf"), "sigma")[0]
        assert not validate_magnetization(1.5)[0]

    def test_seed(self):
        assert validate_seed(0)[0]
        assert validate_seed(2 ** 64 - 1)[0]
        assert not validate_seed(2 ** 64)[0]

    def test_labels(self):
        assert validate_scheme("rb")[0] and not validate_scheme("RB")[0]
        assert validate_branch("minus")[0] and not validate_branch("up")[0]

    def test_quadrature_rule(self):
        assert validate_quadrature_rule(None, 64, 32)[0]
        assert not validate_quadrature_rule(-1.0, 64, 32)[0]
        assert not validate_quadrature_rule(None, 2, 4)[0]


class TestConfig:

    def test_template_is_complete(self, monkeypatch, tmp_path):
        monkeypatch.chdir(tmp_path)
        monkeypatch.delenv(CONFIG_ENV_VAR, raising=False)
        config = load_config()
        assert check_config(config) == []
        assert get_setting(config, "stationary.k_max") == 2.0

    def test_partial_config_is_filled(self, tmp_path, monkeypatch):
        monkeypatch.delenv(LOG_LEVEL_ENV_VAR, raising=False)
        path = tmp_path / "partial.yaml"
        path.write_text("stationary:\n  k_max: 3.0\n")
        config = load_config(str(path))
        assert get_setting(config, "stationary.k_max") == 3.0
        assert get_setting(config, "stationary.near_critical_floor") == 1e-5
        assert all(section in config for section in REQUIRED_SECTIONS)

    def test_env_var_path(self, tmp_path, monkeypatch):
        path = tmp_path / "env.yaml"
        path.write_text("output:\n  format: json\n")
        monkeypatch.setenv(CONFIG_ENV_VAR, str(path))
        assert get_setting(load_config(), "output.format") == "json"

    def test_log_level_override(self, monkeypatch):
        monkeypatch.setenv(LOG_LEVEL_ENV_VAR, "debug")
        assert get_setting(load_config(), "logging.level") == "DEBUG"

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_config(str(tmp_path / "absent.yaml"))

    def test_not_a_mapping(self, tmp_path):
        path = tmp_path / "list.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(ConfigError):
            load_config(str(path))

    def test_check_config_reports_sections(self):
        problems = check_config({"logging": {}})
        assert len(problems) == len(REQUIRED_SECTIONS) - 1

    def test_get_setting_default(self):
        assert get_setting({"a": {"b": 1}}, "a.c", default=7) == 7


class TestRunId:

    def test_deterministic_and_formatted(self):
        a = generate_run_id("stationary", {"L_W": 1.0, "sigma": [0.1]})
        b = generate_run_id("stationary", {"sigma": [0.1], "L_W": 1.0})
        assert a == b and validate_run_id_format(a)

    def test_depends_on_inputs(self):
        assert generate_run_id("verify", {"seed": 1}) != generate_run_id("verify", {"seed": 2})
        assert generate_run_id("verify", {"seed": 1}) != generate_run_id("cw-probs", {"seed": 1})

    def test_format(self):
        assert not validate_run_id_format("RBM-XYZ")
