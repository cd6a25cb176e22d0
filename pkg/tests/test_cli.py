import json
import subprocess
import sys

import numpy as np
import pytest

from tls2p import cli
from tls2p.errors import ConfigError
from tls2p.lti_response import EmitterParams
from tls2p.pulse_shapes import Gaussian, Sampled
from tls2p.validation import CheckResult


def write(tmp_path, config, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(config) if isinstance(config, dict) else config)
    return path


def run(tmp_path, config, *extra):
    out = tmp_path / "out"
    code = cli.main([str(write(tmp_path, config)), "--out", str(out), *extra])
    meta = json.loads((out / "meta.json").read_text()) if (out / "meta.json").exists() else None
    return code, out, meta


GAUSS = {"type": "gaussian", "omega": 1.0}


class TestParseConfig:
    def test_minimal_defaults(self, tmp_path):
        cfg = cli.parse_config(write(tmp_path, {"mode": "one_channel_time", "kappa": 1, "pulse": GAUSS}))
        assert cfg.emitter == EmitterParams(1.0, 0.0)
        assert cfg.points == 512 and cfg.grid is None
        assert cfg.tolerance_profile == "figure"
        assert cfg.inputs.n2 == 2.0

    def test_two_channel_rejects_detuning(self, tmp_path):
        path = write(tmp_path, {"mode": "two_channel_time", "kappa": 1, "omega_d": 0.2, "pulse": GAUSS})
        with pytest.raises(ConfigError, match="omega_d"):
            cli.parse_config(path)

    def test_malformed_number_names_field(self, tmp_path):
        path = write(tmp_path, {"mode": "one_channel_time", "kappa": "fast", "pulse": GAUSS})
        with pytest.raises(ConfigError, match="kappa"):
            cli.parse_config(path)

    def test_nested_field_is_named(self, tmp_path):
        path = write(tmp_path, {"mode": "one_channel_time", "kappa": 1, "pulse": {"type": "gaussian", "omega": -1}})
        with pytest.raises(ConfigError, match=r"pulse\.omega"):
            cli.parse_config(path)

    def test_unknown_key(self, tmp_path):
        path = write(tmp_path, {"mode": "one_channel_time", "kappa": 1, "pulse": GAUSS, "kapa": 2})
        with pytest.raises(ConfigError, match="kapa"):
            cli.parse_config(path)

    def test_syntax_error_reports_line(self, tmp_path):
        path = write(tmp_path, '{"mode": "single_photon",\n "kappa": 1,,\n}')
        with pytest.raises(ConfigError, match="line 2"):
            cli.parse_config(path)

    def test_unknown_mode(self, tmp_path):
        with pytest.raises(ConfigError, match="mode"):
            cli.parse_config(write(tmp_path, {"mode": "three_channel", "kappa": 1, "pulse": GAUSS}))

    def test_overrides(self, tmp_path):
        path = write(tmp_path, {"mode": "one_channel_time", "kappa": 1, "pulse": GAUSS})
        cfg = cli.parse_config(path, {"kappa": 2.5, "omega": 3.0, "grid_points": 128, "out": "elsewhere"})
        assert cfg.emitter.kappa == 2.5 and cfg.pulses == (Gaussian(3.0),)
        assert cfg.points == 128 and str(cfg.output) == "elsewhere"

    def test_sampled_pulse_relative_path(self, tmp_path):
        t = np.linspace(-6, 6, 241)
        np.savetxt(tmp_path / "pulse.csv", np.column_stack([t, np.exp(-t**2 / 4)]), delimiter=",")
        cfg = cli.parse_config(write(tmp_path, {"mode": "single_photon", "kappa": 1,
                                                "pulse": {"type": "sampled", "path": "pulse.csv"}}))
        assert isinstance(cfg.pulses[0], Sampled)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            cli.parse_config(tmp_path / "absent.json")


class TestRun:
    def test_single_photon_benchmark(self, tmp_path):
        code, out, meta = run(tmp_path, {"mode": "single_photon", "kappa": 1,
                                         "pulse": {"type": "gaussian", "omega": 1.46, "tau": 3}})
        assert code == 0
        np.testing.assert_allclose(meta["absorbed_by_t4"], 0.8, atol=0.01)
        assert meta["norm_check"]["deviation"] < 1e-6
        assert (out / "field.csv").read_text().startswith("t,re,im")

    def test_one_channel_time_peaks(self, tmp_path):
        code, out, meta = run(tmp_path, {"mode": "one_channel_time", "kappa": 1,
                                         "pulse": {"type": "gaussian", "omega": 2.92}})
        assert code == 0
        assert meta["diagonal_peak_count"] == 2
        assert meta["norm_check"]["relative_deviation"] < 1e-3
        assert (out / "field.csv").read_text().startswith("p1,p2,re,im\n")
        assert (out / "plot.gp").exists()

    def test_csv_is_deterministic_and_full_precision(self, tmp_path):
        config = {"mode": "one_channel_freq", "kappa": 0.5, "pulse": {"type": "rising_exp", "gamma": 1.0},
                  "grid": {"start": -1, "stop": 1, "points": 16}}
        _, out, _ = run(tmp_path, config)
        first = (out / "field.csv").read_bytes()
        _, out, _ = run(tmp_path, config)
        assert (out / "field.csv").read_bytes() == first
        rows = np.loadtxt(out / "field.csv", delimiter=",", skiprows=1)
        assert rows.shape == (256, 4)
        assert first.decode().startswith("w1,w2,re,im\n")

    def test_two_channel_csv_layout(self, tmp_path):
        code, out, meta = run(tmp_path, {"mode": "two_channel_time", "kappa1": 0.5, "kappa2": 1.0,
                                         "pulse": GAUSS, "grid": {"points": 32}})
        assert code == 0
        rows = np.loadtxt(out / "field.csv", delimiter=",", skiprows=1)
        assert sorted(set(rows[:, 0].astype(int))) == [11, 12, 22]
        assert abs(meta["norm_check"]["total_probability"] - 1) < 1e-3

    def test_two_channel_freq_meta(self, tmp_path):
        code, _, meta = run(tmp_path, {"mode": "two_channel_freq", "kappa": 0.1,
                                       "pulse": {"type": "rising_exp", "gamma": 0.1},
                                       "grid": {"start": -0.5, "stop": 0.5, "points": 16}})
        assert code == 0
        assert "total_probability" in meta["norm_check"]
        assert meta["probabilities"]["both_channel_1"] == meta["probabilities"]["both_channel_2"]

    def test_short_grid_is_numerical_failure(self, tmp_path):
        code, _, _ = run(tmp_path, {"mode": "one_channel_time", "kappa": 0.1, "pulse": GAUSS,
                                    "grid": {"start": -3, "stop": 3, "points": 32}})
        assert code == cli.EXIT_NUMERIC

    def test_config_error_exit(self, tmp_path):
        code, _, _ = run(tmp_path, {"mode": "one_channel_time", "kappa": -1, "pulse": GAUSS})
        assert code == cli.EXIT_CONFIG

    def test_validate_subset(self, tmp_path):
        code, _, meta = run(tmp_path, {"mode": "validate", "checks": ["single_photon_benchmark"]})
        assert code == 0
        assert meta["norm_check"]["all_passed"] is True

    def test_validate_failure_exit(self, tmp_path, monkeypatch):
        monkeypatch.setattr(cli, "run_checks", lambda names: [CheckResult("broken", False, "forced")])
        code, _, meta = run(tmp_path, {"mode": "validate"})
        assert code == cli.EXIT_VALIDATION
        assert meta["checks"][0]["passed"] is False


def test_module_entry_point(tmp_path):
    path = write(tmp_path, {"mode": "one_channel_time", "kappa": 1, "omega_d": "x", "pulse": GAUSS})
    proc = subprocess.run([sys.executable, "-m", "tls2p.cli", str(path)], capture_output=True, text=True)
    assert proc.returncode == 1
    assert "omega_d" in proc.stderr


@pytest.mark.parametrize("path", sorted((cli.Path(__file__).parent.parent / "configs").glob("*.json")), ids=lambda p: p.stem)
def test_shipped_configs_parse(path):
    assert cli.parse_config(path).mode in cli.MODES
