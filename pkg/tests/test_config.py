"""Tests for the flat key = value run configuration.

The format is one `key = value` pair per line, UTF-8, with full-line
comments starting with '#' and blank lines ignored.  Unknown keys,
duplicate keys, malformed lines, and values that violate any module
constraint (grid parity, positive dt, shell >= 1, seed range, descriptor
rules) must all fail at parse time, before any computation starts.  An
empty document yields the documented desk-scale defaults.
"""

import pytest

from npns.config import DEFAULT_CONFIG_TEXT, RunConfig, load_config, parse_config
from npns.dynamics import State
from npns.errors import ConfigError
from npns.initial import InitialCondition
from npns.integrator import StepperConfig
from npns.noise import NoiseSpec


class TestDefaults:
    def test_desk_profile(self):
        cfg = parse_config("")
        assert cfg.grid_m == 64
        assert cfg.dt == 1e-3
        assert cfg.t_end == 10.0
        assert cfg.ensemble_size == 64
        assert cfg.nu == 1.0
        assert cfg.d == 1.0
        assert cfg.kappa == 0.0
        assert cfg.shell == 1
        assert cfg.noise_gamma == 1.0
        assert cfg.record_stride == 10
        assert cfg.seed == 0
        assert cfg.scheme == "exponential-euler"
        assert cfg.output == "npns-out.ndjson"
        assert cfg.initial == InitialCondition(kind="cosine-perturbation")

    def test_default_text_round_trips(self):
        assert parse_config(DEFAULT_CONFIG_TEXT) == parse_config("")


class TestParsing:
    def test_values_and_whitespace(self):
        cfg = parse_config(
            """
            # physical parameters
            nu   =  0.5
            d = 0.25

            kappa = 4.0
            shell = 8
            grid_m = 32
            dt = 0.0005
            t_end = 2.0
            record_stride = 5
            seed = 42
            ensemble_size = 16
            output = series.ndjson
            ic_kind = random-band
            ic_cbar = 2.0
            ic_eps = 0.5
            ic_kmax = 3
            ic_seed = 7
            velocity_kind = taylor-green
            velocity_amplitude = 0.3
            """
        )
        assert cfg.nu == 0.5
        assert cfg.d == 0.25
        assert cfg.kappa == 4.0
        assert cfg.shell == 8
        assert cfg.grid_m == 32
        assert cfg.dt == 5e-4
        assert cfg.t_end == 2.0
        assert cfg.record_stride == 5
        assert cfg.seed == 42
        assert cfg.ensemble_size == 16
        assert cfg.output == "series.ndjson"
        assert cfg.initial.kind == "random-band"
        assert cfg.initial.cbar == 2.0
        assert cfg.initial.eps == 0.5
        assert cfg.initial.kmax == 3
        assert cfg.initial.seed == 7
        assert cfg.initial.velocity == "taylor-green"
        assert cfg.initial.u_amplitude == 0.3

    def test_value_may_contain_hash(self):
        cfg = parse_config("output = runs/a#b.ndjson")
        assert cfg.output == "runs/a#b.ndjson"

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="unknown key 'viscosity'"):
            parse_config("viscosity = 1.0")

    def test_duplicate_key(self):
        with pytest.raises(ConfigError, match="duplicate"):
            parse_config("nu = 1.0\nnu = 2.0")

    def test_missing_equals_reports_line(self):
        with pytest.raises(ConfigError, match="line 2"):
            parse_config("nu = 1.0\njust words\n")

    def test_bad_integer(self):
        with pytest.raises(ConfigError, match="grid_m"):
            parse_config("grid_m = 64.5")

    def test_bad_float(self):
        with pytest.raises(ConfigError, match="nu"):
            parse_config("nu = fast")

    def test_file_loading(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("t_end = 1.0\n", encoding="utf-8")
        assert load_config(path).t_end == 1.0

    def test_missing_file_is_config_error(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "absent.cfg")


class TestConstraintsAtParseTime:
    @pytest.mark.parametrize(
        "line",
        [
            "dt = -0.001",
            "dt = 0",
            "t_end = -1",
            "grid_m = 7",
            "grid_m = 4",
            "shell = 0",
            "nu = 0",
            "d = -0.5",
            "kappa = -1",
            "noise_gamma = 0",
            "record_stride = 0",
            "ensemble_size = 0",
            "seed = -3",
            "scheme = rk4",
            "ic_kind = bumps",
            "ic_eps = -0.1",
            "velocity_kind = jet",
            "output =",
        ],
    )
    def test_rejected(self, line):
        with pytest.raises(ConfigError):
            parse_config(line)

    def test_checkpoint_kind_needs_path(self):
        with pytest.raises(ConfigError, match="path"):
            parse_config("ic_kind = from-checkpoint")

    def test_seed_is_u64(self):
        assert parse_config(f"seed = {2**64 - 1}").seed == 2**64 - 1
        with pytest.raises(ConfigError, match="seed"):
            parse_config(f"seed = {2**64}")


class TestAssembly:
    def test_noise_spec(self):
        cfg = parse_config("kappa = 2.0\nshell = 4\nnoise_gamma = 1.5")
        assert cfg.noise_spec() == NoiseSpec(kappa=2.0, shell=4, gamma=1.5)

    def test_stepper(self):
        cfg = parse_config("dt = 0.01\nt_end = 1.0\nrecord_stride = 3\nseed = 9")
        assert cfg.stepper() == StepperConfig(
            dt=0.01, t_end=1.0, scheme="exponential-euler", seed=9, record_stride=3
        )

    def test_build_grid_state_params(self):
        cfg = parse_config(
            "grid_m = 16\nic_kind = random-band\nic_cbar = 1.5\nic_eps = 0.25\n"
            "ic_kmax = 3\nnu = 0.5\nd = 0.25\nkappa = 1.0\nshell = 2"
        )
        grid = cfg.grid()
        state = cfg.initial_state(grid)
        params = cfg.system_params(state)
        assert isinstance(state, State)
        assert grid.m == 16
        assert params.nu == 0.5
        assert params.d == 0.25
        assert params.noise == NoiseSpec(kappa=1.0, shell=2, gamma=1.0)
        assert params.cbar1 == 1.5
        assert params.cbar2 == 1.5

    def test_config_is_frozen(self):
        cfg = parse_config("")
        with pytest.raises(Exception):
            cfg.nu = 2.0

    def test_semi_implicit_scheme_accepted(self):
        cfg = parse_config("scheme = semi-implicit-euler")
        assert cfg.stepper().scheme == "semi-implicit-euler"
