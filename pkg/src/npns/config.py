"""Run configuration: flat key = value text files.

One pair per line, UTF-8.  Blank lines and lines starting with '#' are
ignored; values keep everything after the first '=', so paths may contain
'#' or spaces.  Unknown keys, duplicates, and malformed values fail
immediately, and every module constraint (grid parity, positive dt, shell
index, seed range, descriptor invariants) is exercised during parsing by
constructing the corresponding validated objects, so a config that parses
will also build.

DEFAULT_CONFIG_TEXT documents every key together with the desk-scale
default profile.
"""

from dataclasses import dataclass

from .dynamics import SystemParams
from .errors import ConfigError
from .initial import InitialCondition, build_initial_state
from .integrator import StepperConfig
from .noise import NoiseSpec
from .spectral import Grid, mean_value

DEFAULT_CONFIG_TEXT = """\
# Desk-scale defaults; every recognized key appears here.

# discretization
grid_m = 64
dt = 0.001
t_end = 10.0
record_stride = 10
scheme = exponential-euler

# physics
nu = 1.0
d = 1.0

# transport noise
kappa = 0.0
shell = 1
noise_gamma = 1.0

# run control
seed = 0
ensemble_size = 64
output = npns-out.ndjson

# initial condition
ic_kind = cosine-perturbation
ic_cbar = 1.0
ic_eps = 0.1
ic_mode = 1
ic_kmax = 4
ic_seed = 0
ic_path =
velocity_kind = zero
velocity_amplitude = 0.1
velocity_kmax = 2
"""

_INT_KEYS = {
    "grid_m",
    "shell",
    "record_stride",
    "seed",
    "ensemble_size",
    "ic_mode",
    "ic_kmax",
    "ic_seed",
    "velocity_kmax",
}
_FLOAT_KEYS = {
    "nu",
    "d",
    "kappa",
    "noise_gamma",
    "dt",
    "t_end",
    "ic_cbar",
    "ic_eps",
    "velocity_amplitude",
}
_STR_KEYS = {"scheme", "output", "ic_kind", "ic_path", "velocity_kind"}

_DEFAULTS = {
    "grid_m": 64,
    "nu": 1.0,
    "d": 1.0,
    "kappa": 0.0,
    "shell": 1,
    "noise_gamma": 1.0,
    "dt": 1e-3,
    "t_end": 10.0,
    "record_stride": 10,
    "scheme": "exponential-euler",
    "seed": 0,
    "ensemble_size": 64,
    "output": "npns-out.ndjson",
    "ic_kind": "cosine-perturbation",
    "ic_cbar": 1.0,
    "ic_eps": 0.1,
    "ic_mode": 1,
    "ic_kmax": 4,
    "ic_seed": 0,
    "ic_path": "",
    "velocity_kind": "zero",
    "velocity_amplitude": 0.1,
    "velocity_kmax": 2,
}


@dataclass(frozen=True)
class RunConfig:
    """Fully validated run description."""

    grid_m: int
    nu: float
    d: float
    kappa: float
    shell: int
    noise_gamma: float
    dt: float
    t_end: float
    record_stride: int
    scheme: str
    seed: int
    ensemble_size: int
    output: str
    initial: InitialCondition

    def noise_spec(self):
        return NoiseSpec(kappa=self.kappa, shell=self.shell, gamma=self.noise_gamma)

    def stepper(self, seed=None):
        return StepperConfig(
            dt=self.dt,
            t_end=self.t_end,
            scheme=self.scheme,
            seed=self.seed if seed is None else seed,
            record_stride=self.record_stride,
        )

    def grid(self):
        return Grid(self.grid_m)

    def initial_state(self, grid):
        return build_initial_state(self.initial, grid)

    def system_params(self, state):
        return SystemParams(
            nu=self.nu,
            d=self.d,
            noise=self.noise_spec(),
            cbar1=mean_value(state.c1),
            cbar2=mean_value(state.c2),
        )


def _convert(key, raw):
    try:
        if key in _INT_KEYS:
            return int(raw, 10)
        if key in _FLOAT_KEYS:
            value = float(raw)
            if value != value:
                raise ValueError("nan")
            return value
        return raw
    except ValueError as err:
        raise ConfigError(f"bad value for {key}: {raw!r} ({err})") from err


def parse_config(text):
    """Parse key = value text into a validated RunConfig."""
    values = dict(_DEFAULTS)
    seen = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in values:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        seen.add(key)
        values[key] = _convert(key, raw)

    if values["nu"] <= 0.0:
        raise ConfigError(f"viscosity must be > 0, got {values['nu']}")
    if values["d"] <= 0.0:
        raise ConfigError(f"diffusivity must be > 0, got {values['d']}")
    if values["ensemble_size"] < 1:
        raise ConfigError(
            f"ensemble size must be >= 1, got {values['ensemble_size']}"
        )
    if not 0 <= values["seed"] < 2**64:
        raise ConfigError(f"seed must fit in 64 bits, got {values['seed']}")
    if not values["output"]:
        raise ConfigError("output path must be non-empty")

    initial = InitialCondition(
        kind=values["ic_kind"],
        velocity=values["velocity_kind"],
        cbar=values["ic_cbar"],
        eps=values["ic_eps"],
        mode=values["ic_mode"],
        kmax=values["ic_kmax"],
        seed=values["ic_seed"],
        path=values["ic_path"],
        u_amplitude=values["velocity_amplitude"],
        u_kmax=values["velocity_kmax"],
    )
    cfg = RunConfig(
        grid_m=values["grid_m"],
        nu=values["nu"],
        d=values["d"],
        kappa=values["kappa"],
        shell=values["shell"],
        noise_gamma=values["noise_gamma"],
        dt=values["dt"],
        t_end=values["t_end"],
        record_stride=values["record_stride"],
        scheme=values["scheme"],
        seed=values["seed"],
        ensemble_size=values["ensemble_size"],
        output=values["output"],
        initial=initial,
    )
    # constructing these fires every remaining module validator now, at
    # parse time, rather than minutes into a run
    cfg.grid()
    cfg.noise_spec()
    cfg.stepper()
    return cfg


def load_config(path):
    """Read and parse a config file; unreadable files are config errors."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except (OSError, UnicodeDecodeError) as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    return parse_config(text)
