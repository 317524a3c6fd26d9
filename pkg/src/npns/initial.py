"""Initial-condition descriptors and the states they realize.

A descriptor names a concentration recipe and a velocity recipe:

    concentrations : cosine-perturbation | random-band | from-checkpoint
    velocity       : zero | random-band | taylor-green

Cosine perturbations place species 1 along x1 and species 2 along x2, so
the charge density is nonzero and the electric coupling is exercised from
the first step.  Random-band fields are supported on modes with
max(|k1|, |k2|) <= kmax and normalized so the physical perturbation sup
equals eps exactly; together with the requirement eps <= cbar this
guarantees non-negative concentrations, and the realized collocation
minimum is checked again after synthesis as a backstop.  Velocities are
built from stream functions, hence divergence-free with zero mean by
construction.

Randomness is drawn from Philox substreams keyed by (seed, field index),
so the two species receive independent draws and changing the velocity
recipe never shifts the concentration fields.
"""

from dataclasses import dataclass

import numpy as np

from .checkpoint import load
from .dynamics import State
from .errors import CheckpointError, ConfigError
from .spectral import perp_gradient, random_band_scalar, to_physical

CONCENTRATION_KINDS = ("cosine-perturbation", "random-band", "from-checkpoint")
VELOCITY_KINDS = ("zero", "random-band", "taylor-green")

_C1_STREAM = 0
_C2_STREAM = 1
_U_STREAM = 2


@dataclass(frozen=True)
class InitialCondition:
    """Declarative description of the state a run starts from."""

    kind: str
    velocity: str = "zero"
    cbar: float = 1.0
    eps: float = 0.1
    mode: int = 1
    kmax: int = 4
    seed: int = 0
    path: str = ""
    u_amplitude: float = 0.1
    u_kmax: int = 2

    def __post_init__(self):
        if self.kind not in CONCENTRATION_KINDS:
            raise ConfigError(
                f"unknown initial-condition kind {self.kind!r}; choose from "
                f"{CONCENTRATION_KINDS}"
            )
        if self.velocity not in VELOCITY_KINDS:
            raise ConfigError(
                f"unknown velocity kind {self.velocity!r}; choose from "
                f"{VELOCITY_KINDS}"
            )
        if self.cbar < 0.0:
            raise ConfigError(f"mean concentration must be >= 0, got {self.cbar}")
        if self.eps < 0.0:
            raise ConfigError(f"perturbation size must be >= 0, got {self.eps}")
        if int(self.mode) != self.mode or self.mode < 1:
            raise ConfigError(f"cosine mode must be an integer >= 1, got {self.mode}")
        if int(self.kmax) != self.kmax or self.kmax < 1:
            raise ConfigError(f"band limit must be an integer >= 1, got {self.kmax}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed}")
        if self.u_amplitude < 0.0:
            raise ConfigError(
                f"velocity amplitude must be >= 0, got {self.u_amplitude}"
            )
        if int(self.u_kmax) != self.u_kmax or self.u_kmax < 1:
            raise ConfigError(
                f"velocity band limit must be an integer >= 1, got {self.u_kmax}"
            )
        if self.kind == "from-checkpoint":
            if not self.path:
                raise ConfigError("from-checkpoint needs a path")
            if self.velocity != "zero":
                raise ConfigError(
                    "from-checkpoint keeps the stored velocity; leave the "
                    "velocity kind at its default instead of "
                    f"{self.velocity!r}"
                )
        elif self.path:
            raise ConfigError(
                f"a checkpoint path only makes sense with kind "
                f"'from-checkpoint', not {self.kind!r}"
            )


def _substream(seed, index):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, index))))


def _cosine_scalar(grid, cbar, eps, mode, axis):
    if mode > grid.m // 2 - 1:
        raise ConfigError(
            f"cosine mode {mode} is not representable on a grid with "
            f"m={grid.m}; need mode <= {grid.m // 2 - 1}"
        )
    c = np.zeros((grid.m, grid.m), dtype=complex)
    c[0, 0] = cbar
    if axis == 0:
        c[mode, 0] = 0.5 * eps
        c[-mode, 0] = 0.5 * eps
    else:
        c[0, mode] = 0.5 * eps
        c[0, -mode] = 0.5 * eps
    return c


def _band_scalar(grid, cbar, eps, kmax, rng):
    w = random_band_scalar(grid, rng, kmax)
    sup = np.max(np.abs(to_physical(w, grid)))
    if eps > 0.0 and sup > 0.0:
        c = (eps / sup) * w
    else:
        c = np.zeros_like(w)
    c[0, 0] = cbar
    return c


def _check_non_negative(c_hat, grid, label, cbar, eps):
    if eps > cbar:
        raise ConfigError(
            f"{label} would dip negative: perturbation size {eps} exceeds "
            f"the mean {cbar}"
        )
    low = float(np.min(to_physical(c_hat, grid)))
    tol = 1e-12 * max(1.0, cbar + eps)
    if low < -tol:
        raise ConfigError(
            f"{label} is negative on the collocation grid: min = {low:.3e}"
        )


def _build_velocity(ic, grid):
    if ic.velocity == "zero" or (
        ic.velocity == "random-band" and ic.u_amplitude == 0.0
    ):
        return np.zeros((2, grid.m, grid.m), dtype=complex)
    if ic.velocity == "taylor-green":
        amp = ic.u_amplitude
        psi = np.zeros((grid.m, grid.m), dtype=complex)
        psi[1, 1] = 0.25 * amp
        psi[-1, -1] = 0.25 * amp
        psi[1, -1] = -0.25 * amp
        psi[-1, 1] = -0.25 * amp
        return perp_gradient(psi, grid)
    rng = _substream(ic.seed, _U_STREAM)
    psi = random_band_scalar(grid, rng, ic.u_kmax)
    u = perp_gradient(psi, grid)
    sup = max(
        np.max(np.abs(to_physical(u[0], grid))),
        np.max(np.abs(to_physical(u[1], grid))),
    )
    if sup == 0.0:
        return np.zeros((2, grid.m, grid.m), dtype=complex)
    return (ic.u_amplitude / sup) * u


def build_initial_state(ic, grid):
    """Realize a descriptor into a validated State on the given grid."""
    if ic.kind == "from-checkpoint":
        try:
            data = load(ic.path)
        except CheckpointError as err:
            raise ConfigError(f"cannot start from checkpoint: {err}") from err
        if data.state.grid.m != grid.m:
            raise ConfigError(
                f"checkpoint resolution m={data.state.grid.m} does not match "
                f"the configured resolution m={grid.m}"
            )
        return data.state

    if ic.kind == "cosine-perturbation":
        c1 = _cosine_scalar(grid, ic.cbar, ic.eps, ic.mode, axis=0)
        c2 = _cosine_scalar(grid, ic.cbar, ic.eps, ic.mode, axis=1)
    else:
        c1 = _band_scalar(grid, ic.cbar, ic.eps, ic.kmax, _substream(ic.seed, _C1_STREAM))
        c2 = _band_scalar(grid, ic.cbar, ic.eps, ic.kmax, _substream(ic.seed, _C2_STREAM))
    _check_non_negative(c1, grid, "species 1", ic.cbar, ic.eps)
    _check_non_negative(c2, grid, "species 2", ic.cbar, ic.eps)
    return State(_build_velocity(ic, grid), c1, c2, grid)
