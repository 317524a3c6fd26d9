"""Drift and noise action of the coupled electrodiffusion system.

Two ionic species with opposite unit valences and a common diffusivity D
are advected by an incompressible velocity u and migrate along the electric
field -grad(Phi), where the potential solves -lap(Phi) = rho = c1 - c2.
The velocity obeys a Navier-Stokes equation forced by -rho grad(Phi).  In
Ito form the transport noise adds kappa*lap to each concentration equation
and the operator S to the velocity equation, so the full drifts read

    dc1 : (D+kappa) lap(c1) - u.grad(c1) + D div(c1 grad Phi)
    dc2 : (D+kappa) lap(c2) - u.grad(c2) - D div(c2 grad Phi)
    du  : nu lap(u) + S(u) - P[u.grad(u) + rho grad(Phi)]

with P the Leray projection.  Every transport term is discretized in
divergence form through pseudo-spectral products with 2/3 dealiasing, which
makes the mode-0 coefficient of each drift vanish identically: species
means and the velocity mean are conserved by construction, not by accident.

The noise enters through the assembled increment field dV; its action is
dV.grad(c_i) on scalars and P[dV.grad(u)] on the velocity, computed by the
same divergence-form kernel.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InvalidFieldError
from .noise import NoiseSpec, corrector_residual
from .spectral import (
    MEAN_TOL,
    dealias,
    divergence,
    gradient,
    laplacian,
    leray_project,
    poisson_solve,
    require_divergence_free,
    require_hermitian,
    to_physical,
    to_spectral,
)


@dataclass(frozen=True)
class SystemParams:
    """Physical constants plus the conserved species means.

    The means are determined by the initial data and never change along a
    trajectory; they are carried here because decay rates and smallness
    conditions are expressed through them.  A zero-mean charge forces the
    two means to coincide.
    """

    nu: float
    d: float
    noise: NoiseSpec
    cbar1: float
    cbar2: float

    def __post_init__(self):
        if self.nu <= 0.0:
            raise ConfigError(f"viscosity must be > 0, got {self.nu}")
        if self.d <= 0.0:
            raise ConfigError(f"diffusivity must be > 0, got {self.d}")
        if self.cbar1 < 0.0 or self.cbar2 < 0.0:
            raise ConfigError("mean concentrations must be non-negative")
        scale = max(1.0, abs(self.cbar1), abs(self.cbar2))
        if abs(self.cbar1 - self.cbar2) > 1e-12 * scale:
            raise ConfigError(
                f"species means {self.cbar1} and {self.cbar2} differ; a "
                "zero-mean charge density requires equal means"
            )


class State:
    """Spectral system state with the Poisson coupling kept consistent.

    Construction validates the velocity (real, zero mean, divergence-free)
    and the concentrations (real, equal means), then caches rho = c1 - c2
    and the potential solving -lap(Phi) = rho.  Instances are treated as
    immutable; updates build new states.
    """

    def __init__(self, u, c1, c2, grid):
        require_hermitian(u, grid)
        require_hermitian(c1, grid)
        require_hermitian(c2, grid)
        scale = max(np.max(np.abs(u)), 1.0)
        if np.max(np.abs(u[:, 0, 0])) > MEAN_TOL * scale:
            raise InvalidFieldError(
                f"velocity must have zero mean, got |u_0| = "
                f"{np.max(np.abs(u[:, 0, 0])):.3e}"
            )
        require_divergence_free(u, grid)
        self.u = u
        self.c1 = c1
        self.c2 = c2
        self.grid = grid
        self.rho = c1 - c2
        self.phi = poisson_solve(self.rho, grid)


@dataclass(frozen=True)
class DriftEval:
    """Full Ito drifts of the three prognostic fields."""

    dc1: np.ndarray
    dc2: np.ndarray
    du: np.ndarray


def refresh_coupling(state):
    """Recompute rho and Phi from the concentrations."""
    return State(state.u, state.c1, state.c2, state.grid)


def _flux_divergence_phys(v_phys_x, v_phys_y, f_phys, grid):
    """div(v f) with both factors already sampled on the collocation grid."""
    flux = np.stack(
        [to_spectral(v_phys_x * f_phys, grid), to_spectral(v_phys_y * f_phys, grid)]
    )
    return dealias(divergence(flux, grid), grid)


def _flux_divergence(v_phys_x, v_phys_y, f_hat, grid):
    """div(v f) from physical velocity samples and a spectral scalar."""
    f_p = to_physical(f_hat, grid, check=False)
    return _flux_divergence_phys(v_phys_x, v_phys_y, f_p, grid)


def advect(v_hat, f_hat, grid):
    """v.grad(f) for divergence-free v, in conservative form div(v f)."""
    require_divergence_free(v_hat, grid)
    vx = to_physical(v_hat[0], grid, check=False)
    vy = to_physical(v_hat[1], grid, check=False)
    return _flux_divergence(vx, vy, f_hat, grid)


def migration(c_hat, phi_hat, grid, d, sign):
    """sign * D * div(c grad Phi), the electromigration drift of one species."""
    e = gradient(phi_hat, grid)
    ex = to_physical(e[0], grid, check=False)
    ey = to_physical(e[1], grid, check=False)
    return (sign * d) * _flux_divergence(ex, ey, c_hat, grid)


def electric_force(rho_hat, phi_hat, grid):
    """-P[rho grad Phi]; zero-mean, divergence-free, dealiased."""
    e = gradient(phi_hat, grid)
    rho_p = to_physical(rho_hat, grid, check=False)
    prod = np.stack(
        [
            to_spectral(rho_p * to_physical(e[0], grid, check=False), grid),
            to_spectral(rho_p * to_physical(e[1], grid, check=False), grid),
        ]
    )
    force = -leray_project(dealias(prod, grid), grid)
    # the mean of rho grad(Phi) vanishes analytically; pin it exactly
    force[:, 0, 0] = 0.0
    return force


def _check_compatible(params, basis):
    if params.noise != basis.spec:
        raise ConfigError(
            "noise parameters attached to SystemParams and the noise basis "
            f"disagree: {params.noise} vs {basis.spec}"
        )


def nonlinear_terms(state, params, basis):
    """Drift pieces left over after the exactly integrable linear parts.

    Returns (g1, g2, gu) where the full drifts are (D+kappa) lap(c_i) + g_i
    and (nu + kappa/4) lap(u) + gu.  The velocity piece carries the shell
    corrector residual S(u) - (kappa/4) lap(u), which vanishes as the shell
    grows but is kept exactly here.
    """
    _check_compatible(params, basis)
    grid = state.grid
    # Sample every physical-space field once; each drift term below then
    # costs only its two forward transforms.
    ux = to_physical(state.u[0], grid, check=False)
    uy = to_physical(state.u[1], grid, check=False)
    c1_p = to_physical(state.c1, grid, check=False)
    c2_p = to_physical(state.c2, grid, check=False)
    e = gradient(state.phi, grid)
    ex = to_physical(e[0], grid, check=False)
    ey = to_physical(e[1], grid, check=False)
    rho_p = to_physical(state.rho, grid, check=False)
    g1 = -_flux_divergence_phys(ux, uy, c1_p, grid) + params.d * _flux_divergence_phys(
        ex, ey, c1_p, grid
    )
    g2 = -_flux_divergence_phys(ux, uy, c2_p, grid) - params.d * _flux_divergence_phys(
        ex, ey, c2_p, grid
    )
    self_advection = np.stack(
        [
            _flux_divergence_phys(ux, uy, ux, grid),
            _flux_divergence_phys(ux, uy, uy, grid),
        ]
    )
    charge_flux = np.stack(
        [to_spectral(rho_p * ex, grid), to_spectral(rho_p * ey, grid)]
    )
    force = -leray_project(dealias(charge_flux, grid), grid)
    force[:, 0, 0] = 0.0
    gu = (
        -leray_project(self_advection, grid)
        + force
        + corrector_residual(state.u, basis)
    )
    return g1, g2, gu


def full_drift(state, params, basis):
    """Assemble the complete Ito drift of the coupled system."""
    g1, g2, gu = nonlinear_terms(state, params, basis)
    grid = state.grid
    kap = params.noise.kappa
    dc1 = (params.d + kap) * laplacian(state.c1, grid) + g1
    dc2 = (params.d + kap) * laplacian(state.c2, grid) + g2
    du = (params.nu + kap / 4.0) * laplacian(state.u, grid) + gu
    return DriftEval(dc1=dc1, dc2=dc2, du=du)


def apply_transport_noise(state, dv, grid):
    """Action of one Wiener increment field on (c1, c2, u).

    The scalar updates are dV.grad(c_i) and the velocity update is
    P[dV.grad(u)], all in divergence form since dV is divergence-free.
    """
    require_divergence_free(dv, grid)
    dvx = to_physical(dv[0], grid, check=False)
    dvy = to_physical(dv[1], grid, check=False)
    dc1 = _flux_divergence(dvx, dvy, state.c1, grid)
    dc2 = _flux_divergence(dvx, dvy, state.c2, grid)
    du = leray_project(
        np.stack(
            [
                _flux_divergence(dvx, dvy, state.u[0], grid),
                _flux_divergence(dvx, dvy, state.u[1], grid),
            ]
        ),
        grid,
    )
    return dc1, dc2, du
