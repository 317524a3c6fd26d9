"""Time stepping for the stochastic system plus two standalone checks.

Both schemes treat the diagonal heat part of the generator exactly or
implicitly and everything else explicitly.  The concentrations see the
multiplier for (d + kappa) * lap and the velocity the one for
(nu + kappa/4) * lap, because the transport noise contributes kappa * lap
to the scalar generator but only a quarter of that survives the Leray
projection acting on the velocity.  One step reads

    c' = Q * (c + dt * g + dW_term),    u' = P * (u + dt * g_u + dW_term),

with the Wiener increment added before the multiplier so the noise input
is damped by the same dissipation that balances it in the energy budget.
Mode zero is conserved bitwise: the multipliers equal one there and every
drift and noise term vanishes exactly at k = 0 by divergence form.

The explicit treatment of advection bounds the usable step size.  The
budget combines an advective restriction at the largest retained
wavenumber with a relaxation restriction for the migration coupling, and
integrate() refuses configurations that exceed it at the initial state.

transport_step propagates a passive scalar through one increment of the
noise alone with a midpoint (Cayley) solve.  The increment action
A(c) = div(dV c) is skew because dV is divergence-free, so the update
(I - A/2)^{-1} (I + A/2) is orthogonal on the retained band and the L2
norm is conserved along every path, which is the discrete shadow of the
Stratonovich transport semigroup being an isometry.  An explicit scheme
cannot do this: its energy drift per unit time stalls at a spectrum
truncation floor instead of vanishing with dt.

heat_smoothing_check measures the maximal-regularity gain of the heat
semigroup: delta times the squared H^(alpha+1) norm of the Duhamel
integral of a forcing, divided by the time integral of the squared
H^alpha norm.  Cauchy-Schwarz in time bounds the ratio by
(1+|k|^2)/(2|k|^2) <= 1 mode by mode for zero-mean forcing, so values
above one expose a broken semigroup, not an unlucky input.
"""

import math
from dataclasses import dataclass

import numpy as np

from .diagnostics import record
from .dynamics import State, apply_transport_noise, nonlinear_terms
from .errors import BlowUpError, ConditionError, ConfigError, InvalidFieldError
from .noise import build_noise_basis, sample_increment
from .spectral import (
    MEAN_TOL,
    dealias,
    divergence,
    leray_project,
    lp_norm,
    to_physical,
    to_spectral,
)

SCHEMES = ("exponential-euler", "semi-implicit-euler")


@dataclass(frozen=True)
class StepperConfig:
    """Step size, horizon, scheme selection, and recording cadence."""

    dt: float
    t_end: float
    scheme: str = "exponential-euler"
    seed: int = 0
    record_stride: int = 1

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ConfigError(f"dt must be > 0, got {self.dt}")
        if self.t_end < 0.0:
            raise ConfigError(f"t_end must be >= 0, got {self.t_end}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}, expected one of {SCHEMES}")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ConfigError(f"record_stride must be an integer >= 1, got {self.record_stride}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {self.seed}")


class Semigroups:
    """Diagonal heat multipliers for one fixed step size.

    conc and vel are the exact exponential factors; conc_semi and vel_semi
    are their backward Euler counterparts.  All four equal one at mode
    zero and lie in (0, 1] elsewhere.
    """

    def __init__(self, grid, params, dt):
        if dt <= 0.0:
            raise ConfigError(f"dt must be > 0, got {dt}")
        kap = params.noise.kappa
        conc_coef = params.d + kap
        vel_coef = params.nu + kap / 4.0
        self.dt = float(dt)
        self.conc = np.exp(-conc_coef * grid.k_squared * dt)
        self.vel = np.exp(-vel_coef * grid.k_squared * dt)
        self.conc_semi = 1.0 / (1.0 + conc_coef * grid.k_squared * dt)
        self.vel_semi = 1.0 / (1.0 + vel_coef * grid.k_squared * dt)


def stability_budget(state, params):
    """Largest step size the explicit terms tolerate at this state."""
    grid = state.grid
    umax = lp_norm(state.u, grid, np.inf)
    if umax > 0.0:
        advective = 0.5 / (math.sqrt(2.0) * grid.dealias_radius * umax)
    else:
        advective = math.inf
    migration = 0.1 / (params.d * (1.0 + params.cbar1 + params.cbar2))
    return min(advective, migration)


def _advance(state, params, basis, dt, rng, semigroups, exponential):
    if dt <= 0.0:
        raise ConfigError(f"dt must be > 0, got {dt}")
    kap = params.noise.kappa
    if kap > 0.0 and rng is None:
        raise ConfigError("transport noise requires an rng; pass one or set kappa = 0")
    grid = state.grid
    if semigroups is None:
        semigroups = Semigroups(grid, params, dt)
    elif semigroups.dt != dt:
        raise ConfigError(
            f"semigroups were built for dt = {semigroups.dt}, step asked for {dt}"
        )
    g1, g2, gu = nonlinear_terms(state, params, basis)
    c1 = state.c1 + dt * g1
    c2 = state.c2 + dt * g2
    u = state.u + dt * gu
    if kap > 0.0:
        dv = sample_increment(basis, dt, rng)
        n1, n2, nu_inc = apply_transport_noise(state, dv, grid)
        c1 = c1 + n1
        c2 = c2 + n2
        u = u + nu_inc
    qc = semigroups.conc if exponential else semigroups.conc_semi
    qu = semigroups.vel if exponential else semigroups.vel_semi
    c1 = qc * c1
    c2 = qc * c2
    # summing projected pieces can leave a divergence defect comparable to
    # the summands, which dwarfs the velocity when the sum nearly cancels,
    # so park the result back on the constraint manifold every step
    u = leray_project(qu * u, grid)
    if not (
        np.all(np.isfinite(c1)) and np.all(np.isfinite(c2)) and np.all(np.isfinite(u))
    ):
        raise BlowUpError("time step produced nonfinite values", t=math.nan, step=-1)
    return State(u, c1, c2, grid)


def step_exponential_euler(state, params, basis, dt, rng, semigroups=None):
    """One exponential Euler step; rng may be None only when kappa = 0."""
    return _advance(state, params, basis, dt, rng, semigroups, exponential=True)


def step_semi_implicit(state, params, basis, dt, rng, semigroups=None):
    """One semi-implicit Euler step with backward heat multipliers."""
    return _advance(state, params, basis, dt, rng, semigroups, exponential=False)


@dataclass(frozen=True)
class TrajectoryResult:
    """Final state plus the energy records collected along the way."""

    state: State
    records: list


def integrate(state0, params, config, basis=None, rng=None):
    """March the coupled system to config.t_end.

    Records are taken at step 0, every record_stride steps, and at the
    final step.  The default rng is a counter-based generator keyed by
    config.seed, so equal seeds reproduce trajectories bitwise; it is
    never consulted when kappa = 0.  A BlowUpError raised mid-run is
    re-raised carrying the blow-up time, the step index, and the records
    collected so far.
    """
    grid = state0.grid
    if basis is None:
        basis = build_noise_basis(params.noise, grid)
    if rng is None:
        rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(config.seed)))
    n_steps = int(round(config.t_end / config.dt))
    if abs(n_steps * config.dt - config.t_end) > 1e-9 * max(config.dt, config.t_end):
        raise ConfigError(
            f"t_end = {config.t_end} is not an integer multiple of dt = {config.dt}"
        )
    budget = stability_budget(state0, params)
    if config.dt > budget:
        raise ConfigError(
            f"dt = {config.dt} exceeds the stability budget {budget:.3e} "
            "at the initial state"
        )
    exponential = config.scheme == "exponential-euler"
    semigroups = Semigroups(grid, params, config.dt)
    records = [record(state0, params, 0.0, step=0)]
    state = state0
    for i in range(1, n_steps + 1):
        try:
            state = _advance(state, params, basis, config.dt, rng, semigroups, exponential)
        except BlowUpError as err:
            raise BlowUpError(
                str(err), t=i * config.dt, step=i, records=list(records)
            ) from None
        if i % config.record_stride == 0 or i == n_steps:
            records.append(record(state, params, i * config.dt, step=i))
    return TrajectoryResult(state=state, records=records)


def transport_step(c_hat, basis, dt, rng, diffusion=0.0, tol=1e-13, max_iter=200):
    """Advance a passive scalar through one noise increment, norm exactly.

    Solves (I - A/2) c' = (I + A/2) c by fixed-point sweeps, where
    A(x) = div(dV x) for one sampled increment dV.  A is skew on the
    retained band, so the discrete L2 norm of the result matches the input
    to solver tolerance along every path.  An optional diffusion
    coefficient applies the exact heat factor afterwards.  With kappa = 0
    no randomness is consumed and the scalar passes through unchanged up
    to that factor.
    """
    grid = basis.grid
    heat = None
    if diffusion > 0.0:
        heat = np.exp(-diffusion * grid.k_squared * dt)
    if basis.spec.kappa == 0.0:
        out = np.array(c_hat, copy=True)
        return heat * out if heat is not None else out
    dv = sample_increment(basis, dt, rng)
    vx = to_physical(dv[0], grid, check=False)
    vy = to_physical(dv[1], grid, check=False)

    def action(x):
        f = to_physical(x, grid, check=False)
        flux = np.stack([to_spectral(vx * f, grid), to_spectral(vy * f, grid)])
        return dealias(divergence(flux, grid), grid)

    rhs = c_hat + 0.5 * action(c_hat)
    x = rhs
    for _ in range(max_iter):
        x_new = rhs + 0.5 * action(x)
        delta = np.max(np.abs(x_new - x))
        x = x_new
        if not np.isfinite(delta):
            raise ConditionError(
                "midpoint transport iteration diverged; the step size is too "
                "large for the sampled increment"
            )
        if delta <= tol * max(1.0, float(np.max(np.abs(x)))):
            break
    else:
        raise ConditionError(
            f"midpoint transport iteration did not converge in {max_iter} sweeps"
        )
    return heat * x if heat is not None else x


def heat_smoothing_check(f, grid, delta, a, b, alpha=0.0, num_points=129):
    """Smoothing gain of the heat semigroup over [a, b] for forcing f(s).

    Returns delta * ||int_a^b exp(delta*(b-s)*lap) f(s) ds||_{H^(alpha+1)}^2
    divided by int_a^b ||f(s)||_{H^alpha}^2 ds, with the time integrals
    taken by the trapezoid rule on num_points nodes.  The forcing must
    have zero mean at every sampled time; mode zero is not smoothed and
    would break the bound.  Returns 0.0 for identically zero forcing.
    """
    if delta <= 0.0:
        raise ConfigError(f"delta must be > 0, got {delta}")
    if b <= a:
        raise ConfigError(f"need b > a, got [{a}, {b}]")
    if num_points < 2:
        raise ConfigError(f"num_points must be >= 2, got {num_points}")
    s_nodes = np.linspace(a, b, num_points)
    h = (b - a) / (num_points - 1)
    w_num = (1.0 + grid.k_squared) ** (alpha + 1.0)
    w_den = (1.0 + grid.k_squared) ** alpha
    duhamel = np.zeros((grid.m, grid.m), dtype=complex)
    den_samples = np.empty(num_points)
    for j, s in enumerate(s_nodes):
        fj = np.asarray(f(s), dtype=complex)
        scale = max(float(np.max(np.abs(fj))), 1.0)
        if abs(fj[0, 0]) > MEAN_TOL * scale:
            raise InvalidFieldError("forcing must have zero mean at every time")
        weight = h * (0.5 if j in (0, num_points - 1) else 1.0)
        duhamel = duhamel + weight * np.exp(-delta * (b - s) * grid.k_squared) * fj
        den_samples[j] = (2.0 * np.pi) ** 2 * float(np.sum(w_den * np.abs(fj) ** 2))
    numerator = delta * (2.0 * np.pi) ** 2 * float(np.sum(w_num * np.abs(duhamel) ** 2))
    denominator = float(np.trapezoid(den_samples, s_nodes))
    if denominator == 0.0:
        return 0.0
    return numerator / denominator
