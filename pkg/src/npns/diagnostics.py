"""Energy bookkeeping, decay-rate fits, and analytic bound evaluators.

The scalar summaries of a trajectory live in EnergyRecord.  All norms use
the convention ||f||^2 = (2*pi)^2 * sum_k |f_k|^2, so they agree with the
continuum integrals on [0, 2*pi]^2.  Deviation energies subtract the mean
mode before measuring, gradient energies weight by the same wavenumbers the
discrete gradient uses, and concentration minima are taken over collocation
points.

Two analytic constants are evaluated here rather than hard-coded.  The
embedding constant gamma0 realizes ||f||_inf <= gamma0 * ||f||_{H2} through
Cauchy-Schwarz over Fourier modes, which makes gamma0^2 * (2*pi)^2 equal to
the lattice sum S of (1+|k|^2)^(-2) over the integer plane.  The sum is
computed from the identity (1+|k|^2)^(-2) = int_0^inf t*exp(-t*(1+|k|^2)) dt,
which turns S into int_0^inf t*exp(-t)*theta(t)^2 dt with theta the Gaussian
lattice sum in one dimension; Poisson resummation keeps theta cheap for
small t.  A direct truncated lattice sum agrees to nine digits (see the
tests) but needs a tail correction to converge at all, so the integral form
is the production route.

The decay-rate formula min(nu, 2*d - 4*gamma0^2*E0/nu) comes from a
Gronwall argument on the coupled energy balance: the concentration
dissipation 2*d is eroded by the quadratic coupling term, whose size is
controlled by gamma0^2 times the initial deviation energy E0 divided by the
viscosity.  It is meaningful only while nu*d - 2*gamma0^2*E0 > 0, and
callers get a ConditionError outside that regime.

delta_bound evaluates a four-term error envelope for the distance between
a noisy trajectory and the deterministically smoothed one: an O(1/kappa)
relaxation term, an O(1/kappa^2) corrector term, an O(1/n^2) spectral
truncation term, and a mixed term kappa^e1 * n^e2 with exponents
e1 = (2*beta - alpha*(beta+1)) / (2*(alpha+beta)) and
e2 = -2*alpha / (alpha+beta) determined by the interpolation parameters
0 < alpha < 1 < beta <= 3.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .errors import ConditionError, ConfigError, FitDomainError
from .spectral import l2_norm, lp_norm, mean_value, to_physical


@dataclass(frozen=True)
class EnergyRecord:
    """Scalar diagnostics of one state at one time.

    total_sq is the solution-vector energy, i.e. the sum of the velocity
    energy and both concentration deviation energies.
    """

    t: float
    step: int
    u_sq: float
    c1_dev_sq: float
    c2_dev_sq: float
    total_sq: float
    rho_sq: float
    rho_l3_cubed: float
    grad_c1_sq: float
    grad_c2_sq: float
    grad_u_sq: float
    min_c1: float
    min_c2: float
    cbar1: float
    cbar2: float


@dataclass(frozen=True)
class DecayFit:
    """Least-squares exponential fit v(t) ~ intercept * exp(-rate * t)."""

    rate: float
    intercept: float
    window: tuple
    residual: float


@dataclass(frozen=True)
class EnsembleStats:
    """Per-time ensemble mean and standard error of the total energy."""

    t: np.ndarray
    mean_total: np.ndarray
    stderr: np.ndarray
    count: int


def _deviation_sq(f_hat, grid):
    dev = np.array(f_hat, copy=True)
    dev[0, 0] = 0.0
    return l2_norm(dev, grid) ** 2


def _gradient_sq(f_hat, grid):
    """Energy of the discrete gradient, Nyquist rows excluded as in gradient()."""
    weight = grid.kx_diff**2 + grid.ky_diff**2
    return float((2.0 * np.pi) ** 2 * np.sum(weight * np.abs(f_hat) ** 2))


def record(state, params, t, step=0):
    """Measure one state into an EnergyRecord.

    The params argument keeps the signature uniform for recording hooks;
    every number is measured from the state itself, so conservation of the
    means can be verified rather than assumed.
    """
    grid = state.grid
    u_sq = l2_norm(state.u, grid) ** 2
    c1_dev = _deviation_sq(state.c1, grid)
    c2_dev = _deviation_sq(state.c2, grid)
    return EnergyRecord(
        t=float(t),
        step=int(step),
        u_sq=u_sq,
        c1_dev_sq=c1_dev,
        c2_dev_sq=c2_dev,
        total_sq=u_sq + c1_dev + c2_dev,
        rho_sq=l2_norm(state.rho, grid) ** 2,
        rho_l3_cubed=lp_norm(state.rho, grid, 3) ** 3,
        grad_c1_sq=_gradient_sq(state.c1, grid),
        grad_c2_sq=_gradient_sq(state.c2, grid),
        grad_u_sq=_gradient_sq(state.u[0], grid) + _gradient_sq(state.u[1], grid),
        min_c1=float(np.min(to_physical(state.c1, grid))),
        min_c2=float(np.min(to_physical(state.c2, grid))),
        cbar1=mean_value(state.c1),
        cbar2=mean_value(state.c2),
    )


def _theta(t):
    # Gaussian lattice sum over the integers; Poisson resummation below pi
    if t < math.pi:
        return math.sqrt(math.pi / t) * _theta(math.pi**2 / t)
    terms = int(math.ceil(math.sqrt(45.0 / t)))
    j = np.arange(1, terms + 1)
    return 1.0 + 2.0 * float(np.sum(np.exp(-t * j * j)))


@lru_cache(maxsize=1)
def sobolev_embedding_constant():
    """gamma0 with ||f||_inf <= gamma0 * ||f||_{H2} on the torus."""
    integrand = lambda t: t * math.exp(-t) * _theta(t) ** 2
    s_val, _ = quad(integrand, 0.0, np.inf, epsabs=1e-13, epsrel=1e-13, limit=400)
    return math.sqrt(s_val) / (2.0 * math.pi)


def smallness_check(record0, params, gamma0=None):
    """Decide whether initial data sit in the small-deviation regime.

    Returns (ok, margin) where margin is the distance from the deviation
    energy to the threshold nu*d / (2*gamma0^2).  The comparison is strict,
    so data exactly at the threshold fail.
    """
    g0 = sobolev_embedding_constant() if gamma0 is None else float(gamma0)
    deviation = record0.c1_dev_sq + record0.c2_dev_sq
    threshold = params.nu * params.d / (2.0 * g0**2)
    margin = threshold - deviation
    return deviation < threshold, margin


def deterministic_rate(params, dev_energy, gamma0=None):
    """Guaranteed exponential decay rate for small initial deviations.

    dev_energy is the initial deviation energy of the two concentrations.
    Raises ConditionError unless nu*d - 2*gamma0^2*dev_energy > 0.
    """
    g0 = sobolev_embedding_constant() if gamma0 is None else float(gamma0)
    if dev_energy < 0.0:
        raise ConditionError(f"deviation energy must be >= 0, got {dev_energy}")
    gap = params.nu * params.d - 2.0 * g0**2 * dev_energy
    if gap <= 0.0:
        raise ConditionError(
            f"smallness condition violated: nu*d - 2*gamma0^2*E0 = {gap:.3e} <= 0"
        )
    return min(params.nu, 2.0 * params.d - 4.0 * g0**2 * dev_energy / params.nu)


def delta_bound(kappa, shell, alpha, beta, constant=1.0):
    """Four-term closeness envelope, up to the supplied constant prefactor."""
    if kappa <= 0.0:
        raise ConditionError(f"noise intensity must be > 0, got {kappa}")
    if shell < 1:
        raise ConditionError(f"shell index must be >= 1, got {shell}")
    if not (0.0 < alpha < 1.0 < beta <= 3.0):
        raise ConditionError(
            f"interpolation exponents need 0 < alpha < 1 < beta <= 3, "
            f"got alpha={alpha}, beta={beta}"
        )
    e1 = (2.0 * beta - alpha * (beta + 1.0)) / (2.0 * (alpha + beta))
    e2 = -2.0 * alpha / (alpha + beta)
    terms = 1.0 / kappa + 1.0 / kappa**2 + 1.0 / shell**2 + kappa**e1 * shell**e2
    return constant * terms


def fit_decay_rate(t, values, window=None):
    """Log-linear least squares fit of an exponentially decaying series.

    The fit runs over samples with window[0] <= t <= window[1]; by default
    the tail half of the recorded interval is used.  Raises FitDomainError
    for nonpositive values inside the window, a window that leaves the
    recorded range, or a window holding fewer than two samples.
    """
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.ndim != 1 or t.shape != v.shape or t.size < 2:
        raise FitDomainError("need matching one-dimensional t and value arrays")
    if np.any(np.diff(t) <= 0.0):
        raise FitDomainError("sample times must be strictly increasing")
    if window is None:
        window = (t[0] + 0.5 * (t[-1] - t[0]), t[-1])
    a, b = float(window[0]), float(window[1])
    span_tol = 1e-9 * (t[-1] - t[0])
    if a < t[0] - span_tol or b > t[-1] + span_tol or b <= a:
        raise FitDomainError(
            f"window ({a}, {b}) must sit inside the recorded range "
            f"({t[0]}, {t[-1]})"
        )
    sel = (t >= a) & (t <= b)
    if np.count_nonzero(sel) < 2:
        raise FitDomainError(f"window ({a}, {b}) holds fewer than two samples")
    tw = t[sel]
    vw = v[sel]
    if np.any(vw <= 0.0):
        raise FitDomainError("series must be strictly positive inside the window")
    log_v = np.log(vw)
    slope, const = np.polyfit(tw, log_v, 1)
    resid = log_v - (const + slope * tw)
    return DecayFit(
        rate=float(-slope),
        intercept=float(math.exp(const)),
        window=(a, b),
        residual=float(np.sqrt(np.mean(resid**2))),
    )


def pathwise_decay_check(records, d, slack_per_step=1e-6):
    """Verify concentration deviation energy decays at least like exp(-2*d*t).

    The admissible envelope multiplies the exact exponential by
    1 + slack_per_step * steps to absorb rounding accumulated over many
    steps, plus a tiny absolute floor for data starting at equilibrium.
    """
    if len(records) == 0:
        raise ConfigError("no records to check")
    r0 = records[0]
    e0 = r0.c1_dev_sq + r0.c2_dev_sq
    floor = 1e-20 * max(1.0, e0)
    for rec in records:
        steps = rec.step - r0.step
        bound = e0 * math.exp(-2.0 * d * (rec.t - r0.t)) * (1.0 + slack_per_step * steps)
        if rec.c1_dev_sq + rec.c2_dev_sq > bound + floor:
            return False
    return True


def decay_prefactor(records, rate):
    """Smallest C with ||U(t)|| <= C * exp(-rate*(t-t0)) * ||U(t0)||."""
    if len(records) == 0:
        raise ConfigError("no records to scan")
    e0 = records[0].total_sq
    if e0 <= 0.0:
        raise FitDomainError("initial total energy must be positive")
    t0 = records[0].t
    best = 0.0
    for rec in records:
        c = math.exp(rate * (rec.t - t0)) * math.sqrt(rec.total_sq / e0)
        best = max(best, c)
    return best


def ensemble_stats(runs):
    """Aggregate total-energy series across trajectories.

    Uses exact compensated summation so the result does not depend on the
    order in which trajectories are supplied.  All runs must share the same
    record times.  The standard error is the sample standard deviation over
    trajectories divided by sqrt(count); it is zero for a single run.
    """
    if len(runs) == 0:
        raise ConfigError("ensemble must hold at least one trajectory")
    n = len(runs[0])
    times = [rec.t for rec in runs[0]]
    for run in runs:
        if len(run) != n:
            raise ConfigError("trajectories recorded different numbers of times")
        for rec, t_ref in zip(run, times):
            if rec.t != t_ref:
                raise ConfigError(
                    f"record time {rec.t} does not match ensemble grid {t_ref}"
                )
    count = len(runs)
    mean = np.empty(n)
    stderr = np.zeros(n)
    for j in range(n):
        col = [run[j].total_sq for run in runs]
        mean[j] = math.fsum(col) / count
        if count > 1:
            ss = math.fsum((x - mean[j]) ** 2 for x in col)
            stderr[j] = math.sqrt(ss / (count - 1)) / math.sqrt(count)
    return EnsembleStats(
        t=np.array(times), mean_total=mean, stderr=stderr, count=count
    )
