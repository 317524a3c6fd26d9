"""Monte Carlo ensembles of trajectories with reproducible seeding.

Path i advances with noise drawn from a Philox generator seeded by the
sequence (seed, i).  Seeding by content rather than by draw order makes
the ensemble embarrassingly parallel: any number of worker threads, in any
completion order, produces the same records, the same aggregated
statistics, and the same prefactor table.  A single-path ensemble is by
construction the same computation as a direct integrate call with
trajectory_rng(seed, 0), which is also what the simulate command uses.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .diagnostics import decay_prefactor, deterministic_rate, ensemble_stats
from .errors import ConditionError, ConfigError
from .integrator import integrate

_THREADS_ENV = "NPNS_THREADS"


def trajectory_rng(seed, index):
    """Generator for one ensemble path; path identity is (seed, index)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, index))))


def resolve_threads(requested):
    """Worker count: explicit value, else NPNS_THREADS, else 1."""
    if requested is None:
        raw = os.environ.get(_THREADS_ENV)
        if raw is None:
            return 1
        try:
            requested = int(raw, 10)
        except ValueError as err:
            raise ConfigError(
                f"{_THREADS_ENV} must be an integer, got {raw!r}"
            ) from err
    if int(requested) != requested or requested < 1:
        raise ConfigError(f"thread count must be an integer >= 1, got {requested}")
    return int(requested)


@dataclass(frozen=True)
class EnsembleResult:
    """All trajectories plus their deterministic aggregates.

    runs holds one record tuple per path; stats the array-valued
    EnsembleStats over the shared record times; prefactors the per-path
    sup of exp(rate*t)*‖U(t)‖/‖U(0)‖ evaluated at the stored rate.
    """

    runs: tuple
    stats: object
    prefactors: tuple
    rate: float


def run_ensemble(
    state0, params, config, n_paths, basis=None, threads=1, prefactor_rate=None
):
    """Integrate n_paths trajectories from one state and aggregate them.

    The prefactor rate defaults to the deterministic decay rate of the
    initial deviation energy when the smallness condition admits one, and
    to zero otherwise, so the table is always well defined.
    """
    if int(n_paths) != n_paths or n_paths < 1:
        raise ConfigError(f"ensemble size must be an integer >= 1, got {n_paths}")
    threads = resolve_threads(threads)

    def one_path(index):
        rng = trajectory_rng(config.seed, index)
        return tuple(integrate(state0, params, config, basis=basis, rng=rng).records)

    if threads == 1:
        runs = tuple(one_path(i) for i in range(n_paths))
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            runs = tuple(pool.map(one_path, range(n_paths)))

    stats = ensemble_stats([list(run) for run in runs])
    if prefactor_rate is None:
        first = runs[0][0]
        dev0 = first.u_sq + first.c1_dev_sq + first.c2_dev_sq
        try:
            prefactor_rate = deterministic_rate(params, dev0)
        except ConditionError:
            prefactor_rate = 0.0
    prefactors = tuple(decay_prefactor(list(run), prefactor_rate) for run in runs)
    return EnsembleResult(
        runs=runs, stats=stats, prefactors=prefactors, rate=prefactor_rate
    )
