"""Command-line entry points.

Subcommands:

    simulate         one trajectory; NDJSON time series plus a final checkpoint
    ensemble         many trajectories; aggregated statistics plus a
                     per-path prefactor table
    corrector-check  certification table for the velocity corrector bound
    rate-sweep       fitted decay rates over a (kappa, shell) product grid
    fit              offline decay-rate fit on an existing NDJSON series

Exit codes: 0 success, 2 configuration error, 3 blow-up (partial series
already written), 4 I/O error.  Given the same config and seed the output
files are byte-identical between runs; simulate draws its noise from the
same substream as ensemble path 0, so a one-path ensemble reproduces the
simulate series exactly.
"""

import argparse
import dataclasses
import json
import sys

import numpy as np

from .checkpoint import save
from .config import load_config, parse_config
from .diagnostics import delta_bound, deterministic_rate, fit_decay_rate, record
from .ensemble import resolve_threads, run_ensemble, trajectory_rng
from .errors import (
    BlowUpError,
    CheckpointError,
    ConditionError,
    ConfigError,
    FitDomainError,
    InvalidFieldError,
)
from .integrator import integrate
from .noise import (
    NoiseSpec,
    build_noise_basis,
    corrector_bound_report,
    corrector_residual,
)
from .spectral import Grid, perp_gradient, random_band_scalar, sobolev_norm


def _write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _write_ndjson(path, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(json.dumps(row, default=float) + "\n")


def _read_ndjson(path):
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as err:
                raise ConfigError(f"{path}: line {lineno} is not JSON: {err}") from err
    return rows


def _load_run_config(args):
    cfg = load_config(args.config) if args.config else parse_config("")
    seed = getattr(args, "seed", None)
    if seed is not None:
        if not 0 <= seed < 2**64:
            raise ConfigError(f"seed must fit in 64 bits, got {seed}")
        cfg = dataclasses.replace(cfg, seed=seed)
    output = getattr(args, "output", None)
    if output:
        cfg = dataclasses.replace(cfg, output=output)
    return cfg


def _parse_float_list(raw, flag):
    try:
        values = [float(part) for part in raw.split(",") if part.strip()]
    except ValueError as err:
        raise ConfigError(f"{flag} must be a comma-separated float list") from err
    if not values:
        raise ConfigError(f"{flag} must name at least one value")
    return values


def _parse_int_list(raw, flag):
    try:
        values = [int(part, 10) for part in raw.split(",") if part.strip()]
    except ValueError as err:
        raise ConfigError(f"{flag} must be a comma-separated integer list") from err
    if not values:
        raise ConfigError(f"{flag} must name at least one value")
    return values


def _cmd_simulate(args):
    cfg = _load_run_config(args)
    grid = cfg.grid()
    state = cfg.initial_state(grid)
    params = cfg.system_params(state)
    basis = build_noise_basis(params.noise, grid)
    rng = trajectory_rng(cfg.seed, 0)
    try:
        result = integrate(state, params, cfg.stepper(), basis=basis, rng=rng)
    except BlowUpError as err:
        _write_ndjson(cfg.output, [dataclasses.asdict(r) for r in err.records])
        print(
            f"blow-up at t = {err.t:.6g} (step {err.step}); partial series "
            f"written to {cfg.output}",
            file=sys.stderr,
        )
        return 3
    _write_ndjson(cfg.output, [dataclasses.asdict(r) for r in result.records])
    save(cfg.output + ".ckpt", result.state, params, t=cfg.t_end)
    print(
        f"wrote {len(result.records)} records to {cfg.output} and a "
        f"checkpoint to {cfg.output}.ckpt"
    )
    return 0


def _cmd_ensemble(args):
    cfg = _load_run_config(args)
    threads = resolve_threads(args.threads)
    grid = cfg.grid()
    state = cfg.initial_state(grid)
    params = cfg.system_params(state)
    basis = build_noise_basis(params.noise, grid)
    result = run_ensemble(
        state,
        params,
        cfg.stepper(),
        n_paths=cfg.ensemble_size,
        basis=basis,
        threads=threads,
    )
    rows = [
        {
            "t": float(t),
            "mean_total": float(mean),
            "stderr": float(err),
            "count": result.stats.count,
        }
        for t, mean, err in zip(
            result.stats.t, result.stats.mean_total, result.stats.stderr
        )
    ]
    _write_ndjson(cfg.output, rows)
    table_path = cfg.output + ".prefactors.csv"
    lines = ["path,prefactor"]
    lines.extend(f"{i},{float(p)!r}" for i, p in enumerate(result.prefactors))
    _write_text(table_path, "\n".join(lines) + "\n")
    print(
        f"aggregated {cfg.ensemble_size} paths into {cfg.output}; prefactor "
        f"table (rate {float(result.rate)!r}) in {table_path}"
    )
    return 0


def _cmd_corrector_check(args):
    if args.kappa <= 0.0:
        raise ConfigError("corrector-check needs kappa > 0")
    grid = Grid(args.grid_m)
    rng = trajectory_rng(args.seed, 0)
    u = perp_gradient(random_band_scalar(grid, rng, args.u_kmax), grid)
    shells = _parse_int_list(args.shells, "--shells")
    lines = ["shell,error,bound,ratio"]
    for shell in shells:
        spec = NoiseSpec(kappa=args.kappa, shell=shell, gamma=args.noise_gamma)
        basis = build_noise_basis(spec, grid)
        error = float(
            sobolev_norm(corrector_residual(u, basis), grid, args.s - 2.0 - args.alpha)
        )
        bound = float(
            args.kappa * sobolev_norm(u, grid, args.s) / float(shell) ** args.alpha
        )
        ratio = float(corrector_bound_report(u, basis, args.s, args.alpha))
        lines.append(f"{shell},{error!r},{bound!r},{ratio!r}")
    _write_text(args.output, "\n".join(lines) + "\n")
    print(f"wrote corrector table for shells {shells} to {args.output}")
    return 0


def _cmd_rate_sweep(args):
    cfg = _load_run_config(args)
    threads = resolve_threads(args.threads)
    kappas = _parse_float_list(args.kappas, "--kappas")
    shells = _parse_int_list(args.shells, "--shells")
    output = args.output or "npns-sweep.csv"
    grid = cfg.grid()
    state = cfg.initial_state(grid)
    lines = ["kappa,shell,lambda_hat,gamma,delta_bound"]
    dev0 = None
    for kappa in kappas:
        for shell in shells:
            cell = dataclasses.replace(cfg, kappa=kappa, shell=shell)
            params = cell.system_params(state)
            if dev0 is None:
                rec0 = record(state, params, 0.0)
                dev0 = rec0.u_sq + rec0.c1_dev_sq + rec0.c2_dev_sq
            basis = build_noise_basis(params.noise, grid)
            result = run_ensemble(
                state,
                params,
                cell.stepper(),
                n_paths=cell.ensemble_size,
                basis=basis,
                threads=threads,
            )
            fit = fit_decay_rate(result.stats.t, result.stats.mean_total)
            try:
                gamma = float(deterministic_rate(params, dev0))
            except ConditionError:
                gamma = float("nan")
            try:
                delta = float(delta_bound(kappa, shell, args.alpha, args.beta))
            except ConditionError:
                delta = float("nan")
            lines.append(
                f"{float(kappa)!r},{shell},{float(fit.rate)!r},{gamma!r},{delta!r}"
            )
    _write_text(output, "\n".join(lines) + "\n")
    print(f"wrote {len(lines) - 1} sweep cells to {output}")
    return 0


def _cmd_fit(args):
    rows = _read_ndjson(args.input)
    if not rows:
        raise ConfigError(f"{args.input} holds no records")
    for key in ("t", args.column):
        if any(key not in row for row in rows):
            raise ConfigError(f"column {key!r} missing from {args.input}")
    t = np.array([row["t"] for row in rows], dtype=float)
    values = np.array([row[args.column] for row in rows], dtype=float)
    if (args.t_start is None) != (args.t_end is None):
        raise ConfigError("--t-start and --t-end must be given together")
    window = None if args.t_start is None else (args.t_start, args.t_end)
    fit = fit_decay_rate(t, values, window=window)
    report = {
        "column": args.column,
        "count": len(rows),
        "rate": float(fit.rate),
        "intercept": float(fit.intercept),
        "window": [float(fit.window[0]), float(fit.window[1])],
        "residual": float(fit.residual),
    }
    text = json.dumps(report)
    if args.output:
        _write_text(args.output, text + "\n")
    else:
        print(text)
    return 0


def _add_run_flags(parser, threads):
    parser.add_argument("--config", help="path to a key = value config file")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--output", help="override the config output path")
    if threads:
        parser.add_argument(
            "--threads",
            type=int,
            default=None,
            help="worker threads (default: NPNS_THREADS or 1)",
        )


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="npns",
        description="Stochastic electrodiffusion simulator on the periodic torus.",
    )
    sub = parser.add_subparsers(dest="command")

    p_sim = sub.add_parser("simulate", help="run one trajectory")
    _add_run_flags(p_sim, threads=False)
    p_sim.set_defaults(func=_cmd_simulate)

    p_ens = sub.add_parser("ensemble", help="run an ensemble of trajectories")
    _add_run_flags(p_ens, threads=True)
    p_ens.set_defaults(func=_cmd_ensemble)

    p_cor = sub.add_parser(
        "corrector-check", help="tabulate the velocity corrector bound"
    )
    p_cor.add_argument("--grid-m", type=int, default=96)
    p_cor.add_argument("--kappa", type=float, default=1.0)
    p_cor.add_argument("--noise-gamma", type=float, default=1.0)
    p_cor.add_argument("--shells", default="4,8,16")
    p_cor.add_argument("--s", type=float, default=1.0)
    p_cor.add_argument("--alpha", type=float, default=1.0)
    p_cor.add_argument("--u-kmax", type=int, default=8)
    p_cor.add_argument("--seed", type=int, default=0)
    p_cor.add_argument("--output", default="npns-corrector.csv")
    p_cor.set_defaults(func=_cmd_corrector_check)

    p_swp = sub.add_parser(
        "rate-sweep", help="fit ensemble decay rates over kappa and shell"
    )
    _add_run_flags(p_swp, threads=True)
    p_swp.add_argument("--kappas", default="0,1,4")
    p_swp.add_argument("--shells", default="4,8")
    p_swp.add_argument("--alpha", type=float, default=0.5)
    p_swp.add_argument("--beta", type=float, default=3.0)
    p_swp.set_defaults(func=_cmd_rate_sweep)

    p_fit = sub.add_parser("fit", help="fit a decay rate on an NDJSON series")
    p_fit.add_argument("--input", required=True)
    p_fit.add_argument("--column", default="total_sq")
    p_fit.add_argument("--t-start", type=float, default=None)
    p_fit.add_argument("--t-end", type=float, default=None)
    p_fit.add_argument("--output", default=None)
    p_fit.set_defaults(func=_cmd_fit)

    return parser


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 2
    if not hasattr(args, "func"):
        parser.print_usage(sys.stderr)
        return 2
    try:
        return args.func(args)
    except (
        ConfigError,
        ConditionError,
        FitDomainError,
        CheckpointError,
        InvalidFieldError,
    ) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except BlowUpError as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return 4


def entry():
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
