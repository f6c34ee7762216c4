"""Command-line entry point ``strong-epi``.

Exit codes: 0 success, 1 verification failures, 2 usage or parse errors,
3 numeric failures (Fisher stability gate, truncation, grid overflow).
"""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Any

import click
import numpy as np

from . import closed_forms as cf
from .channel import ChannelSpec, joint_xy, push_through
from .errors import InvalidParameterError, StrongEPIError
from .functionals import (
    de_bruijn_residual,
    differential_entropy,
    doubling_constant,
    entropy_power,
    fisher_information,
)
from .grid import DEFAULT_N, DEFAULT_PAD, GridDensity, MixtureSpec, density_from_dict, resample
from .ib import LAMBDA_CAP, SOLVER_N, IBProblem, solve_ib
from .suite import SUITES, explore_nongaussian_w, expand_suites, reports_to_csv, run_corpus

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


def grid_options(f):
    f = click.option("--grid-pad", type=float, default=DEFAULT_PAD, show_default=True,
                     help="Relative padding added around density supports.")(f)
    f = click.option("--grid-n", type=int, default=DEFAULT_N, show_default=True,
                     help="Grid point count for sampled densities.")(f)
    return f


def _check_grid(grid_n: int, grid_pad: float) -> None:
    if grid_n < 3:
        raise click.BadParameter("must be at least 3", param_hint="--grid-n")
    if not grid_pad >= 0:
        raise click.BadParameter("must be nonnegative", param_hint="--grid-pad")


def load_density(path: str, grid_n: int, grid_pad: float) -> tuple[GridDensity, MixtureSpec | None]:
    """Read a density file; any parse or validation problem is a usage error."""
    try:
        obj = json.loads(Path(path).read_text())
        d, spec = density_from_dict(obj, grid_n, grid_pad)
    except (OSError, ValueError, KeyError, TypeError, StrongEPIError) as exc:
        raise click.BadParameter(f"cannot read density: {exc}", param_hint="DENSITY_FILE") from exc
    if spec is None and d.grid.n != grid_n:
        d = resample(d, grid_n)
    return d, spec


def _dump_json(payload: dict[str, Any]) -> str:
    return json.dumps(payload, indent=2, sort_keys=True)


def _write_or_echo(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


@click.group()
def cli():
    """Numerical checks of entropy-power inequalities and the Gaussian information bottleneck."""


@cli.command()
@click.argument("density_file", type=click.Path(dir_okay=False))
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), help="Also write a quantity,value table.")
@grid_options
def functionals(density_file, csv_path, grid_n, grid_pad):
    """Entropy, entropy power, Fisher information, doubling constant, de Bruijn residual."""
    _check_grid(grid_n, grid_pad)
    d, _ = load_density(density_file, grid_n, grid_pad)
    rows = [
        ("h_bits", differential_entropy(d)),
        ("entropy_power", entropy_power(d)),
        ("fisher_information", fisher_information(d, check=True)),
        ("doubling_constant", doubling_constant(d)),
        ("de_bruijn_residual", de_bruijn_residual(d)),
    ]
    width = max(len(k) for k, _ in rows)
    for k, v in rows:
        click.echo(f"{k:<{width}}  {v:.10g}")
    if csv_path:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["quantity", "value"])
        w.writerows((k, repr(v)) for k, v in rows)
        Path(csv_path).write_text(buf.getvalue())
    return EXIT_OK


@cli.command()
@click.option("--input", "input_path", type=click.Path(dir_okay=False),
              help="Density file for X (default: standard Gaussian).")
@click.option("--snr", type=float, required=True)
@click.option("--lambda", "lam", type=float, required=True)
@click.option("--v-size", type=int, default=64, show_default=True)
@click.option("--tol", type=float, default=1e-9, show_default=True)
@click.option("--max-iter", type=int, default=20000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--restarts", type=int, default=8, show_default=True)
@click.option("--n", "n_solver", type=int, default=SOLVER_N, show_default=True,
              help="Points per axis of the discretized joint.")
@click.option("--out", type=click.Path(dir_okay=False))
@grid_options
def ib(input_path, snr, lam, v_size, tol, max_iter, seed, restarts, n_solver, out, grid_n, grid_pad):
    """Solve inf_V I(Y;V) - lambda I(X;V) for Y = sqrt(snr) X + N(0,1)."""
    _check_grid(grid_n, grid_pad)
    if not snr >= 0:
        raise click.BadParameter("must be nonnegative", param_hint="--snr")
    if not 1 <= lam <= LAMBDA_CAP:
        raise click.BadParameter(f"must lie in [1, {LAMBDA_CAP:g}]", param_hint="--lambda")
    if n_solver < 2:
        raise click.BadParameter("must be at least 2", param_hint="--n")
    if input_path:
        d, spec = load_density(input_path, grid_n, grid_pad)
    else:
        spec = MixtureSpec.gaussian(0.0, 1.0)
        d, _ = density_from_dict({"mixture": {"weights": [1.0], "means": [0.0], "variances": [1.0]}},
                                 grid_n, grid_pad)
    c = ChannelSpec(snr)
    try:
        problem = IBProblem(joint_xy(d, c, n_x=n_solver, n_y=n_solver), lam, v_size, tol, max_iter,
                            seed, restarts)
    except InvalidParameterError as exc:
        raise click.UsageError(str(exc)) from exc
    sol = solve_ib(problem)
    h_x = differential_entropy(d)
    h_y = differential_entropy(push_through(d, c))
    payload: dict[str, Any] = {
        "snr": snr, "lambda": lam, "v_size": v_size, "seed": seed, "n": n_solver,
        "objective": sol.objective, "i_xv": sol.i_xv, "i_yv": sol.i_yv,
        "iterations": sol.iterations, "converged": sol.converged, "restarts_used": sol.restarts_used,
        "h_x": h_x, "h_y": h_y, "s_lambda": -h_x + lam * h_y + sol.objective,
    }
    if spec is not None and spec.is_gaussian:
        gamma = spec.variances[0]
        ref = cf.gaussian_ib_value(gamma, snr, lam)
        payload["closed_form"] = {
            "gamma": gamma, "objective": ref, "abs_error": abs(sol.objective - ref),
            "optimal_noise": cf.gaussian_ib_optimal_noise(gamma, snr, lam),
            "s_lambda": cf.s_lambda_gaussian(gamma, snr, lam),
        }
    _write_or_echo(_dump_json(payload) + "\n", out)
    return EXIT_OK


@cli.command()
@click.option("--rho", type=float, required=True)
@click.option("--dx", "d_x", type=float, required=True)
@click.option("--dy", "d_y", type=float, required=True)
@click.option("--rx", "r_x", type=float, help="Point query: rate of the X encoder.")
@click.option("--ry", "r_y", type=float, help="Point query: rate of the Y encoder.")
@click.option("--r-max", type=float, help="Upper end of the R_X sweep.")
@click.option("--points", type=int, default=101, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), help="Boundary table CSV.")
@grid_options
def region(rho, d_x, d_y, r_x, r_y, r_max, points, out, grid_n, grid_pad):
    """Two-encoder quadratic Gaussian rate region: boundary sweep and point checks."""
    _check_grid(grid_n, grid_pad)
    if not abs(rho) < 1:
        raise click.BadParameter("must satisfy |rho| < 1", param_hint="--rho")
    for name, v in (("--dx", d_x), ("--dy", d_y)):
        if not 0 < v <= 1:
            raise click.BadParameter("must lie in (0, 1]", param_hint=name)
    if (r_x is None) != (r_y is None):
        raise click.UsageError("--rx and --ry must be given together")
    if points < 2:
        raise click.BadParameter("must be at least 2", param_hint="--points")
    r2 = rho * rho
    # below this R_X no finite R_Y suffices
    r_lo = 0.5 * math.log2(max(1 - r2, d_x) / d_x) if r2 < 1 else 0.0
    hi = r_max if r_max is not None else 0.5 * math.log2(1 / (d_x * d_y)) + 1.0
    if hi <= r_lo:
        raise click.BadParameter(f"must exceed {r_lo:.6g}", param_hint="--r-max")
    grid = np.linspace(r_lo, hi, points + 1)[1:]
    summary: dict[str, Any] = {
        "rho": rho, "d_x": d_x, "d_y": d_y,
        "sum_rate_bound": cf.sum_rate_bound(rho, d_x, d_y),
        "beta": cf.beta_of_d(rho, d_x * d_y),
    }
    if r_x is not None:
        if r_x < 0 or r_y < 0:
            raise click.BadParameter("rates must be nonnegative", param_hint="--rx/--ry")
        sx, sy, ss = cf.wagner_bounds(rho, cf.RateDistortionQuery(r_x, r_y, d_x, d_y))
        summary["query"] = {"r_x": r_x, "r_y": r_y, "slack_x": sx, "slack_y": sy, "slack_sum": ss,
                            "admissible": min(sx, sy, ss) >= 0}
    if out:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r_x", "r_y_min"])
        w.writerows((repr(float(a)), repr(float(b))) for a, b in zip(grid, cf.region_boundary(rho, d_x, d_y, grid)))
        Path(out).write_text(buf.getvalue())
    click.echo(_dump_json(summary))
    return EXIT_OK


@cli.group("closed-form")
def closed_form():
    """Closed-form Gaussian oracles (JSON output)."""


@closed_form.command("ib")
@click.option("--gamma", type=float, default=1.0, show_default=True)
@click.option("--snr", type=float, required=True)
@click.option("--lambda", "lam", type=float, required=True)
@grid_options
def cf_ib(gamma, snr, lam, grid_n, grid_pad):
    """Gaussian information-bottleneck value and optimal test-channel noise."""
    click.echo(_dump_json({
        "gamma": gamma, "snr": snr, "lambda": lam,
        "objective": cf.gaussian_ib_value(gamma, snr, lam),
        "optimal_noise": cf.gaussian_ib_optimal_noise(gamma, snr, lam),
        "s_lambda": cf.s_lambda_gaussian(gamma, snr, lam),
    }))
    return EXIT_OK


@closed_form.command("v-lambda")
@click.option("--snr", "snrs", type=float, multiple=True, required=True, help="Repeat for a diagonal gain.")
@click.option("--lambda", "lam", type=float, required=True)
@grid_options
def cf_v_lambda(snrs, lam, grid_n, grid_pad):
    """Explicit infimum of the dual functional, summed over coordinates."""
    click.echo(_dump_json({"snr": list(snrs), "lambda": lam,
                           "per_coordinate": [cf.v_lambda(s, lam) for s in snrs],
                           "v_lambda": cf.v_lambda_vector(snrs, lam)}))
    return EXIT_OK


@closed_form.command("strong-dpi")
@click.option("--h-x", type=float, required=True, help="Differential entropy of X in bits.")
@click.option("--i-xy", type=float, required=True)
@click.option("--t", "ts", type=float, multiple=True, required=True)
@grid_options
def cf_strong_dpi(h_x, i_xy, ts, grid_n, grid_pad):
    """Upper bound on the strong data processing function g_I(t)."""
    click.echo(_dump_json({"h_x": h_x, "i_xy": i_xy,
                           "bound": {repr(t): cf.strong_dpi_bound(h_x, i_xy, t) for t in ts}}))
    return EXIT_OK


@closed_form.command("mtsc")
@click.option("--rho", type=float, required=True)
@click.option("--a", type=float, required=True, help="Noise variance in U = X + N(0, a).")
@click.option("--b", type=float, required=True, help="Noise variance in V = Y + N(0, b).")
@grid_options
def cf_mtsc(rho, a, b, grid_n, grid_pad):
    """Mutual-information inequality behind the sum-rate bound, on a Gaussian cascade."""
    infos = cf.gaussian_mtsc_informations(rho, a, b)
    click.echo(_dump_json({"rho": rho, "a": a, "b": b,
                           "i_xu": infos[0], "i_yu": infos[1], "i_xv_given_u": infos[2],
                           "i_yv_given_u": infos[3], "slack": cf.proposition_mtsc_slack(rho, *infos)}))
    return EXIT_OK


@closed_form.command("hk")
@click.option("--alpha", type=float, required=True)
@click.option("--p1", type=float, required=True)
@click.option("--p2", type=float, required=True)
@click.option("--r1", type=float, required=True)
@click.option("--r2", type=float, required=True)
@grid_options
def cf_hk(alpha, p1, p2, r1, r2, grid_n, grid_pad):
    """Gaussian-input region check for the one-sided interference channel."""
    chk = cf.hk_gaussian_region_check(cf.ICSpec(alpha, p1, p2), r1, r2)
    click.echo(_dump_json({"admissible": chk.admissible, "slack_r1": chk.slack_r1,
                           "slack_r2": chk.slack_r2, "slack_sum": chk.slack_sum,
                           "max_r2": cf.hk_max_r2(cf.ICSpec(alpha, p1, p2), r1)}))
    return EXIT_OK


@closed_form.command("poincare")
@click.option("--n-x", type=float, required=True, help="Entropy power of a unit-variance X.")
@click.option("--j-x", type=float, required=True, help="Fisher information of X.")
@click.option("--zeta", type=float, required=True)
@grid_options
def cf_poincare(n_x, j_x, zeta, grid_n, grid_pad):
    """Slack of Stam's inequality sharpened by a Poincare constant."""
    click.echo(_dump_json({"slack": cf.poincare_sharpened_slack(n_x, j_x, zeta)}))
    return EXIT_OK


def _parse_suites(text: str) -> tuple[str, ...]:
    names = [s.strip() for s in text.split(",") if s.strip()]
    try:
        return expand_suites(names or ["all"])
    except StrongEPIError as exc:
        raise click.BadParameter(f"{exc}; known: all, {', '.join(SUITES)}", param_hint="--suites") from exc


def _emit_reports(reports, out: str | None, n_cases: int) -> int:
    failures = sum(not r.passed for r in reports)
    _write_or_echo(reports_to_csv(reports), out)
    click.echo(f"{n_cases} cases, {failures} failures", err=not out)
    return failures


@cli.command()
@click.option("--suites", default="all", show_default=True, help="Comma-separated suite names or 'all'.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--n", "n_cases", type=int, default=10, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), help="CSV destination (default: stdout).")
@grid_options
def verify(suites, seed, n_cases, out, grid_n, grid_pad):
    """Run the inequality corpus; exit 1 if any report fails after triage."""
    _check_grid(grid_n, grid_pad)
    names = _parse_suites(suites)
    if n_cases < 1:
        raise click.BadParameter("must be at least 1", param_hint="--n")
    reports = run_corpus(seed, n_cases, names, n=grid_n, pad=grid_pad)
    return EXIT_FAIL if _emit_reports(reports, out, n_cases) else EXIT_OK


@cli.command("explore-nongaussian-w")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--n", "n_cases", type=int, default=10, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False))
@grid_options
def explore(seed, n_cases, out, grid_n, grid_pad):
    """Chart the strengthened inequality with mixture noise (exploratory, always exit 0)."""
    _check_grid(grid_n, grid_pad)
    if n_cases < 1:
        raise click.BadParameter("must be at least 1", param_hint="--n")
    _emit_reports(explore_nongaussian_w(seed, n_cases, grid_n, grid_pad), out, n_cases)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    try:
        rv = cli.main(args=argv, prog_name="strong-epi", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except InvalidParameterError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_USAGE
    except StrongEPIError as exc:
        click.echo(f"numeric failure: {exc}", err=True)
        return EXIT_NUMERIC
    return rv if isinstance(rv, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
