"""Command-line front end: parse specs, run analyses, emit reports.

Exit codes: 0 success, 1 usage/validation error, 2 analysis completed but the
finiteness verdict is infinite/unknown.  Machine output (--json / --csv) is
byte-identical for identical config, seed, and any worker count.
"""

from __future__ import annotations

import csv
import io
import json
import os
import sys

import click

from reflectedwalk import __version__
from reflectedwalk import asymptotics as asymptotics_mod
from reflectedwalk import barrier as barrier_mod
from reflectedwalk import estimators as estimators_mod
from reflectedwalk import model as model_mod
from reflectedwalk import rna as rna_mod
from reflectedwalk import streams
from reflectedwalk import walk as walk_mod
from reflectedwalk.errors import InfiniteByCriterion, ReflectedWalkError

# exit codes: 1 for usage errors (click defaults to 2)
click.UsageError.exit_code = 1


def _resolve_seed(seed):
    if seed is not None:
        return int(seed)
    return int.from_bytes(os.urandom(4), "big")


def _emit(report, as_json):
    if as_json:
        click.echo(json.dumps(report, sort_keys=True))
        return
    for key, value in report.items():
        if key == "rows":
            continue
        click.echo(f"{key}: {json.dumps(value, sort_keys=True)}")
    for row in report.get("rows", []):
        click.echo("  " + "  ".join(f"{k}={v}" for k, v in row.items()))


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=header)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def _fail(exc):
    click.echo(f"error: {exc}", err=True)
    # an Infinite verdict is a completed analysis, not a usage error
    sys.exit(2 if isinstance(exc, InfiniteByCriterion) else 1)


@click.group()
@click.version_option(__version__)
def main():
    """Tail analysis of random walks reflected at general barriers."""


@main.command()
@click.option("--dist", required=True, help="increment distribution spec")
@click.option("--barrier", "barrier_spec", default="zero", show_default=True)
@click.option("--tol", default=1e-12, show_default=True)
@click.option("--json", "as_json", is_flag=True)
def analyze(dist, barrier_spec, tol, as_json):
    """Drift, tilt root, series bound, and finiteness verdict."""
    try:
        model = model_mod.parse_distribution(dist)
        b = barrier_mod.parse_barrier(barrier_spec)
        tm = model_mod.solve_theta_star(model, tol=tol)
        verdict = barrier_mod.classify_finiteness(b, tm.theta_star)
    except ReflectedWalkError as exc:
        _fail(exc)
    report = {
        "command": "analyze",
        "version": __version__,
        "config": {"dist": dist, "barrier": barrier_spec, "tol": tol},
        "mu": model_mod.mean(model),
        "theta_star": tm.theta_star,
        "mu_star": tm.mu_star,
        "lattice_span": model_mod.lattice_span(model),
        "series_bound": verdict.series_bound,
        "verdict": verdict.verdict,
        "reason": verdict.reason,
    }
    _emit(report, as_json)
    if verdict.verdict != "finite":
        sys.exit(2)


_TAIL_HEADER = ["u", "method", "point", "stderr", "ci_low", "ci_high",
                "n_samples", "horizon", "bracket_low", "bracket_high"]


def _estimate_row(est, bracket=None):
    return {
        "u": est.u,
        "method": est.method,
        "point": est.point,
        "stderr": est.stderr,
        "ci_low": est.ci95[0],
        "ci_high": est.ci95[1],
        "n_samples": est.n_samples,
        "horizon": "" if est.horizon is None else est.horizon,
        "bracket_low": "" if bracket is None else bracket[0],
        "bracket_high": "" if bracket is None else bracket[1],
    }


@main.command()
@click.option("--dist", required=True)
@click.option("--barrier", "barrier_spec", default="zero", show_default=True)
@click.option("--u", "u_list", required=True, help="comma-separated levels")
@click.option("--method", "methods", default="is", show_default=True,
              help="comma-separated subset of is,naive,dp,asymptotic")
@click.option("--n-samples", default=100_000, show_default=True)
@click.option("--horizon", default=1000, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--workers", default=1, show_default=True)
@click.option("--eps", default=1e-10, show_default=True)
@click.option("--tol", default=1e-12, show_default=True)
@click.option("--csv", "csv_path", type=click.Path(), default=None)
@click.option("--json", "as_json", is_flag=True)
def tail(dist, barrier_spec, u_list, methods, n_samples, horizon, seed, workers,
         eps, tol, csv_path, as_json):
    """Tail probability estimates over a grid of levels."""
    seed = _resolve_seed(seed)
    try:
        model = model_mod.parse_distribution(dist)
        b = barrier_mod.parse_barrier(barrier_spec)
        us = [float(x) for x in u_list.split(",")]
        wanted = [m.strip() for m in methods.split(",")]
        unknown = set(wanted) - {"is", "naive", "dp", "asymptotic"}
        if unknown:
            raise ReflectedWalkError(f"unknown methods: {sorted(unknown)}")
        tm = model_mod.solve_theta_star(model, tol=tol)
        constants = None
        if "asymptotic" in wanted:
            constants = asymptotics_mod.compute_constants(
                model, b, n_samples=n_samples, eps=eps, seed=seed, tol=tol,
                workers=workers)
        rows = []
        for u in us:
            for method in wanted:
                if method == "is":
                    est = estimators_mod.tail_is(model, b, u, tm, n_samples, seed,
                                                 workers=workers)
                    rows.append(_estimate_row(est))
                elif method == "naive":
                    est = estimators_mod.tail_naive(model, b, u, horizon, n_samples,
                                                    seed, workers=workers)
                    rows.append(_estimate_row(est))
                elif method == "dp":
                    est = estimators_mod.tail_dp(model, b, u, horizon)
                    rows.append(_estimate_row(est))
                else:
                    point, bracket = asymptotics_mod.asymptotic_tail(constants, u)
                    est = estimators_mod.TailEstimate(
                        u=u, point=point, stderr=0.0, ci95=(point, point),
                        method="asymptotic", n_samples=0)
                    rows.append(_estimate_row(est, bracket))
    except (ReflectedWalkError, ValueError) as exc:
        _fail(exc)
    report = {
        "command": "tail",
        "version": __version__,
        "config": {
            "dist": dist, "barrier": barrier_spec, "u": us, "methods": wanted,
            "n_samples": n_samples, "horizon": horizon, "seed": seed,
            "workers": workers, "eps": eps, "tol": tol,
        },
        "rows": rows,
    }
    if csv_path:
        _write_csv(csv_path, _TAIL_HEADER, rows)
    _emit(report, as_json)


@main.command()
@click.option("--dist", required=True)
@click.option("--barrier", "barrier_spec", default="zero", show_default=True)
@click.option("--n-samples", default=200_000, show_default=True)
@click.option("--eps", default=1e-10, show_default=True)
@click.option("--tol", default=1e-12, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--workers", default=1, show_default=True)
@click.option("--json", "as_json", is_flag=True)
def constants(dist, barrier_spec, n_samples, eps, tol, seed, workers, as_json):
    """The decay rate and the tail constant with its arithmetic-case bracket."""
    seed = _resolve_seed(seed)
    try:
        model = model_mod.parse_distribution(dist)
        b = barrier_mod.parse_barrier(barrier_spec)
        tm = model_mod.solve_theta_star(model, tol=tol)
        tc = asymptotics_mod.compute_constants(
            model, b, n_samples=n_samples, eps=eps, seed=seed, tol=tol, workers=workers)
    except ReflectedWalkError as exc:
        _fail(exc)
    report = {
        "command": "constants",
        "version": __version__,
        "config": {
            "dist": dist, "barrier": barrier_spec, "n_samples": n_samples,
            "eps": eps, "tol": tol, "seed": seed, "workers": workers,
        },
        "theta_star": tc.theta_star,
        "mu": model_mod.mean(model),
        "mu_star": tm.mu_star,
        "c_d": tc.c_d,
        "c_d_stderr": tc.c_d_stderr,
        "c_b": tc.c_b,
        "constant": tc.constant,
        "bracket_low": tc.bracket[0],
        "bracket_high": tc.bracket[1],
        "lattice_span": tc.lattice_span,
        "c_d_method": tc.c_d_method,
        "c_b_method": tc.c_b_method,
    }
    _emit(report, as_json)


@main.command()
@click.option("--dist", required=True)
@click.option("--barrier", "barrier_spec", default="zero", show_default=True)
@click.option("--horizon", default=100, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--tilted/--original", default=False, show_default=True,
              help="simulate under the tilted law")
@click.option("--csv", "csv_path", type=click.Path(), default=None)
@click.option("--json", "as_json", is_flag=True)
def simulate(dist, barrier_spec, horizon, seed, tilted, csv_path, as_json):
    """Simulate one reflected trajectory and dump it as CSV."""
    seed = _resolve_seed(seed)
    try:
        model = model_mod.parse_distribution(dist)
        b = barrier_mod.parse_barrier(barrier_spec)
        theta = None
        if tilted:
            tm = model_mod.solve_theta_star(model)
            model_used, theta = tm.tilted, tm.theta_star
        else:
            model_used = model
        traj = walk_mod.simulate_trajectory(model_used, b, horizon,
                                            streams.substream(seed, 0), theta)
    except ReflectedWalkError as exc:
        _fail(exc)
    buf = io.StringIO()
    walk_mod.dump_trajectory_csv(traj, buf)
    if csv_path:
        with open(csv_path, "w", newline="") as fh:
            fh.write(buf.getvalue())
    report = {
        "command": "simulate",
        "version": __version__,
        "config": {"dist": dist, "barrier": barrier_spec, "horizon": horizon,
                   "seed": seed, "tilted": tilted},
        "final_w": traj.reflected[-1],
        "final_d": traj.running_d[-1],
        "csv": buf.getvalue() if not csv_path else csv_path,
    }
    _emit(report, as_json)


@main.command()
@click.option("--dist", required=True)
@click.option("--barrier", "barrier_spec", default="zero", show_default=True)
@click.option("--u", type=float, required=True)
@click.option("--horizon", type=int, default=None,
              help="fixed horizon; omit to run to convergence")
@click.option("--tol", default=1e-12, show_default=True)
@click.option("--json", "as_json", is_flag=True)
def oracle(dist, barrier_spec, u, horizon, tol, as_json):
    """Exact lattice dynamic-programming tail probability."""
    try:
        model = model_mod.parse_distribution(dist)
        b = barrier_mod.parse_barrier(barrier_spec)
        if horizon is None:
            est = estimators_mod.tail_dp_converged(model, b, u, tol=tol)
        else:
            est = estimators_mod.tail_dp(model, b, u, horizon)
    except ReflectedWalkError as exc:
        _fail(exc)
    report = {
        "command": "oracle",
        "version": __version__,
        "config": {"dist": dist, "barrier": barrier_spec, "u": u,
                   "horizon": horizon, "tol": tol},
        "point": est.point,
        "horizon_used": est.horizon,
        "pruned_mass": est.pruned_mass,
        "u_quantized": est.u_quantized,
    }
    _emit(report, as_json)


@main.group()
def rna():
    """Loop-penalized stack scoring of nucleotide sequences."""


def _load_sequence(seq, path):
    if (seq is None) == (path is None):
        raise ReflectedWalkError("provide exactly one of --seq or --file")
    if seq is not None:
        return rna_mod.parse_sequence(seq)
    with open(path) as fh:
        return rna_mod.parse_sequence(fh.read())


@rna.command()
@click.option("--seq", default=None, help="sequence letters")
@click.option("--file", "path", type=click.Path(exists=True), default=None)
@click.option("--penalty", "penalty_spec", default="zero", show_default=True)
@click.option("--match", default=1.0, show_default=True)
@click.option("--mismatch", default=-1.0, show_default=True)
@click.option("--json", "as_json", is_flag=True)
def scan(seq, path, penalty_spec, match, mismatch, as_json):
    """Best penalized stack score and where it is attained."""
    try:
        sequence = _load_sequence(seq, path)
        pen = rna_mod.parse_penalty(penalty_spec)
        f = rna_mod.watson_crick_scores(match, mismatch)
        result = rna_mod.scan_reflected(sequence, f, pen)
    except ReflectedWalkError as exc:
        _fail(exc)
    report = {
        "command": "rna scan",
        "version": __version__,
        "config": {"penalty": penalty_spec, "match": match, "mismatch": mismatch,
                   "had_t": sequence.had_t},
        "m_y": result.m_y if result.argmax else None,
        "i": result.argmax.i if result.argmax else None,
        "j": result.argmax.j if result.argmax else None,
        "m": result.argmax.m if result.argmax else None,
        "n": result.n,
    }
    _emit(report, as_json)


@rna.command()
@click.option("--n", "length", type=int, required=True, help="sequence length")
@click.option("--penalty", "penalty_spec", required=True)
@click.option("--u", "u_list", required=True, help="comma-separated levels")
@click.option("--base", default="0.25,0.25,0.25,0.25", show_default=True,
              help="base probabilities for a,c,g,u")
@click.option("--match", default=1.0, show_default=True)
@click.option("--mismatch", default=-1.0, show_default=True)
@click.option("--n-samples", default=200_000, show_default=True)
@click.option("--eps", default=1e-10, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--workers", default=1, show_default=True)
@click.option("--csv", "csv_path", type=click.Path(), default=None)
@click.option("--json", "as_json", is_flag=True)
def pvalue(length, penalty_spec, u_list, base, match, mismatch, n_samples, eps,
           seed, workers, csv_path, as_json):
    """Approximate p-value curve for the scan statistic under the i.i.d. null."""
    seed = _resolve_seed(seed)
    try:
        pen = rna_mod.parse_penalty(penalty_spec)
        f = rna_mod.watson_crick_scores(match, mismatch)
        base_probs = [float(x) for x in base.split(",")]
        us = [float(x) for x in u_list.split(",")]
        report_const = rna_mod.significance_constants(
            f, base_probs, pen, n_samples=n_samples, eps=eps, seed=seed,
            workers=workers)
        rows = []
        for u in us:
            low, high = rna_mod.p_value_band(length, report_const, u)
            rows.append({"u": u, "p_value": rna_mod.p_value(length, report_const, u),
                         "p_low": low, "p_high": high})
    except (ReflectedWalkError, ValueError) as exc:
        _fail(exc)
    report = {
        "command": "rna pvalue",
        "version": __version__,
        "config": {"n": length, "penalty": penalty_spec, "base": base_probs,
                   "match": match, "mismatch": mismatch, "n_samples": n_samples,
                   "eps": eps, "seed": seed, "workers": workers},
        "theta_star": report_const.theta_star,
        "k_star": report_const.k_star,
        "c_d1": report_const.c_d1,
        "c_d2": report_const.c_d2,
        "c_b": report_const.c_b,
        "rows": rows,
    }
    if csv_path:
        _write_csv(csv_path, ["u", "p_value", "p_low", "p_high"], rows)
    _emit(report, as_json)


if __name__ == "__main__":
    main()
