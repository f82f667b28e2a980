"""Command-line front end: fit, mc, diagnose, penalty.

Every report is JSON with an embedded run manifest (schema
``hdsel-report/1``); histogram and table payloads can also be written as
CSV for plotting pipelines.  Exit codes: 0 success, 1 runtime or data
error, 2 usage or domain error.
"""

import argparse
import csv
import json
import math
import sys
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .core import DomainError, HdselError, load_csv_dataset
from .eigen import (
    re_lower_bound,
    re_sampled,
    sparse_eig_profile,
    sparse_eigs_exact,
    theorem1_bound,
    theorem2_bound,
)
from .exhaustive import ENUMERATION_BUDGET
from .mc import McConfig, run_mc
from .penalty import (
    PenaltySpec,
    lambda_x_independent,
    score_quantile,
    tail_bound_check,
)
from .postsel import estimate_sigma, ols_inference, post_lasso
from .solver import SolverOptions, lasso_path, solve_lasso

SCHEMA_ID = "hdsel-report/1"


def _now():
    return datetime.now(timezone.utc).isoformat()


def _manifest(command, config, seed, started):
    return {
        "command": command,
        "config": config,
        "seed": int(seed),
        "tool_version": __version__,
        "timestamps": {"started": started, "finished": _now()},
    }


def _emit(report, args, csv_rows=None):
    if getattr(args, "format", "json") == "csv" and csv_rows is not None:
        text_rows = csv_rows
        out = sys.stdout if args.output is None else open(args.output, "w", newline="")
        try:
            writer = csv.writer(out)
            for row in text_rows:
                writer.writerow(row)
        finally:
            if out is not sys.stdout:
                out.close()
        return
    payload = json.dumps(report, indent=2, sort_keys=True)
    if args.output is None:
        print(payload)
    else:
        with open(args.output, "w") as fh:
            fh.write(payload + "\n")


def _parse_divisors(text):
    try:
        divisors = [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise DomainError(f"bad divisor list {text!r}") from exc
    if not divisors or any(d < 1 for d in divisors):
        raise DomainError("divisors must be positive integers")
    return sorted(set(divisors))


def cmd_fit(args):
    started = _now()
    ds = load_csv_dataset(args.csv, response=args.response)
    n, p = ds.n, ds.p
    rule = "x_dependent" if args.penalty_rule == "xdep" else "x_independent"
    divisors = _parse_divisors(args.lambda_divisors)

    if rule == "x_dependent":
        quantile = score_quantile(ds, args.alpha, args.sim_draws, args.seed)
    else:
        spec1 = PenaltySpec(rule="x_independent", c=args.c, alpha=args.alpha, sigma=1.0)
        quantile = lambda_x_independent(n, p, spec1) / (2.0 * args.c)

    ybar = float(np.mean(ds.y))
    sigma0 = float(np.sqrt(np.mean((ds.y - ybar) ** 2)))
    sigma_base = args.sigma if args.sigma is not None else sigma0
    lam_base = 2.0 * args.c * sigma_base * quantile

    method = "lasso" if args.sigma_mode == "lasso" else "post_lasso"
    spec = PenaltySpec(rule=rule, c=args.c, alpha=args.alpha, sigma=1.0,
                       sim_draws=args.sim_draws, seed=args.seed)
    est = estimate_sigma(ds, spec, method=method, nu=args.sigma_nu,
                         max_iter=args.sigma_max_iter)
    lam_it = 2.0 * args.c * est.final * quantile

    jobs = [(f"lambda/{k}" if k > 1 else "lambda", lam_base / k) for k in divisors]
    jobs.append(("lambda_it", lam_it))
    # Warm-start along descending penalties; keep the reported order stable.
    order = sorted(range(len(jobs)), key=lambda i: -jobs[i][1])
    fits = lasso_path(ds, _strictly_descending([jobs[i][1] for i in order]))
    fit_by_job = {}
    for rank, i in enumerate(order):
        fit_by_job[i] = fits[rank]

    models = []
    for i, (label, lam) in enumerate(jobs):
        fit = fit_by_job[i]
        supp = fit.beta.support
        selected = []
        skipped = None
        inference = None
        if supp and len(supp) < n:
            try:
                inference = ols_inference(ds, supp, level=args.level)
            except HdselError as exc:
                skipped = str(exc)
        elif len(supp) >= n:
            skipped = f"selected {len(supp)} columns with n={n}; inference skipped"
        for pos, j in enumerate(supp):
            entry = {
                "index": int(j),
                "name": ds.names[j] if ds.names else f"x{j}",
                "coefficient": None, "std_error": None,
                "ci_low": None, "ci_high": None,
            }
            if inference is not None:
                entry["coefficient"] = float(inference.coefficients[pos])
                entry["std_error"] = float(inference.std_errors[pos])
                entry["ci_low"], entry["ci_high"] = inference.ci90[pos]
            selected.append(entry)
        models.append({
            "label": label,
            "lambda": float(lam),
            "selected": selected,
            "converged": bool(fit.converged),
            "kkt_violation": float(fit.kkt_violation),
            "inference_skipped": skipped,
        })

    config = {
        "csv": str(args.csv), "response": args.response, "penalty_rule": rule,
        "alpha": args.alpha, "c": args.c, "sigma": args.sigma,
        "sigma_mode": args.sigma_mode, "sim_draws": args.sim_draws,
        "lambda_divisors": divisors, "level": args.level,
    }
    report = {
        "schema": SCHEMA_ID,
        "manifest": _manifest("fit", config, args.seed, started),
        "fit": {
            "penalty_rule": rule,
            "quantile": float(quantile),
            "lambda_base": float(lam_base),
            "lambda_it": float(lam_it),
            "sigma_initial": sigma0,
            "sigma_trace": [float(v) for v in est.trace],
            "sigma_estimate": float(est.final),
            "models": models,
        },
    }
    rows = [["model", "lambda", "index", "name", "coefficient", "std_error",
             "ci_low", "ci_high"]]
    for model in models:
        for entry in model["selected"]:
            rows.append([model["label"], model["lambda"], entry["index"],
                         entry["name"], entry["coefficient"], entry["std_error"],
                         entry["ci_low"], entry["ci_high"]])
    _emit(report, args, rows)
    return 0


def _strictly_descending(lams):
    """Nudge equal neighbours apart so the path solver accepts the list."""
    out = []
    for lam in lams:
        if out and lam >= out[-1]:
            lam = out[-1] * (1.0 - 1e-12)
        out.append(lam)
    return out


def cmd_mc(args):
    started = _now()
    sigma2 = args.sigma2
    if args.design is not None:
        sigma2 = {1: 1.0, 2: 0.1}[args.design]
    mode = {"known": "known", "lasso": "estimated_lasso",
            "postlasso": "estimated_postlasso"}[args.sigma_mode]
    config = McConfig(
        n=args.n, p=args.p, s=args.s, rho=args.rho, sigma2=sigma2,
        reps=args.reps, alpha=args.alpha, c=args.c,
        penalty_rule="x_dependent" if args.penalty_rule == "xdep" else "x_independent",
        sigma_mode=mode, penalty_draws=args.penalty_draws,
        seed=args.seed, threads=args.threads,
    )
    report_obj = run_mc(config)
    est = {
        key: {"mean_l0": st.mean_l0, "bias_norm": st.bias_norm,
              "mean_pred_error": st.mean_pred_error}
        for key, st in report_obj.estimators.items()
    }
    config_echo = dict(report_obj.config)
    # Worker count is an execution detail; reports are invariant to it.
    config_echo.pop("threads", None)
    payload = {
        "estimators": est,
        "hist_selected": {str(k): v for k, v in report_obj.hist_selected.items()},
        "hist_true_pos": {str(k): v for k, v in report_obj.hist_true_pos.items()},
        "rep_count": report_obj.rep_count,
        "failures": report_obj.failures,
        "flagged": report_obj.flagged,
        "sigma_summary": report_obj.sigma_summary,
    }
    report = {
        "schema": SCHEMA_ID,
        "manifest": _manifest("mc", config_echo, args.seed, started),
        "mc": payload,
    }
    if args.hist_csv:
        for name, hist in (("selected", report_obj.hist_selected),
                           ("true_pos", report_obj.hist_true_pos)):
            path = f"{args.hist_csv}_{name}.csv"
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["bin", "count"])
                for k in sorted(hist):
                    writer.writerow([k, hist[k]])
    rows = [["hist", "bin", "count"]]
    for name, hist in (("selected", report_obj.hist_selected),
                       ("true_pos", report_obj.hist_true_pos)):
        for k in sorted(hist):
            rows.append([name, k, hist[k]])
    _emit(report, args, rows)
    return 0


def _parse_support(ds, text):
    supp = []
    names = list(ds.names) if ds.names else []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        if token in names:
            supp.append(names.index(token))
        else:
            try:
                supp.append(int(token))
            except ValueError as exc:
                raise DomainError(f"unknown column {token!r}") from exc
    if not supp:
        raise DomainError("empty support")
    if any(j < 0 or j >= ds.p for j in supp):
        raise DomainError("support index out of range")
    return tuple(sorted(set(supp)))


def cmd_diagnose(args):
    started = _now()
    ds = load_csv_dataset(args.csv, response=args.response)
    rule = "x_dependent" if args.penalty_rule == "xdep" else "x_independent"
    spec = PenaltySpec(rule=rule, c=args.c, alpha=args.alpha, sigma=1.0,
                       sim_draws=args.sim_draws, seed=args.seed)

    if args.support:
        support = _parse_support(ds, args.support)
    else:
        est = estimate_sigma(ds, spec, method="post_lasso")
        if rule == "x_dependent":
            quantile = score_quantile(ds, args.alpha, args.sim_draws, args.seed)
        else:
            quantile = lambda_x_independent(ds.n, ds.p, spec) / (2.0 * args.c)
        fit = solve_lasso(ds, max(2.0 * args.c * est.final * quantile, 1e-12))
        support = fit.beta.support
        if not support:
            raise DomainError(
                "data-driven selection is empty; pass --support explicitly"
            )
    s = len(support)
    cbar = (args.c + 1.0) / (args.c - 1.0)

    free = ds.p - s
    budget_needed = sum(math.comb(free, k) for k in range(0, min(args.m, free) + 1))
    exact_ok = budget_needed <= ENUMERATION_BUDGET
    notice = None
    kappa = phi = mu = []
    re_lower = None
    if exact_ok and not args.sampled:
        kappa, phi = sparse_eig_profile(ds, support, args.m)
        mu = [math.sqrt(p_) / k_ if k_ > 0 else None for k_, p_ in zip(kappa, phi)]
        best = 0.0
        for m in range(1, args.m + 1):
            rep = sparse_eigs_exact(ds, support, m)
            best = max(best, re_lower_bound(rep, s, cbar, m))
        re_lower = best
    elif args.sampled:
        notice = "sampled mode: exact eigenvalue arrays skipped"
    else:
        raise HdselError(
            f"exact diagnostics for m={args.m} would scan {budget_needed} subsets "
            f"(budget {ENUMERATION_BUDGET}); rerun with --sampled or a smaller --m"
        )

    sampled = re_sampled(ds, support, cbar, args.re_draws, seed=args.seed)

    theorem1 = None
    theorem2 = None
    if re_lower and re_lower > 0:
        est = estimate_sigma(ds, spec, method="post_lasso")
        if rule == "x_dependent":
            quantile = score_quantile(ds, args.alpha, args.sim_draws, args.seed)
        else:
            quantile = lambda_x_independent(ds.n, ds.p, spec) / (2.0 * args.c)
        lam = 2.0 * args.c * est.final * quantile
        theorem1 = theorem1_bound(lam, s, ds.n, re_lower, args.c, 0.0)
        t2 = theorem2_bound(ds, support, lam, s, re_lower, args.c, 0.0, ds.n)
        theorem2 = {"bound": t2.bound, "L": t2.L, "conclusive": t2.conclusive,
                    "m_star": t2.m_star, "m_cap": t2.m_cap}

    config = {
        "csv": str(args.csv), "response": args.response, "support": list(support),
        "m": args.m, "alpha": args.alpha, "c": args.c, "sampled": bool(args.sampled),
        "re_draws": args.re_draws, "sim_draws": args.sim_draws,
        "penalty_rule": rule,
    }
    report = {
        "schema": SCHEMA_ID,
        "manifest": _manifest("diagnose", config, args.seed, started),
        "diagnose": {
            "support": list(support),
            "kappa": [float(v) for v in kappa],
            "phi": [float(v) for v in phi],
            "mu": [None if v is None else float(v) for v in mu],
            "re_lower": re_lower,
            "re_sampled": sampled,
            "theorem1_bound": theorem1,
            "theorem2": theorem2,
            "notice": notice,
        },
    }
    rows = [["m", "kappa", "phi", "mu"]]
    for m, (k_, p_, m_) in enumerate(zip(kappa, phi, mu)):
        rows.append([m, k_, p_, m_])
    _emit(report, args, rows)
    return 0


def cmd_penalty(args):
    started = _now()
    spec = PenaltySpec(
        rule="x_independent", c=args.c, alpha=args.alpha, sigma=args.sigma,
        sim_draws=args.sim_draws, seed=args.seed,
    )
    n, p = args.n, args.p
    quantile = None
    lam_dep = None
    if args.csv:
        ds = load_csv_dataset(args.csv, response=args.response)
        n, p = ds.n, ds.p
        quantile = score_quantile(ds, args.alpha, args.sim_draws, args.seed)
        lam_dep = 2.0 * args.c * args.sigma * quantile
    if n is None or p is None:
        raise DomainError("pass --n and --p, or --csv")
    lam_ind = lambda_x_independent(n, p, spec)
    mid, hi = tail_bound_check(n, p, args.alpha)
    config = {
        "n": n, "p": p, "alpha": args.alpha, "c": args.c, "sigma": args.sigma,
        "sim_draws": args.sim_draws, "csv": str(args.csv) if args.csv else None,
    }
    report = {
        "schema": SCHEMA_ID,
        "manifest": _manifest("penalty", config, args.seed, started),
        "penalty": {
            "x_independent": lam_ind,
            "x_dependent": lam_dep,
            "quantile": quantile,
            "sim_draws": args.sim_draws if quantile is not None else None,
            "chain_mid": mid,
            "chain_high": hi,
        },
    }
    rows = [["key", "value"],
            ["x_independent", lam_ind],
            ["x_dependent", lam_dep],
            ["quantile", quantile],
            ["chain_mid", mid],
            ["chain_high", hi]]
    _emit(report, args, rows)
    return 0


def _add_common(sub):
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--threads", type=int, default=1)
    sub.add_argument("--output", default=None, help="write the report here")
    sub.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hdsel",
        description="Sparse regression with data-driven l1 penalties",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="fit a CSV dataset over a penalty ladder")
    p_fit.add_argument("csv")
    p_fit.add_argument("--response", default="y")
    p_fit.add_argument("--alpha", type=float, default=0.1)
    p_fit.add_argument("--c", type=float, default=1.1)
    p_fit.add_argument("--sigma", type=float, default=None,
                       help="known noise level; default uses sqrt(Var[y])")
    p_fit.add_argument("--sigma-mode", choices=("lasso", "postlasso"),
                       default="postlasso")
    p_fit.add_argument("--sigma-nu", type=float, default=1e-8)
    p_fit.add_argument("--sigma-max-iter", type=int, default=15)
    p_fit.add_argument("--penalty-rule", choices=("xdep", "xindep"), default="xdep")
    p_fit.add_argument("--sim-draws", type=int, default=10_000)
    p_fit.add_argument("--lambda-divisors", default="1,2,3,4,5")
    p_fit.add_argument("--level", type=float, default=0.9)
    _add_common(p_fit)
    p_fit.set_defaults(func=cmd_fit)

    p_mc = sub.add_parser("mc", help="Monte Carlo estimator sweep")
    p_mc.add_argument("--design", type=int, choices=(1, 2), default=None)
    p_mc.add_argument("--n", type=int, default=100)
    p_mc.add_argument("--p", type=int, default=500)
    p_mc.add_argument("--s", type=int, default=6)
    p_mc.add_argument("--rho", type=float, default=0.5)
    p_mc.add_argument("--sigma2", type=float, default=1.0)
    p_mc.add_argument("--reps", type=int, default=1000)
    p_mc.add_argument("--alpha", type=float, default=0.1)
    p_mc.add_argument("--c", type=float, default=1.1)
    p_mc.add_argument("--penalty-rule", choices=("xdep", "xindep"), default="xdep")
    p_mc.add_argument("--sigma-mode", choices=("known", "lasso", "postlasso"),
                      default="known")
    p_mc.add_argument("--penalty-draws", type=int, default=500)
    p_mc.add_argument("--hist-csv", default=None,
                      help="prefix for bin,count histogram CSV dumps")
    _add_common(p_mc)
    p_mc.set_defaults(func=cmd_mc)

    p_diag = sub.add_parser("diagnose", help="restricted-eigenvalue diagnostics")
    p_diag.add_argument("csv")
    p_diag.add_argument("--response", default="y")
    p_diag.add_argument("--support", default=None,
                        help="comma-separated column names or indices")
    p_diag.add_argument("--m", type=int, default=3)
    p_diag.add_argument("--alpha", type=float, default=0.1)
    p_diag.add_argument("--c", type=float, default=1.1)
    p_diag.add_argument("--sampled", action="store_true",
                        help="skip exact eigenvalue arrays")
    p_diag.add_argument("--re-draws", type=int, default=2000)
    p_diag.add_argument("--sim-draws", type=int, default=2000)
    p_diag.add_argument("--penalty-rule", choices=("xdep", "xindep"), default="xdep")
    _add_common(p_diag)
    p_diag.set_defaults(func=cmd_diagnose)

    p_pen = sub.add_parser("penalty", help="penalty levels and tail-bound chain")
    p_pen.add_argument("--n", type=int, default=None)
    p_pen.add_argument("--p", type=int, default=None)
    p_pen.add_argument("--alpha", type=float, default=0.1)
    p_pen.add_argument("--c", type=float, default=1.1)
    p_pen.add_argument("--sigma", type=float, default=1.0)
    p_pen.add_argument("--sim-draws", type=int, default=10_000)
    p_pen.add_argument("--csv", default=None)
    p_pen.add_argument("--response", default="y")
    _add_common(p_pen)
    p_pen.set_defaults(func=cmd_penalty)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except HdselError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
