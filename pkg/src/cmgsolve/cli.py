"""Experiment runner CLI.

``cmg-solve run --config exp.json [--jobs N] [--out DIR]`` executes a
multi-trial sweep: for every regularization value in the grid and every
trial, the configured solver runs from a trial-specific random
initialization, writes one CSV per trial, then an aggregate CSV (mean and
standard error of exploitability per checkpoint per mu) and a JSON summary.
``cmg-solve tune --config exp.json`` prints the closed-form constants and
theory step sizes for the configured game without running anything;
``cmg-solve validate --config exp.json`` checks the config and exits.

The config is a JSON document:

    {
      "game":   {"kind": "iterated_rpsd" | "matrix_game" | "entropy_cmdp",
                 "params": {...}},
      "solver": {... SolverConfig fields ...},
      "trials": 20,
      "mu_grid": [0.001, 0.01, 0.1],          # optional
      "master_seed": 7,
      "output_path": "out"                     # optional; --out overrides
    }

CMG_SOLVE_SEED in the environment overrides master_seed.  Exit status is 0
iff every trial completed without tripping the divergence guard.  Outputs
are byte-stable for a fixed config and seed.
"""

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict

import numpy as np

from .games import GameRecipe
from .minmax import tune
from .occupancy import occupancy_constants
from .sampling import estimator_bounds
from .solvers import SolverConfig, solve
from .utility import compute_moduli

PRESETS = {
    # Desk-scaled reproduction of the exploitability-decay experiment:
    # alternating solver on iterated RPS-dummy, 20 random initializations,
    # exact gradients, practical step sizes 0.1.
    "fig1_altpgda": {
        "game": {"kind": "iterated_rpsd", "params": {"gamma": 0.9}},
        "solver": {
            "algorithm": "alt_pgda", "mu_reg": 0.01, "tau_min": 0.1, "tau_max": 0.1,
            "outer_iters": 5000, "eval_cadence": 25, "gradient_mode": "exact",
            "init": "dirichlet",
        },
        "trials": 20,
        "mu_grid": [0.001, 0.01, 0.1],
        "master_seed": 2024,
    },
}


def _preset(name):
    doc = json.loads(json.dumps(PRESETS[name]))
    return doc


def load_config(path=None, preset=None):
    if (path is None) == (preset is None):
        raise ValueError("exactly one of --config / --preset is required")
    if preset is not None:
        if preset not in PRESETS:
            raise KeyError(f"unknown preset {preset!r}; known: {sorted(PRESETS)}")
        return _preset(preset)
    with open(path) as fh:
        return json.load(fh)


def validate_config(doc):
    """Returns a list of problems; empty means runnable."""
    problems = []
    game = doc.get("game")
    if not isinstance(game, dict) or "kind" not in game:
        problems.append("game: missing or malformed (needs {'kind', 'params'})")
    else:
        try:
            GameRecipe(game["kind"], game.get("params", {})).build()
        except Exception as exc:
            problems.append(f"game: {exc}")
    solver = doc.get("solver", {})
    try:
        cfg = SolverConfig(**solver)
        problems.extend(f"solver: {p}" for p in cfg.validate())
    except TypeError as exc:
        problems.append(f"solver: {exc}")
    trials = doc.get("trials", 1)
    if not isinstance(trials, int) or trials < 1:
        problems.append(f"trials: must be an integer >= 1, got {trials!r}")
    mu_grid = doc.get("mu_grid")
    if mu_grid is not None:
        if not isinstance(mu_grid, list) or any(m < 0 for m in mu_grid):
            problems.append("mu_grid: must be a list of nonnegative numbers")
    seed = doc.get("master_seed", 0)
    if not isinstance(seed, int):
        problems.append("master_seed: must be an integer")
    return problems


def trial_seed(master_seed, index):
    return int(np.random.SeedSequence([master_seed, index]).generate_state(1)[0])


def _run_trial(args):
    game_doc, solver_doc, mu, index, seed = args
    model, spec = GameRecipe(game_doc["kind"], game_doc.get("params", {})).build()
    cfg = SolverConfig(**{**solver_doc, "mu_reg": mu, "seed": seed, "init": "dirichlet"})
    report = solve(model, spec, cfg)
    rows = [
        (c.iter, c.exploitability) for c in report.checkpoints
    ]
    return {
        "mu": mu,
        "index": index,
        "rows": rows,
        "csv_rows": _csv_rows(report),
        "t_star": report.best_iter,
        "final_exploitability": report.final_exploitability,
        "diverged": report.diverged,
    }


def _csv_rows(report):
    out = []
    for c in report.checkpoints:
        out.append([
            c.iter,
            format(c.u_value, ".17g"),
            format(c.exploitability, ".17g"),
            format(c.gap_min_side, ".17g"),
            format(c.gap_max_side, ".17g"),
            format(c.d_x_proxy, ".17g"),
            format(c.d_y_proxy, ".17g"),
            c.certificate,
        ])
    return out


HEADER = "iter,u_value,exploitability,gap_min_side,gap_max_side,d_x_proxy,d_y_proxy,br_certificate"


def _write_trial_csv(path, csv_rows):
    with open(path, "w", newline="") as fh:
        fh.write(HEADER + "\n")
        for row in csv_rows:
            fh.write(",".join(str(v) for v in row) + "\n")


def run_experiment(doc, out_dir, jobs=1):
    """Execute the sweep; returns (exit_status, summary dict)."""
    problems = validate_config(doc)
    if problems:
        raise ValueError("config invalid: " + "; ".join(problems))
    master_seed = doc.get("master_seed", 0)
    env = os.environ.get("CMG_SOLVE_SEED")
    if env is not None:
        master_seed = int(env)
    trials = doc.get("trials", 1)
    mu_grid = doc.get("mu_grid")
    solver_doc = dict(doc.get("solver", {}))
    single_mu = solver_doc.get("mu_reg", SolverConfig().mu_reg)
    mus = list(mu_grid) if mu_grid else [single_mu]
    os.makedirs(out_dir, exist_ok=True)

    jobs_list = [
        (doc["game"], solver_doc, mu, i, trial_seed(master_seed, i))
        for mu in mus
        for i in range(trials)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_trial, jobs_list))
    else:
        results = [_run_trial(a) for a in jobs_list]

    results.sort(key=lambda r: (mus.index(r["mu"]), r["index"]))
    for r in results:
        if mu_grid:
            sub = os.path.join(out_dir, f"mu_{r['mu']:g}")
            os.makedirs(sub, exist_ok=True)
            path = os.path.join(sub, f"trial_{r['index']}.csv")
        else:
            path = os.path.join(out_dir, f"trial_{r['index']}.csv")
        _write_trial_csv(path, r["csv_rows"])

    # aggregate exploitability across trials per (mu, checkpoint)
    agg_path = os.path.join(out_dir, "aggregate.csv")
    per_mu = []
    with open(agg_path, "w", newline="") as fh:
        fh.write("mu,iter,exploitability_mean,exploitability_se,n_trials\n")
        for mu in mus:
            group = [r for r in results if r["mu"] == mu]
            iters = [it for it, _ in group[0]["rows"]]
            table = np.array([[e for _, e in r["rows"]] for r in group])
            mean = table.mean(axis=0)
            se = (table.std(axis=0, ddof=1) / math.sqrt(len(group))) if len(group) > 1 else np.zeros(len(iters))
            for k, it in enumerate(iters):
                fh.write(
                    f"{mu:g},{it},{format(mean[k], '.17g')},{format(se[k], '.17g')},{len(group)}\n"
                )
            finals = np.array([r["final_exploitability"] for r in group])
            per_mu.append({
                "mu": mu,
                "final_exploitability_mean": float(finals.mean()),
                "final_exploitability_se": float(finals.std(ddof=1) / math.sqrt(len(finals)))
                if len(finals) > 1 else 0.0,
                "t_star": [r["t_star"] for r in group],
                "diverged_trials": int(sum(r["diverged"] for r in group)),
            })

    status = 0 if not any(r["diverged"] for r in results) else 1
    summary = {
        "config": doc,
        "master_seed": master_seed,
        "per_mu": per_mu,
        "exit_status": status,
    }
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return status, summary


def tune_report(doc, out=sys.stdout):
    """Print every theory constant for the configured game; runs nothing."""
    problems = validate_config(doc)
    if problems:
        raise ValueError("config invalid: " + "; ".join(problems))
    model, spec = GameRecipe(doc["game"]["kind"], doc["game"].get("params", {})).build()
    solver_doc = dict(doc.get("solver", {}))
    cfg = SolverConfig(**solver_doc)
    mu_sc = spec.strong_concavity
    strongly = mu_sc[0] > 0 and mu_sc[1] > 0
    regime = "strongly_concave" if strongly else "concave"
    mu = cfg.mu_reg if not strongly else 0.0
    occ = occupancy_constants(model)

    def line(name, value, formula):
        if value is None or (isinstance(value, float) and not math.isfinite(value)):
            out.write(f"{name:>16} = {'inf' if value is not None else 'n/a':<24} [{formula}]\n")
        else:
            out.write(f"{name:>16} = {value:<24.12g} [{formula}]\n")

    S, A, B = model.n_states, model.n_actions_min, model.n_actions_max
    out.write(f"game: {doc['game']['kind']}  S={S} A={A} B={B} gamma={model.discount}\n")
    line("lip_lambda", occ.lip_lambda, "sqrt(S)(A+B)/(1-g)^2")
    line("smooth_lambda", occ.smooth_lambda, "2 g sqrt(S)(A+B)^1.5/(1-g)^3")
    line("lip_lambda_inv", occ.lip_lambda_inverse, "2/(min_rho (1-g))")
    try:
        report = compute_moduli(model, spec, mu_reg=mu, regime=regime)
    except ValueError as exc:
        out.write(f"moduli unavailable: {exc}\n")
        return
    for name, value, formula in report.lines():
        line(name, value, formula)

    ell = report.smooth_U_reg if regime == "concave" else report.smooth_U
    lip = report.lip_U_reg if regime == "concave" else report.lip_U
    d_x, d_y = math.sqrt(2 * S), math.sqrt(2 * S)
    eps = float(doc.get("tune", {}).get("eps", 0.1))
    sig_x = sig_y = 0.0
    if cfg.gradient_mode == "stochastic" and cfg.explore_min > 0:
        lf = spec.lip_F(model)
        sig_x = estimator_bounds(lf, model.discount, cfg.explore_min, cfg.batch_min,
                                 cfg.horizon).variance_bound * cfg.batch_min
        sig_y = estimator_bounds(lf, model.discount, cfg.explore_max or cfg.explore_min,
                                 cfg.batch_max, cfg.horizon).variance_bound * cfg.batch_max
    regime_key = ("ppl_ppl_" if strongly else "nc_ppl_") + (
        "altgda" if cfg.algorithm == "alt_pgda" else "gdmax"
    )
    try:
        tuning = tune(
            regime_key, ell=ell, lip=lip, kappa=report.kappa,
            mu_x=report.mu_pl_min, mu_y=report.mu_pl,
            d_x=d_x, d_y=d_y, sigma_x2=sig_x, sigma_y2=sig_y, eps=eps,
        )
    except ValueError as exc:
        out.write(f"tuning unavailable for {regime_key}: {exc}\n")
        return
    out.write(f"regime: {regime_key}  (target accuracy eps={eps:g})\n")
    tau_src = "1/(500 l k^2)" if regime_key == "nc_ppl_altgda" else (
        "mu_y^2/(160 l^3)" if regime_key == "ppl_ppl_altgda" else "1/(l k)"
    )
    line("tau_min", tuning.tau_min, tau_src)
    line("tau_max", tuning.tau_max, "1/(5 l)" if "altgda" in regime_key else "1/l")
    line("batch_min", tuning.batch_min, "variance/eps schedule")
    line("batch_max", tuning.batch_max, "variance/eps schedule")
    line("iters", tuning.iters, "regime iteration bound")
    if tuning.inner_tol is not None:
        line("inner_tol", tuning.inner_tol, "eps/sqrt(18)")


def main(argv=None):
    parser = argparse.ArgumentParser(prog="cmg-solve", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "tune", "validate"):
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="path to experiment JSON")
        p.add_argument("--preset", default=None, choices=sorted(PRESETS),
                       help="named built-in experiment")
        if name == "run":
            p.add_argument("--jobs", type=int, default=1, help="concurrent trials")
            p.add_argument("--out", default=None, help="output directory")
    args = parser.parse_args(argv)
    try:
        doc = load_config(args.config, args.preset)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.command == "validate":
        problems = validate_config(doc)
        if problems:
            for p in problems:
                print(f"invalid: {p}", file=sys.stderr)
            return 2
        print("config ok")
        return 0
    if args.command == "tune":
        try:
            tune_report(doc)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        return 0
    # run
    out_dir = args.out or doc.get("output_path") or "cmg_out"
    try:
        status, summary = run_experiment(doc, out_dir, jobs=max(1, args.jobs))
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1
    for entry in summary["per_mu"]:
        print(
            f"mu={entry['mu']:g}: final exploitability "
            f"{entry['final_exploitability_mean']:.6g} "
            f"+/- {entry['final_exploitability_se']:.2g} "
            f"({entry['diverged_trials']} diverged)"
        )
    print(f"outputs in {out_dir}")
    return status


if __name__ == "__main__":
    sys.exit(main())
