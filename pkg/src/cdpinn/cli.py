"""Command-line experiment runner.

Every subcommand writes its CSV files plus ``config.echo`` (the config text,
verbatim) and ``run_meta.csv`` into ``--out``. Files are staged in a scratch
directory and only moved into place when the run succeeds.
"""

from __future__ import annotations

import argparse
import csv
import shutil
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import fdm, net, ntk, trainer
from .config import ExperimentConfig, load_config, parse_config
from .errors import CdPinnError, ConfigError
from .problems import Problem1D, Problem2D


def fmt(v):
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def write_meta(path, items):
    write_csv(path, ["key", "value"], list(items))


def _loss_rows(history, offset=0):
    return [(offset + e, lu, lr, tot) for e, lu, lr, tot in history]


def cmd_fdm_solve(cfg, out, args):
    problem = cfg.make_problem()
    if not isinstance(problem, Problem1D):
        raise ConfigError("fdm-solve needs a 1D problem")
    sol = fdm.solve_central(problem, cfg.fdm_N)
    write_csv(out / "solution.csv", ["x", "u_fdm", "u_exact"], zip(sol.nodes, sol.values, problem.exact(sol.nodes)))
    osc, first = fdm.detect_oscillation(sol)
    return [
        ("N", sol.N),
        ("epsilon", problem.epsilon),
        ("peclet", sol.peclet),
        ("oscillatory", osc),
        ("first_oscillation_index", "" if first is None else first),
        ("max_error", float(np.max(np.abs(sol.values - problem.exact(sol.nodes))))),
        ("system_residual", fdm.system_residual(problem, sol)),
    ]


def cmd_train_correct_fdm(cfg, out, args):
    problem = cfg.make_problem()
    if not isinstance(problem, Problem1D):
        raise ConfigError("train-correct-fdm needs a 1D problem")
    run = trainer.correct_fdm_iteratively(
        problem, cfg.fdm_N, cfg.iterations, cfg.net_dims(), cfg.make_transform(), cfg.schedule(), cfg.seed, cfg.res_step
    )
    rows, offset = [], 0
    for h in run.histories:
        rows.extend(_loss_rows(h, offset))
        offset += len(h)
    write_csv(out / "loss.csv", ["epoch", "L_u", "L_r", "total"], rows)
    write_csv(out / "solution.csv", ["x", "u_exact", "u_approx"], zip(run.nodes, problem.exact(run.nodes), run.final))
    header = ["x"] + [f"U{j}" for j in range(len(run.iterates))]
    write_csv(out / "iterates.csv", header, zip(run.nodes, *run.iterates))
    write_csv(
        out / "iterations.csv",
        ["iteration", "max_error", "l2_error"],
        zip(range(len(run.max_errors)), run.max_errors, run.l2_errors),
    )
    for j, p in enumerate(run.params, start=1):
        net.save_params(p, out / f"params_iter{j}.txt")
    return [
        ("iterations", cfg.iterations),
        ("fdm_max_error", run.max_errors[0]),
        ("final_max_error", run.max_errors[-1]),
        ("final_l2_error", run.l2_errors[-1]),
        ("converged", run.converged),
        ("final_loss", run.histories[-1][-1][3] if run.histories[-1] else ""),
    ]


def cmd_train_correct_reduced(cfg, out, args):
    problem = cfg.make_problem()
    if not isinstance(problem, Problem1D):
        raise ConfigError("train-correct-reduced needs a 1D problem")
    run = trainer.run_reduced(problem, cfg.net_dims(), cfg.make_transform(), cfg.schedule(), cfg.seed, cfg.res_step)
    write_csv(out / "loss.csv", ["epoch", "L_u", "L_r", "total"], _loss_rows(run.result.history))
    write_csv(out / "solution.csv", ["x", "u_exact", "u_approx"], zip(run.x, problem.exact(run.x), run.approx))
    net.save_params(run.result.params, out / "params.txt")
    o = run.outcome
    return [
        ("seed", cfg.seed),
        ("label", o.label),
        ("d_exact", o.d_exact),
        ("d_opposite", o.d_opposite),
        ("d_linear", o.d_linear),
        ("final_loss", run.result.final_loss if run.result.history else ""),
        ("adam_final_loss", "" if run.result.adam_final_loss is None else run.result.adam_final_loss),
        ("lbfgs_stalled", run.result.stalled),
    ]


def cmd_train_2d(cfg, out, args):
    problem = cfg.make_problem()
    if not isinstance(problem, Problem2D):
        raise ConfigError("train-2d needs problem = cd2d")
    transform = cfg.make_transform()
    _, result = trainer.train_2d(problem, cfg.net_dims(), transform, cfg.schedule(), cfg.seed, cfg.n2d)
    xx, yy, exact, approx, err = trainer.evaluate_2d(problem, result.params, transform, cfg.n2d)
    write_csv(out / "loss.csv", ["epoch", "L_u", "L_r", "total"], _loss_rows(result.history))
    write_csv(out / "solution.csv", ["x", "y", "u_exact", "u_approx"], zip(xx.ravel(), yy.ravel(), exact.ravel(), approx.ravel()))
    net.save_params(result.params, out / "params.txt")
    return [
        ("seed", cfg.seed),
        ("l2_error", err),
        ("max_error", float(np.max(np.abs(approx - exact)))),
        ("final_loss", result.final_loss if result.history else ""),
    ]


def cmd_sweep_seeds(cfg, out, args):
    problem = cfg.make_problem()
    if not isinstance(problem, Problem1D):
        raise ConfigError("sweep-seeds needs a 1D problem")
    rows = trainer.seed_sweep(
        problem, cfg.net_dims(), cfg.make_transform(), cfg.schedule(), cfg.seeds, workers=args.threads
    )
    table = []
    for r in rows:
        if r.outcome is None:
            table.append((r.seed, "failed", "", "", ""))
        else:
            o = r.outcome
            table.append((r.seed, o.label, o.d_exact, o.d_opposite, o.d_linear))
    write_csv(out / "outcomes.csv", ["seed", "label", "d_exact", "d_opposite", "d_linear"], table)
    counts = trainer.sweep_counts(rows)
    errors = [(f"error_seed_{r.seed}", r.error) for r in rows if r.error]
    return [(f"count_{k}", v) for k, v in counts.items()] + [("runs", len(rows))] + errors


def cmd_ntk_analyze(cfg, out, args):
    problem = cfg.make_problem()
    transform = cfg.make_transform()
    dims = cfg.net_dims()
    if isinstance(problem, Problem2D):
        samples = trainer.build_samples_2d(problem, cfg.n2d)
    elif cfg.ntk_samples == "fdm":
        uhat = fdm.interpolant(fdm.solve_central(problem, cfg.fdm_N))
        samples = trainer.build_samples_fdm(problem, uhat, cfg.res_step)
    elif cfg.ntk_samples == "reduced":
        samples = trainer.build_samples_reduced(problem, cfg.res_step)
    else:
        raise ConfigError(f"ntk.samples must be reduced or fdm, got {cfg.ntk_samples!r}")
    params = net.init_xavier(dims, cfg.seed)
    if cfg.ntk_trained:
        params = trainer.train(params, transform, samples, cfg.schedule()).params
    kernel = ntk.assemble_kernel(params, transform, samples)
    spec = ntk.eig_sym(kernel.K)
    k = min(cfg.ntk_k, kernel.N)
    table = ntk.top_eigenvectors(spec, kernel, k)
    write_csv(out / "eigenvalues.csv", ["rank", "lambda"], zip(range(1, kernel.N + 1), spec.values))
    coord_names = ["x", "y"][: samples.dim]
    vec_names = [f"v{i}" for i in range(1, k + 1)]
    write_csv(
        out / "eigenvectors.csv",
        coord_names + vec_names,
        (list(p) + list(v) for p, v in zip(table.points, table.vectors)),
    )
    write_csv(
        out / "kernel_summary.csv",
        ["Tr_Kuu", "Tr_Krr", "c", "lambda_max", "lambda_min"],
        [(kernel.trace_uu, kernel.trace_rr, ntk.convergence_rate(kernel), spec.lambda_max, spec.lambda_min)],
    )
    checks = ntk.kernel_checks(kernel, spec)
    return [("N", kernel.N), ("n_u", kernel.n_u), ("n_r", kernel.n_r)] + sorted(checks.items())


COMMANDS = {
    "fdm-solve": cmd_fdm_solve,
    "train-correct-fdm": cmd_train_correct_fdm,
    "train-correct-reduced": cmd_train_correct_reduced,
    "train-2d": cmd_train_2d,
    "sweep-seeds": cmd_sweep_seeds,
    "ntk-analyze": cmd_ntk_analyze,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="cdpinn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="key = value config file")
        p.add_argument("--out", type=Path, default=Path("out") / name)
        p.add_argument("--threads", type=int, default=1, help="parallel runs (sweep-seeds)")
        if name == "fdm-solve":
            p.add_argument("--N", type=int)
            p.add_argument("--epsilon", type=float)
    return parser


def _config_for(args):
    if args.command == "fdm-solve" and args.config is None:
        lines = ["problem = primary1d"]
        if args.epsilon is not None:
            lines.append(f"epsilon = {args.epsilon!r}")
        if args.N is not None:
            lines.append(f"fdm.N = {args.N}")
        return parse_config("\n".join(lines) + "\n")
    if args.config is None:
        raise ConfigError(f"{args.command} needs --config")
    cfg = load_config(args.config)
    if args.command == "fdm-solve":
        if args.N is not None:
            cfg.fdm_N = args.N
        if args.epsilon is not None:
            cfg.epsilon = args.epsilon
    return cfg


def run(argv=None):
    args = build_parser().parse_args(argv)
    out = args.out
    staging = None
    try:
        cfg = _config_for(args)
        out.parent.mkdir(parents=True, exist_ok=True)
        staging = Path(tempfile.mkdtemp(prefix=".staging-", dir=out.parent))
        t0 = time.perf_counter()
        meta = COMMANDS[args.command](cfg, staging, args)
        (staging / "config.echo").write_text(cfg.text)
        write_meta(staging / "run_meta.csv", [("command", args.command)] + meta + [("wall_time_s", time.perf_counter() - t0)])
        out.mkdir(parents=True, exist_ok=True)
        for f in staging.iterdir():
            shutil.move(str(f), out / f.name)
    except CdPinnError as exc:
        print(f"cdpinn {args.command}: error: {exc}", file=sys.stderr)
        return 2
    finally:
        if staging is not None and staging.exists():
            shutil.rmtree(staging, ignore_errors=True)
    print(f"wrote {out}")
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
