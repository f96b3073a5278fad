"""Command-line front end.

Subcommands: ``gen`` (write a random instance), ``solve`` (greedy solve
with the bp/gamp/density engine), ``exact`` (exhaustive optimum),
``theory`` (entropy curve and M_opt), ``bench`` (ensemble experiments).
Machine-readable output; exit status 0 on success, 2 on usage errors,
1 with a diagnostic line on numeric/domain failures.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .bench import BenchConfig, parse_config, run_bench, write_outputs
from .cavity import IterOpts
from .errors import GmdkpError
from .greedy import density_greedy_solve, marginal_greedy_solve
from .instance import EnsembleParams, Instance, evaluate, generate_instance, load_instance, save_instance
from .oracle import DEFAULT_NODE_BUDGET, exact_optimum
from .replica import find_m_opt


def _add_ensemble_args(p: argparse.ArgumentParser, with_n: bool = True) -> None:
    if with_n:
        p.add_argument("--n", type=int, help="number of item types")
        g = p.add_mutually_exclusive_group()
        g.add_argument("--alpha", type=float, help="constraint density K/N")
        g.add_argument("--k", type=int, help="number of constraints (alternative to --alpha)")
    else:
        p.add_argument("--alpha", type=float, required=True, help="constraint density K/N")
    p.add_argument("--w", type=float, default=0.5, help="mean weight (default 0.5)")
    p.add_argument("--sigma2", type=float, default=1.0 / 12.0, help="weight variance (default 1/12)")
    p.add_argument("--c", type=float, default=0.25, help="capacity per item, C_mu = c*N (default 0.25)")
    p.add_argument("--xmax", type=int, default=1, help="per-item count cap (default 1)")
    p.add_argument("--seed", type=int, default=0, help="generator seed (default 0)")


def _params_from_args(args) -> EnsembleParams:
    if args.n is None:
        raise SystemExit("--n is required when generating an instance")
    alpha = args.alpha
    if alpha is None:
        alpha = (args.k / args.n) if args.k is not None else 1.0
    return EnsembleParams(
        n_items=args.n, alpha=alpha, mean_weight=args.w,
        weight_variance=args.sigma2, capacity_ratio=args.c,
        x_max=args.xmax, seed=args.seed,
    )


def _load_or_generate(args) -> tuple[Instance, EnsembleParams | None]:
    if args.instance is not None:
        text = Path(args.instance).read_text()
        return load_instance(text), None
    params = _params_from_args(args)
    return generate_instance(params), params


def cmd_gen(args) -> int:
    params = _params_from_args(args)
    text = save_instance(generate_instance(params))
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out} (N={params.n_items}, K={params.n_constraints})")
    else:
        sys.stdout.write(text)
    return 0


def cmd_solve(args) -> int:
    instance, params = _load_or_generate(args)
    opts = IterOpts(max_sweeps=args.max_sweeps, tol=args.tol, damping=args.damping)
    if args.engine == "greedy":
        trace = density_greedy_solve(instance, params=params)
    else:
        trace = marginal_greedy_solve(instance, args.engine, opts, warm_start=args.warm_start, params=params)
    ev = trace.final_evaluation
    print(f"engine {args.engine}")
    print(f"profit {ev.profit:.17g}")
    if ev.scaled_m is not None:
        print(f"scaled_m {ev.scaled_m:.17g}")
    print(f"feasible {int(ev.feasible)}")
    print(f"picks {len(trace.picks)}")
    print(f"sweeps_total {sum(trace.sweeps_per_pick)}")
    if args.engine != "greedy":
        print(f"residual {trace.final_residual:.6g}")
        print(f"clamp_count {trace.clamp_count}")
    print("selection " + " ".join(str(c) for c in trace.final_selection.counts))
    if args.trace:
        lines = ["pick,item,sweeps,converged"]
        for i, (item, sw, conv) in enumerate(
            zip(trace.picks, trace.sweeps_per_pick, trace.converged_per_pick)
        ):
            lines.append(f"{i},{item},{sw},{int(conv)}")
        Path(args.trace).write_text("\n".join(lines) + "\n")
        print(f"trace {args.trace}")
    return 0


def cmd_exact(args) -> int:
    instance, params = _load_or_generate(args)
    result = exact_optimum(instance, node_budget=args.budget)
    ev = evaluate(instance, result.best_selection, params)
    print(f"profit {result.best_profit:.17g}")
    if ev.scaled_m is not None:
        print(f"scaled_m {ev.scaled_m:.17g}")
    print(f"n_feasible {result.n_feasible}")
    print("selection " + " ".join(str(c) for c in result.best_selection.counts))
    return 0


def cmd_theory(args) -> int:
    params = EnsembleParams(
        n_items=64, alpha=args.alpha, mean_weight=args.w,
        weight_variance=args.sigma2, capacity_ratio=args.c, x_max=args.xmax, seed=0,
    )
    result = find_m_opt(args.alpha, params, m_step=args.step)
    print(f"alpha {args.alpha:.17g}")
    print(f"x_max {args.xmax}")
    print(f"m_opt {result.m_opt:.17g}")
    if args.curve:
        lines = ["M,S,Q,q,Q_hat,q_hat,M_hat,residual"]
        for pt in result.curve:
            o = pt.order
            lines.append(
                f"{pt.m:.17g},{pt.entropy:.17g},{o.Q:.17g},{o.q:.17g},"
                f"{o.Q_hat:.17g},{o.q_hat:.17g},{o.M_hat:.17g},{pt.residual:.3g}"
            )
        Path(args.curve).write_text("\n".join(lines) + "\n")
        print(f"curve {args.curve}")
    return 0


def cmd_bench(args) -> int:
    if args.config:
        config = parse_config(Path(args.config).read_text())
    else:
        config = BenchConfig()
    overrides = {}
    if args.n:
        overrides["n_values"] = tuple(args.n)
    if args.alpha:
        overrides["alpha_values"] = tuple(args.alpha)
    if args.xmax:
        overrides["x_max_values"] = tuple(args.xmax)
    if args.engines:
        overrides["engines"] = tuple(args.engines.split(","))
    if args.trials is not None:
        overrides["n_trials"] = args.trials
    if args.seed_base is not None:
        overrides["seed_base"] = args.seed_base
    if args.out is not None:
        overrides["output_dir"] = args.out
    if args.no_theory:
        overrides["theory"] = False
    if args.no_timestamp:
        overrides["timestamp"] = False
    if overrides:
        from dataclasses import replace

        config = replace(config, **overrides)
    records = run_bench(config)
    written = write_outputs(config, records)
    n_err = sum(1 for r in records if r.error)
    print(f"ran {len(records)} runs ({n_err} errors)")
    for path in written:
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gmdkp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random ensemble instance")
    _add_ensemble_args(p)
    p.add_argument("--out", help="output path (stdout if omitted)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="greedy solve with marginal or density ranking")
    p.add_argument("instance", nargs="?", help="instance file (omit to generate)")
    p.add_argument("--engine", choices=("bp", "gamp", "greedy"), default="bp")
    p.add_argument("--warm-start", action="store_true", default=True)
    p.add_argument("--no-warm-start", dest="warm_start", action="store_false")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--damping", type=float, default=0.7)
    p.add_argument("--max-sweeps", type=int, default=1000)
    p.add_argument("--trace", help="write per-pick diagnostics CSV here")
    _add_ensemble_args(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("exact", help="exhaustive optimum (small instances)")
    p.add_argument("instance", nargs="?", help="instance file (omit to generate)")
    p.add_argument("--budget", type=int, default=DEFAULT_NODE_BUDGET)
    _add_ensemble_args(p)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("theory", help="entropy curve and M_opt")
    _add_ensemble_args(p, with_n=False)
    p.add_argument("--step", type=float, default=0.05, help="grid step in M")
    p.add_argument("--curve", help="write the sampled curve CSV here")
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("bench", help="ensemble benchmark grid")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--n", type=int, nargs="+", help="N values")
    p.add_argument("--alpha", type=float, nargs="+", help="alpha values")
    p.add_argument("--xmax", type=int, nargs="+", help="x_max values")
    p.add_argument("--engines", help="comma-separated subset of bp,gamp,greedy,exact")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed-base", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--no-theory", action="store_true")
    p.add_argument("--no-timestamp", action="store_true")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except GmdkpError as err:
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 1
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
