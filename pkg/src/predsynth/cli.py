"""Command-line front end.

Exit codes: 0 success, 1 property or threshold failure, 2 configuration
error, 3 capability error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .bridge import convergence_study
from .config import ConfigError, load_config
from .continuous import synthesize_cdf, synthesize_density, synthesize_samples
from .discrete import eval_pi_form, sample_events
from .errors import CapabilityError
from .suite import run_suite

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_CAPABILITY = 0, 1, 2, 3


def _g(x: float) -> str:
    return format(float(x), ".17g")


def _emit(cfg, args) -> bool:
    if getattr(args, "emit_config", False):
        sys.stdout.write(cfg.dumps())
        return True
    return False


def cmd_synthesize(args) -> int:
    cfg = load_config(args.config)
    if cfg.kind == "discrete":
        raise ConfigError("synthesize needs 'agents' and 'kernel'; this config describes a discrete problem", field="discrete", source=args.config)
    if args.seed is not None:
        cfg.run["seed"] = args.seed
    if args.threads is not None:
        cfg.run["threads"] = args.threads
    if _emit(cfg, args):
        return EXIT_OK
    problem = cfg.build_problem()
    run = cfg.run
    ys = None
    if "y_grid" in cfg.query:
        g = cfg.query["y_grid"]
        ys = np.linspace(g["start"], g["stop"], g["num"])
    elif "y" in cfg.query:
        ys = np.asarray(cfg.query["y"], dtype=float)
    # evaluate the grid first so capability errors come before any output
    grid_rows = None
    if ys is not None:
        method = cfg.build_method()
        dens = np.atleast_1d(synthesize_density(problem, ys, method))
        cdf = np.atleast_1d(synthesize_cdf(problem, ys, method))
        grid_rows = list(zip(ys, dens, cdf))
    samples = synthesize_samples(problem, run["draws"], run["seed"], run["threads"])

    print(f"draws = {run['draws']}")
    print(f"seed = {run['seed']}")
    print(f"mean = {_g(samples.mean())}")
    print(f"variance = {_g(samples.var(ddof=1))}")
    for q in cfg.query.get("quantiles", []):
        print(f"quantile_{q:g} = {_g(np.quantile(samples, q))}")
    if grid_rows is not None and len(grid_rows) <= 20:
        for y, d, c in grid_rows:
            print(f"y = {_g(y)} density = {_g(d)} cdf = {_g(c)}")

    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "samples.csv", "w") as fh:
            fh.write("y\n")
            fh.writelines(f"{_g(v)}\n" for v in samples)
        if grid_rows is not None:
            with open(out / "grid.csv", "w") as fh:
                fh.write("y,density,cdf\n")
                fh.writelines(f"{_g(y)},{_g(d)},{_g(c)}\n" for y, d, c in grid_rows)
    return EXIT_OK


def cmd_verify(args) -> int:
    result = run_suite(trials=args.trials, seed=args.seed, draws=args.draws, inject_invalid=args.inject_invalid)
    text = result.to_text()
    if args.report:
        Path(args.report).write_text(text)
    else:
        sys.stdout.write(text)
    for r in result.failures():
        print(f"FAILED {r.section}: {r.fields.get('case', '')} (seed {args.seed})", file=sys.stderr)
    eq = [r.fields["max_deviation"] for r in result.records if r.section == "equivalence"]
    print(f"verify: {len(result.records)} checks, {len(result.failures())} failed; max pool/tensor deviation {max(eq):.3e}", file=sys.stderr)
    return EXIT_OK if result.passed else EXIT_FAIL


def cmd_converge(args) -> int:
    cfg = load_config(args.config)
    if cfg.kind != "bridge":
        raise ConfigError("converge needs a bridge problem (agents, kernel, run.n_values and one query.y)", field="run.n_values", source=args.config)
    if _emit(cfg, args):
        return EXIT_OK
    problem = cfg.build_problem()
    y = cfg.query["y"][0]
    report = convergence_study(problem, y, cfg.run["n_values"], reference=cfg.run["reference"])
    csv = report.to_csv()
    threshold = cfg.run["threshold"]
    if args.out:
        Path(args.out).write_text(csv)
        summary = sys.stdout
    else:
        sys.stdout.write(csv)
        summary = sys.stderr
    ok = report.final_error < threshold
    print(f"final_abs_error = {_g(report.final_error)} threshold = {_g(threshold)} status = {'pass' if ok else 'fail'}", file=summary)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_sample_event(args) -> int:
    cfg = load_config(args.config)
    if cfg.kind != "discrete":
        raise ConfigError("sample-event needs a 'discrete' problem", field="discrete", source=args.config)
    if args.seed is not None:
        cfg.run["seed"] = args.seed
    if args.draws is not None:
        cfg.run["draws"] = args.draws
    if _emit(cfg, args):
        return EXIT_OK
    _, pi, panel = cfg.build_discrete()
    draws, seed = cfg.run["draws"], cfg.run["seed"]
    p_star = eval_pi_form(pi, panel)
    freq = float(sample_events(pi, panel, draws, seed, cfg.run["threads"]).mean())
    bound = 4 * np.sqrt(p_star * (1 - p_star) / draws)
    ok = abs(freq - p_star) <= bound
    print(f"draws = {draws}")
    print(f"seed = {seed}")
    print(f"p_star = {_g(p_star)}")
    print(f"empirical_frequency = {_g(freq)}")
    print(f"bound = {_g(bound)}")
    print(f"status = {'pass' if ok else 'fail'}")
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="predsynth", description="Bayesian predictive synthesis engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synthesize", help="sample and evaluate a continuous synthesis problem")
    p.add_argument("config")
    p.add_argument("--out", help="directory for samples.csv and grid.csv")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--emit-config", action="store_true", help="print the normalized config and exit")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("verify", help="run the consistency and equivalence suite")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--draws", type=int, default=100_000, help="Monte-Carlo draws per consistency check")
    p.add_argument("--report", help="write the report here instead of stdout")
    p.add_argument("--inject-invalid", action="store_true", help="self-test: add a pool outside the validity region")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("converge", help="Riemann-sum convergence study")
    p.add_argument("config")
    p.add_argument("--out", help="CSV output path (default: stdout)")
    p.add_argument("--emit-config", action="store_true", help="print the normalized config and exit")
    p.set_defaults(func=cmd_converge)

    p = sub.add_parser("sample-event", help="two-stage event sampling for a discrete problem")
    p.add_argument("config")
    p.add_argument("--draws", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--emit-config", action="store_true", help="print the normalized config and exit")
    p.set_defaults(func=cmd_sample_event)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc.diagnostic()}", file=sys.stderr)
        return EXIT_CONFIG
    except CapabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY


if __name__ == "__main__":
    sys.exit(main())
