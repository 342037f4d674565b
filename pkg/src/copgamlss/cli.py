"""Command line interface: ``copgamlss {fit,predict,simulate,simstudy,diagnose}``.

Exit codes: 0 success, 1 input error, 2 numerical failure, 3 fit did not
converge (the fit is still written, flagged in its report).
"""

import argparse
import csv
import os
import sys

import numpy as np

from . import inference
from .dataio import load_csv, load_fit, parse_config, save_fit, write_csv
from .estimator import fit
from .exceptions import ConfigError, CopulaGamlssError, DegenerateInputError, DomainError, StepFailure
from .simulate import joe_ig_sm_design, run_sim_study, simulate_dataset
from .smooth import Adjacency

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_NOCONV = 0, 1, 2, 3


class InputError(CopulaGamlssError):
    pass


def _resolve(path, base):
    if path is None or os.path.isabs(path):
        return path
    return os.path.join(base, path)


def _read_config(args, need_data=True):
    if not args.config:
        raise InputError("--config is required")
    with open(args.config) as fh:
        text = fh.read()
    cfg = parse_config(text)
    base = os.path.dirname(os.path.abspath(args.config))
    data_path = args.data or _resolve(cfg.data, base)
    data = None
    if need_data:
        if not data_path:
            raise InputError("no data: pass --data or set 'data = file.csv' in the config")
        data = load_csv(data_path)
        cfg = parse_config(text, columns=data.keys())
    adjacency = Adjacency.read(_resolve(cfg.adjacency, base)) if cfg.adjacency else None
    return cfg, text, data, adjacency


def _fit_path(args):
    if args.fit:
        return args.fit
    if args.out:
        return os.path.join(args.out, "fit.txt")
    raise InputError("pass --fit PATH or --out DIR holding fit.txt")


def cmd_fit(args):
    cfg, text, data, adjacency = _read_config(args)
    cfg.options.seed = args.seed
    res = fit(cfg.model_spec(), data[cfg.response1], data[cfg.response2], data, adjacency, cfg.options)
    os.makedirs(args.out, exist_ok=True)
    save_fit(os.path.join(args.out, "fit.txt"), res, text)
    with open(os.path.join(args.out, "report.json"), "w") as fh:
        fh.write(res.report() + "\n")
    with open(os.path.join(args.out, "summary.txt"), "w") as fh:
        fh.write(inference.summary_text(res))
    print(inference.summary_text(res), end="")
    return EXIT_OK if res.converged else EXIT_NOCONV


def cmd_predict(args):
    res, _ = load_fit(_fit_path(args))
    if not args.data:
        raise InputError("--data is required for predict")
    if args.y1 is None or args.y2 is None:
        raise InputError("--y1 and --y2 thresholds are required")
    data = load_csv(args.data)
    os.makedirs(args.out, exist_ok=True)
    modes = [args.mode] if args.mode else ["copula", "independence"]
    for mode in modes:
        def target(d, mode=mode):
            return inference.joint_prob(res, args.y1, args.y2, mode, delta=d, data=data)

        if args.nsim > 0:
            est, lo, hi = inference.interval(res, target, 0.95, args.nsim, args.seed)
        else:
            est, lo, hi = target(res.delta), None, None
        path = os.path.join(args.out, f"joint_{mode}.csv")
        inference.write_csv(path, est, lo, hi)
        print(f"{mode}: mean joint probability {np.mean(est):.6f} over {len(est)} rows -> {path}")
    return EXIT_OK


def cmd_simulate(args):
    design = joe_ig_sm_design(n=args.n, seed=args.seed)
    rng = np.random.default_rng(args.seed)
    data = simulate_dataset(design, rng)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "simulated.csv")
    write_csv(path, data, ["y1", "y2", "x1", "x2", "x3"])
    print(f"wrote {args.n} rows to {path} (mean theta {np.mean(data['theta']):.3f}, mean tau {np.mean(data['tau']):.3f})")
    return EXIT_OK


def cmd_simstudy(args):
    design = joe_ig_sm_design(n=args.n, replicates=args.replicates, seed=args.seed)
    cands = tuple(args.candidates.split(",")) if args.candidates else None
    report = run_sim_study(design, candidates=cands, threads=args.threads)
    report.write(args.out)
    print(report.summary_text(), end="")
    return EXIT_OK


def cmd_diagnose(args):
    res, text = load_fit(_fit_path(args))
    if not args.data:
        raise InputError("--data is required for diagnose")
    cfg = parse_config(text)
    data = load_csv(args.data)
    for col in (cfg.response1, cfg.response2):
        if col not in data:
            raise InputError(f"data lacks response column {col!r}")
    r1, r2, clamped = inference.quantile_residuals(res, data[cfg.response1], data[cfg.response2], data)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "residuals.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["row", "r1", "r2"])
        for i, (a, b) in enumerate(zip(r1, r2)):
            w.writerow([i, repr(float(a)), repr(float(b))])
    lines = [f"clamped cdf values: {clamped}"]
    with open(os.path.join(args.out, "qq.csv"), "w", newline="") as fq, \
            open(os.path.join(args.out, "histogram.csv"), "w", newline="") as fhist:
        wq, wh = csv.writer(fq), csv.writer(fhist)
        wq.writerow(["margin", "theoretical", "sample"])
        wh.writerow(["margin", "lo", "hi", "count", "density"])
        for m, r in ((1, r1), (2, r2)):
            theo, samp = inference.qq_pairs(r)
            for a, b in zip(theo, samp):
                wq.writerow([m, repr(float(a)), repr(float(b))])
            counts, edges = np.histogram(r, bins=30)
            dens = counts / (len(r) * np.diff(edges))
            for c, lo, hi, d in zip(counts, edges[:-1], edges[1:], dens):
                wh.writerow([m, repr(float(lo)), repr(float(hi)), int(c), repr(float(d))])
            ks, p = inference.ks_normal(r)
            dev = float(np.max(np.abs(samp - theo)))
            lines.append(f"margin {m}: KS {ks:.4f} (p = {p:.4g}), max |Q-Q deviation| {dev:.4f}")
    with open(os.path.join(args.out, "diagnose.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="copgamlss", description="Bivariate copula additive models for location, scale and shape.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", help="model configuration file")
        sp.add_argument("--data", help="CSV data file")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("fit", help="fit a model and save it")
    common(sp)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("predict", help="joint lower-orthant probabilities per row")
    common(sp)
    sp.add_argument("--fit", help="saved fit (default OUT/fit.txt)")
    sp.add_argument("--y1", type=float, help="threshold for the first response")
    sp.add_argument("--y2", type=float, help="threshold for the second response")
    sp.add_argument("--mode", choices=("copula", "independence"), help="default: both")
    sp.add_argument("--nsim", type=int, default=0, help="posterior draws for 95%% intervals (0: none)")
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("simulate", help="draw a dataset from the built-in Joe / inverse Gaussian / Singh-Maddala design")
    common(sp, config=False)
    sp.add_argument("--n", type=int, default=1000)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("simstudy", help="copula selection study on the built-in design")
    common(sp, config=False)
    sp.add_argument("--n", type=int, default=1000)
    sp.add_argument("--replicates", "--nsim", dest="replicates", type=int, default=25)
    sp.add_argument("--threads", type=int, default=1)
    sp.add_argument("--candidates", help="comma separated copula tags; the first is the reference model")
    sp.set_defaults(func=cmd_simstudy)

    sp = sub.add_parser("diagnose", help="quantile residuals and Q-Q data for a saved fit")
    common(sp)
    sp.add_argument("--fit", help="saved fit (default OUT/fit.txt)")
    sp.set_defaults(func=cmd_diagnose)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (InputError, DomainError, DegenerateInputError, FileNotFoundError, IsADirectoryError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (StepFailure, np.linalg.LinAlgError, FloatingPointError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
