"""``edcorder`` command line: simulate, fit, select, experiment, diagnose.

Model files are JSON. A BEKK model is ``{"m", "k1", "k2", "theta"}`` (the
packed vector of C, then the A and B blocks); a Markov chain is
``{"transitions": [[...], ...]}``. Data files are CSV with a header row:
``x1..xm`` for BEKK paths, ``symbol`` for Markov sequences.

Failures exit nonzero and print one JSON object on stderr:
``{"error": <kind>, "message": ..., "details": [...]}``.
Exit code 2 means bad input (arguments, config, files); 1 means the
computation itself failed.
"""

import argparse
import json
import os
import sys
import warnings

import numpy as np

from .bekk import BekkParams, PathSample, simulate as bekk_simulate
from .diagnostics import (DEFAULT_GRID, hessian_trace, overfit_gap_trace, score_lil_trace,
                          underfit_gap_trace)
from .estimator import BekkFamily, FitOptions, fit as bekk_fit
from .experiment import (ConfigError, ExperimentConfig, check_output_dir,
                         emit_report, run_experiment)
from .markov import (MarkovFamily, MarkovSpec, markov_fit, markov_simulate, read_sequence_csv,
                     write_sequence_csv)
from .nested import PenaltyRule, SelectionError, select_order

TRACES = {"hessian": hessian_trace, "score": score_lil_trace,
          "underfit": underfit_gap_trace, "overfit": overfit_gap_trace}


class UsageError(ValueError):
    pass


def _fail(kind, message, details=(), code=2):
    sys.stderr.write(json.dumps({"error": kind, "message": message, "details": list(details)}) + "\n")
    return code


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc


def _load_model(path):
    d = _read_json(path)
    if "transitions" in d:
        return "markov", MarkovSpec.from_dict(d)
    if {"m", "k1", "k2", "theta"} <= set(d):
        return "bekk", BekkParams.from_dict(d)
    raise UsageError(f"{path}: expected a BEKK model (m, k1, k2, theta) or a Markov chain (transitions)")


def _load_data(path, family):
    if family == "markov":
        return read_sequence_csv(path)
    return PathSample.from_csv(path)


def _write_json(obj, path):
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def parse_penalty(text):
    """``bic`` | ``aic`` | ``constant:V`` | ``powerlog:alpha,beta,delta,epsilon``."""
    kind, _, arg = text.partition(":")
    if kind in ("bic", "aic") and not arg:
        return PenaltyRule.from_dict({"kind": kind})
    try:
        if kind == "constant":
            return PenaltyRule.constant(float(arg))
        if kind == "powerlog":
            a, b, d, e = (float(v) for v in arg.split(","))
            return PenaltyRule(a, b, d, e)
    except ValueError:
        pass
    raise UsageError(f"bad penalty {text!r}; use bic, aic, constant:V or powerlog:a,b,d,e")


def _fit_options(args):
    d = {}
    if args.fit_options:
        d.update(_read_json(args.fit_options))
    for name in ("n_starts", "max_iter", "gtol", "rho_max"):
        v = getattr(args, name, None)
        if v is not None:
            d[name] = v
    return FitOptions.from_dict(d)


# -- subcommands ----------------------------------------------------------------------

def cmd_simulate(args):
    family, model = _load_model(args.model)
    if family == "bekk":
        bekk_simulate(model, args.n, args.seed, burn_in=args.burn_in).to_csv(args.out)
    else:
        write_sequence_csv(markov_simulate(model, args.n, args.seed), args.out)


def cmd_fit(args):
    if args.family == "markov":
        x = read_sequence_csv(args.data)
        (k,) = args.order
        P, ll = markov_fit(x, k, args.alphabet)
        _write_json({"order": [k], "loglik": ll, "transitions": P.tolist()}, args.out)
        return
    if len(args.order) != 2:
        raise UsageError("a BEKK order is two integers: k1 (GARCH lags) k2 (ARCH lags)")
    res = bekk_fit(PathSample.from_csv(args.data), tuple(args.order), _fit_options(args), seed=args.seed)
    _write_json(res.to_dict(), args.out)
    if not res.ok:
        raise RuntimeError(f"fit did not converge: {res.status}")


def cmd_select(args):
    data = _load_data(args.data, args.family)
    family = MarkovFamily(args.alphabet) if args.family == "markov" else BekkFamily(data.m, _fit_options(args))
    report = select_order(family, data, tuple(args.K), parse_penalty(args.penalty), seed=args.seed)
    _write_json(report.to_dict(), args.out)


def cmd_experiment(args):
    if bool(args.config) == bool(args.manifest):
        raise UsageError("give exactly one of --config or --manifest")
    if args.manifest:
        d = _read_json(args.manifest)
        if "config" not in d:
            raise UsageError(f"{args.manifest} is not an experiment manifest")
        d = d["config"]
    else:
        d = _read_json(args.config)
    for name in ("output_dir", "replications", "master_seed"):
        v = getattr(args, name)
        if v is not None:
            d[name] = v
    config = ExperimentConfig.from_dict(d)
    check_output_dir(config.output_dir)
    if config.family == "bekk" and not config.acknowledge_b5:
        warnings.warn("BEKK experiment without acknowledge_b5: the consistency result assumes "
                      "bounded 16th moments of the data-generating process, which is not checked")
    result = run_experiment(config, workers=args.workers_runtime)
    emit_report(result)


def cmd_diagnose(args):
    family_id, model = _load_model(args.model)
    family = MarkovFamily(model.alphabet) if family_id == "markov" else BekkFamily(model.m, _fit_options(args))
    check_output_dir_of_file(args.out)
    trace = TRACES[args.statistic](family, model, tuple(args.order), n_grid=tuple(args.n_grid),
                                   seeds=range(args.first_seed, args.first_seed + args.seeds),
                                   workers=args.workers)
    trace.to_csv(args.out)


def check_output_dir_of_file(path):
    check_output_dir(os.path.dirname(os.path.abspath(path)))


# -- parser ---------------------------------------------------------------------------

def _add_fit_flags(p):
    g = p.add_argument_group("BEKK fit options")
    g.add_argument("--fit-options", help="JSON file with estimator options")
    g.add_argument("--n-starts", type=int, help="random starts per candidate (default 5)")
    g.add_argument("--max-iter", type=int, help="quasi-Newton iterations per barrier stage")
    g.add_argument("--gtol", type=float, help="gradient tolerance (per observation)")
    g.add_argument("--rho-max", type=float, help="stationarity bound on the spectral radius")


def build_parser():
    parser = argparse.ArgumentParser(prog="edcorder", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a path from a model file")
    p.add_argument("--model", required=True, help="model JSON (BEKK or Markov)")
    p.add_argument("--n", type=int, required=True, help="path length")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--burn-in", type=int, default=500, help="BEKK burn-in length")
    p.add_argument("--out", required=True, help="output CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit one candidate order")
    p.add_argument("--data", required=True, help="data CSV")
    p.add_argument("--family", choices=("bekk", "markov"), default="bekk")
    p.add_argument("--order", type=int, nargs="+", required=True, help="k1 k2 (BEKK) or k (Markov)")
    p.add_argument("--alphabet", type=int, default=2, help="Markov alphabet size")
    p.add_argument("--seed", type=int, default=0, help="seed of the random starts")
    p.add_argument("--out", default="-", help="output JSON (default stdout)")
    _add_fit_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("select", help="choose an order by penalised likelihood")
    p.add_argument("--data", required=True)
    p.add_argument("--family", choices=("bekk", "markov"), default="bekk")
    p.add_argument("--K", type=int, nargs="+", required=True, help="search bound")
    p.add_argument("--penalty", default="bic", help="bic | aic | constant:V | powerlog:a,b,d,e")
    p.add_argument("--alphabet", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="-")
    _add_fit_flags(p)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("experiment", help="Monte Carlo selection frequencies")
    p.add_argument("--config", help="experiment config JSON")
    p.add_argument("--manifest", help="rerun the experiment recorded in this manifest")
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--workers", type=int, dest="workers_runtime",
                   help="worker processes (does not change the outputs)")
    p.add_argument("--replications", type=int)
    p.add_argument("--master-seed", type=int, dest="master_seed")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("diagnose", help="assumption traces over an n grid")
    p.add_argument("--model", required=True, help="true model JSON")
    p.add_argument("--statistic", choices=sorted(TRACES), required=True)
    p.add_argument("--order", type=int, nargs="+", required=True, help="candidate order k")
    p.add_argument("--n-grid", type=int, nargs="+", default=list(DEFAULT_GRID))
    p.add_argument("--seeds", type=int, default=10, help="number of seeds")
    p.add_argument("--first-seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True, help="output CSV")
    _add_fit_flags(p)
    p.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    try:
        args.func(args)
    except ConfigError as exc:
        return _fail("config", "invalid experiment config", exc.problems)
    except UsageError as exc:
        return _fail("usage", str(exc))
    except (OSError, KeyError, TypeError, ValueError) as exc:
        return _fail("input", f"{type(exc).__name__}: {exc}")
    except (SelectionError, RuntimeError, FloatingPointError, np.linalg.LinAlgError) as exc:
        return _fail("computation", f"{type(exc).__name__}: {exc}", code=1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
