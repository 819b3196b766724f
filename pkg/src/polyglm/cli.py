"""Command-line surface.

Subcommands
-----------
fit-lm / fit-glm
    Fit a constrained model from a CSV and a constraint JSON file; write
    ``samples.csv`` (one retained draw per row, header = coefficient
    names), ``summary.json`` and, on request, ``trace.csv``.
sample-tmvn
    Draw from a truncated multivariate normal described by a JSON spec.
design-bernstein
    Emit a shape-restricted design CSV plus its constraint JSON, ready to
    be fed back into ``fit-lm``.
simulate
    Write the replicate datasets of a stock scenario to disk.
run-scenario
    Run a stock scenario end to end and write the comparison report.

Exit codes: 0 success, 2 infeasible constraints, 3 parse errors,
4 numerical failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import dic as compute_dic
from .analysis import summarize
from .constraints import ConstraintSet, unconstrained, validate
from .errors import (
    DimensionMismatch,
    EmptyConditionalInterval,
    EmptyInterval,
    EmptySlice,
    Infeasible,
    MissingColumn,
    NoConvergence,
    NotPositiveDefinite,
    OutOfRange,
    ParseError,
    PivotFailure,
    PolyglmError,
    RankDeficientEqualities,
    Singular,
    TooFewDraws,
)
from .glm_family import GAUSSIAN, Dataset, get_family
from .ingest import ingest_csv
from .samplers import (
    PriorSpec,
    SamplerConfig,
    estimate_ergodicity_bound,
    fit_glm,
    fit_lm,
)
from .scenarios import ScenarioSpec, run_scenario, simulate_scenario
from .shape import (
    additive_monotone_model,
    tensor_bimonotone_model,
    univariate_monotone_model,
)
from .tmvn import TmvnSpec, gibbs_sample

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_PARSE = 3
EXIT_NUMERICAL = 4

_INFEASIBLE_ERRORS = (Infeasible, RankDeficientEqualities)
_PARSE_ERRORS = (ParseError, MissingColumn, OutOfRange, DimensionMismatch)
_NUMERICAL_ERRORS = (
    NotPositiveDefinite,
    Singular,
    NoConvergence,
    PivotFailure,
    EmptyInterval,
    EmptyConditionalInterval,
    EmptySlice,
    TooFewDraws,
)


def _float_bound(value, default):
    if value is None:
        return default
    if isinstance(value, str):
        s = value.strip().lower()
        if s in ("inf", "+inf", "infinity"):
            return np.inf
        if s == "-inf":
            return -np.inf
        raise ParseError(f"bad bound {value!r}")
    return float(value)


def _load_json(path) -> dict:
    try:
        with Path(path).open() as fh:
            return json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc


def _load_constraints(path, p: int) -> ConstraintSet:
    if path is None:
        return unconstrained(p)
    obj = _load_json(path)
    cset = ConstraintSet.from_dict(obj)
    return validate(cset)


def _load_prior(path) -> PriorSpec:
    obj = _load_json(path)
    try:
        return PriorSpec(
            mu1=np.asarray(obj["mu1"], dtype=float),
            sigma1=np.asarray(obj["sigma1"], dtype=float),
            a=float(obj.get("a", 0.01)),
            b=float(obj.get("b", 0.01)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{path}: bad prior file: {exc}") from exc


def _parse_categorical(items) -> dict:
    out = {}
    for item in items or []:
        name, _, mode = item.partition("=")
        out[name.strip()] = (mode.strip() or "drop-first")
    return out


def _outdir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_samples(out: Path, names, draws, fname="samples.csv"):
    header = ",".join(names)
    np.savetxt(out / fname, draws, fmt="%.17g", delimiter=",",
               header=header, comments="")


def _write_json(out: Path, fname: str, obj: dict):
    with (out / fname).open("w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _sampler_config(args) -> SamplerConfig:
    return SamplerConfig(
        n_iter=args.iters,
        burn_in=args.burnin,
        thin=args.thin,
        seed=args.seed,
        n_chains=args.chains,
        inner_sweeps=args.inner_sweeps,
    )


def _dataset_from_args(args) -> Dataset:
    return ingest_csv(
        args.data,
        response=args.response,
        offset=args.offset,
        add_intercept=args.add_intercept,
        categorical=_parse_categorical(args.categorical),
    )


def _summary_payload(samples, data, fam, args) -> dict:
    truth = None
    if args.truth:
        truth = np.array([float(v) for v in args.truth.split(",")])
    report = summarize(samples, truth=truth).to_dict()
    report["dic"] = float(compute_dic(samples, data, fam))
    if args.ergodicity_mc > 0:
        cset = _load_constraints(args.constraints, data.p)
        erg = estimate_ergodicity_bound(
            data, fam, cset, samples.meta["prior"],
            n_mc=args.ergodicity_mc,
            rng=np.random.default_rng(
                np.random.SeedSequence(entropy=args.seed, spawn_key=(997,))
            ),
        )
        report["ergodicity"] = {
            "h_hat": erg.h_hat, "r_upper": erg.r_upper, "mc_se": erg.mc_se,
        }
    else:
        report["ergodicity"] = None
    return report


def _cmd_fit_lm(args) -> int:
    data = _dataset_from_args(args)
    cset = _load_constraints(args.constraints, data.p)
    prior = _load_prior(args.prior) if args.prior else None
    cfg = _sampler_config(args)
    samples = fit_lm(data, cset, prior=prior, cfg=cfg, sigma2_fixed=args.sigma2)
    out = _outdir(args)
    _write_samples(out, data.names, samples.draws)
    if args.trace and samples.sigma2_draws is not None:
        np.savetxt(out / "trace.csv", samples.sigma2_draws[:, None],
                   fmt="%.17g", delimiter=",", header="sigma2", comments="")
    _write_json(out, "summary.json", _summary_payload(samples, data, GAUSSIAN, args))
    return EXIT_OK


def _cmd_fit_glm(args) -> int:
    fam = get_family(args.family)
    data = _dataset_from_args(args)
    cset = _load_constraints(args.constraints, data.p)
    prior = _load_prior(args.prior) if args.prior else None
    cfg = _sampler_config(args)
    samples = fit_glm(data, fam, cset, prior=prior, cfg=cfg)
    out = _outdir(args)
    _write_samples(out, data.names, samples.draws)
    _write_json(out, "summary.json", _summary_payload(samples, data, fam, args))
    return EXIT_OK


def _cmd_sample_tmvn(args) -> int:
    obj = _load_json(args.spec)
    try:
        mu = np.asarray(obj["mu"], dtype=float)
        sigma = np.asarray(obj["sigma"], dtype=float)
        Rt = np.asarray(obj.get("Rt", np.zeros((0, mu.shape[0]))), dtype=float)
        m = Rt.reshape(-1, mu.shape[0]).shape[0]
        c = np.array([_float_bound(v, -np.inf) for v in obj.get("c", [None] * m)])
        d = np.array([_float_bound(v, np.inf) for v in obj.get("d", [None] * m)])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{args.spec}: bad tmvn spec: {exc}") from exc
    spec = TmvnSpec(mu=mu, sigma=sigma, Rt=Rt, c=c, d=d)
    rng = np.random.default_rng(args.seed)
    draws = gibbs_sample(spec, init=None, n_iter=args.iters, rng=rng)
    kept = draws[args.burnin :: args.thin]
    out = _outdir(args)
    _write_samples(out, [f"w{j}" for j in range(spec.p)], kept, fname="draws.csv")
    return EXIT_OK


def _cmd_design_bernstein(args) -> int:
    if args.mode in ("additive", "tensor") and not args.x2:
        raise ParseError(f"mode {args.mode!r} needs --x2")
    header_needed = [args.x1] + ([args.x2] if args.mode in ("additive", "tensor") else [])
    raw = ingest_csv(args.data, response=args.response)
    cols = {name: raw.X[:, i] for i, name in enumerate(raw.names)}
    for name in header_needed:
        if name not in cols:
            raise MissingColumn(f"{args.data}: no column named {name!r}")
    if args.mode == "increasing":
        model = univariate_monotone_model(cols[args.x1], args.degree, increasing=True)
    elif args.mode == "decreasing":
        model = univariate_monotone_model(cols[args.x1], args.degree, increasing=False)
    elif args.mode == "additive":
        model = additive_monotone_model(cols[args.x1], cols[args.x2],
                                        args.degree, args.degree)
    else:  # tensor
        model = tensor_bimonotone_model(cols[args.x1], cols[args.x2], args.degree)
    out = _outdir(args)
    table = np.column_stack([raw.y, model.design])
    names = [args.response] + list(model.names)
    np.savetxt(out / "design.csv", table, fmt="%.17g", delimiter=",",
               header=",".join(names), comments="")
    _write_json(out, "constraints.json", model.cset.to_dict())
    return EXIT_OK


def _cmd_simulate(args) -> int:
    spec = ScenarioSpec(id=args.scenario, n=args.n, rho=args.rho,
                        replicates=args.replicates, seed=args.seed)
    out = _outdir(args)
    triples = simulate_scenario(spec)
    _, cset, truth = triples[0]
    _write_json(out, "constraints.json", cset.to_dict())
    _write_json(out, "truth.json", {"truth": truth.tolist()})
    _write_json(out, "scenario.json", {
        "scenario": spec.id, "n": spec.n, "rho": spec.rho,
        "replicates": spec.replicates, "seed": spec.seed,
    })
    for rep, (data, _, _) in enumerate(triples):
        table = np.column_stack([data.y, data.X])
        names = ["y"] + list(data.names)
        np.savetxt(out / f"rep{rep:03d}.csv", table, fmt="%.17g",
                   delimiter=",", header=",".join(names), comments="")
    return EXIT_OK


def _cmd_run_scenario(args) -> int:
    spec = ScenarioSpec(id=args.scenario, n=args.n, rho=args.rho,
                        replicates=args.replicates, seed=args.seed)
    cfg = _sampler_config(args)
    report = run_scenario(spec, cfg=cfg, threads=args.threads)
    out = _outdir(args)
    _write_json(out, "scenario_report.json", report)
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--seed", type=int, default=0, help="base RNG seed")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker processes for replicate-level parallelism")
    parser.add_argument("--out-dir", default=".", help="output directory")


def _add_sampler_args(parser: argparse.ArgumentParser):
    parser.add_argument("--iters", type=int, default=12000)
    parser.add_argument("--burnin", type=int, default=2000)
    parser.add_argument("--thin", type=int, default=2)
    parser.add_argument("--chains", type=int, default=2)
    parser.add_argument("--inner-sweeps", type=int, default=1)


def _add_data_args(parser: argparse.ArgumentParser):
    parser.add_argument("--data", required=True, help="input CSV with header")
    parser.add_argument("--response", required=True, help="response column")
    parser.add_argument("--offset", default=None,
                        help="offset column or log(col[/const]) expression")
    parser.add_argument("--add-intercept", action="store_true")
    parser.add_argument("--categorical", action="append", default=[],
                        metavar="COL[=all|=drop-first]",
                        help="expand a column into level indicators")
    parser.add_argument("--constraints", default=None,
                        help="constraint JSON file {R, b, num_equality}")
    parser.add_argument("--prior", default=None,
                        help="prior JSON file {mu1, sigma1, a, b}")
    parser.add_argument("--truth", default=None,
                        help="comma-separated true coefficients (adds SEL)")
    parser.add_argument("--ergodicity-mc", type=int, default=0,
                        help="Monte Carlo size for the convergence bound (0 = skip)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polyglm",
        description="Bayesian regression with polytope-constrained coefficients",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit-lm", help="constrained gaussian linear model")
    _add_data_args(p)
    _add_sampler_args(p)
    _add_common(p)
    p.add_argument("--sigma2", type=float, default=None,
                   help="fix the noise variance instead of sampling it")
    p.add_argument("--trace", action="store_true", help="also write trace.csv")
    p.set_defaults(func=_cmd_fit_lm)

    p = sub.add_parser("fit-glm", help="constrained canonical GLM")
    p.add_argument("--family", required=True,
                   choices=["gaussian", "poisson", "logistic"])
    _add_data_args(p)
    _add_sampler_args(p)
    _add_common(p)
    p.set_defaults(func=_cmd_fit_glm)

    p = sub.add_parser("sample-tmvn", help="truncated multivariate normal draws")
    p.add_argument("--spec", required=True,
                   help='JSON file {mu, sigma, Rt, c, d}; bounds may be null or "inf"')
    p.add_argument("--iters", type=int, default=10000)
    p.add_argument("--burnin", type=int, default=0)
    p.add_argument("--thin", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=_cmd_sample_tmvn)

    p = sub.add_parser("design-bernstein", help="shape-restricted design builder")
    p.add_argument("--data", required=True)
    p.add_argument("--response", required=True)
    p.add_argument("--x1", required=True, help="first covariate column")
    p.add_argument("--x2", default=None, help="second covariate column")
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--mode", required=True,
                   choices=["increasing", "decreasing", "additive", "tensor"])
    _add_common(p)
    p.set_defaults(func=_cmd_design_bernstein)

    p = sub.add_parser("simulate", help="write scenario replicate datasets")
    p.add_argument("--scenario", required=True, choices=["A1", "A2", "B", "C"])
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--replicates", type=int, default=100)
    _add_common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("run-scenario", help="scenario comparison report")
    p.add_argument("--scenario", required=True, choices=["A1", "A2", "B", "C"])
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--replicates", type=int, default=100)
    _add_sampler_args(p)
    _add_common(p)
    p.set_defaults(func=_cmd_run_scenario)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _INFEASIBLE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except _PARSE_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except _NUMERICAL_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except PolyglmError as exc:  # anything new defaults to numerical
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
