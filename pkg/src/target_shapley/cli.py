"""Command-line entry point: ``estimate``, ``oracle`` and ``reliability``."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .benchmarks import PROBLEMS, GaussianLinearSpec, problem_by_name
from .errors import TargetShapleyError
from .harness import ExperimentConfig, run, write_record
from .oracles import gl_failure_probability, gl_target_closed_sobol_all, gl_target_shapley
from .rare_event import (
    CEConfig,
    cross_entropy_fit,
    is_failure_probability,
    mc_failure_probability,
    variance_of_mean_unbiased,
)


def _load_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _parse_aux(text):
    """``none``, ``ce-sg`` or ``ce-gm[:K]`` -> (aux, k)."""
    if text.startswith("ce-gm"):
        _, _, k = text.partition(":")
        return "ce-gm", int(k) if k else 2
    if text in ("none", "ce-sg"):
        return text, 2
    raise argparse.ArgumentTypeError(f"invalid aux {text!r}")


def _parse_aggregation(text):
    if text == "subset":
        return "subset", None
    if text.startswith("perm:"):
        return "permutation", int(text.split(":", 1)[1])
    raise argparse.ArgumentTypeError(f"invalid aggregation {text!r}; use subset or perm:M")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="target-shapley", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="replicated target Shapley estimation")
    est.add_argument("--config", help="JSON experiment config; its keys override flags")
    est.add_argument("--problem", default="gaussian-linear", choices=sorted(PROBLEMS))
    est.add_argument("--problem-config", help="JSON Gaussian-linear spec (beta, mean, cov, t)")
    est.add_argument("--method", default="dmc-is-knn", help="e.g. dmc-is-knn, pf-given-model or dmc-gd-is")
    est.add_argument("--aux", default="ce-sg", type=_parse_aux, help="none, ce-sg or ce-gm[:K]")
    est.add_argument("--aggregation", default="subset", type=_parse_aggregation, help="subset or perm:M")
    est.add_argument("--ntot", type=int, default=20_000)
    est.add_argument("--nv", type=int, default=10_000)
    est.add_argument("--no", type=int, default=None, help="outer sample size (derived from the budget if omitted)")
    est.add_argument("--ni", type=int, default=3)
    est.add_argument("--nrep", type=int, default=200)
    est.add_argument("--seed", type=int, default=0)
    est.add_argument("--preprocess", choices=("on", "off"), default="on")
    est.add_argument("--reuse", action="store_true", help="reuse the normaliser sample in given-model runs")
    est.add_argument("--ce-samples", type=int, default=None, help="cross-entropy samples per level")
    est.add_argument("--out", help="output path (.json record or .csv boxplot table)")

    orc = sub.add_parser("oracle", help="exact indices of a Gaussian-linear problem")
    orc.add_argument("--spec", help="JSON Gaussian-linear spec (default: 3-d benchmark)")

    rel = sub.add_parser("reliability", help="failure probability by crude MC or cross-entropy IS")
    rel.add_argument("--problem", default="gaussian-linear", choices=sorted(PROBLEMS))
    rel.add_argument("--problem-config")
    rel.add_argument("--aux", default="none", type=_parse_aux)
    rel.add_argument("--n", type=int, default=100_000)
    rel.add_argument("--ce-samples", type=int, default=None)
    rel.add_argument("--seed", type=int, default=0)
    return parser


def _estimate(args):
    aux, k = args.aux
    aggregation, m = args.aggregation
    cfg = {
        "problem": args.problem,
        "problem_config": _load_json(args.problem_config) if args.problem_config else {},
        "method": args.method,
        "aggregation": aggregation,
        "m": m,
        "aux": aux,
        "n_components": k,
        "n_tot": args.ntot,
        "n_v": args.nv,
        "n_outer": args.no,
        "n_inner": args.ni,
        "n_rep": args.nrep,
        "seed": args.seed,
        "preprocess": args.preprocess == "on",
        "reuse": args.reuse,
        "ce": {"samples_per_level": args.ce_samples} if args.ce_samples else {},
    }
    if args.config:
        cfg.update(_load_json(args.config))
    config = ExperimentConfig.from_dict(cfg)
    record = run(config)
    if args.out:
        write_record(record, args.out)
    summary = {name: stats["median"] for name, stats in record.to_dict()["summary"].items()}
    print(json.dumps({"medians": summary, "calls": record.calls, "wall_time": record.wall_time}, indent=2))


def _oracle(args):
    spec = GaussianLinearSpec.from_config(_load_json(args.spec)) if args.spec else GaussianLinearSpec.default()
    out = {
        "failure_probability": gl_failure_probability(spec),
        "closed_indices": {",".join(map(str, u)): v for u, v in gl_target_closed_sobol_all(spec).items()},
        "shapley": gl_target_shapley(spec).tolist(),
    }
    print(json.dumps(out, indent=2))


def _reliability(args):
    problem = problem_by_name(args.problem, _load_json(args.problem_config) if args.problem_config else None)
    rng = np.random.default_rng(args.seed)
    aux, k = args.aux
    if aux == "none":
        res = mc_failure_probability(problem, args.n, rng)
        out = {"method": "mc", "estimate": res.estimate, "standard_error": res.standard_error, "n": res.n}
    else:
        family = "single-gaussian" if aux == "ce-sg" else "gaussian-mixture"
        extra = {"samples_per_level": args.ce_samples} if args.ce_samples else {}
        ce = cross_entropy_fit(problem, CEConfig(family=family, n_components=k, **extra), rng, final_size=args.n)
        est = is_failure_probability(ce.sample)
        se = float(np.sqrt(variance_of_mean_unbiased(ce.sample.weights)))
        out = {
            "method": aux,
            "estimate": est,
            "standard_error": se,
            "n": ce.sample.n,
            "ce_levels": ce.levels,
            "ce_calls": ce.n_calls - ce.sample.n,
        }
    print(json.dumps(out, indent=2))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        {"estimate": _estimate, "oracle": _oracle, "reliability": _reliability}[args.command](args)
    except (TargetShapleyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
