"""End-to-end experiments: auxiliary fit, sample reuse, replications, reports."""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .aggregation import (
    ShapleyReport,
    allocate_budget,
    box_stats,
    fit_standardization,
    indicator_variance,
    permutation_aggregate,
    subset_aggregate,
)
from .benchmarks import FailureProblem, problem_by_name
from .distributions import proper_subsets
from .errors import ConfigurationError
from .indices import ESTIMATORS
from .knn import NeighbourCache
from .rare_event import CEConfig, WeightedFailureSample, cross_entropy_fit, is_pt_squared_unbiased

METHODS = tuple(ESTIMATORS)

# CLI-style triples (scheme, mode, flavour) -> estimator name
_ALIASES = {
    ("dmc", "gm", "plain"): "dmc-given-model",
    ("pf", "gm", "plain"): "pf-given-model",
    ("dmc", "gm", "is"): "dmc-is-given-model",
    ("pf", "gm", "is"): "pf-is-given-model",
    ("dmc", "gd", "plain"): "dmc-knn",
    ("pf", "gd", "plain"): "pf-knn",
    ("dmc", "gd", "is"): "dmc-is-knn",
    ("pf", "gd", "is"): "pf-is-knn",
}


def canonical_method(name: str) -> str:
    """Accept ``dmc-is-knn`` style names or ``dmc-gd-is`` triples."""
    if name in ESTIMATORS:
        return name
    parts = tuple(name.split("-"))
    if parts in _ALIASES:
        return _ALIASES[parts]
    raise ConfigurationError(f"unknown method {name!r}; choose from {sorted(ESTIMATORS)}")


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce one replicated Shapley estimation."""

    problem: str = "gaussian-linear"
    problem_config: dict = field(default_factory=dict)
    method: str = "dmc-is-knn"
    aggregation: str = "subset"
    m: int | None = None
    aux: str = "ce-sg"
    n_components: int = 2
    ce: dict = field(default_factory=dict)
    n_tot: int = 20_000
    n_v: int = 10_000
    n_outer: int | None = None
    n_inner: int = 3
    n_rep: int = 200
    seed: int = 0
    preprocess: bool = True
    reuse: bool = False
    refit_per_replication: bool = False
    variance_scheme: str = "plugin"
    keep_indices: bool = False
    output: str | None = None

    def __post_init__(self):
        self.method = canonical_method(self.method)
        if self.n_rep < 1:
            raise ConfigurationError("n_rep must be >= 1")
        if self.aggregation not in ("subset", "permutation"):
            raise ConfigurationError("aggregation must be 'subset' or 'permutation'")
        if self.aggregation == "permutation" and (self.m is None or self.m < 1):
            raise ConfigurationError("permutation aggregation needs m >= 1")
        if self.aux not in ("none", "ce-sg", "ce-gm"):
            raise ConfigurationError("aux must be 'none', 'ce-sg' or 'ce-gm'")
        if self.is_importance and self.aux == "none":
            raise ConfigurationError(f"{self.method} needs an auxiliary density (aux ce-sg or ce-gm)")
        if self.scheme == "dmc" and self.n_inner < 2:
            raise ConfigurationError("dmc estimators need n_inner >= 2")

    @property
    def scheme(self) -> str:
        return self.method.split("-")[0]

    @property
    def given_data(self) -> bool:
        return self.method.endswith("knn")

    @property
    def is_importance(self) -> bool:
        return "-is-" in self.method

    @classmethod
    def from_dict(cls, cfg: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(cfg) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**cfg)

    def to_dict(self) -> dict:
        return asdict(self)

    def ce_config(self) -> CEConfig:
        family = "single-gaussian" if self.aux == "ce-sg" else "gaussian-mixture"
        return CEConfig(family=family, n_components=self.n_components, **self.ce)


@dataclass
class RunRecord:
    config: dict
    names: tuple
    effects: np.ndarray
    pt_estimates: np.ndarray
    normalizers: np.ndarray
    calls: dict
    ce: dict
    budget: dict
    seeds: dict
    wall_time: float = 0.0
    indices: list | None = None

    def report(self) -> ShapleyReport:
        return ShapleyReport(
            self.effects, self.names, self.normalizers, self.config["aggregation"],
            self.config["method"], self.budget,
        )

    def to_dict(self, include_timing: bool = True) -> dict:
        out = {
            "config": self.config,
            "names": list(self.names),
            "effects": np.asarray(self.effects).tolist(),
            "pt_estimates": np.asarray(self.pt_estimates).tolist(),
            "normalizers": np.asarray(self.normalizers).tolist(),
            "calls": self.calls,
            "ce": self.ce,
            "budget": self.budget,
            "seeds": self.seeds,
            "summary": summarize(self),
        }
        if self.indices is not None:
            out["indices"] = [{",".join(map(str, u)): v for u, v in rep.items()} for rep in self.indices]
        if include_timing:
            out["wall_time"] = self.wall_time
        return out

    def to_json(self, include_timing: bool = True, **kwargs) -> str:
        return json.dumps(self.to_dict(include_timing), **kwargs)


def summarize(record) -> dict:
    """Per-input quartiles, 1.5 IQR whiskers and flier counts."""
    effects = np.atleast_2d(np.asarray(record.effects, dtype=float))
    out = {}
    for i, name in enumerate(record.names):
        col = effects[:, i]
        stats = box_stats(col)
        stats["fliers"] = int(np.count_nonzero((col < stats["whisker_low"]) | (col > stats["whisker_high"])))
        out[name] = stats
    return out


def _aggregate(config, costs, d, var, rng):
    if config.aggregation == "subset":
        return subset_aggregate(costs, d, var)
    return permutation_aggregate(costs, d, config.m, var, rng, cached=False)


def _fit_aux(problem, config, rng, size):
    res = cross_entropy_fit(problem, config.ce_config(), rng, final_size=size)
    fitted = res.n_calls - (res.sample.n if res.sample is not None else 0)
    info = {"levels": res.levels, "n_calls": fitted, "floored": res.floored}
    return res.density, res.sample, info


def _given_data_run(problem, config, streams):
    d = problem.dim
    f = problem.input_model
    setup = np.random.default_rng(streams[0])
    ce_info = {}
    if config.is_importance:
        g, sample, ce_info = _fit_aux(problem, config, setup, config.n_tot)
    else:
        g = f
        sample = WeightedFailureSample.draw(problem, f, config.n_tot, setup)

    def prepare(sample, g):
        search = sample.points
        if config.preprocess:
            smap = fit_standardization(g, sample.points, source="auxiliary" if g is not f else "input")
            search = smap.apply(sample.points)
        return NeighbourCache(search)

    neighbours = prepare(sample, g)
    budget = allocate_budget(config.scheme, d, config.n_tot, 0, config.n_inner, "given-data", config.n_outer,
                             procedure=config.aggregation, m=config.m)
    est = ESTIMATORS[config.method]
    effects, pts, norms, kept = [], [], [], []
    refit_calls = 0
    for r in range(config.n_rep):
        rng = np.random.default_rng(streams[r + 1])
        if config.refit_per_replication and r > 0:
            if config.is_importance:
                g, sample, info = _fit_aux(problem, config, rng, config.n_tot)
                refit_calls += info["n_calls"] + sample.n
            else:
                sample = WeightedFailureSample.draw(problem, f, config.n_tot, rng)
                refit_calls += sample.n
            neighbours = prepare(sample, g)
        p_hat = float(np.mean(sample.weights))
        var = indicator_variance(p_hat, indicators=sample.indicators, weights=sample.weights,
                                 scheme=config.variance_scheme)
        pt2 = is_pt_squared_unbiased(sample)
        cache = {}

        def cost(u, rng=rng, sample=sample, neighbours=neighbours, p_hat=p_hat, pt2=pt2, cache=cache):
            if config.aggregation == "subset" and u in cache:
                return cache[u]
            if config.scheme == "dmc":
                kw = {"pt_is": p_hat} if config.is_importance else {}
                val = est(sample, u, budget.n_outer, config.n_inner, rng, neighbours, **kw)
            else:
                val = est(sample, u, budget.n_outer, rng, neighbours, pt2)
            cache[u] = val.value
            return val.value

        pts.append(p_hat)
        norms.append(var)
        if var > 0:
            effects.append(_aggregate(config, cost, d, var, rng))
        else:
            for u in proper_subsets(d):
                cost(u)
            effects.append(np.full(d, np.nan))
        kept.append(dict(cache))
    calls = {"sample": config.n_tot, "estimation": 0, "refit": refit_calls}
    return np.array(effects), np.array(pts), np.array(norms), calls, ce_info, budget, kept


def _given_model_run(problem, config, streams):
    d = problem.dim
    f = problem.input_model
    setup = np.random.default_rng(streams[0])
    ce_info = {}
    g = f
    if config.is_importance:
        g, _, ce_info = _fit_aux(problem, config, setup, 0)
    budget = allocate_budget(config.scheme, d, config.n_tot, config.n_v, config.n_inner, "given-model",
                             config.n_outer, config.reuse, config.aggregation, config.m)
    est = ESTIMATORS[config.method]
    effects, pts, norms, rep_calls, kept = [], [], [], [], []
    for r in range(config.n_rep):
        rng = np.random.default_rng(streams[r + 1])
        pilot = WeightedFailureSample.draw(problem, g, config.n_v, rng)
        calls = pilot.n
        p_hat = float(np.mean(pilot.weights))
        pt2 = is_pt_squared_unbiased(pilot)
        var = indicator_variance(p_hat, indicators=pilot.indicators, weights=pilot.weights,
                                 scheme=config.variance_scheme)
        reuse = pilot if config.reuse else None
        counter = {"calls": 0}
        values = {}

        def cost(u, rng=rng, p_hat=p_hat, pt2=pt2, reuse=reuse, counter=counter, values=values):
            if config.method == "dmc-given-model":
                val = est(problem, u, budget.n_outer, config.n_inner, rng)
            elif config.method == "pf-given-model":
                val = est(problem, u, budget.n_outer, pt2, rng)
            elif config.scheme == "dmc":
                val = est(problem, g, u, budget.n_outer, config.n_inner, p_hat, rng, reuse)
            else:
                val = est(problem, g, u, budget.n_outer, pt2, rng, reuse)
            counter["calls"] += val.n_calls
            values[u] = val.value
            return val.value

        if config.aggregation == "subset":
            # evaluate every subset, even when the normaliser is degenerate, to honour the budget
            for u in proper_subsets(d):
                cost(u)
            eff = subset_aggregate(dict(values), d, var) if var > 0 else np.full(d, np.nan)
        else:
            eff = permutation_aggregate(cost, d, config.m, var, rng, cached=False) if var > 0 else np.full(d, np.nan)
        effects.append(eff)
        pts.append(p_hat)
        norms.append(var)
        rep_calls.append(calls + counter["calls"])
        kept.append(values)
    calls = {"per_replication": rep_calls, "expected_per_replication": budget.expected_calls}
    return np.array(effects), np.array(pts), np.array(norms), calls, ce_info, budget, kept


def run(config: ExperimentConfig, problem: FailureProblem | None = None) -> RunRecord:
    """Execute a replicated experiment and return its record.

    ``problem`` overrides the named problem (used, e.g., to pass an
    instrumented copy whose evaluations are counted).
    """
    start = time.perf_counter()
    problem = problem_by_name(config.problem, config.problem_config) if problem is None else problem
    seq = np.random.SeedSequence(config.seed)
    streams = seq.spawn(config.n_rep + 1)
    runner = _given_data_run if config.given_data else _given_model_run
    effects, pts, norms, calls, ce_info, budget, kept = runner(problem, config, streams)
    if "ce" not in calls and ce_info:
        calls["ce"] = ce_info.get("n_calls", 0)
    record = RunRecord(
        config=config.to_dict(),
        names=tuple(problem.names),
        effects=effects,
        pt_estimates=pts,
        normalizers=norms,
        calls=calls,
        ce={k: v for k, v in ce_info.items()},
        budget=budget.to_dict(),
        seeds={"master": config.seed, "streams": "SeedSequence.spawn", "n_streams": config.n_rep + 1},
        wall_time=time.perf_counter() - start,
        indices=kept if config.keep_indices else None,
    )
    if config.output:
        write_record(record, config.output)
    return record


def write_record(record: RunRecord, path: str):
    """Write JSON (``.json``) or per-input boxplot data (``.csv``)."""
    if str(path).endswith(".csv"):
        text = record.report().to_csv()
    else:
        text = record.to_json(indent=2)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
