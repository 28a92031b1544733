"""Estimators of the target conditional indices.

For a subset ``u`` of inputs and the failure indicator ``psi = 1(phi(X) > t)``:

* ``T-EV_u = E[Var(psi | X_{-u})]`` is estimated by double Monte Carlo (dmc),
* ``T-VE_u = Var[E(psi | X_u)]`` is estimated by Pick-Freeze (pf).

Each comes in a given-model flavour, which draws conditional samples, and a
given-data flavour, which replaces conditional draws by nearest neighbours in
a single i.i.d. sample.  The importance-sampling (IS) versions use points
drawn from an auxiliary density ``g`` and the weights ``w = psi f/g``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .benchmarks import FailureProblem
from .distributions import InputModel, as_subset, complement
from .errors import CapabilityError, ConfigurationError
from .knn import NeighbourCache
from .rare_event import WeightedFailureSample, failure_weights, is_pt_squared_unbiased


@dataclass(frozen=True)
class ConditionalIndexEstimate:
    """One estimate of ``T-EV_u`` (kind ``"TEV"``) or ``T-VE_u`` (kind ``"TVE"``)."""

    value: float
    subset: tuple
    kind: str
    scheme: str
    n_outer: int
    n_inner: int
    n_calls: int
    zeroed_terms: int = 0
    details: dict = field(default_factory=dict, compare=False)

    def __float__(self):
        return float(self.value)


def _proper(u, d):
    u = as_subset(u, d)
    if len(u) == d:
        raise ValueError("the subset must be a proper subset of the inputs")
    return u, complement(u, d)


def _check_counts(n_outer, n_inner=None, dmc=False):
    if n_outer < 1:
        raise ConfigurationError("the outer sample size must be >= 1")
    if dmc and (n_inner is None or n_inner < 2):
        raise ConfigurationError("double Monte Carlo needs an inner sample size >= 2")


def _require_conditional(model: InputModel):
    if not hasattr(model, "sample_conditional"):
        raise CapabilityError(f"{type(model).__name__} cannot sample conditionally")


def marginal_ratio(g: InputModel, f: InputModel, v, x_v):
    """``g_v(x_v) / f_v(x_v)`` and a mask of points where ``f_v = 0``.

    Where ``f_v`` vanishes the ratio is returned as 0; the caller decides
    whether the corresponding term is legitimately zero.
    """
    x_v = np.atleast_2d(x_v)
    if g is f:
        return np.ones(x_v.shape[0]), np.zeros(x_v.shape[0], dtype=bool)
    logg = np.atleast_1d(g.marginal_logpdf(v, x_v))
    logf = np.atleast_1d(f.marginal_logpdf(v, x_v))
    dead = ~np.isfinite(logf)
    ratio = np.zeros(x_v.shape[0])
    ok = ~dead & np.isfinite(logg)
    ratio[ok] = np.exp(logg[ok] - logf[ok])
    return ratio, dead


def _assemble(u, rest, x_u, x_rest):
    """Stack coordinates of ``u`` and ``rest`` into full points (broadcasting)."""
    shape = np.broadcast_shapes(x_u.shape[:-1], x_rest.shape[:-1])
    out = np.empty(shape + (len(u) + len(rest),))
    out[..., list(u)] = x_u
    out[..., list(rest)] = x_rest
    return out


# --------------------------------------------------------------------------
# Double Monte Carlo, T-EV
# --------------------------------------------------------------------------


def _dmc_is_value(pt_is, w_inner, ratio, dead):
    """``pt - [mean(wbar^2 r) - bias]`` with the 0/0 convention on dead points."""
    n_inner = w_inner.shape[1]
    wbar = w_inner.mean(axis=1)
    w2bar = (w_inner * w_inner).mean(axis=1)
    zeroed = int(np.count_nonzero(dead & (wbar != 0)))
    main = wbar * wbar * ratio
    bias = (w2bar - wbar * wbar) / (n_inner - 1) * ratio
    main[dead] = 0.0
    bias[dead] = 0.0
    first = float(np.mean(main))
    correction = float(np.mean(bias))
    value = pt_is - (first - correction)
    return value, zeroed, {"uncorrected": pt_is - first, "bias_correction": correction}


def _plain_dmc_value(psi_inner):
    # inner sample variance (unbiased), averaged over the outer loop
    return float(np.mean(np.var(psi_inner, axis=1, ddof=1)))


def t_ev_dmc_given_model(problem: FailureProblem, u, n_outer: int, n_inner: int, rng) -> ConditionalIndexEstimate:
    """Double Monte Carlo estimate of ``T-EV_u`` with draws from the input model.

    Uses ``n_outer * n_inner`` evaluations of ``phi``.
    """
    f = problem.input_model
    u, rest = _proper(u, f.dim)
    _check_counts(n_outer, n_inner, dmc=True)
    _require_conditional(f)
    x_rest = f.sample_marginal(rest, n_outer, rng)
    x_u = f.sample_conditional(u, x_rest, n_inner, rng)
    x = _assemble(u, rest, x_u, x_rest[:, None, :])
    psi = problem.indicator(x.reshape(-1, f.dim)).reshape(n_outer, n_inner)
    return ConditionalIndexEstimate(
        _plain_dmc_value(psi), u, "TEV", "dmc-given-model", n_outer, n_inner, n_outer * n_inner
    )


def t_ev_dmc_is_given_model(
    problem: FailureProblem,
    g: InputModel,
    u,
    n_outer: int,
    n_inner: int,
    pt_is: float,
    rng,
    reuse: WeightedFailureSample | None = None,
) -> ConditionalIndexEstimate:
    """Importance-sampling double Monte Carlo estimate of ``T-EV_u``.

    Outer points ``x_{-u}`` come from ``g_{-u}`` and inner points from
    ``g_{u|-u}``.  With ``reuse`` (an i.i.d. sample from ``g`` with its
    weights), outer points are resampled from it and each contributes its own
    ``x_u`` as the first inner draw, saving ``n_outer`` evaluations.
    """
    f = problem.input_model
    u, rest = _proper(u, f.dim)
    _check_counts(n_outer, n_inner, dmc=True)
    _require_conditional(g)
    if reuse is None:
        x_rest = g.sample_marginal(rest, n_outer, rng)
        x_u = g.sample_conditional(u, x_rest, n_inner, rng)
        x = _assemble(u, rest, x_u, x_rest[:, None, :])
        _, w = failure_weights(problem, g, x.reshape(-1, f.dim))
        w = w.reshape(n_outer, n_inner)
        calls = n_outer * n_inner
    else:
        s = rng.integers(0, reuse.n, size=n_outer)
        x_rest = reuse.points[s][:, list(rest)]
        x_u = g.sample_conditional(u, x_rest, n_inner - 1, rng)
        x = _assemble(u, rest, x_u, x_rest[:, None, :])
        _, w_new = failure_weights(problem, g, x.reshape(-1, f.dim))
        w = np.concatenate([reuse.weights[s][:, None], w_new.reshape(n_outer, n_inner - 1)], axis=1)
        calls = n_outer * (n_inner - 1)
    ratio, dead = marginal_ratio(g, f, rest, x_rest)
    value, zeroed, details = _dmc_is_value(pt_is, w, ratio, dead)
    scheme = "dmc-is-given-model" + ("-reuse" if reuse is not None else "")
    return ConditionalIndexEstimate(value, u, "TEV", scheme, n_outer, n_inner, calls, zeroed, details)


def _subsample(sample: WeightedFailureSample, n_outer, rng):
    return rng.integers(0, sample.n, size=n_outer)


def t_ev_dmc_knn(
    sample: WeightedFailureSample,
    u,
    n_outer: int,
    n_inner: int,
    rng,
    neighbours: NeighbourCache | None = None,
) -> ConditionalIndexEstimate:
    """Given-data double Monte Carlo estimate of ``T-EV_u`` without IS.

    Inner loops are the ``n_inner`` nearest neighbours, in the ``-u``
    coordinates, of ``n_outer`` points resampled with replacement.  The
    sample is expected to come from the input density.
    """
    d = sample.points.shape[1]
    u, rest = _proper(u, d)
    _check_counts(n_outer, n_inner, dmc=True)
    if n_inner > sample.n:
        raise ConfigurationError("inner sample size exceeds the sample size")
    neighbours = NeighbourCache(sample.points) if neighbours is None else neighbours
    s = _subsample(sample, n_outer, rng)
    nb = neighbours.query(rest, s, n_inner)
    value = _plain_dmc_value(sample.indicators[nb])
    return ConditionalIndexEstimate(value, u, "TEV", "dmc-knn", n_outer, n_inner, 0)


def t_ev_dmc_is_knn(
    sample: WeightedFailureSample,
    u,
    n_outer: int,
    n_inner: int,
    rng,
    neighbours: NeighbourCache | None = None,
    pt_is: float | None = None,
) -> ConditionalIndexEstimate:
    """Given-data importance-sampling double Monte Carlo estimate of ``T-EV_u``.

    ``neighbours`` may index a standardised copy of the sample; density
    ratios are always evaluated on the original points.  ``pt_is`` defaults
    to the IS estimate on the whole sample.
    """
    d = sample.points.shape[1]
    u, rest = _proper(u, d)
    _check_counts(n_outer, n_inner, dmc=True)
    if n_inner > sample.n:
        raise ConfigurationError("inner sample size exceeds the sample size")
    neighbours = NeighbourCache(sample.points) if neighbours is None else neighbours
    pt_is = float(np.mean(sample.weights)) if pt_is is None else pt_is
    s = _subsample(sample, n_outer, rng)
    nb = neighbours.query(rest, s, n_inner)
    ratio, dead = marginal_ratio(sample.g, sample.f, rest, sample.points[s][:, list(rest)])
    value, zeroed, details = _dmc_is_value(pt_is, sample.weights[nb], ratio, dead)
    return ConditionalIndexEstimate(value, u, "TEV", "dmc-is-knn", n_outer, n_inner, 0, zeroed, details)


# --------------------------------------------------------------------------
# Pick-Freeze, T-VE
# --------------------------------------------------------------------------


def t_ve_pf_given_model(problem: FailureProblem, u, n_outer: int, pt_squared: float, rng) -> ConditionalIndexEstimate:
    """Pick-Freeze estimate of ``T-VE_u``; ``pt_squared`` estimates ``p_t^2``.

    Uses ``2 * n_outer`` evaluations of ``phi``.
    """
    f = problem.input_model
    u, rest = _proper(u, f.dim)
    _check_counts(n_outer)
    _require_conditional(f)
    x_u = f.sample_marginal(u, n_outer, rng)
    x_rest = f.sample_conditional(rest, x_u, 2, rng)
    x = _assemble(u, rest, x_u[:, None, :], x_rest)
    psi = problem.indicator(x.reshape(-1, f.dim)).reshape(n_outer, 2)
    value = float(np.mean(psi[:, 0] * psi[:, 1])) - pt_squared
    return ConditionalIndexEstimate(value, u, "TVE", "pf-given-model", n_outer, 2, 2 * n_outer)


def t_ve_pf_is_given_model(
    problem: FailureProblem,
    g: InputModel,
    u,
    n_outer: int,
    pt_squared: float,
    rng,
    reuse: WeightedFailureSample | None = None,
) -> ConditionalIndexEstimate:
    """Importance-sampling Pick-Freeze estimate of ``T-VE_u``.

    ``x_u`` comes from ``g_u`` and both legs from ``g_{-u|u}``.  With
    ``reuse``, each resampled point is its own first leg, saving ``n_outer``
    evaluations.
    """
    f = problem.input_model
    u, rest = _proper(u, f.dim)
    _check_counts(n_outer)
    _require_conditional(g)
    if reuse is None:
        x_u = g.sample_marginal(u, n_outer, rng)
        x_rest = g.sample_conditional(rest, x_u, 2, rng)
        x = _assemble(u, rest, x_u[:, None, :], x_rest)
        _, w = failure_weights(problem, g, x.reshape(-1, f.dim))
        w = w.reshape(n_outer, 2)
        calls = 2 * n_outer
    else:
        s = rng.integers(0, reuse.n, size=n_outer)
        x_u = reuse.points[s][:, list(u)]
        x_rest = g.sample_conditional(rest, x_u, 1, rng)
        x = _assemble(u, rest, x_u[:, None, :], x_rest)
        _, w_new = failure_weights(problem, g, x.reshape(-1, f.dim))
        w = np.stack([reuse.weights[s], w_new], axis=1)
        calls = n_outer
    ratio, dead = marginal_ratio(g, f, u, x_u)
    return _pf_is_result(w[:, 0], w[:, 1], ratio, dead, pt_squared, u,
                         "pf-is-given-model" + ("-reuse" if reuse is not None else ""), n_outer, calls)


def _pf_is_result(w1, w2, ratio, dead, pt_squared, u, scheme, n_outer, calls):
    prod = w1 * w2
    zeroed = int(np.count_nonzero(dead & (prod != 0)))
    terms = prod * ratio
    terms[dead] = 0.0
    first = float(np.mean(terms))
    return ConditionalIndexEstimate(
        first - pt_squared, u, "TVE", scheme, n_outer, 2, calls, zeroed, {"first_term": first}
    )


def t_ve_pf_knn(
    sample: WeightedFailureSample,
    u,
    n_outer: int,
    rng,
    neighbours: NeighbourCache | None = None,
    pt_squared: float | None = None,
) -> ConditionalIndexEstimate:
    """Given-data Pick-Freeze estimate of ``T-VE_u`` without IS.

    Each resampled point is paired with its nearest neighbour in the ``u``
    coordinates.  ``pt_squared`` defaults to the unbiased estimate of
    ``p_t^2`` from the whole sample.
    """
    d = sample.points.shape[1]
    u, _ = _proper(u, d)
    _check_counts(n_outer)
    if sample.n < 2:
        raise ConfigurationError("at least two points are required")
    neighbours = NeighbourCache(sample.points) if neighbours is None else neighbours
    pt_squared = is_pt_squared_unbiased(sample) if pt_squared is None else pt_squared
    s = _subsample(sample, n_outer, rng)
    nb = neighbours.query(u, s, 2)
    psi = sample.indicators
    value = float(np.mean(psi[nb[:, 0]] * psi[nb[:, 1]])) - pt_squared
    return ConditionalIndexEstimate(value, u, "TVE", "pf-knn", n_outer, 2, 0)


def t_ve_pf_is_knn(
    sample: WeightedFailureSample,
    u,
    n_outer: int,
    rng,
    neighbours: NeighbourCache | None = None,
    pt_squared: float | None = None,
) -> ConditionalIndexEstimate:
    """Given-data importance-sampling Pick-Freeze estimate of ``T-VE_u``."""
    d = sample.points.shape[1]
    u, _ = _proper(u, d)
    _check_counts(n_outer)
    if sample.n < 2:
        raise ConfigurationError("at least two points are required")
    neighbours = NeighbourCache(sample.points) if neighbours is None else neighbours
    pt_squared = is_pt_squared_unbiased(sample) if pt_squared is None else pt_squared
    s = _subsample(sample, n_outer, rng)
    nb = neighbours.query(u, s, 2)
    ratio, dead = marginal_ratio(sample.g, sample.f, u, sample.points[s][:, list(u)])
    w = sample.weights
    return _pf_is_result(w[nb[:, 0]], w[nb[:, 1]], ratio, dead, pt_squared, u, "pf-is-knn", n_outer, 0)


ESTIMATORS = {
    "dmc-given-model": t_ev_dmc_given_model,
    "pf-given-model": t_ve_pf_given_model,
    "dmc-is-given-model": t_ev_dmc_is_given_model,
    "pf-is-given-model": t_ve_pf_is_given_model,
    "dmc-knn": t_ev_dmc_knn,
    "pf-knn": t_ve_pf_knn,
    "dmc-is-knn": t_ev_dmc_is_knn,
    "pf-is-knn": t_ve_pf_is_knn,
}
