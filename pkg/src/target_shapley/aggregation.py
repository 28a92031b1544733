"""Shapley aggregation of conditional indices, normalisers and preprocessing."""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from .distributions import InputModel, as_subset
from .errors import AggregationError, ClampWarning, ConfigurationError, StandardizationError


def _value(c) -> float:
    return float(c.value) if hasattr(c, "value") else float(c)


class _Costs:
    """Cost function ``c(u)`` with the fixed endpoints ``c(empty) = 0``, ``c(all) = V``.

    Each proper subset is evaluated at most once.
    """

    def __init__(self, source, d, total):
        self.source = source
        self.d = d
        self.total = total
        self.cache = {}

    def __call__(self, u) -> float:
        u = tuple(sorted(u))
        if not u:
            return 0.0
        if len(u) == self.d:
            return self.total
        if u not in self.cache:
            src = self.source
            raw = src[u] if isinstance(src, Mapping) else src(u)
            self.cache[u] = _value(raw)
        return self.cache[u]


def _subsets_without(i, d):
    others = [j for j in range(d) if j != i]
    return [c for r in range(d) for c in itertools.combinations(others, r)]


def _combine(weights, costs: _Costs, d, normalizer):
    """``Sh_i = sum_u weight(i, u) (c(u + i) - c(u)) / V`` in a canonical order."""
    out = np.zeros(d)
    # evaluate costs in canonical order so cache filling is deterministic
    for r in range(1, d):
        for u in itertools.combinations(range(d), r):
            costs(u)
    for i in range(d):
        total = 0.0
        for u in _subsets_without(i, d):
            w = weights.get((i, u), 0.0)
            if w:
                total += w * (costs(tuple(sorted(u + (i,)))) - costs(u))
        out[i] = total / normalizer
    return out


def shapley_weight(d: int, size: int) -> float:
    """``1 / (d * C(d-1, size))`` correctly rounded."""
    return float(Fraction(1, d * math.comb(d - 1, size)))


def _check_normalizer(normalizer):
    if not normalizer > 0:
        raise AggregationError(f"the normaliser must be positive, got {normalizer}")


def subset_aggregate(costs, d: int, normalizer: float) -> np.ndarray:
    """Shapley effects from conditional indices of every proper subset.

    ``costs`` maps a sorted subset tuple to a closed index ``T-VE_u`` or to
    its dual ``T-EV_u`` (either a mapping or a callable; values may be plain
    floats or objects with a ``value`` attribute).  Both kinds share the
    endpoints 0 for the empty set and ``normalizer`` for the full set.
    """
    _check_normalizer(normalizer)
    if d == 1:
        return np.ones(1)
    cost = _Costs(costs, d, normalizer)
    weights = {(i, u): shapley_weight(d, len(u)) for i in range(d) for u in _subsets_without(i, d)}
    return _combine(weights, cost, d, normalizer)


def all_permutations(d: int) -> list:
    return [tuple(p) for p in itertools.permutations(range(d))]


def permutation_aggregate(
    costs,
    d: int,
    m: int,
    normalizer: float,
    rng=None,
    permutations=None,
    cached: bool = True,
) -> np.ndarray:
    """Shapley effects averaged over ``m`` random orderings of the inputs.

    With ``cached=True`` each subset is evaluated once and shared by all
    orderings.  With ``cached=False`` the ``d - 1`` interior prefix sets of
    every ordering are evaluated afresh, which is how the budget of the
    random-permutation procedure is accounted.  ``permutations`` overrides
    the random draw (e.g. ``all_permutations(d)`` for the exact average).
    """
    _check_normalizer(normalizer)
    if m < 1:
        raise ConfigurationError("m must be >= 1")
    if d == 1:
        return np.ones(1)
    if permutations is None:
        rng = np.random.default_rng() if rng is None else rng
        permutations = [tuple(int(k) for k in rng.permutation(d)) for _ in range(m)]
    else:
        permutations = [tuple(p) for p in permutations]
        m = len(permutations)
    if cached:
        counts = {}
        for perm in permutations:
            for pos, i in enumerate(perm):
                key = (i, tuple(sorted(perm[:pos])))
                counts[key] = counts.get(key, 0) + 1
        weights = {k: float(Fraction(c, m)) for k, c in counts.items()}
        return _combine(weights, _Costs(costs, d, normalizer), d, normalizer)
    out = np.zeros(d)
    for perm in permutations:
        vals = [0.0]
        for pos in range(1, d):
            u = tuple(sorted(perm[:pos]))
            vals.append(_value(costs[u] if isinstance(costs, Mapping) else costs(u)))
        vals.append(normalizer)
        for pos, i in enumerate(perm):
            out[i] += vals[pos + 1] - vals[pos]
    return out / (m * normalizer)


# --------------------------------------------------------------------------
# Normaliser
# --------------------------------------------------------------------------


def indicator_variance(p_hat=None, *, indicators=None, weights=None, scheme: str = "plugin") -> float:
    """Estimate ``Var(psi_t(X))``.

    ``plugin``: ``p(1-p)`` from a probability estimate (clamped to [0, 1]).
    ``mc``: sample variance of crude Monte Carlo indicators.
    ``unbiased``: ``p - p^2`` with both terms estimated without bias from IS
    weights.
    """
    if scheme == "plugin":
        if p_hat is None:
            if weights is None:
                raise ConfigurationError("plugin scheme needs p_hat or weights")
            p_hat = float(np.mean(weights))
        if not 0.0 <= p_hat <= 1.0:
            warnings.warn(f"probability estimate {p_hat} clamped to [0, 1]", ClampWarning, stacklevel=2)
            p_hat = min(max(p_hat, 0.0), 1.0)
        return p_hat * (1.0 - p_hat)
    if scheme == "mc":
        if indicators is None or len(indicators) < 2:
            raise ConfigurationError("mc scheme needs at least two indicators")
        return float(np.var(np.asarray(indicators, dtype=float), ddof=1))
    if scheme == "unbiased":
        if weights is None:
            raise ConfigurationError("unbiased scheme needs IS weights")
        w = np.asarray(weights, dtype=float)
        p = float(np.mean(w))
        return p - (p * p - (np.mean(w * w) - p * p) / (w.shape[0] - 1))
    raise ConfigurationError(f"unknown variance scheme {scheme!r}")


# --------------------------------------------------------------------------
# Standardisation
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class StandardizationMap:
    """Affine map ``z = (x - shift) / scale`` applied coordinate-wise."""

    shift: np.ndarray
    scale: np.ndarray
    source: str = "auxiliary"
    exact: bool = True

    def __post_init__(self):
        shift = np.asarray(self.shift, dtype=float)
        scale = np.asarray(self.scale, dtype=float)
        if shift.shape != scale.shape:
            raise StandardizationError("shift and scale must have the same shape")
        if not np.all(np.isfinite(scale)) or np.any(scale <= 0):
            raise StandardizationError("every coordinate needs a positive finite scale")
        object.__setattr__(self, "shift", shift)
        object.__setattr__(self, "scale", scale)

    def apply(self, x):
        return (np.asarray(x, dtype=float) - self.shift) / self.scale

    def inverse(self, z):
        return np.asarray(z, dtype=float) * self.scale + self.shift

    def log_jacobian(self, v=None) -> float:
        """``log |dx/dz|`` over the coordinates ``v`` (all by default)."""
        s = self.scale if v is None else self.scale[list(v)]
        return float(np.sum(np.log(s)))


def fit_standardization(h: InputModel | None = None, sample=None, mode: str = "auto", source: str = "auxiliary"):
    """Standardisation from the moments of ``h`` or of a sample.

    ``mode="exact"`` requires closed-form moments, ``"empirical"`` uses the
    sample, and ``"auto"`` tries exact moments first.
    """
    if mode not in ("auto", "exact", "empirical"):
        raise ConfigurationError(f"unknown standardisation mode {mode!r}")
    if mode in ("auto", "exact") and h is not None:
        try:
            mean, cov = h.moments()
            return StandardizationMap(mean, np.sqrt(np.diag(cov)), source, True)
        except Exception as exc:  # CapabilityError or missing method
            if mode == "exact":
                raise StandardizationError(f"{h!r} has no exact moments") from exc
    if sample is None:
        raise StandardizationError("empirical standardisation needs a sample")
    sample = np.asarray(sample, dtype=float)
    scale = sample.std(axis=0, ddof=1)
    if np.any(scale <= 0):
        raise StandardizationError("a coordinate of the sample is constant")
    return StandardizationMap(sample.mean(axis=0), scale, source, False)


class StandardizedDensity(InputModel):
    """Density of ``Z = (X - shift)/scale`` for ``X ~ model``."""

    def __init__(self, model: InputModel, smap: StandardizationMap):
        self.model = model
        self.map = smap
        self.dim = model.dim

    def logpdf(self, z):
        return self.model.logpdf(self.map.inverse(z)) + self.map.log_jacobian()

    def marginal_logpdf(self, v, z_v):
        v = as_subset(v, self.dim)
        idx = list(v)
        x_v = np.asarray(z_v, dtype=float) * self.map.scale[idx] + self.map.shift[idx]
        return self.model.marginal_logpdf(v, x_v) + self.map.log_jacobian(v)

    def sample(self, n, rng):
        return self.map.apply(self.model.sample(n, rng))


# --------------------------------------------------------------------------
# Budget
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Budget:
    """Sample sizes of one Shapley estimation and its expected call count."""

    scheme: str
    mode: str
    d: int
    n_tot: int
    n_v: int
    n_outer: int
    n_inner: int
    n_subsets: int
    expected_calls: int
    reuse: bool = False
    m: int | None = None

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def allocate_budget(
    scheme: str,
    d: int,
    n_tot: int = 20_000,
    n_v: int = 10_000,
    n_inner: int = 3,
    mode: str = "given-model",
    n_outer: int | None = None,
    reuse: bool = False,
    procedure: str = "subset",
    m: int | None = None,
) -> Budget:
    """Split ``n_tot`` evaluations between the normaliser and the subsets.

    Given-model runs take ``n_outer = floor((n_tot - n_v) / (n_inner (2^d - 2)))``
    for dmc and ``floor((n_tot - n_v) / (2 (2^d - 2)))`` for pf, unless
    ``n_outer`` is given.  Given-data runs use a fixed ``n_outer`` (1000 by
    default) and no evaluation beyond the ``n_tot`` sample.
    """
    if scheme not in ("dmc", "pf"):
        raise ConfigurationError("scheme must be 'dmc' or 'pf'")
    if d < 2:
        raise ConfigurationError("at least two inputs are required")
    n_sub = 2**d - 2
    per_point = n_inner if scheme == "dmc" else 2
    if scheme == "dmc" and n_inner < 2:
        raise ConfigurationError("dmc needs n_inner >= 2")
    if procedure == "permutation":
        if m is None or m < 1:
            raise ConfigurationError("the permutation procedure needs m >= 1")
        n_evals = m * (d - 1)
    elif procedure == "subset":
        n_evals = n_sub
    else:
        raise ConfigurationError(f"unknown procedure {procedure!r}")
    if mode == "given-data":
        n_outer = 1000 if n_outer is None else n_outer
        return Budget(scheme, mode, d, n_tot, n_v, n_outer, per_point, n_evals, n_tot, reuse, m)
    if mode != "given-model":
        raise ConfigurationError(f"unknown mode {mode!r}")
    if n_outer is None:
        n_outer = (n_tot - n_v) // (per_point * n_evals)
    if n_outer < 1:
        raise ConfigurationError("budget too small for a single outer point")
    fresh = per_point - 1 if reuse else per_point
    expected = n_v + n_evals * fresh * n_outer
    return Budget(scheme, mode, d, n_tot, n_v, n_outer, per_point, n_evals, expected, reuse, m)


# --------------------------------------------------------------------------
# Report
# --------------------------------------------------------------------------


def box_stats(values) -> dict:
    """Quartiles (inclusive method) and 1.5 IQR whiskers clipped to the data."""
    x = np.sort(np.asarray(values, dtype=float))
    q1, med, q3 = np.quantile(x, [0.25, 0.5, 0.75])
    iqr = q3 - q1
    lo = x[x >= q1 - 1.5 * iqr].min()
    hi = x[x <= q3 + 1.5 * iqr].max()
    return {"q1": float(q1), "median": float(med), "q3": float(q3), "whisker_low": float(lo), "whisker_high": float(hi)}


@dataclass
class ShapleyReport:
    """Shapley effects of ``n_rep`` replications (rows) for ``d`` inputs."""

    effects: np.ndarray
    names: tuple
    normalizers: np.ndarray
    procedure: str = "subset"
    estimator: str = ""
    budget: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.effects = np.atleast_2d(np.asarray(self.effects, dtype=float))
        self.normalizers = np.atleast_1d(np.asarray(self.normalizers, dtype=float))

    def summary(self) -> dict:
        return {name: box_stats(self.effects[:, i]) for i, name in enumerate(self.names)}

    def medians(self) -> np.ndarray:
        return np.median(self.effects, axis=0)

    def to_dict(self) -> dict:
        return {
            "estimator": self.estimator,
            "procedure": self.procedure,
            "names": list(self.names),
            "effects": self.effects.tolist(),
            "normalizers": self.normalizers.tolist(),
            "budget": self.budget,
            "summary": self.summary(),
            "metadata": self.metadata,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        cols = ["q1", "median", "q3", "whisker_low", "whisker_high"]
        writer.writerow(["input"] + cols)
        for name, stats in self.summary().items():
            writer.writerow([name] + [repr(stats[c]) for c in cols])
        return buf.getvalue()
