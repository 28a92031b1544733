"""Exact target sensitivity indices for a linear limit state with Gaussian inputs.

With ``phi(x) = beta^T x`` and ``X ~ N(mu, Sigma)``, the conditional failure
probability given ``X_u`` is ``Phi(A)`` for a univariate Gaussian ``A``, so
every closed Sobol index of the failure indicator reduces to a 1-d integral.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy.special import ndtr

from .aggregation import subset_aggregate
from .benchmarks import GaussianLinearSpec
from .distributions import GaussianModel, InputModel, as_subset, complement, proper_subsets
from .errors import ConfigurationError, ModelError


@dataclass(frozen=True)
class QuadratureConfig:
    """Gauss-Hermite rule: starting node count and absolute tolerance.

    The node count is doubled until two successive rules agree to
    ``tolerance`` (up to ``max_nodes``).
    """

    nodes: int = 128
    tolerance: float = 1e-10
    max_nodes: int = 8192

    def __post_init__(self):
        if self.nodes < 32:
            raise ConfigurationError("at least 32 quadrature nodes are required")
        if self.tolerance <= 0:
            raise ConfigurationError("tolerance must be positive")


@lru_cache(maxsize=16)
def _rule(n):
    x, w = hermegauss(n)
    return x, w / math.sqrt(2 * math.pi)


def _quadratic_form(spec: GaussianLinearSpec) -> float:
    q = float(spec.beta @ spec.cov @ spec.beta)
    if not q > 0:
        raise ModelError("beta^T Sigma beta must be positive")
    return q


def gl_failure_probability(spec: GaussianLinearSpec) -> float:
    """``P(beta^T X > t)``."""
    q = _quadratic_form(spec)
    return float(ndtr((spec.beta @ spec.mean - spec.t) / math.sqrt(q)))


def gl_conditional_law(spec: GaussianLinearSpec, u):
    """Spread of ``E[beta^T X | X_u]`` and the residual conditional variance.

    Returns ``(tau2, s2)`` with ``tau2 + s2 = beta^T Sigma beta``.
    """
    d = spec.beta.shape[0]
    u = list(as_subset(u, d))
    r = list(complement(u, d))
    b_u, b_r = spec.beta[u], spec.beta[r]
    s_uu = spec.cov[np.ix_(u, u)]
    if not r:
        return float(b_u @ s_uu @ b_u), 0.0
    s_ur = spec.cov[np.ix_(u, r)]
    a = b_u + np.linalg.solve(s_uu, s_ur @ b_r)
    tau2 = float(a @ s_uu @ a)
    schur = spec.cov[np.ix_(r, r)] - s_ur.T @ np.linalg.solve(s_uu, s_ur)
    s2 = float(b_r @ schur @ b_r)
    return tau2, s2


def gl_target_closed_sobol(spec: GaussianLinearSpec, u, quad: QuadratureConfig | None = None) -> float:
    """``Var[P(beta^T X > t | X_u)]`` by Gauss-Hermite quadrature."""
    quad = QuadratureConfig() if quad is None else quad
    d = spec.beta.shape[0]
    u = as_subset(u, d)
    p = gl_failure_probability(spec)
    if not np.any(spec.beta[list(complement(u, d))]):
        return p * (1 - p)
    tau2, s2 = gl_conditional_law(spec, u)
    if s2 <= 0:
        raise ModelError("residual conditional variance is not positive; covariance is numerically singular")
    if tau2 == 0:
        return 0.0
    centre = (spec.beta @ spec.mean - spec.t) / math.sqrt(s2)
    slope = math.sqrt(tau2 / s2)

    def second_moment(n):
        x, w = _rule(n)
        return float(w @ ndtr(centre + slope * x) ** 2)

    n = quad.nodes
    prev = second_moment(n)
    while n < quad.max_nodes:
        n *= 2
        cur = second_moment(n)
        if abs(cur - prev) <= quad.tolerance:
            return max(cur - p * p, 0.0)
        prev = cur
    raise ModelError(f"quadrature did not reach tolerance {quad.tolerance} with {n} nodes")


def gl_target_ev(spec: GaussianLinearSpec, u, quad: QuadratureConfig | None = None) -> float:
    """``E[Var(1(beta^T X > t) | X_{-u})]``, the dual of the closed index."""
    d = spec.beta.shape[0]
    u = as_subset(u, d)
    p = gl_failure_probability(spec)
    if len(u) == d:
        return p * (1 - p)
    return p * (1 - p) - gl_target_closed_sobol(spec, complement(u, d), quad)


def gl_target_closed_sobol_all(spec: GaussianLinearSpec, quad: QuadratureConfig | None = None) -> dict:
    """Closed indices of every proper subset, keyed by subset."""
    return {u: gl_target_closed_sobol(spec, u, quad) for u in proper_subsets(spec.beta.shape[0])}


def gl_target_shapley(spec: GaussianLinearSpec, quad: QuadratureConfig | None = None) -> np.ndarray:
    """Target Shapley effects of every input, normalised by ``p(1-p)``."""
    d = spec.beta.shape[0]
    p = gl_failure_probability(spec)
    var = p * (1 - p)
    if d == 1:
        return np.ones(1)
    costs = gl_target_closed_sobol_all(spec, quad)
    return subset_aggregate(costs, d, var)


class GaussianLinearOptimalDensity(InputModel):
    """The input density restricted to the failure domain, ``1(phi > t) f / p``.

    Exact densities, marginals and samplers for a Gaussian-linear problem;
    sampling is by rejection from the input law, so it is only practical for
    moderate failure probabilities.
    """

    def __init__(self, spec: GaussianLinearSpec, batch: int = 65536, max_rounds: int = 10_000):
        self.spec = spec
        self.f = GaussianModel(spec.mean, spec.cov)
        self.dim = self.f.dim
        self.p = gl_failure_probability(spec)
        if not self.p > 0:
            raise ModelError("failure probability underflows")
        self._logp = math.log(self.p)
        self.batch = batch
        self.max_rounds = max_rounds

    def __repr__(self):
        return f"GaussianLinearOptimalDensity(dim={self.dim}, p={self.p:.3g})"

    def _fails(self, x):
        return x @ self.spec.beta > self.spec.t

    def conditional_failure_probability(self, v, x_v):
        """``P(beta^T X > t | X_v = x_v)`` for each row of ``x_v``."""
        v = as_subset(v, self.dim)
        x_v = np.atleast_2d(np.asarray(x_v, dtype=float))
        r = complement(v, self.dim)
        b_v = self.spec.beta[list(v)]
        if not r:
            return (x_v @ b_v > self.spec.t).astype(float)
        b_r = self.spec.beta[list(r)]
        _, s2 = gl_conditional_law(self.spec, v)
        m = x_v @ b_v + self.f.conditional_mean(r, x_v) @ b_r
        if s2 <= 0:
            return (m > self.spec.t).astype(float)
        return ndtr((m - self.spec.t) / math.sqrt(s2))

    def logpdf(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        out = self.f.logpdf(x) - self._logp
        return np.where(self._fails(x), out, -np.inf)

    def marginal_logpdf(self, v, x_v):
        v = as_subset(v, self.dim)
        if len(v) == self.dim:
            return self.logpdf(x_v)
        with np.errstate(divide="ignore"):
            logq = np.log(self.conditional_failure_probability(v, x_v))
        return self.f.marginal_logpdf(v, np.atleast_2d(x_v)) + logq - self._logp

    def sample(self, n: int, rng):
        out, have = np.empty((n, self.dim)), 0
        for _ in range(self.max_rounds):
            size = min(self.batch, int(1.2 * (n - have) / self.p) + 256)
            x = self.f.sample(size, rng)
            x = x[self._fails(x)][: n - have]
            out[have:have + len(x)] = x
            have += len(x)
            if have == n:
                return out
        raise ModelError("rejection sampler exhausted its rounds")

    def sample_marginal(self, v, n: int, rng):
        return self.sample(n, rng)[:, list(as_subset(v, self.dim))]

    def sample_conditional(self, target, given_values, n_per: int, rng):
        """Rejection from ``f_{target|rest}`` until every draw fails."""
        target = as_subset(target, self.dim)
        given = complement(target, self.dim)
        x_g = np.atleast_2d(np.asarray(given_values, dtype=float))
        m = x_g.shape[0]
        out = np.empty((m, n_per, len(target)))
        todo = np.ones((m, n_per), dtype=bool)
        for _ in range(self.max_rounds):
            rows, cols = np.nonzero(todo)
            if rows.size == 0:
                return out
            # several candidates per pending slot; the first failing one is kept
            k = max(1, self.batch // rows.size)
            draw = self.f.sample_conditional(target, x_g[rows], k, rng)
            full = np.empty((rows.size, k, self.dim))
            full[:, :, list(target)] = draw
            full[:, :, list(given)] = x_g[rows][:, None, :]
            ok = self._fails(full)
            hit = ok.any(axis=1)
            first = np.argmax(ok, axis=1)
            out[rows[hit], cols[hit]] = draw[hit, first[hit]]
            todo[rows[hit], cols[hit]] = False
        raise ModelError("rejection sampler exhausted its rounds")
