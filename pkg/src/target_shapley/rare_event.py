"""Failure-probability estimation and cross-entropy importance sampling."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .benchmarks import FailureProblem
from .distributions import GaussianMixtureModel, GaussianModel, InputModel, TransformedInputModel
from .errors import CapabilityError, ConfigurationError, RareEventWarning, StagnationError


def likelihood_ratio(f: InputModel, g: InputModel, x):
    """``f(x)/g(x)`` with the convention ``0/0 = 0``."""
    if f is g:
        return np.ones(np.atleast_2d(x).shape[0])
    logf = np.atleast_1d(f.logpdf(x))
    logg = np.atleast_1d(g.logpdf(x))
    out = np.zeros_like(logf)
    ok = np.isfinite(logf) & np.isfinite(logg)
    out[ok] = np.exp(logf[ok] - logg[ok])
    if np.any(np.isfinite(logf) & ~np.isfinite(logg)):
        raise CapabilityError("auxiliary density vanishes where the input density does not")
    return out


def _indicator_weights(problem, g, points, values):
    psi = (values > problem.threshold).astype(float)
    weights = np.zeros(points.shape[0])
    fail = psi > 0
    if fail.any():
        weights[fail] = likelihood_ratio(problem.input_model, g, points[fail])
    return psi, weights


def failure_weights(problem: FailureProblem, g: InputModel, points):
    """Evaluate ``phi`` at ``points`` drawn from ``g``; return ``(psi, w)``."""
    points = np.atleast_2d(points)
    return _indicator_weights(problem, g, points, problem.evaluate(points))


@dataclass(frozen=True)
class WeightedFailureSample:
    """Points drawn from ``g`` with their failure indicators and IS weights."""

    points: np.ndarray
    values: np.ndarray
    indicators: np.ndarray
    weights: np.ndarray
    f: InputModel
    g: InputModel
    threshold: float

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @classmethod
    def from_points(cls, problem: FailureProblem, g: InputModel, points, values=None):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        values = problem.evaluate(points) if values is None else np.asarray(values, dtype=float)
        psi, weights = _indicator_weights(problem, g, points, values)
        return cls(points, values, psi, weights, problem.input_model, g, problem.threshold)

    @classmethod
    def draw(cls, problem: FailureProblem, g: InputModel, n: int, rng):
        return cls.from_points(problem, g, g.sample(n, rng))


@dataclass(frozen=True)
class MCResult:
    estimate: float
    standard_error: float
    n: int


def mc_failure_probability(problem: FailureProblem, n: int, rng, chunk: int = 1_000_000) -> MCResult:
    """Crude Monte Carlo estimate of ``P(phi(X) > t)`` with its standard error."""
    if n < 1:
        raise ValueError("n must be >= 1")
    hits = 0
    left = n
    while left > 0:
        m = min(chunk, left)
        hits += int(problem.indicator(problem.input_model.sample(m, rng)).sum())
        left -= m
    p = hits / n
    return MCResult(p, math.sqrt(p * (1 - p) / n), n)


def is_failure_probability(sample: WeightedFailureSample) -> float:
    """Importance-sampling estimate ``mean(w)`` of the failure probability."""
    if sample.n < 1:
        raise ValueError("sample is empty")
    if not np.any(sample.weights > 0):
        warnings.warn("no failure point in the sample; estimate is 0", RareEventWarning, stacklevel=2)
        return 0.0
    return float(np.mean(sample.weights))


def variance_of_mean_unbiased(values) -> float:
    """Unbiased estimate of ``Var(mean(z))`` from i.i.d. values ``z``."""
    z = np.asarray(values, dtype=float).ravel()
    n = z.shape[0]
    if n < 2:
        raise ValueError("at least two values are required")
    zbar = np.mean(z)
    return float((np.mean(z * z) - zbar * zbar) / (n - 1))


def is_pt_squared_unbiased(sample: WeightedFailureSample) -> float:
    """Unbiased importance-sampling estimate of the squared failure probability."""
    w = sample.weights
    if w.shape[0] < 2:
        raise ValueError("at least two points are required")
    p = np.mean(w)
    return float(p * p - variance_of_mean_unbiased(w))


# --------------------------------------------------------------------------
# Cross-entropy
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CEConfig:
    """Settings of the multilevel cross-entropy algorithm.

    ``family`` is ``"single-gaussian"`` or ``"gaussian-mixture"`` (with
    ``n_components`` components).  ``smoothing`` blends new parameters with
    the previous ones (1 means no blending).
    """

    family: str = "single-gaussian"
    n_components: int = 2
    samples_per_level: int = 2000
    quantile_level: float = 0.1
    max_levels: int = 20
    smoothing: float = 1.0
    eigen_floor: float = 1e-10
    moment_samples: int = 100_000

    def __post_init__(self):
        if self.family not in ("single-gaussian", "gaussian-mixture"):
            raise ConfigurationError(f"unknown CE family {self.family!r}")
        if not 0 < self.quantile_level < 1:
            raise ConfigurationError("quantile_level must lie in (0, 1)")
        if self.samples_per_level < 10 / self.quantile_level:
            raise ConfigurationError("samples_per_level must be at least 10/quantile_level")
        if not 0 < self.smoothing <= 1:
            raise ConfigurationError("smoothing must lie in (0, 1]")
        if self.max_levels < 1 or self.n_components < 1:
            raise ConfigurationError("max_levels and n_components must be positive")

    @classmethod
    def from_dict(cls, cfg: dict) -> "CEConfig":
        return cls(**cfg)


@dataclass
class CEResult:
    density: InputModel
    sample: WeightedFailureSample | None
    levels: list
    n_calls: int
    floored: list = field(default_factory=list)

    @property
    def n_levels(self) -> int:
        return len(self.levels)


def input_moments(model: InputModel, rng, n: int = 100_000):
    """Mean and covariance of ``model``: exact for Gaussian families, else empirical."""
    if isinstance(model, (GaussianModel, GaussianMixtureModel)):
        return model.moments()
    x = model.sample(n, rng)
    return x.mean(axis=0), np.cov(x, rowvar=False)


def _floor_cov(cov, floor):
    vals, vecs = np.linalg.eigh(0.5 * (cov + cov.T))
    hit = bool(np.any(vals < floor))
    vals = np.maximum(vals, floor)
    return (vecs * vals) @ vecs.T, hit


def _weighted_gaussian(z, w):
    w = w / w.sum()
    mean = w @ z
    diff = z - mean
    return mean, (diff * w[:, None]).T @ diff


def _weighted_em(z, w, k, rng, floor, n_iter=200, tol=1e-8):
    """Weighted EM for a Gaussian mixture in standardised coordinates."""
    n, d = z.shape
    w = w / w.sum()
    k = min(k, n)
    centres = z[rng.choice(n, size=k, replace=False, p=w)]
    d2 = ((z[:, None, :] - centres[None]) ** 2).sum(axis=-1)
    resp = np.zeros((n, k))
    resp[np.arange(n), np.argmin(d2, axis=1)] = 1.0
    prev = -np.inf
    floored = False
    comps = []
    for _ in range(n_iter):
        nk = (w[:, None] * resp).sum(axis=0)
        keep = nk > 1e-6
        if not keep.any():
            raise StagnationError("all mixture components collapsed")
        resp, nk = resp[:, keep], nk[keep]
        comps = []
        for j in range(resp.shape[1]):
            rw = w * resp[:, j]
            mean, cov = _weighted_gaussian(z, rw)
            cov, hit = _floor_cov(cov, floor)
            floored |= hit
            comps.append((mean, cov))
        pis = nk / nk.sum()
        logp = np.stack(
            [GaussianModel(m, c).logpdf(z) + math.log(p) for (m, c), p in zip(comps, pis)], axis=1
        )
        norm = logsumexp(logp, axis=1, keepdims=True)
        resp = np.exp(logp - norm)
        ll = float(w @ norm[:, 0])
        if abs(ll - prev) < tol * (1 + abs(ll)):
            break
        prev = ll
    return pis, comps, floored


def _latent_map(f: InputModel, rng, n_moments):
    """Coordinates in which CE fits its Gaussian family, and the way back.

    Transformed-Gaussian inputs are handled in their latent coordinates so
    that the auxiliary density inherits the tails of the input marginals.
    """
    if isinstance(f, TransformedInputModel) and isinstance(f.base, GaussianModel):
        mean, cov = f.base.moments()
        wrap = lambda latent: TransformedInputModel(latent, f.transforms, names=f.names)  # noqa: E731
        return f.to_latent, wrap, mean, cov
    mean, cov = input_moments(f, rng, n_moments)
    return (lambda x: x), (lambda latent: latent), mean, cov


def cross_entropy_fit(
    problem: FailureProblem,
    config: CEConfig | None = None,
    rng=None,
    final_size: int | None = None,
) -> CEResult:
    """Adapt a Gaussian or Gaussian-mixture density towards the failure domain.

    For inputs defined as coordinate-wise transforms of a Gaussian vector the
    family is fitted on the latent vector and pushed through the same
    transforms.  Returns the fitted density and a fresh i.i.d. sample of
    ``final_size`` points drawn from it (``samples_per_level`` by default,
    none when 0), with indicators and weights computed against the input
    density.
    """
    config = CEConfig() if config is None else config
    rng = np.random.default_rng() if rng is None else rng
    f = problem.input_model
    t = problem.threshold
    to_fit, wrap, loc, cov0 = _latent_map(f, rng, config.moment_samples)
    scale = np.sqrt(np.diag(cov0))
    if np.any(scale <= 0):
        raise ConfigurationError("input model has a degenerate coordinate")
    std_cov = cov0 / np.outer(scale, scale)
    g: InputModel = wrap(GaussianModel(loc, cov0))
    params = [(1.0, np.zeros(f.dim), std_cov)]
    levels = []
    floored = []
    calls = 0
    for _ in range(config.max_levels):
        x = g.sample(config.samples_per_level, rng)
        y = problem.evaluate(x)
        calls += x.shape[0]
        gamma = min(t, float(np.quantile(y, 1 - config.quantile_level)))
        levels.append(gamma)
        hit = y >= gamma
        w = np.zeros(x.shape[0])
        if hit.any():
            w[hit] = likelihood_ratio(f, g, x[hit])
        if not np.any(w > 0):
            raise StagnationError(
                "no weighted exceedance at this level",
                {"levels": levels, "n_calls": calls, "density": g},
            )
        z = (to_fit(x[w > 0]) - loc) / scale
        ww = w[w > 0]
        if config.family == "single-gaussian":
            mean, cov = _weighted_gaussian(z, ww)
            cov, flag = _floor_cov(cov, config.eigen_floor)
            new = [(1.0, mean, cov)]
        else:
            pis, comps, flag = _weighted_em(z, ww, config.n_components, rng, config.eigen_floor)
            new = [(p, m, c) for p, (m, c) in zip(pis, comps)]
        floored.append(flag)
        a = config.smoothing
        if a < 1 and len(new) == len(params):
            new = [
                (a * pn + (1 - a) * po, a * mn + (1 - a) * mo, a * cn + (1 - a) * co)
                for (pn, mn, cn), (po, mo, co) in zip(new, params)
            ]
        params = new
        comps = [GaussianModel(loc + scale * m, c * np.outer(scale, scale)) for _, m, c in params]
        if len(comps) == 1:
            g = wrap(comps[0])
        else:
            pis = np.array([p for p, _, _ in params])
            g = wrap(GaussianMixtureModel(pis / pis.sum(), comps))
        if gamma >= t:
            break
    else:
        raise StagnationError(
            f"threshold not reached after {config.max_levels} levels",
            {"levels": levels, "n_calls": calls, "density": g},
        )
    size = config.samples_per_level if final_size is None else final_size
    sample = None
    if size > 0:
        sample = WeightedFailureSample.draw(problem, g, size, rng)
        calls += sample.n
    return CEResult(g, sample, levels, calls, floored)
