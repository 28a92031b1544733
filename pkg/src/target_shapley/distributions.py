"""Joint input and auxiliary densities.

Every model exposes the same small surface used by the estimators:

* ``logpdf`` / ``pdf`` on the full space,
* ``marginal_logpdf`` / ``marginal_pdf`` over any subset of coordinates,
* ``sample`` and ``sample_marginal``,
* ``sample_conditional`` of a block of coordinates given the others.

Subsets of coordinates are plain sorted tuples of 0-based indices.
Models are immutable once built and never hold a random generator; every
sampling call receives its own ``numpy.random.Generator``.
"""

from __future__ import annotations

import math
from itertools import combinations
from typing import Sequence

import numpy as np
from scipy import linalg
from scipy.special import log_ndtr, logsumexp, ndtr

from .errors import CapabilityError, ConfigurationError, DegenerateConditionalError, ModelError

Subset = tuple

_LOG_2PI = math.log(2.0 * math.pi)


# --------------------------------------------------------------------------
# Subsets
# --------------------------------------------------------------------------


def as_subset(u, d: int) -> Subset:
    """Validate ``u`` as a nonempty set of coordinates of a ``d``-vector."""
    members = tuple(sorted(int(i) for i in np.atleast_1d(u)))
    if not members:
        raise ValueError("subset must be nonempty")
    if len(set(members)) != len(members):
        raise ValueError(f"duplicate coordinates in subset {members}")
    if members[0] < 0 or members[-1] >= d:
        raise ValueError(f"subset {members} out of range for dimension {d}")
    return members


def complement(u, d: int) -> Subset:
    """Coordinates of ``range(d)`` not in ``u``."""
    inside = set(u)
    return tuple(i for i in range(d) if i not in inside)


def proper_subsets(d: int) -> list:
    """All subsets other than the empty and the full set, by size then lexically."""
    return [c for r in range(1, d) for c in combinations(range(d), r)]


def _as_points(x, k: int):
    """Return ``x`` as an (n, k) float array plus whether it was a single point."""
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != k:
        raise ValueError(f"expected points with {k} coordinates, got shape {np.shape(x)}")
    return arr, single


def _finish(values, single):
    return float(values[0]) if single else values


# --------------------------------------------------------------------------
# Gaussian
# --------------------------------------------------------------------------


def _cholesky(cov, what="covariance"):
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise ModelError(f"{what} is not symmetric positive definite") from exc


def _condition(mean, cov, target, given):
    """Gain and covariance of ``X_target | X_given`` for a Gaussian vector."""
    target = list(target)
    given = list(given)
    s_tt = cov[np.ix_(target, target)]
    if not given:
        return np.zeros((len(target), 0)), s_tt
    s_tg = cov[np.ix_(target, given)]
    s_gg = cov[np.ix_(given, given)]
    factor = linalg.cho_factor(s_gg, lower=True)
    gain = linalg.cho_solve(factor, s_tg.T).T
    cond = s_tt - gain @ s_tg.T
    return gain, 0.5 * (cond + cond.T)


class InputModel:
    """Common helpers shared by every density model."""

    dim: int

    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def marginal_pdf(self, v, x_v):
        return np.exp(self.marginal_logpdf(v, x_v))

    def in_domain(self, x):
        arr, single = _as_points(x, self.dim)
        ok = np.all(np.isfinite(arr), axis=1)
        return bool(ok[0]) if single else ok

    def sample_marginal(self, v, n: int, rng):
        v = as_subset(v, self.dim)
        return self.sample(n, rng)[:, list(v)]

    def moments(self):
        raise CapabilityError(f"{type(self).__name__} has no closed-form moments")


class GaussianModel(InputModel):
    """Multivariate normal ``N(mean, cov)``."""

    def __init__(self, mean, cov):
        mean = np.atleast_1d(np.asarray(mean, dtype=float)).copy()
        cov = np.atleast_2d(np.asarray(cov, dtype=float)).copy()
        d = mean.shape[0]
        if mean.ndim != 1 or cov.shape != (d, d):
            raise ModelError(f"mean of length {d} needs a {d}x{d} covariance, got {cov.shape}")
        scale = np.max(np.abs(cov)) if cov.size else 1.0
        if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-12 * scale):
            raise ModelError("covariance is not symmetric")
        cov = 0.5 * (cov + cov.T)
        self.mean = mean
        self.cov = cov
        self.dim = d
        self._chol = _cholesky(cov)
        self._logdet = 2.0 * float(np.sum(np.log(np.diag(self._chol))))
        self._marginals = {}
        self._factors = {}
        mean.setflags(write=False)
        cov.setflags(write=False)

    def __repr__(self):
        return f"GaussianModel(dim={self.dim})"

    def logpdf(self, x):
        arr, single = _as_points(x, self.dim)
        sol = linalg.solve_triangular(self._chol, (arr - self.mean).T, lower=True)
        out = -0.5 * np.sum(sol * sol, axis=0) - 0.5 * self._logdet - 0.5 * self.dim * _LOG_2PI
        return _finish(out, single)

    def marginal(self, v) -> "GaussianModel":
        v = as_subset(v, self.dim)
        if v not in self._marginals:
            idx = list(v)
            self._marginals[v] = GaussianModel(self.mean[idx], self.cov[np.ix_(idx, idx)])
        return self._marginals[v]

    def marginal_logpdf(self, v, x_v):
        v = as_subset(v, self.dim)
        if len(v) == self.dim:
            return self.logpdf(x_v)
        return self.marginal(v).logpdf(x_v)

    def conditional_factors(self, target):
        """``(gain, cond_cov, cond_chol)`` of ``X_target | X_rest``."""
        target = as_subset(target, self.dim)
        if target not in self._factors:
            gain, cond = _condition(self.mean, self.cov, target, complement(target, self.dim))
            self._factors[target] = (gain, cond, _cholesky(cond, "conditional covariance"))
        return self._factors[target]

    def conditional_mean(self, target, given_values):
        target = as_subset(target, self.dim)
        given = complement(target, self.dim)
        x_g, single = _as_points(given_values, len(given))
        gain = self.conditional_factors(target)[0]
        out = self.mean[list(target)] + (x_g - self.mean[list(given)]) @ gain.T
        return out[0] if single else out

    def conditional(self, target, given_values) -> "GaussianModel":
        """Law of ``X_target`` given ``X_rest = given_values`` (a single point)."""
        target = as_subset(target, self.dim)
        given_values = np.asarray(given_values, dtype=float)
        if given_values.shape != (self.dim - len(target),):
            raise ValueError(
                f"conditioning values must have length {self.dim - len(target)}, "
                f"got shape {given_values.shape}"
            )
        return GaussianModel(self.conditional_mean(target, given_values), self.conditional_factors(target)[1])

    def sample(self, n: int, rng):
        if n < 1:
            raise ValueError("n must be >= 1")
        z = rng.standard_normal((n, self.dim))
        return self.mean + z @ self._chol.T

    def sample_marginal(self, v, n: int, rng):
        return self.marginal(v).sample(n, rng)

    def sample_conditional(self, target, given_values, n_per: int, rng):
        """Draw ``n_per`` values of ``X_target`` for each row of ``given_values``.

        Returns an array of shape ``(m, n_per, len(target))``.
        """
        target = as_subset(target, self.dim)
        means = np.atleast_2d(self.conditional_mean(target, np.atleast_2d(given_values)))
        chol = self.conditional_factors(target)[2]
        z = rng.standard_normal((means.shape[0], n_per, len(target)))
        return means[:, None, :] + z @ chol.T

    def moments(self):
        return self.mean.copy(), self.cov.copy()

    def to_config(self) -> dict:
        return {"family": "gaussian", "mean": self.mean.tolist(), "cov": self.cov.tolist()}


def gaussian_conditional(model: GaussianModel, u, x_minus_u) -> GaussianModel:
    """Conditional law of ``X_u`` given ``X_{-u} = x_minus_u``."""
    return model.conditional(u, x_minus_u)


# --------------------------------------------------------------------------
# Gaussian mixture
# --------------------------------------------------------------------------


class GaussianMixtureModel(InputModel):
    """Finite mixture of Gaussian components sharing one dimension."""

    def __init__(self, weights, components: Sequence[GaussianModel]):
        weights = np.atleast_1d(np.asarray(weights, dtype=float)).copy()
        components = list(components)
        if not components:
            raise ModelError("a mixture needs at least one component")
        if weights.shape != (len(components),):
            raise ModelError("one weight per component is required")
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
            raise ModelError("mixture weights must be nonnegative and sum to 1")
        dims = {c.dim for c in components}
        if len(dims) != 1:
            raise ModelError("all mixture components must share the same dimension")
        self.weights = weights
        self.components = tuple(components)
        self.dim = dims.pop()
        with np.errstate(divide="ignore"):
            self._logw = np.log(weights)
        self._marginals = {}
        weights.setflags(write=False)

    def __repr__(self):
        return f"GaussianMixtureModel(dim={self.dim}, k={len(self.components)})"

    def _component_logpdf(self, x, v=None):
        if v is None:
            return np.stack([c.logpdf(x) for c in self.components], axis=-1)
        return np.stack([c.marginal_logpdf(v, x) for c in self.components], axis=-1)

    def logpdf(self, x):
        arr, single = _as_points(x, self.dim)
        out = logsumexp(self._component_logpdf(arr) + self._logw, axis=-1)
        return _finish(out, single)

    def marginal(self, v) -> "GaussianMixtureModel":
        v = as_subset(v, self.dim)
        if v not in self._marginals:
            self._marginals[v] = GaussianMixtureModel(self.weights, [c.marginal(v) for c in self.components])
        return self._marginals[v]

    def marginal_logpdf(self, v, x_v):
        v = as_subset(v, self.dim)
        arr, single = _as_points(x_v, len(v))
        out = logsumexp(self._component_logpdf(arr, v) + self._logw, axis=-1)
        return _finish(out, single)

    def _posterior_logweights(self, given, x_g):
        logp = self._component_logpdf(x_g, given) + self._logw
        norm = logsumexp(logp, axis=-1, keepdims=True)
        if np.any(~np.isfinite(norm)):
            raise DegenerateConditionalError("all components have zero density at the conditioning point")
        return logp - norm

    def conditional(self, target, given_values) -> "GaussianMixtureModel":
        target = as_subset(target, self.dim)
        given = complement(target, self.dim)
        x_g = np.asarray(given_values, dtype=float)
        if x_g.shape != (len(given),):
            raise ValueError(f"conditioning values must have length {len(given)}")
        logw = self._posterior_logweights(given, x_g[None, :])[0]
        w = np.exp(logw)
        w = w / w.sum()
        comps = [c.conditional(target, x_g) for c in self.components]
        return GaussianMixtureModel(w, comps)

    def _pick(self, probs, u):
        # probs (m, k), u (m, n) uniforms -> component index per draw
        cdf = np.cumsum(probs, axis=-1)
        cdf[..., -1] = 1.0
        return (u[..., None] > cdf[:, None, :]).sum(axis=-1)

    def sample(self, n: int, rng):
        if n < 1:
            raise ValueError("n must be >= 1")
        u = rng.random((1, n))
        comp = self._pick(self.weights[None, :], u)[0]
        z = rng.standard_normal((n, self.dim))
        out = np.empty((n, self.dim))
        for k, c in enumerate(self.components):
            mask = comp == k
            out[mask] = c.mean + z[mask] @ c._chol.T
        return out

    def sample_marginal(self, v, n: int, rng):
        return self.marginal(v).sample(n, rng)

    def sample_conditional(self, target, given_values, n_per: int, rng):
        target = as_subset(target, self.dim)
        given = complement(target, self.dim)
        x_g = np.atleast_2d(np.asarray(given_values, dtype=float))
        probs = np.exp(self._posterior_logweights(given, x_g))
        u = rng.random((x_g.shape[0], n_per))
        comp = self._pick(probs, u)
        z = rng.standard_normal((x_g.shape[0], n_per, len(target)))
        out = np.empty_like(z)
        for k, c in enumerate(self.components):
            mask = comp == k
            if not mask.any():
                continue
            means = c.conditional_mean(target, x_g)
            chol = c.conditional_factors(target)[2]
            rows = np.nonzero(mask)[0]
            out[mask] = means[rows] + z[mask] @ chol.T
        return out

    def moments(self):
        mus = np.array([c.mean for c in self.components])
        mean = self.weights @ mus
        cov = sum(w * (c.cov + np.outer(c.mean, c.mean)) for w, c in zip(self.weights, self.components))
        cov = cov - np.outer(mean, mean)
        return mean, 0.5 * (cov + cov.T)

    def to_config(self) -> dict:
        return {
            "family": "mixture",
            "weights": self.weights.tolist(),
            "components": [c.to_config() for c in self.components],
        }


def mixture_conditional(model: GaussianMixtureModel, u, x_minus_u) -> GaussianMixtureModel:
    """Conditional law of ``X_u`` given ``X_{-u} = x_minus_u`` for a mixture."""
    return model.conditional(u, x_minus_u)


# --------------------------------------------------------------------------
# Coordinate-wise transformed Gaussian (with optional box truncation)
# --------------------------------------------------------------------------


class Identity:
    kind = "identity"

    def forward(self, z):
        return z

    def inverse(self, x):
        return x

    def log_abs_dinverse(self, x):
        return np.zeros_like(x)

    def to_config(self):
        return {"kind": self.kind}


class Affine:
    kind = "affine"

    def __init__(self, shift=0.0, scale=1.0):
        if scale == 0:
            raise ModelError("affine transform needs a nonzero scale")
        self.shift = float(shift)
        self.scale = float(scale)

    def forward(self, z):
        return self.shift + self.scale * z

    def inverse(self, x):
        return (x - self.shift) / self.scale

    def log_abs_dinverse(self, x):
        return np.full_like(x, -math.log(abs(self.scale)))

    def to_config(self):
        return {"kind": self.kind, "shift": self.shift, "scale": self.scale}


class ScaledExp:
    """``x = scale * exp(z)``; ``scale=1`` is the plain LogNormal map."""

    kind = "exp"

    def __init__(self, scale=1.0):
        if scale <= 0:
            raise ModelError("scaled exponential transform needs a positive scale")
        self.scale = float(scale)

    def forward(self, z):
        return self.scale * np.exp(z)

    def inverse(self, x):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(x > 0, np.log(np.where(x > 0, x, 1.0) / self.scale), np.nan)

    def log_abs_dinverse(self, x):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(x > 0, -np.log(np.where(x > 0, x, 1.0)), np.nan)

    def to_config(self):
        return {"kind": self.kind, "scale": self.scale}


_TRANSFORMS = {"identity": Identity, "affine": Affine, "exp": ScaledExp, "scaled_exp": ScaledExp}


def transform_from_config(cfg) -> object:
    cfg = dict(cfg)
    kind = cfg.pop("kind")
    try:
        return _TRANSFORMS[kind](**cfg)
    except KeyError:
        raise ModelError(f"unknown transform kind {kind!r}") from None


def _correlation_blocks(cov):
    """Connected components of the nonzero off-diagonal pattern."""
    d = cov.shape[0]
    seen = [False] * d
    blocks = []
    for start in range(d):
        if seen[start]:
            continue
        stack, block = [start], []
        seen[start] = True
        while stack:
            i = stack.pop()
            block.append(i)
            for j in np.nonzero(cov[i] != 0)[0]:
                if not seen[j]:
                    seen[j] = True
                    stack.append(int(j))
        blocks.append(tuple(sorted(block)))
    return blocks


class TransformedInputModel(InputModel):
    """Physical inputs ``x_i = T_i(z_i)`` of a latent Gaussian ``z``, restricted to a box.

    The box ``lower <= x <= upper`` is the physical domain.  Marginal
    densities are exact provided each correlated latent block has at most
    one coordinate whose bound can actually be hit; other configurations are
    rejected at construction.  Without bounds the latent law may also be a
    Gaussian mixture.
    """

    def __init__(self, base, transforms, lower=None, upper=None, names=None):
        self.base = base
        self.dim = d = base.dim
        self.transforms = tuple(transforms)
        if len(self.transforms) != d:
            raise ModelError("one transform per coordinate is required")
        self.lower = np.full(d, -np.inf) if lower is None else np.asarray(lower, dtype=float).copy()
        self.upper = np.full(d, np.inf) if upper is None else np.asarray(upper, dtype=float).copy()
        if self.lower.shape != (d,) or self.upper.shape != (d,) or np.any(self.lower >= self.upper):
            raise ModelError("bounds must be length-d arrays with lower < upper")
        self.names = tuple(names) if names is not None else tuple(f"x{i + 1}" for i in range(d))

        # latent bounds, standardised for the Gaussian CDF
        self._zlo = np.empty(d)
        self._zhi = np.empty(d)
        for i, tr in enumerate(self.transforms):
            ends = []
            for b in (self.lower[i], self.upper[i]):
                if np.isinf(b):
                    ends.append(b if not (isinstance(tr, Affine) and tr.scale < 0) else -b)
                elif isinstance(tr, ScaledExp) and b <= 0:
                    ends.append(-np.inf)
                else:
                    ends.append(float(tr.inverse(np.array(b))))
            self._zlo[i], self._zhi[i] = min(ends), max(ends)
        self._active = tuple(i for i in range(d) if np.isfinite(self._zlo[i]) or np.isfinite(self._zhi[i]))
        self._blocks = []
        self.log_acceptance = 0.0
        self.acceptance = 1.0
        if not self._active:
            return
        if not isinstance(base, GaussianModel):
            raise ModelError("truncation requires a Gaussian latent model")
        sd = np.sqrt(np.diag(base.cov))
        self._alo = (self._zlo - base.mean) / sd
        self._ahi = (self._zhi - base.mean) / sd
        for block in _correlation_blocks(base.cov):
            act = [i for i in block if i in self._active]
            if len(act) > 1:
                raise ModelError(
                    f"coordinates {act} are correlated and both truncated; marginals are unsupported"
                )
            self._blocks.append((block, act[0] if act else None))
        self._log_box = {i: self._log_interval(i) for i in self._active}
        self.log_acceptance = float(sum(self._log_box.values()))
        self.acceptance = math.exp(self.log_acceptance)

    def __repr__(self):
        return f"TransformedInputModel(dim={self.dim}, acceptance={self.acceptance:.6g})"

    def _log_interval(self, i):
        a, b = self._alo[i], self._ahi[i]
        # log(Phi(b) - Phi(a)) without cancellation in either tail
        if a > 0:
            return float(log_ndtr(-a) + np.log1p(-np.exp(log_ndtr(-b) - log_ndtr(-a))))
        return float(log_ndtr(b) + np.log1p(-np.exp(log_ndtr(a) - log_ndtr(b))))

    @property
    def truncated(self) -> bool:
        return bool(self._active)

    def to_latent(self, x):
        x = np.asarray(x, dtype=float)
        z = np.empty_like(x)
        for i, tr in enumerate(self.transforms):
            z[..., i] = tr.inverse(x[..., i])
        return z

    def to_physical(self, z):
        z = np.asarray(z, dtype=float)
        x = np.empty_like(z)
        for i, tr in enumerate(self.transforms):
            x[..., i] = tr.forward(z[..., i])
        return x

    def _inside(self, x, v):
        idx = list(v)
        with np.errstate(invalid="ignore"):
            return np.all(np.isfinite(x), axis=1) & np.all((x >= self.lower[idx]) & (x <= self.upper[idx]), axis=1)

    def in_domain(self, x):
        arr, single = _as_points(x, self.dim)
        ok = self._inside(arr, range(self.dim))
        return bool(ok[0]) if single else ok

    def _log_jacobian(self, x, v):
        return sum(self.transforms[i].log_abs_dinverse(x[:, k]) for k, i in enumerate(v))

    def logpdf(self, x):
        arr, single = _as_points(x, self.dim)
        full = tuple(range(self.dim))
        out = np.full(arr.shape[0], -np.inf)
        ok = self._inside(arr, full)
        if ok.any():
            xs = arr[ok]
            z = self.to_latent(xs)
            out[ok] = self.base.logpdf(z) + self._log_jacobian(xs, full) - self.log_acceptance
        return _finish(out, single)

    def marginal_logpdf(self, v, x_v):
        v = as_subset(v, self.dim)
        if len(v) == self.dim:
            return self.logpdf(x_v)
        arr, single = _as_points(x_v, len(v))
        out = np.full(arr.shape[0], -np.inf)
        ok = self._inside(arr, v)
        if ok.any():
            xs = arr[ok]
            z = np.empty_like(xs)
            for k, i in enumerate(v):
                z[:, k] = self.transforms[i].inverse(xs[:, k])
            val = self.base.marginal_logpdf(v, z) + self._log_jacobian(xs, v) - self.log_acceptance
            val = val + self._truncation_correction(v, z)
            out[ok] = val
        return _finish(out, single)

    def _truncation_correction(self, v, z_v):
        """log P(truncated coordinates outside ``v`` fall in their box | z_v)."""
        pos = {i: k for k, i in enumerate(v)}
        corr = np.zeros(z_v.shape[0])
        for block, act in self._blocks:
            if act is None or act in pos:
                continue
            given = [i for i in block if i in pos]
            if not given:
                corr = corr + self._log_box[act]
                continue
            gain, cond = _condition(self.base.mean, self.base.cov, [act], given)
            zg = z_v[:, [pos[i] for i in given]]
            m = self.base.mean[act] + (zg - self.base.mean[given]) @ gain[0]
            s = math.sqrt(cond[0, 0])
            a = (self._zlo[act] - m) / s
            b = (self._zhi[act] - m) / s
            with np.errstate(divide="ignore"):
                corr = corr + np.log(np.clip(ndtr(b) - ndtr(a), 0.0, 1.0))
        return corr

    def sample(self, n: int, rng):
        if n < 1:
            raise ValueError("n must be >= 1")
        if self.acceptance < 1e-4:
            raise ConfigurationError(f"acceptance rate {self.acceptance:.3g} is below 1e-4")
        out = []
        got = 0
        while got < n:
            batch = int(math.ceil(1.05 * (n - got) / self.acceptance)) + 16
            x = self.to_physical(self.base.sample(batch, rng))
            x = x[self._inside(x, range(self.dim))]
            out.append(x)
            got += x.shape[0]
        return np.concatenate(out)[:n]

    def sample_conditional(self, target, given_values, n_per: int, rng, max_rounds: int = 10_000):
        target = as_subset(target, self.dim)
        given = complement(target, self.dim)
        x_g = np.atleast_2d(np.asarray(given_values, dtype=float))
        if not np.all(self._inside(x_g, given)):
            raise ValueError("conditioning values lie outside the input domain")
        z_g = np.empty_like(x_g)
        for k, i in enumerate(given):
            z_g[:, k] = self.transforms[i].inverse(x_g[:, k])
        m = x_g.shape[0]
        out = np.full((m, n_per, len(target)), np.nan)
        todo = np.ones((m, n_per), dtype=bool)
        for _ in range(max_rounds):
            rows = np.nonzero(todo.any(axis=1))[0]
            if rows.size == 0:
                return out
            z = self.base.sample_conditional(target, z_g[rows], n_per, rng)
            x = np.empty_like(z)
            for k, i in enumerate(target):
                x[..., k] = self.transforms[i].forward(z[..., k])
            ok = self._inside(x.reshape(-1, len(target)), target).reshape(len(rows), n_per)
            fill = ok & todo[rows]
            sub = out[rows]
            sub[fill] = x[fill]
            out[rows] = sub
            todo[rows] &= ~fill
        raise ConfigurationError("conditional rejection sampling did not terminate")

    def moments(self):
        if self.truncated or not isinstance(self.base, GaussianModel):
            raise CapabilityError("only untruncated Gaussian-latent models have closed-form moments")
        mean = np.empty(self.dim)
        var = np.empty(self.dim)
        mu = self.base.mean
        s2 = np.diag(self.base.cov)
        for i, tr in enumerate(self.transforms):
            if isinstance(tr, ScaledExp):
                mean[i] = tr.scale * math.exp(mu[i] + s2[i] / 2)
                var[i] = tr.scale**2 * math.expm1(s2[i]) * math.exp(2 * mu[i] + s2[i])
            elif isinstance(tr, Affine):
                mean[i] = tr.shift + tr.scale * mu[i]
                var[i] = tr.scale**2 * s2[i]
            else:
                mean[i] = mu[i]
                var[i] = s2[i]
        # only the diagonal is needed by standardisation
        return mean, np.diag(var)

    def to_config(self) -> dict:
        return {
            "family": "transformed",
            "latent": self.base.to_config(),
            "transforms": [t.to_config() for t in self.transforms],
            "lower": [None if np.isinf(b) else float(b) for b in self.lower],
            "upper": [None if np.isinf(b) else float(b) for b in self.upper],
            "names": list(self.names),
        }


def marginal_density(model: InputModel, v, x_v):
    """Density of ``X_v`` at ``x_v`` (0 outside the support)."""
    return model.marginal_pdf(v, x_v)


def sample(model: InputModel, n: int, rng):
    """Draw ``n`` i.i.d. points from ``model``."""
    return model.sample(n, rng)


# --------------------------------------------------------------------------
# Config (JSON-compatible dicts)
# --------------------------------------------------------------------------


def _gaussian_from_config(cfg) -> GaussianModel:
    mean = np.asarray(cfg["mean"], dtype=float)
    if "cov" in cfg:
        return GaussianModel(mean, cfg["cov"])
    std = np.asarray(cfg.get("std", np.ones_like(mean)), dtype=float)
    corr = np.eye(mean.shape[0])
    if "correlation" in cfg:
        corr = np.asarray(cfg["correlation"], dtype=float)
    for i, j, rho in cfg.get("correlations", []):
        corr[i, j] = corr[j, i] = rho
    return GaussianModel(mean, corr * np.outer(std, std))


def model_from_config(cfg) -> InputModel:
    """Build a model from a JSON-style dict (see ``to_config`` of each class)."""
    family = cfg.get("family")
    if family == "gaussian":
        return _gaussian_from_config(cfg)
    if family == "mixture":
        return GaussianMixtureModel(cfg["weights"], [_gaussian_from_config(c) for c in cfg["components"]])
    if family == "transformed":
        base = model_from_config(cfg["latent"])
        transforms = [transform_from_config(t) for t in cfg["transforms"]]
        lower = [(-np.inf if b is None else b) for b in cfg.get("lower", [None] * base.dim)]
        upper = [(np.inf if b is None else b) for b in cfg.get("upper", [None] * base.dim)]
        return TransformedInputModel(base, transforms, lower, upper, cfg.get("names"))
    raise ModelError(f"unknown model family {family!r}")
