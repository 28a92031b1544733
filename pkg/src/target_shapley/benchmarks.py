"""Built-in failure problems: Gaussian-linear, cantilever beam, fire spread."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .distributions import Affine, GaussianModel, Identity, InputModel, ScaledExp, TransformedInputModel
from .errors import ModelError


@dataclass
class CallCounter:
    """Number of points passed to a limit-state function."""

    calls: int = 0

    def reset(self):
        self.calls = 0


@dataclass(frozen=True)
class FailureProblem:
    """A limit-state function ``phi``, a threshold and an input model.

    ``phi`` maps an (n, d) array to n reals.  Failure is the strict event
    ``phi(x) > threshold``; points outside the input domain are assigned
    ``phi = 0``.
    """

    phi: Callable
    threshold: float
    input_model: InputModel
    label: str = ""
    names: tuple = ()
    counter: CallCounter | None = field(default=None, compare=False, repr=False)

    @property
    def dim(self) -> int:
        return self.input_model.dim

    def __post_init__(self):
        if not self.names:
            object.__setattr__(self, "names", tuple(f"x{i + 1}" for i in range(self.dim)))
        if len(self.names) != self.dim:
            raise ModelError("one name per input coordinate is required")

    def evaluate(self, x):
        """``phi`` on an (n, d) array, 0 outside the input domain."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.counter is not None:
            self.counter.calls += x.shape[0]
        ok = self.input_model.in_domain(x)
        out = np.zeros(x.shape[0])
        if ok.any():
            with np.errstate(all="ignore"):
                out[ok] = self.phi(x[ok])
        return out

    def indicator(self, x):
        """``1(phi(x) > t)`` as a float array."""
        return (self.evaluate(x) > self.threshold).astype(float)

    def counted(self):
        """Copy of the problem that counts evaluations; returns ``(problem, counter)``."""
        counter = CallCounter()
        return replace(self, counter=counter), counter

    def with_threshold(self, t: float) -> "FailureProblem":
        return replace(self, threshold=float(t))


# --------------------------------------------------------------------------
# Gaussian-linear
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GaussianLinearSpec:
    beta: np.ndarray
    mean: np.ndarray
    cov: np.ndarray
    t: float

    def __post_init__(self):
        beta = np.atleast_1d(np.asarray(self.beta, dtype=float))
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if not np.any(beta != 0):
            raise ModelError("beta must be nonzero")
        if beta.shape != mean.shape:
            raise ModelError("beta and mean must have the same length")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "t", float(self.t))

    @classmethod
    def default(cls) -> "GaussianLinearSpec":
        """Three-dimensional case with ``Sigma_23 = -0.3`` and ``t = 4``."""
        cov = np.eye(3)
        cov[1, 2] = cov[2, 1] = -0.3
        return cls(np.ones(3), np.zeros(3), cov, 4.0)

    @classmethod
    def from_config(cls, cfg: dict) -> "GaussianLinearSpec":
        base = cls.default()
        beta = cfg.get("beta", base.beta)
        mean = cfg.get("mean", np.zeros(len(beta)))
        cov = cfg.get("cov", np.eye(len(beta)) if "beta" in cfg else base.cov)
        return cls(beta, mean, cov, cfg.get("t", base.t))

    def to_config(self) -> dict:
        return {"beta": self.beta.tolist(), "mean": self.mean.tolist(), "cov": self.cov.tolist(), "t": self.t}


def gaussian_linear(spec: GaussianLinearSpec | None = None) -> FailureProblem:
    """``phi(x) = beta^T x`` with Gaussian inputs."""
    spec = GaussianLinearSpec.default() if spec is None else spec
    model = GaussianModel(spec.mean, spec.cov)
    if model.dim != spec.beta.shape[0]:
        raise ModelError("covariance size does not match beta")
    beta = spec.beta.copy()

    def phi(x):
        return np.asarray(x) @ beta

    return FailureProblem(phi, spec.t, model, "gaussian-linear")


# --------------------------------------------------------------------------
# Cantilever beam
# --------------------------------------------------------------------------


def lognormal_latent(mean: float, cov: float) -> tuple[float, float]:
    """Latent normal ``(mu, s)`` of a LogNormal with given mean and CoV."""
    s2 = math.log1p(cov**2)
    return math.log(mean) - s2 / 2, math.sqrt(s2)


CANTILEVER_NAMES = ("F_X", "F_Y", "E", "l_X", "l_Y", "L")


def cantilever_phi(x):
    """Tip displacement of a cantilever beam with rectangular section."""
    fx, fy, e, lx, ly, length = np.asarray(x, dtype=float).T
    return 4 * length**3 / (e * lx * ly) * np.sqrt((fx / lx**2) ** 2 + (fy / ly**2) ** 2)


def cantilever_beam() -> FailureProblem:
    """Six-input cantilever beam, failure when the displacement exceeds 0.066 m.

    Loads and Young's modulus are LogNormal; section dimensions and length
    are Normal with correlations imposed on the latent Gaussian vector.
    """
    lognormals = [(556.8, 0.08), (453.6, 0.08), (200e9, 0.06)]
    normals = [0.062, 0.0987, 4.29]
    mu = np.zeros(6)
    sd = np.ones(6)
    for i, (m, c) in enumerate(lognormals):
        mu[i], sd[i] = lognormal_latent(m, c)
    corr = np.eye(6)
    corr[3, 4] = corr[4, 3] = -0.55
    corr[3, 5] = corr[5, 3] = 0.45
    corr[4, 5] = corr[5, 4] = 0.45
    # Normal inputs are mean + 0.1*mean*z with a standard latent z
    base = GaussianModel(mu, corr * np.outer(sd, sd))
    transforms = [ScaledExp(), ScaledExp(), ScaledExp()] + [Affine(m, 0.1 * m) for m in normals]
    model = TransformedInputModel(base, transforms, names=CANTILEVER_NAMES)
    return FailureProblem(cantilever_phi, 0.066, model, "cantilever-beam", CANTILEVER_NAMES)


# --------------------------------------------------------------------------
# Fire spread
# --------------------------------------------------------------------------

FIRE_NAMES = ("delta", "sigma", "h", "rho_p", "m_l", "m_d", "S_T", "U", "tan_phi", "P")

# metric inputs -> imperial units used by the spread equations, and back
UNITS = {
    "delta_cm_to_ft": 0.0328084,
    "sigma_per_cm_to_per_ft": 30.48,
    "h_kcal_per_kg_to_btu_per_lb": 1.8,
    "rho_g_per_cm3_to_lb_per_ft3": 62.428,
    "U_km_per_h_to_ft_per_min": 54.6807,
    "R_ft_per_min_to_cm_per_s": 0.508,
}


def rate_of_spread(x, units=UNITS):
    """Rate of spread (cm/s) of a surface fire for metric inputs.

    Columns of ``x`` follow ``FIRE_NAMES``: fuel depth (cm), particle
    area-to-volume ratio (1/cm), heat content (kcal/kg), particle density
    (g/cm^3), live and dead moisture contents, total mineral content, wind
    speed at midflame height (km/h), slope, dead fuel fraction.
    """
    delta, sigma, h, rho_p, m_l, m_d, s_t, wind, tan_phi, p_dead = np.asarray(x, dtype=float).T
    delta = delta * units["delta_cm_to_ft"]
    sigma = sigma * units["sigma_per_cm_to_per_ft"]
    h = h * units["h_kcal_per_kg_to_btu_per_lb"]
    rho_p = rho_p * units["rho_g_per_cm3_to_lb_per_ft3"]
    wind = wind * units["U_km_per_h_to_ft_per_min"]

    w0 = 4.8 / 4.8824 / (1.0 + np.exp((15.0 - delta) / 3.5))
    s15 = sigma**1.5
    gamma_max = s15 / (495.0 + 0.0594 * s15)
    beta_op = 3.348 * sigma**-0.8189
    a = 133.0 * sigma**-0.7913
    theta = np.clip((301.4 - 305.87 * (m_l - m_d) + 2260.0 * m_d) / (2260.0 * m_l), 0.0, 1.0)
    mu_m = np.exp(-7.3 * p_dead * m_d - (7.3 * theta + 2.13) * (1.0 - p_dead) * m_l)
    mu_s = 0.174 * s_t**-0.19
    c = 7.47 * np.exp(-0.133 * sigma**0.55)
    b = 0.02526 * sigma**0.54
    e = 0.715 * np.exp(-3.59e-4 * sigma)
    w_n = w0 * (1.0 - s_t)
    rho_b = w0 / delta
    eps = np.exp(-138.0 / sigma)
    q_ig = 130.87 + 1054.43 * m_d
    beta = rho_b / rho_p
    ratio = beta / beta_op
    gamma = gamma_max * ratio**a * np.exp(a * (1.0 - ratio))
    xi = np.exp((0.792 + 0.681 * sigma**0.5) * (beta + 0.1)) / (192.0 + 0.2595 * sigma)
    phi_w = c * wind**b * ratio**-e
    phi_s = 5.275 * beta**-0.3 * tan_phi**2
    i_r = gamma * w_n * h * mu_m * mu_s
    r = i_r * xi * (1.0 + phi_w + phi_s) / (rho_b * eps * q_ig)
    return r * units["R_ft_per_min_to_cm_per_s"]


def fire_spread_model() -> TransformedInputModel:
    """Ten-input fire-spread distribution with the rejection rules as a box."""
    mu = np.array([2.19, 3.31, 8.48, -0.592, 1.18, 0.19, 0.049, 1.0174, 0.38, -2.19])
    sd = np.array([0.517, 0.294, 0.063, 0.219, 0.377, 0.047, 0.011, 0.5569, 0.186, 0.64])
    corr = np.eye(10)
    corr[5, 7] = corr[7, 5] = -0.8
    base = GaussianModel(mu, corr * np.outer(sd, sd))
    transforms = [
        ScaledExp(), ScaledExp(), ScaledExp(), ScaledExp(),
        Identity(), Identity(), Identity(),
        ScaledExp(6.9), Identity(), ScaledExp(),
    ]
    lower = np.zeros(10)
    lower[1] = 5.0
    upper = np.full(10, np.inf)
    upper[6] = 1.0
    upper[9] = 1.0
    return TransformedInputModel(base, transforms, lower, upper, FIRE_NAMES)


def fire_spread() -> FailureProblem:
    """Rate of spread above 60 cm/s."""
    return FailureProblem(rate_of_spread, 60.0, fire_spread_model(), "fire-spread", FIRE_NAMES)


PROBLEMS = {
    "gaussian-linear": gaussian_linear,
    "cantilever-beam": cantilever_beam,
    "fire-spread": fire_spread,
}


def problem_by_name(name: str, config: dict | None = None) -> FailureProblem:
    """Look up a built-in problem; ``config`` overrides Gaussian-linear parameters."""
    if name not in PROBLEMS:
        raise ModelError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}")
    if name == "gaussian-linear":
        return gaussian_linear(GaussianLinearSpec.from_config(config or {}))
    return PROBLEMS[name]()
