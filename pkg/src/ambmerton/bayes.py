"""Adaptive portfolio choice with an unknown market price of risk.

A discrete prior over m price-of-risk scenarios is updated from the
observed driving process Y; value, posterior, and the optimal wealth
fractions are computed by reduced-dimension Gaussian quadrature.  The
d-dimensional integrals depend on z only through the m inner products
z . theta_k, so the quadrature runs over min(m, d) whitened coordinates
regardless of the number of assets.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import logsumexp

from .errors import InvalidArgumentError, NumericError
from .numerics import log_mixture_power_expectation, reduced_sqrt

__all__ = [
    "MarketModel",
    "Preferences",
    "StrategyQuery",
    "FractionResult",
    "log_likelihood",
    "log_mixture_F",
    "posterior",
    "merton_fraction",
    "value",
    "optimal_fraction",
    "log_optimal_fraction",
]

_COND_LIMIT = 1e12


def _as_vector(x, d: int | None = None, name: str = "vector") -> np.ndarray:
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.ndim != 1:
        raise InvalidArgumentError(f"{name} must be one-dimensional")
    if d is not None and v.shape != (d,):
        raise InvalidArgumentError(f"{name} must have length {d}, got {v.shape[0]}")
    return v


@dataclass(frozen=True)
class MarketModel:
    """Volatility matrix, price-of-risk scenarios and their prior.

    Parameters
    ----------
    sigma : (d, d) array
        Volatility matrix; must be invertible (condition number < 1e12).
    scenarios : (m, d) array
        Market price of risk theta_k per scenario.
    prior : (m,) array
        Scenario probabilities, strictly positive, summing to 1.
    drifts : (m, d) array, optional
        Scenario drifts; when supplied, each must equal sigma @ theta_k.
    """

    sigma: np.ndarray
    scenarios: np.ndarray
    prior: np.ndarray
    drifts: np.ndarray | None = None

    def __post_init__(self):
        sigma = np.atleast_2d(np.asarray(self.sigma, dtype=float))
        scen = np.atleast_2d(np.asarray(self.scenarios, dtype=float))
        prior = np.asarray(self.prior, dtype=float)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "scenarios", scen)
        object.__setattr__(self, "prior", prior)
        d = sigma.shape[0]
        if sigma.shape != (d, d):
            raise InvalidArgumentError("sigma must be square")
        if not np.all(np.isfinite(sigma)):
            raise InvalidArgumentError("sigma must be finite")
        if np.linalg.cond(sigma) > _COND_LIMIT:
            raise InvalidArgumentError("sigma is singular or too ill-conditioned")
        if scen.ndim != 2 or scen.shape[1] != d:
            raise InvalidArgumentError(f"scenarios must be (m, {d})")
        m = scen.shape[0]
        if m < 1:
            raise InvalidArgumentError("need at least one scenario")
        if prior.shape != (m,):
            raise InvalidArgumentError(f"prior must have length {m}")
        if np.any(prior <= 0.0):
            raise InvalidArgumentError("prior probabilities must be positive")
        if abs(prior.sum() - 1.0) > 1e-12:
            raise InvalidArgumentError("prior must sum to 1 (within 1e-12)")
        if self.drifts is not None:
            drifts = np.atleast_2d(np.asarray(self.drifts, dtype=float))
            object.__setattr__(self, "drifts", drifts)
            if drifts.shape != (m, d):
                raise InvalidArgumentError(f"drifts must be (m, {d})")
            implied = scen @ sigma.T
            if np.max(np.abs(drifts - implied)) > 1e-12:
                raise InvalidArgumentError("drifts must equal sigma @ theta_k (within 1e-12)")

    @classmethod
    def from_drifts(cls, sigma, drifts, prior) -> "MarketModel":
        """Build a model from scenario drifts: theta_k = sigma^{-1} mu_k."""
        sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
        drifts = np.atleast_2d(np.asarray(drifts, dtype=float))
        scen = np.linalg.solve(sigma, drifts.T).T
        return cls(sigma=sigma, scenarios=scen, prior=prior, drifts=drifts)

    @property
    def d(self) -> int:
        return self.sigma.shape[0]

    @property
    def m(self) -> int:
        return self.scenarios.shape[0]

    @cached_property
    def sigma_t_inv(self) -> np.ndarray:
        """(sigma^T)^{-1}, the map from price-of-risk to Merton direction."""
        return np.linalg.inv(self.sigma.T)

    @cached_property
    def log_prior(self) -> np.ndarray:
        return np.log(self.prior)


@dataclass(frozen=True)
class Preferences:
    """CRRA risk and ambiguity exponents.

    ``alpha`` is the risk exponent (utility x^alpha / alpha) and
    ``lambda_`` the ambiguity exponent; both must be < 1 and nonzero.
    Omitting ``lambda_`` gives the ambiguity-neutral case lambda = alpha.
    """

    alpha: float
    lambda_: float = None  # type: ignore[assignment]

    def __post_init__(self):
        alpha = float(self.alpha)
        lam = alpha if self.lambda_ is None else float(self.lambda_)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "lambda_", lam)
        if not (alpha < 1.0 and alpha != 0.0 and np.isfinite(alpha)):
            raise InvalidArgumentError(f"alpha must be < 1 and nonzero, got {alpha}")
        if not (lam < 1.0 and lam != 0.0 and np.isfinite(lam)):
            raise InvalidArgumentError(f"lambda must be < 1 and nonzero, got {lam}")

    @property
    def gamma(self) -> float:
        """1 / (1 - alpha); always positive."""
        return 1.0 / (1.0 - self.alpha)

    @property
    def risk_aversion(self) -> float:
        """Relative risk aversion 1 - alpha."""
        return 1.0 - self.alpha

    @property
    def p_exp(self) -> float:
        """The exponent lambda / alpha of the outer power mean."""
        return self.lambda_ / self.alpha

    @property
    def q_exp(self) -> float:
        """Conjugate exponent: 1/p_exp + 1/q_exp = 1 (inf when neutral)."""
        p = self.p_exp
        return np.inf if p == 1.0 else p / (p - 1.0)

    @property
    def ambiguity_neutral(self) -> bool:
        return self.lambda_ == self.alpha


@dataclass(frozen=True)
class StrategyQuery:
    """Evaluation point: time t, horizon T, observed Y(t)."""

    t: float
    T: float
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "y", np.atleast_1d(np.asarray(self.y, dtype=float)))
        if not (np.isfinite(self.t) and np.isfinite(self.T)):
            raise InvalidArgumentError("t and T must be finite")
        if self.t < 0.0:
            raise InvalidArgumentError("t must be >= 0")
        if self.T <= 0.0 or self.T < self.t:
            raise InvalidArgumentError("need T > 0 and T >= t")
        if not np.all(np.isfinite(self.y)):
            raise InvalidArgumentError("y must be finite")

    @property
    def remaining(self) -> float:
        return self.T - self.t


@dataclass(frozen=True)
class FractionResult:
    """Optimal fractions and the scenario weights that generate them.

    ``kappa = gamma (sigma^T)^{-1} sum_k theta_k weights_k`` exactly.
    ``degenerate`` marks a t == T query, answered with the posterior-
    weighted Merton average (the continuous limit).
    """

    kappa: np.ndarray
    scenario_weights: np.ndarray
    degenerate: bool = False


# ---------------------------------------------------------------------------
# likelihood / posterior
# ---------------------------------------------------------------------------


def log_likelihood(theta, z, t: float) -> float:
    """log L_t(theta, z) = z . theta - 0.5 ||theta||^2 t  (0 when t = 0)."""
    if t < 0.0:
        raise InvalidArgumentError("t must be >= 0")
    if t == 0.0:
        return 0.0
    theta = _as_vector(theta, name="theta")
    z = _as_vector(z, theta.shape[0], name="z")
    return float(z @ theta - 0.5 * (theta @ theta) * t)


def _log_likelihoods(model: MarketModel, t: float, z: np.ndarray) -> np.ndarray:
    if t == 0.0:
        return np.zeros(model.m)
    return model.scenarios @ z - 0.5 * np.sum(model.scenarios**2, axis=1) * t


def log_mixture_F(model: MarketModel, t: float, z) -> float:
    """log F(t, z) = log sum_k p_k L_t(theta_k, z)."""
    if t < 0.0:
        raise InvalidArgumentError("t must be >= 0")
    z = _as_vector(z, model.d, name="z")
    return float(logsumexp(model.log_prior + _log_likelihoods(model, t, z)))


def posterior(model: MarketModel, t: float, y) -> np.ndarray:
    """Posterior scenario probabilities given Y(t) = y."""
    if t < 0.0:
        raise InvalidArgumentError("t must be >= 0")
    y = _as_vector(y, model.d, name="y")
    lp = model.log_prior + _log_likelihoods(model, t, y)
    return np.exp(lp - logsumexp(lp))


def merton_fraction(gamma: float, sigma, theta) -> np.ndarray:
    """Known-drift optimal fraction gamma (sigma^T)^{-1} theta."""
    if not (np.isfinite(gamma) and gamma > 0):
        raise InvalidArgumentError("gamma must be positive")
    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    theta = _as_vector(theta, sigma.shape[0], name="theta")
    return gamma * np.linalg.solve(sigma.T, theta)


# ---------------------------------------------------------------------------
# quadrature-backed value and fractions
# ---------------------------------------------------------------------------


def scenario_log_integrals(thetas: np.ndarray, log_prior: np.ndarray, gamma: float,
                           T: float, t: float = 0.0, y=0.0, order: int = 64,
                           direct: bool = False):
    """Per-scenario integrals behind the optimal-fraction formula.

    Returns ``log N_k = log int p_k L_T(theta_k, z+y) F(T, z+y)^{gamma-1}
    phi_{T-t}(z) dz`` for each k, and (with ``direct=True``) an independent
    evaluation of ``log D = log int F^gamma phi_{T-t}`` not derived from
    the N_k decomposition.
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    m, d = thetas.shape
    y = _as_vector(y, d, name="y")
    log_prior = np.asarray(log_prior, dtype=float)
    offsets = thetas @ y - 0.5 * np.sum(thetas**2, axis=1) * T
    lw = log_prior + offsets
    S = reduced_sqrt((T - t) * (thetas @ thetas.T))
    log_n = np.full(m, -np.inf)
    for k in range(m):
        if lw[k] == -np.inf:
            continue
        log_n[k] = log_mixture_power_expectation(
            lw, S, gamma - 1.0, shift_exp=S[k], shift_log=lw[k], order=order)
    log_d = None
    if direct:
        log_d = log_mixture_power_expectation(lw, S, gamma, order=order)
    return log_n, log_d


def value(model: MarketModel, prefs: Preferences, x0: float, T: float,
          order: int = 64) -> float:
    """Maximal expected utility of the adaptive investor.

    ``(x0^alpha / alpha) (int F(T,z)^gamma phi_T(z) dz)^{1/gamma}``,
    evaluated by reduced-dimension quadrature in log space.
    """
    if not (np.isfinite(x0) and x0 > 0):
        raise InvalidArgumentError("x0 must be positive")
    if not (np.isfinite(T) and T > 0):
        raise InvalidArgumentError("T must be positive")
    gamma = prefs.gamma
    _, log_d = scenario_log_integrals(model.scenarios, model.log_prior, gamma,
                                      T, 0.0, np.zeros(model.d), order, direct=True)
    out = (x0**prefs.alpha / prefs.alpha) * np.exp(log_d / gamma)
    if not np.isfinite(out):
        raise NumericError("value overflows double precision at this horizon")
    return float(out)


def optimal_fraction(model: MarketModel, prefs: Preferences, query: StrategyQuery,
                     order: int = 64) -> FractionResult:
    """Optimal wealth fractions at (t, T, Y(t)).

    The fraction is ``gamma (sigma^T)^{-1} sum_k theta_k f_k`` where the
    scenario weights f_k are ratios of the per-scenario integrals; a
    t == T query degenerates to the posterior-weighted Merton average.
    """
    y = _as_vector(query.y, model.d, name="y")
    gamma = prefs.gamma
    degenerate = query.remaining <= 0.0
    if degenerate:
        weights = posterior(model, query.t, y)
    else:
        log_n, _ = scenario_log_integrals(model.scenarios, model.log_prior, gamma,
                                          query.T, query.t, y, order)
        weights = np.exp(log_n - logsumexp(log_n))
    kappa = gamma * np.linalg.solve(model.sigma.T, model.scenarios.T @ weights)
    if not np.all(np.isfinite(kappa)):
        raise NumericError("optimal fraction evaluation produced non-finite values")
    return FractionResult(kappa=kappa, scenario_weights=weights, degenerate=degenerate)


def log_optimal_fraction(model: MarketModel, query: StrategyQuery) -> np.ndarray:
    """Myopic fraction of the log investor: (sigma^T)^{-1} E[Theta | Y(t)].

    Independent of the horizon T (certainty equivalence).
    """
    post = posterior(model, query.t, query.y)
    return np.linalg.solve(model.sigma.T, model.scenarios.T @ post)
