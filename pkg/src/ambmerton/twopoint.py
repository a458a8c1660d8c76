"""Two-scenario specialization: convex-combination form of the optimum.

With two price-of-risk scenarios the optimal fraction is a convex
combination of the two Merton fractions; the weight on the upper one is
the central diagnostic of the whole package, and ``lower_weight_g`` is
its value at the initial date.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .bayes import (
    FractionResult,
    MarketModel,
    StrategyQuery,
    merton_fraction,
)
from .errors import InvalidArgumentError, NumericError
from .numerics import (
    _auto_order,
    _hermite_nodes_logweights,
    log_mixture_power_expectation,
    reduced_sqrt,
)

__all__ = [
    "TwoPointModel",
    "f_hat",
    "upper_weight",
    "lower_weight_g",
    "fraction_convex",
    "upper_weight_curve",
]


@dataclass(frozen=True)
class TwoPointModel:
    """Two-scenario market: upper theta (probability p) and lower theta.

    Labels are ordered by Euclidean norm, ``||theta_hi|| >= ||theta_lo||``
    (ties allowed).  The endpoints p = 0 and p = 1 are accepted as
    degenerate single-scenario markets.
    """

    sigma: np.ndarray
    theta_hi: np.ndarray
    theta_lo: np.ndarray
    p: float

    def __post_init__(self):
        sigma = np.atleast_2d(np.asarray(self.sigma, dtype=float))
        hi = np.atleast_1d(np.asarray(self.theta_hi, dtype=float))
        lo = np.atleast_1d(np.asarray(self.theta_lo, dtype=float))
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "theta_hi", hi)
        object.__setattr__(self, "theta_lo", lo)
        object.__setattr__(self, "p", float(self.p))
        d = sigma.shape[0]
        if hi.shape != (d,) or lo.shape != (d,):
            raise InvalidArgumentError(f"scenario vectors must have length {d}")
        if np.linalg.norm(hi) < np.linalg.norm(lo) - 1e-15:
            raise InvalidArgumentError("labels must be ordered: ||theta_hi|| >= ||theta_lo||")
        if not 0.0 <= self.p <= 1.0:
            raise InvalidArgumentError("p must lie in [0, 1]")
        if np.linalg.cond(sigma) > 1e12:
            raise InvalidArgumentError("sigma is singular or too ill-conditioned")

    @classmethod
    def from_drifts(cls, sigma, mu_hi, mu_lo, p: float) -> "TwoPointModel":
        sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
        hi = np.linalg.solve(sigma, np.atleast_1d(np.asarray(mu_hi, dtype=float)))
        lo = np.linalg.solve(sigma, np.atleast_1d(np.asarray(mu_lo, dtype=float)))
        return cls(sigma=sigma, theta_hi=hi, theta_lo=lo, p=p)

    @property
    def d(self) -> int:
        return self.sigma.shape[0]

    @property
    def mu_hi(self) -> np.ndarray:
        return self.sigma @ self.theta_hi

    @property
    def mu_lo(self) -> np.ndarray:
        return self.sigma @ self.theta_lo

    @cached_property
    def thetas(self) -> np.ndarray:
        out = np.stack([self.theta_hi, self.theta_lo])
        out.flags.writeable = False
        return out

    @cached_property
    def log_prior(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(np.array([self.p, 1.0 - self.p]))

    @cached_property
    def market(self) -> MarketModel:
        """The equivalent general model; zero-probability scenarios dropped."""
        prior = np.array([self.p, 1.0 - self.p])
        keep = prior > 0.0
        return MarketModel(sigma=self.sigma, scenarios=self.thetas[keep],
                           prior=prior[keep])

    def with_p(self, p: float) -> "TwoPointModel":
        return TwoPointModel(sigma=self.sigma, theta_hi=self.theta_hi,
                             theta_lo=self.theta_lo, p=p)


def _query_vector(model: TwoPointModel, query: StrategyQuery) -> np.ndarray:
    y = np.atleast_1d(np.asarray(query.y, dtype=float))
    if y.shape != (model.d,):
        raise InvalidArgumentError(f"y must have length {model.d}")
    return y


def f_hat(model: TwoPointModel, gamma: float, query: StrategyQuery,
          order: int = 64) -> float:
    """Ratio of the lower-likelihood integral to the full mixture integral.

    ``int L_T(theta_lo, z+y) F^{gamma-1} phi_{T-t} / int F^gamma phi_{T-t}``
    with both integrals in log space over the reduced Gaussian.  The
    denominator is an independent direct quadrature of F^gamma, not the
    sum of the numerator's decomposition.
    """
    if not (np.isfinite(gamma) and gamma > 0):
        raise InvalidArgumentError("gamma must be positive")
    y = _query_vector(model, query)
    thetas = model.thetas
    offsets = thetas @ y - 0.5 * np.sum(thetas**2, axis=1) * query.T
    lw = model.log_prior + offsets
    S = reduced_sqrt(query.remaining * (thetas @ thetas.T))
    log_num = log_mixture_power_expectation(
        lw, S, gamma - 1.0, shift_exp=S[1] if S.shape[1] else None,
        shift_log=offsets[1], order=order)
    log_den = log_mixture_power_expectation(lw, S, gamma, order=order)
    out = float(np.exp(log_num - log_den))
    if not np.isfinite(out):
        raise NumericError("f_hat evaluation overflowed")
    return out


def upper_weight(model: TwoPointModel, gamma: float, query: StrategyQuery,
                 order: int = 64) -> float:
    """Weight on the upper Merton fraction, 1 - (1-p) f_hat, in [0, 1]."""
    w = 1.0 - (1.0 - model.p) * f_hat(model, gamma, query, order)
    if w < -1e-12 or w > 1.0 + 1e-12:
        raise NumericError(f"upper weight {w} falls outside [0, 1]")
    return float(min(max(w, 0.0), 1.0))


def lower_weight_g(alpha: float, p: float, T: float, theta_lo, theta_hi,
                   order: int = 64) -> float:
    """Initial-date weight on the lower Merton fraction, (1-p) f_hat(0,T,0).

    This is the diagnostic swept throughout the reports: 1 - p for the
    myopic/log benchmark, larger (smaller) for investors more (less) risk
    averse than the log investor.
    """
    if not (alpha < 1.0 and alpha != 0.0):
        raise InvalidArgumentError("alpha must be < 1 and nonzero")
    if not 0.0 <= p <= 1.0:
        raise InvalidArgumentError("p must lie in [0, 1]")
    if not (np.isfinite(T) and T > 0):
        raise InvalidArgumentError("T must be positive")
    hi = np.atleast_1d(np.asarray(theta_hi, dtype=float))
    lo = np.atleast_1d(np.asarray(theta_lo, dtype=float))
    model = TwoPointModel(sigma=np.eye(hi.shape[0]), theta_hi=hi, theta_lo=lo, p=p)
    gamma = 1.0 / (1.0 - alpha)
    query = StrategyQuery(t=0.0, T=T, y=np.zeros(hi.shape[0]))
    return float((1.0 - p) * f_hat(model, gamma, query, order))


def fraction_convex(model: TwoPointModel, gamma: float, query: StrategyQuery,
                    order: int = 64) -> FractionResult:
    """Optimal fraction as a convex combination of the two Merton fractions."""
    w = upper_weight(model, gamma, query, order)
    kappa_hi = merton_fraction(gamma, model.sigma, model.theta_hi)
    kappa_lo = merton_fraction(gamma, model.sigma, model.theta_lo)
    kappa = w * kappa_hi + (1.0 - w) * kappa_lo
    return FractionResult(kappa=kappa, scenario_weights=np.array([w, 1.0 - w]),
                          degenerate=query.remaining <= 0.0)


def upper_weight_curve(theta_hi, theta_lo, gamma: float, tau: float,
                       p_grid, order: int = 64, chunk: int = 1024) -> np.ndarray:
    """Upper-Merton weight at (t=0, horizon tau, y=0) for many priors at once.

    The weight at a general (t, T, y) equals the initial-date weight with
    remaining horizon tau = T - t and the posterior as prior, so this
    vectorized curve is what path simulations interpolate on.
    """
    hi = np.atleast_1d(np.asarray(theta_hi, dtype=float))
    lo = np.atleast_1d(np.asarray(theta_lo, dtype=float))
    p = np.asarray(p_grid, dtype=float)
    if np.any((p < 0.0) | (p > 1.0)):
        raise InvalidArgumentError("priors must lie in [0, 1]")
    if tau <= 0.0:
        return p.astype(float).copy()
    thetas = np.stack([hi, lo])
    offsets = -0.5 * np.sum(thetas**2, axis=1) * tau
    S = reduced_sqrt(tau * (thetas @ thetas.T))
    r = S.shape[1]
    if r == 0:  # identical scenarios: no information, weight equals prior
        return p.astype(float).copy()
    rho = gamma - 1.0
    n = _auto_order(S, rho, order, r)
    nodes1, logw1 = _hermite_nodes_logweights(n)
    if r == 1:
        pts, lgw = nodes1[:, None], logw1
    else:
        g0, g1 = np.meshgrid(nodes1, nodes1, indexing="ij")
        pts = np.stack([g0.ravel(), g1.ravel()], axis=-1)
        w0, w1 = np.meshgrid(logw1, logw1, indexing="ij")
        lgw = (w0 + w1).ravel()

    # node-local pieces independent of the prior, per (scenario k, branch j)
    fixed = []
    for k in range(2):
        centers = rho * S + S[k][None, :]                        # (2, r)
        half_c2 = 0.5 * np.sum(centers**2, axis=1)
        for j in range(2):
            x = centers[j][None, :] + pts                        # (n, r)
            proj = x @ S.T                                       # (n, 2)
            d2 = np.sum((x[:, None, :] - centers[None, :, :]) ** 2, axis=2)
            base = lgw + x @ S[k] - x @ centers[j] + half_c2[j]  # (n,)
            fixed.append((proj, d2, half_c2, base))

    out = np.empty(p.shape[0])
    out[p == 0.0] = 0.0
    out[p == 1.0] = 1.0
    idx = np.flatnonzero((p > 0.0) & (p < 1.0))
    for start in range(0, idx.size, chunk):
        sel = idx[start:start + chunk]
        lw0 = (np.log(p[sel]) + offsets[0])[:, None]             # (P, 1)
        lw1 = (np.log1p(-p[sel]) + offsets[1])[:, None]
        pieces = np.empty((sel.size, 2, 2))
        for k in range(2):
            for j in range(2):
                proj, d2, half_c2, base = fixed[2 * k + j]
                mix = np.logaddexp(lw0 + proj[:, 0], lw1 + proj[:, 1])
                m0 = rho * lw0 + half_c2[0] - 0.5 * d2[:, 0]
                m1 = rho * lw1 + half_c2[1] - 0.5 * d2[:, 1]
                body = base + rho * mix + (m0 if j == 0 else m1) - np.logaddexp(m0, m1)
                top = body.max(axis=1, keepdims=True)
                pieces[:, k, j] = (top + np.log(np.exp(body - top).sum(axis=1,
                                                                       keepdims=True)))[:, 0]
        log_n0 = lw0[:, 0] + np.logaddexp(pieces[:, 0, 0], pieces[:, 0, 1])
        log_n1 = lw1[:, 0] + np.logaddexp(pieces[:, 1, 0], pieces[:, 1, 1])
        out[sel] = np.exp(log_n0 - np.logaddexp(log_n0, log_n1))
    if np.any(np.isnan(out)):
        raise NumericError("weight curve evaluation produced NaN")
    return out
