"""Smooth-ambiguity layer: dual prior adjustment for two scenarios.

A second CRRA exponent for ambiguity turns the nested objective into a
power-mean over scenario-conditional expectations.  Its dual
representation reduces the whole problem to the plain Bayesian one under
an adjusted prior (q1*, q2*), found by a one-dimensional optimization
along the binding dual constraint.  Which direction to optimize (sup or
inf) depends only on the signs of the two exponents.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .bayes import (
    FractionResult,
    Preferences,
    StrategyQuery,
    scenario_log_integrals,
)
from .errors import DomainError, InvalidArgumentError, NumericError
from .numerics import Interval, log_mixture_power_expectation, minimize_scalar, reduced_sqrt
from .twopoint import TwoPointModel

__all__ = [
    "DualCase",
    "AdjustedPrior",
    "classify_dual_case",
    "h_complement",
    "dual_objective_J",
    "adjust_prior",
    "kmm_value",
    "ambiguous_fraction",
    "dual_norm_discrete",
]

_EPS_Y = 1e-9


class DualCase(enum.Enum):
    """Which dual problem applies, by the sign pattern of the exponents.

    SUP_P_GT1 : p_exp > 1 (0 < alpha < lambda, or lambda < alpha < 0);
        maximize over the constraint set.
    INF_0P1 : 0 < p_exp < 1 (0 < lambda < alpha, or alpha < lambda < 0);
        minimize, feasible q1 >= q1_boundary.
    INF_P_NEG : p_exp < 0 (exponents of opposite sign); minimize,
        feasible q1 <= q1_boundary.
    """

    SUP_P_GT1 = "sup_p_gt1"
    INF_0P1 = "inf_0p1"
    INF_P_NEG = "inf_p_neg"

    @property
    def is_sup(self) -> bool:
        return self is DualCase.SUP_P_GT1


def classify_dual_case(prefs: Preferences) -> DualCase | None:
    """Map (sign alpha, sign lambda) to the dual case; None when neutral."""
    if prefs.ambiguity_neutral:
        return None
    p = prefs.p_exp
    if p > 1.0:
        return DualCase.SUP_P_GT1
    if 0.0 < p < 1.0:
        return DualCase.INF_0P1
    return DualCase.INF_P_NEG


@dataclass(frozen=True)
class AdjustedPrior:
    """Dual-optimal measure weights and the modified prior they imply.

    ``(q1/p)^q p + (q2/(1-p))^q (1-p) = 1`` holds with equality;
    ``p_mod = q1 / (q1 + q2)`` feeds the Bayesian solver; ``objective``
    is the extremal mixture integral J* (``log_objective`` its log).
    ``log_q1``/``log_q2`` carry the weights at full precision even when
    the modified prior rounds to 0 or 1 in double precision.
    """

    q1: float
    q2: float
    p_mod: float
    ytilde: float
    objective: float
    log_objective: float
    case: DualCase | None
    log_q1: float = -np.inf
    log_q2: float = -np.inf

    @property
    def log_prior_mod(self) -> np.ndarray:
        """Normalized modified log-prior (upper, lower)."""
        pair = np.array([self.log_q1, self.log_q2])
        return pair - np.logaddexp(self.log_q1, self.log_q2)


def q1_boundary(p: float, p_exp: float) -> float:
    """The corner value p^(1/p_exp) of the dual constraint for q2 = 0."""
    return float(p ** (1.0 / p_exp))


def h_complement(q1: float, p: float, q_exp: float) -> float:
    """The q2 that makes the dual constraint bind, given q1.

    ``h(x) = ((1 - x^q p^{1-q}) / (1-p)^{1-q})^{1/q}``; raises if the
    radicand is negative (infeasible q1).  For q_exp < 0 the radicand
    hitting zero means q2 -> infinity, returned as ``inf``.
    """
    if not 0.0 < p < 1.0:
        raise InvalidArgumentError("p must lie in (0, 1)")
    if q_exp == 0.0:
        raise InvalidArgumentError("q_exp must be nonzero")
    if q1 < 0.0:
        raise DomainError("q1 must be nonnegative")
    with np.errstate(divide="ignore", over="ignore"):
        radicand = 1.0 - q1**q_exp * p ** (1.0 - q_exp)
    if np.isnan(radicand) or radicand < 0.0:
        raise DomainError(f"q1={q1} is infeasible for the dual constraint")
    if radicand == 0.0:
        return 0.0 if q_exp > 0 else np.inf
    return float((radicand / (1.0 - p) ** (1.0 - q_exp)) ** (1.0 / q_exp))


def _log_q_pair(ytilde: float, p: float, p_exp: float, q_exp: float):
    """Binding-constraint parametrization q1 = p^{1/p} y^{1/q}, q2 likewise."""
    return (np.log(p) / p_exp + np.log(ytilde) / q_exp,
            np.log1p(-p) / p_exp + np.log1p(-ytilde) / q_exp)


def _log_J(log_q1: float, log_q2: float, model: TwoPointModel, gamma: float,
           T: float, order: int) -> float:
    thetas = model.thetas
    lw = np.array([log_q1, log_q2]) - 0.5 * np.sum(thetas**2, axis=1) * T
    S = reduced_sqrt(T * (thetas @ thetas.T))
    return log_mixture_power_expectation(lw, S, gamma, order=order)


def dual_objective_J(ytilde: float, model: TwoPointModel, gamma: float, T: float,
                     prefs: Preferences, order: int = 64) -> float:
    """The mixture integral J(q1(y), q2(y)) along the binding constraint.

    ``J = int (q1 L_T(theta_hi, z) + q2 L_T(theta_lo, z))^gamma phi_T dz``
    evaluated by reduced quadrature in log space.
    """
    if not 0.0 < ytilde < 1.0:
        raise InvalidArgumentError("ytilde must lie in (0, 1)")
    if not 0.0 < model.p < 1.0:
        raise InvalidArgumentError("the dual adjustment needs p in (0, 1)")
    lq1, lq2 = _log_q_pair(ytilde, model.p, prefs.p_exp, prefs.q_exp)
    out = float(np.exp(_log_J(lq1, lq2, model, gamma, T, order)))
    if not np.isfinite(out):
        raise NumericError("dual objective overflowed; evaluate in log space")
    return out


def adjust_prior(model: TwoPointModel, prefs: Preferences, T: float,
                 order: int = 64, ytol: float = 1e-10) -> AdjustedPrior:
    """Solve the outer (dual) problem and return the modified prior.

    Neutral preferences short-circuit to the identity adjustment.  The
    optimizer runs on log J over the binding constraint, sup or inf
    according to the dual case; the optimum is always interior.
    """
    if not (np.isfinite(T) and T > 0):
        raise InvalidArgumentError("T must be positive")
    gamma = prefs.gamma
    case = classify_dual_case(prefs)
    p = model.p
    if case is None or p in (0.0, 1.0):
        # neutral preferences, or a degenerate prior whose dual constraint
        # pins the single remaining weight at 1
        with np.errstate(divide="ignore"):
            lq1, lq2 = np.log(p), np.log1p(-p)
            log_j = _log_J(lq1, lq2, model, gamma, T, order)
        return AdjustedPrior(q1=p, q2=1.0 - p, p_mod=p, ytilde=p,
                             objective=float(np.exp(log_j)), log_objective=log_j,
                             case=case, log_q1=lq1, log_q2=lq2)
    sign = -1.0 if case.is_sup else 1.0

    def objective(ytilde):
        lq1, lq2 = _log_q_pair(ytilde, p, prefs.p_exp, prefs.q_exp)
        return sign * _log_J(lq1, lq2, model, gamma, T, order)

    ytilde, _ = minimize_scalar(objective, Interval(_EPS_Y, 1.0 - _EPS_Y), tol=ytol)
    lq1, lq2 = _log_q_pair(ytilde, p, prefs.p_exp, prefs.q_exp)
    log_j = _log_J(lq1, lq2, model, gamma, T, order)
    p_mod = float(np.exp(lq1 - np.logaddexp(lq1, lq2)))
    return AdjustedPrior(q1=float(np.exp(lq1)), q2=float(np.exp(lq2)), p_mod=p_mod,
                         ytilde=float(ytilde), objective=float(np.exp(log_j)),
                         log_objective=float(log_j), case=case,
                         log_q1=float(lq1), log_q2=float(lq2))


def kmm_value(model: TwoPointModel, prefs: Preferences, x0: float, T: float,
              order: int = 64) -> float:
    """Value of the smooth-ambiguity problem, on the utility scale.

    ``(x0^alpha / alpha) (J*)^{1/gamma}`` with J* the dual-optimal mixture
    integral; for neutral preferences this is exactly the Bayesian value.
    """
    if not (np.isfinite(x0) and x0 > 0):
        raise InvalidArgumentError("x0 must be positive")
    adj = adjust_prior(model, prefs, T, order)
    out = (x0**prefs.alpha / prefs.alpha) * np.exp(adj.log_objective / prefs.gamma)
    if not np.isfinite(out):
        raise NumericError("ambiguity value overflowed at this horizon")
    return float(out)


def certainty_equivalent(value: float, alpha: float) -> float:
    """Wealth with utility ``value``: (alpha * value)^(1/alpha)."""
    return float((alpha * value) ** (1.0 / alpha))


def ambiguous_fraction(model: TwoPointModel, prefs: Preferences,
                       query: StrategyQuery, order: int = 64) -> FractionResult:
    """Optimal fraction under ambiguity: Bayesian solution at the
    modified prior, frozen from the initial date for horizon T.

    The modified prior enters in log space, so fractions stay correct
    even when the adjustment is within rounding of a degenerate prior.
    """
    adj = adjust_prior(model, prefs, query.T, order)
    gamma = prefs.gamma
    y = np.atleast_1d(np.asarray(query.y, dtype=float))
    degenerate = query.remaining <= 0.0
    log_prior = adj.log_prior_mod
    thetas = model.thetas
    if degenerate:
        ll = thetas @ y - 0.5 * np.sum(thetas**2, axis=1) * query.t
        lp = log_prior + ll
        weights = np.exp(lp - logsumexp(lp))
    else:
        log_n, _ = scenario_log_integrals(thetas, log_prior, gamma,
                                          query.T, query.t, y, order)
        weights = np.exp(log_n - logsumexp(log_n))
    kappa = gamma * np.linalg.solve(model.sigma.T, thetas.T @ weights)
    return FractionResult(kappa=kappa, scenario_weights=weights,
                          degenerate=degenerate)


def dual_norm_discrete(values, probs, p_exp: float):
    """Discrete power mean and the dual-optimal weights attaining it.

    Returns ``(norm, q_star)`` where ``norm = (sum x_i^p p_i)^{1/p}`` and
    ``q_star_i = p_i (x_i / norm)^{p-1}`` satisfies the conjugate
    constraint with equality and ``sum q_i x_i = norm`` (checked to
    1e-12); the optimization direction is sup for p_exp > 1, inf for
    p_exp < 1.
    """
    x = np.asarray(values, dtype=float)
    p = np.asarray(probs, dtype=float)
    if x.ndim != 1 or x.shape != p.shape:
        raise InvalidArgumentError("values and probs must be equal-length vectors")
    if np.any(p < 0.0) or abs(p.sum() - 1.0) > 1e-12:
        raise InvalidArgumentError("probs must be a probability vector")
    if np.any(x < 0.0):
        raise InvalidArgumentError("values must be nonnegative")
    if p_exp == 0.0 or not np.isfinite(p_exp):
        raise InvalidArgumentError("p_exp must be finite and nonzero")
    if p_exp < 1.0 and np.any(x == 0.0):
        raise InvalidArgumentError("values must be positive when p_exp < 1")
    if p_exp == 1.0:
        return float(p @ x), p.copy()
    with np.errstate(divide="ignore"):
        log_x = np.log(x)
        log_p = np.log(p)
    log_norm = logsumexp(log_p + p_exp * log_x) / p_exp
    norm = float(np.exp(log_norm))
    q_star = np.exp(log_p + (p_exp - 1.0) * (log_x - log_norm))
    attained = float(q_star @ x)
    if abs(attained - norm) > 1e-12 * max(1.0, norm):
        raise NumericError(f"dual attainment check failed: {attained} vs {norm}")
    return norm, q_star
