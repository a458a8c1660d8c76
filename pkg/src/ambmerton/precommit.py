"""Optimal deterministic (constant-fraction) strategy for two scenarios.

The expected utility of a constant fraction has a two-term lognormal
closed form; its first-order condition states the optimal fraction as a
softmax-weighted combination of the two Merton fractions and is solved
by damped fixed-point iteration with a line-search fallback.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bayes import merton_fraction
from .errors import ConvergenceError, InvalidArgumentError, NumericError
from .numerics import Interval, minimize_scalar
from .twopoint import TwoPointModel

__all__ = ["PrecommitResult", "precommit_value", "precommit_fraction", "precommit_softmax_weight"]


@dataclass(frozen=True)
class PrecommitResult:
    """Constant optimal fraction with its FOC diagnostics.

    ``kappa_pre = w kappa_hi + (1-w) kappa_lo`` with the softmax weight
    ``w = upper_weight_pre``; ``foc_residual`` is the sup-norm fixed-point
    defect, at most 1e-10.
    """

    kappa_pre: np.ndarray
    foc_residual: float
    upper_weight_pre: float


def _validate(model: TwoPointModel, alpha: float) -> None:
    if not (alpha < 1.0 and alpha != 0.0 and np.isfinite(alpha)):
        raise InvalidArgumentError("alpha must be < 1 and nonzero")


def precommit_value(model: TwoPointModel, alpha: float, x0: float, T: float,
                    kappa) -> float:
    """Expected utility of holding the constant fraction ``kappa`` to T.

    ``(x0^a/a) [p e^{a(k.mu_hi - (1-a)/2 k'Sk)T} + (1-p) e^{a(k.mu_lo - ...)T}]``
    with S = sigma sigma^T; verified against Monte Carlo simulation in the
    test suite before being relied on.
    """
    _validate(model, alpha)
    if not (np.isfinite(x0) and x0 > 0):
        raise InvalidArgumentError("x0 must be positive")
    if not (np.isfinite(T) and T >= 0):
        raise InvalidArgumentError("T must be nonnegative")
    kappa = np.atleast_1d(np.asarray(kappa, dtype=float))
    if kappa.shape != (model.d,):
        raise InvalidArgumentError(f"kappa must have length {model.d}")
    cov = model.sigma @ model.sigma.T
    quad = 0.5 * (1.0 - alpha) * (kappa @ cov @ kappa)
    exps = alpha * T * np.array([kappa @ model.mu_hi - quad, kappa @ model.mu_lo - quad])
    with np.errstate(divide="ignore"):
        log_mix = np.logaddexp(np.log(model.p) + exps[0], np.log1p(-model.p) + exps[1])
    out = (x0**alpha / alpha) * np.exp(log_mix)
    if not np.isfinite(out):
        raise NumericError("pre-commitment value overflowed")
    return float(out)


def precommit_softmax_weight(model: TwoPointModel, alpha: float, T: float,
                             kappa) -> float:
    """Softmax weight on the upper Merton fraction implied by ``kappa``.

    The scenario-independent variance term cancels from the softmax, so
    only the drift inner products enter.
    """
    kappa = np.atleast_1d(np.asarray(kappa, dtype=float))
    with np.errstate(divide="ignore"):
        logit = (np.log(model.p) - np.log1p(-model.p)
                 + alpha * T * float(kappa @ (model.mu_hi - model.mu_lo)))
    if logit == np.inf:
        return 1.0
    if logit == -np.inf:
        return 0.0
    return float(1.0 / (1.0 + np.exp(-logit)))


def precommit_fraction(model: TwoPointModel, alpha: float, T: float,
                       damping: float = 0.5, tol: float = 1e-12,
                       max_iter: int = 100_000) -> PrecommitResult:
    """Solve the first-order condition for the optimal constant fraction.

    Damped fixed-point iteration ``k <- (1-w) k + w RHS(k)`` on the
    softmax-weighted combination of the Merton fractions; if it stalls,
    the value is maximized directly along the segment between the two
    Merton fractions (where the FOC solution must lie).
    """
    _validate(model, alpha)
    if not (np.isfinite(T) and T > 0):
        raise InvalidArgumentError("T must be positive")
    gamma = 1.0 / (1.0 - alpha)
    kappa_hi = merton_fraction(gamma, model.sigma, model.theta_hi)
    kappa_lo = merton_fraction(gamma, model.sigma, model.theta_lo)

    def rhs(kappa):
        w = precommit_softmax_weight(model, alpha, T, kappa)
        return w * kappa_hi + (1.0 - w) * kappa_lo, w

    kappa = model.p * kappa_hi + (1.0 - model.p) * kappa_lo
    converged = False
    for _ in range(max_iter):
        target, w = rhs(kappa)
        nxt = (1.0 - damping) * kappa + damping * target
        if np.max(np.abs(nxt - kappa)) <= tol:
            kappa = nxt
            converged = True
            break
        kappa = nxt
    if not converged:
        # maximize along the Merton segment instead
        def neg_value(w):
            k = w * kappa_hi + (1.0 - w) * kappa_lo
            return -precommit_value(model, alpha, 1.0, T, k)

        w_best, _ = minimize_scalar(neg_value, Interval(0.0, 1.0), tol=1e-13)
        kappa = w_best * kappa_hi + (1.0 - w_best) * kappa_lo
        for _ in range(200):
            target, _ = rhs(kappa)
            if np.max(np.abs(target - kappa)) <= tol:
                break
            kappa = 0.5 * (kappa + target)

    target, w = rhs(kappa)
    residual = float(np.max(np.abs(target - kappa)))
    if residual > 1e-10:
        raise ConvergenceError(f"pre-commitment FOC residual {residual:.3e} > 1e-10")
    return PrecommitResult(kappa_pre=kappa, foc_residual=residual, upper_weight_pre=w)
