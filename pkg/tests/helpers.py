"""Shared test utilities: synthetic data and brute-force oracles.

The oracles here are deliberately independent of the package's quadrature
machinery (plain dense log-trapezoid integration and direct arithmetic),
so agreement is evidence, not tautology.
"""

import datetime

import numpy as np
from scipy.special import logsumexp

from ambmerton import PriceSeries

BENCH_MU_HI = 0.09
BENCH_MU_LO = 0.03
BENCH_SIGMA = 0.15
BENCH_P = 0.5
BENCH_TH_HI = BENCH_MU_HI / BENCH_SIGMA   # 0.6
BENCH_TH_LO = BENCH_MU_LO / BENCH_SIGMA   # 0.2


def make_gbm_series(mu, sigma, n_days, seed, s0=100.0, tdpy=252,
                    start=datetime.date(2010, 1, 1)) -> PriceSeries:
    """Exact-lognormal daily GBM price path."""
    rng = np.random.default_rng(seed)
    dt = 1.0 / tdpy
    z = rng.standard_normal(n_days - 1)
    logret = (mu - 0.5 * sigma**2) * dt + sigma * np.sqrt(dt) * z
    prices = s0 * np.exp(np.concatenate([[0.0], np.cumsum(logret)]))
    dates = tuple(start + datetime.timedelta(days=i) for i in range(n_days))
    return PriceSeries(dates=dates, prices=prices)


def brute_scenario_weights(p, th_hi, th_lo, gamma, T, t=0.0, y=0.0, npts=400_001):
    """Scenario weights by dense log-trapezoid integration (d = 1).

    Integrates p_k L_T(theta_k, z + y) F(T, z + y)^{gamma-1} phi_{T-t}(z)
    on a wide uniform grid; no Gauss-Hermite, no branch decomposition.
    """
    tau = T - t
    reach = 12.0 * np.sqrt(tau) + 2.0 * max(gamma, 1.0) * (abs(th_hi) + abs(th_lo)) * tau
    z = np.linspace(-reach, reach, npts)
    dz = z[1] - z[0]
    lphi = -0.5 * z * z / tau - 0.5 * np.log(2.0 * np.pi * tau)
    ll = np.stack([(z + y) * th - 0.5 * th * th * T for th in (th_hi, th_lo)])
    with np.errstate(divide="ignore"):
        lp = np.log(np.array([p, 1.0 - p]))
    lf = logsumexp(lp[:, None] + ll, axis=0)
    log_n = np.array([
        logsumexp(lp[k] + ll[k] + (gamma - 1.0) * lf + lphi) + np.log(dz)
        for k in range(2)
    ])
    return np.exp(log_n - logsumexp(log_n))


def brute_log_mix_gamma_integral(qs, thetas, gamma, T, npts=400_001):
    """log int (sum_k q_k L_T(theta_k, z))^gamma phi_T(z) dz on a dense grid."""
    thetas = np.asarray(thetas, dtype=float)
    reach = 12.0 * np.sqrt(T) + 2.0 * max(gamma, 1.0) * np.max(np.abs(thetas)) * T
    z = np.linspace(-reach, reach, npts)
    dz = z[1] - z[0]
    lphi = -0.5 * z * z / T - 0.5 * np.log(2.0 * np.pi * T)
    ll = np.stack([z * th - 0.5 * th * th * T for th in thetas])
    with np.errstate(divide="ignore"):
        lq = np.log(np.asarray(qs, dtype=float))
    lf = logsumexp(lq[:, None] + ll, axis=0)
    return float(logsumexp(gamma * lf + lphi) + np.log(dz))


def closed_form_mix_square_integral(q1, q2, th_hi, th_lo, T):
    """Exact value of int (q1 L(th_hi) + q2 L(th_lo))^2 phi_T dz.

    Expanding the square and applying the bivariate moment identity
    int L_T(a) L_T(b) phi_T = exp(T a.b) term by term gives
    q1^2 e^{T h^2} + 2 q1 q2 e^{T h l} + q2^2 e^{T l^2}.
    """
    return (q1 * q1 * np.exp(T * th_hi**2) + q2 * q2 * np.exp(T * th_lo**2)
            + 2.0 * q1 * q2 * np.exp(T * th_hi * th_lo))


def se_combine(*ses):
    return float(np.sqrt(sum(s * s for s in ses)))
