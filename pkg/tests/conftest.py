import time
from types import SimpleNamespace

import pytest

import ambmerton as am

from helpers import BENCH_MU_HI, BENCH_MU_LO, BENCH_P, BENCH_SIGMA


@pytest.fixture(scope="session")
def benchmark():
    """Default market calibration: mu 0.09/0.03, sigma 0.15, p 0.5."""
    return am.TwoPointModel.from_drifts(BENCH_SIGMA, BENCH_MU_HI, BENCH_MU_LO, BENCH_P)


@pytest.fixture(scope="session")
def mc(benchmark):
    """Shared large Monte Carlo runs (1e5 paths, dt = 0.01, T = 10).

    Computed once per session; common seed gives common random numbers
    across strategies, which sharpens the dominance comparisons.
    """
    horizon = 10.0
    cfg = am.SimulationConfig(n_paths=100_000, n_steps=1000, seed=20240809)
    prefs = am.Preferences(0.5)
    start = time.perf_counter()
    strat = am.learning_strategy(benchmark, prefs.gamma, horizon)
    learning = am.simulate_utility(benchmark, prefs, strat, 1.0, horizon, cfg)
    pre = am.precommit_fraction(benchmark, prefs.alpha, horizon)
    precommit = am.simulate_utility(benchmark, prefs,
                                    am.constant_strategy(pre.kappa_pre),
                                    1.0, horizon, cfg)
    elapsed = time.perf_counter() - start
    constants = {
        k: am.simulate_utility(benchmark, prefs, am.constant_strategy(float(k)),
                               1.0, horizon, cfg)
        for k in (1.0, 2.0, 4.0, 6.0, 8.0)
    }
    return SimpleNamespace(config=cfg, prefs=prefs, horizon=horizon,
                           learning=learning, precommit=precommit,
                           precommit_result=pre, constants=constants,
                           elapsed=elapsed)
