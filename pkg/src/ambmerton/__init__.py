"""Optimal investment under drift uncertainty, learning, and smooth ambiguity.

A library and CLI for the multi-asset Merton allocation problem when the
drift is unknown: Bayesian filtering of discrete drift scenarios, the
optimal adaptive fractions and their convex-combination form for two
scenarios, deterministic pre-commitment strategies, the dual prior
adjustment induced by smooth-ambiguity preferences, value-of-learning
diagnostics, Monte Carlo verification, and a price-series backtest
pipeline.
"""

from .ambiguity import (
    AdjustedPrior,
    DualCase,
    adjust_prior,
    ambiguous_fraction,
    certainty_equivalent,
    classify_dual_case,
    dual_norm_discrete,
    dual_objective_J,
    h_complement,
    kmm_value,
)
from .backtest import (
    BacktestConfig,
    PriceSeries,
    StrategyPath,
    export_csv,
    load_prices,
    rolling_vol,
    strategy_path,
    y_increments,
)
from .bayes import (
    FractionResult,
    MarketModel,
    Preferences,
    StrategyQuery,
    log_likelihood,
    log_mixture_F,
    log_optimal_fraction,
    merton_fraction,
    optimal_fraction,
    posterior,
    value,
)
from .errors import (
    AmbMertonError,
    BracketingError,
    ConvergenceError,
    DataError,
    DegenerateVolatilityError,
    DomainError,
    InvalidArgumentError,
    NumericError,
    UnsupportedError,
)
from .learning import (
    PosteriorSample,
    SimulationConfig,
    SimulationResult,
    constant_strategy,
    learning_strategy,
    posterior_sample,
    simulate_utility,
    value_log_learning,
    value_log_precommit,
    value_of_learning,
)
from .numerics import (
    Interval,
    QuadratureRule,
    find_root,
    gauss_hermite_rule,
    gaussian_expectation,
    log_sum_exp,
    minimize_scalar,
)
from .precommit import PrecommitResult, precommit_fraction, precommit_value
from .twopoint import (
    TwoPointModel,
    f_hat,
    fraction_convex,
    lower_weight_g,
    upper_weight,
    upper_weight_curve,
)

__version__ = "0.1.0"
