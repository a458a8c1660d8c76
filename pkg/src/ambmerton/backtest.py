"""Price-series pipeline: rolling volatility, Y reconstruction, strategies.

A daily (discounted) price path is turned into the observable driving
process by scaling log-returns with a rolling historical volatility, and
the adaptive fraction is evaluated date by date, next to constant-belief
comparators.  Single-asset only.
"""

from __future__ import annotations

import csv
import datetime
import warnings
from dataclasses import dataclass, field

import numpy as np

from .ambiguity import adjust_prior
from .bayes import Preferences, StrategyQuery, optimal_fraction
from .errors import (
    DataError,
    DegenerateVolatilityError,
    InvalidArgumentError,
    UnsupportedError,
)
from .twopoint import TwoPointModel

__all__ = [
    "PriceSeries",
    "BacktestConfig",
    "StrategyPath",
    "load_prices",
    "write_prices",
    "rolling_vol",
    "y_increments",
    "strategy_path",
    "export_csv",
    "read_strategy_csv",
]

_MIN_VOL = 1e-6


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


@dataclass(frozen=True)
class PriceSeries:
    """Dated positive prices with strictly increasing dates."""

    dates: tuple
    prices: np.ndarray

    def __post_init__(self):
        dates = tuple(self.dates)
        prices = np.asarray(self.prices, dtype=float)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "prices", prices)
        if len(dates) != prices.shape[0]:
            raise DataError("dates and prices must have equal length")
        if len(dates) < 2:
            raise DataError("a price series needs at least two observations")
        if any(b <= a for a, b in zip(dates, dates[1:])):
            raise DataError("dates must be strictly increasing")
        if np.any(~np.isfinite(prices)) or np.any(prices <= 0.0):
            raise DataError("prices must be positive and finite")

    def __len__(self) -> int:
        return len(self.dates)

    @property
    def log_returns(self) -> np.ndarray:
        """r_i = ln(S_i / S_{i-1}), indexed by the end date (length n-1)."""
        return np.diff(np.log(self.prices))


@dataclass(frozen=True)
class BacktestConfig:
    """Estimation window, market beliefs, and preferences for a run."""

    window: int
    mu_hi: float
    mu_lo: float
    p: float
    prefs: Preferences
    T: float
    trading_days_per_year: int = 252
    naive_drifts: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "naive_drifts", tuple(float(m) for m in self.naive_drifts))
        if self.window < 10:
            raise InvalidArgumentError("window must be >= 10 trading days")
        if self.trading_days_per_year < 1:
            raise InvalidArgumentError("trading_days_per_year must be positive")
        if not 0.0 <= self.p <= 1.0:
            raise InvalidArgumentError("p must lie in [0, 1]")
        if self.mu_hi < self.mu_lo:
            raise InvalidArgumentError("need mu_hi >= mu_lo")
        if not (np.isfinite(self.T) and self.T > 0):
            raise InvalidArgumentError("T must be positive")

    @property
    def dt(self) -> float:
        return 1.0 / self.trading_days_per_year


@dataclass(frozen=True)
class StrategyPath:
    """Per-date volatility, reconstructed Y, and strategy fractions.

    ``y[0] == 0`` by construction; ``kappa_naive`` maps comparator labels
    to constant-belief Merton paths; ``kappa_ambiguity`` is present only
    when the run's preferences are not ambiguity neutral.
    """

    dates: tuple
    sigma_hat: np.ndarray
    y: np.ndarray
    kappa_learning: np.ndarray
    kappa_naive: dict
    kappa_ambiguity: np.ndarray | None = None
    p_mod: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "dates", tuple(self.dates))
        n = len(self.dates)
        for name in ("sigma_hat", "y", "kappa_learning"):
            arr = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, arr)
            if arr.shape != (n,):
                raise InvalidArgumentError(f"{name} must have length {n}")
        if n and abs(self.y[0]) > 0.0:
            raise InvalidArgumentError("the reconstructed Y path must start at 0")
        naive = {str(k): np.asarray(v, dtype=float) for k, v in self.kappa_naive.items()}
        object.__setattr__(self, "kappa_naive", naive)
        if self.kappa_ambiguity is not None:
            object.__setattr__(self, "kappa_ambiguity",
                               np.asarray(self.kappa_ambiguity, dtype=float))

    def __len__(self) -> int:
        return len(self.dates)


def load_prices(path) -> PriceSeries:
    """Parse a two-column CSV (header ``date,price``) into a PriceSeries."""
    dates, prices = [], []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if lineno == 1:
                if [c.strip().lower() for c in row[:2]] != ["date", "price"]:
                    raise DataError(f"line 1: expected header 'date,price', got {row!r}",
                                    line=1)
                continue
            if not row:
                continue
            if len(row) != 2:
                raise DataError(f"line {lineno}: expected 2 fields, got {len(row)}",
                                line=lineno)
            try:
                dates.append(datetime.date.fromisoformat(row[0].strip()))
            except ValueError as exc:
                raise DataError(f"line {lineno}: bad date {row[0]!r}: {exc}",
                                line=lineno) from exc
            try:
                prices.append(float(row[1]))
            except ValueError as exc:
                raise DataError(f"line {lineno}: bad price {row[1]!r}", line=lineno) from exc
            if prices[-1] <= 0.0 or not np.isfinite(prices[-1]):
                raise DataError(f"line {lineno}: price must be positive, got {row[1]}",
                                line=lineno)
    try:
        return PriceSeries(dates=tuple(dates), prices=np.asarray(prices))
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from exc


def write_prices(series: PriceSeries, path) -> None:
    """Inverse of `load_prices` (12 significant digits)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "price"])
        for d, s in zip(series.dates, series.prices):
            writer.writerow([d.isoformat(), _fmt(s)])


def rolling_vol(series: PriceSeries, config: BacktestConfig) -> np.ndarray:
    """Annualized rolling volatility, aligned to the series dates.

    Entry i is the population standard deviation of the ``window`` log
    returns ending at date i, times sqrt(trading_days_per_year); dates
    without a full window hold NaN.
    """
    window = config.window
    if len(series) < window + 2:
        raise InvalidArgumentError(
            f"series of length {len(series)} is too short for window {window}")
    r = series.log_returns
    csum = np.concatenate([[0.0], np.cumsum(r)])
    csum2 = np.concatenate([[0.0], np.cumsum(r * r)])
    mean = (csum[window:] - csum[:-window]) / window
    mean2 = (csum2[window:] - csum2[:-window]) / window
    var = np.maximum(mean2 - mean**2, 0.0)
    out = np.full(len(series), np.nan)
    out[window:] = np.sqrt(var) * np.sqrt(config.trading_days_per_year)
    return out


def y_increments(series: PriceSeries, vols: np.ndarray, config: BacktestConfig) -> np.ndarray:
    """Reconstruct the driving process from prices and volatilities.

    ``Y_i - Y_{i-1} = ln(S_i/S_{i-1}) / vol_{i-1} + vol_{i-1} dt / 2``
    using the volatility known at the previous date; the path starts at 0
    on the first date with a volatility estimate.  NaN before the start.
    """
    vols = np.asarray(vols, dtype=float)
    if vols.shape != (len(series),):
        raise InvalidArgumentError("vols must align with the price series")
    finite = np.flatnonzero(np.isfinite(vols))
    if finite.size < 2:
        raise InvalidArgumentError("need at least two volatility estimates")
    start = int(finite[0])
    used = vols[start:-1]
    if np.any(used <= _MIN_VOL):
        bad = start + int(np.argmax(used <= _MIN_VOL))
        raise DegenerateVolatilityError(
            f"volatility at index {bad} is {vols[bad]:.3e}; cannot scale returns")
    r = series.log_returns[start:]
    dy = r / used + 0.5 * used * config.dt
    out = np.full(len(series), np.nan)
    out[start:] = np.concatenate([[0.0], np.cumsum(dy)])
    return out


def strategy_path(series: PriceSeries, config: BacktestConfig,
                  order: int = 64) -> StrategyPath:
    """Evaluate learning, naive, and ambiguity-adjusted fractions per date.

    The two-scenario model is re-built each date around the current
    volatility estimate; the ambiguity adjustment (when preferences are
    not neutral) is computed once at the starting date and held fixed.
    Dates at or beyond the horizon are truncated with a warning.
    """
    vols = rolling_vol(series, config)
    ys = y_increments(series, vols, config)
    start = config.window
    idx = np.arange(start, len(series))
    t_years = (idx - start) * config.dt
    span = float(t_years[-1])
    if span >= config.T:
        warnings.warn(f"series spans {span:.2f} years but the horizon is "
                      f"T={config.T}; truncating at the horizon")
        keep = t_years < config.T
        idx, t_years = idx[keep], t_years[keep]

    gamma = config.prefs.gamma
    p_mod = None
    if not config.prefs.ambiguity_neutral:
        model0 = TwoPointModel.from_drifts([[vols[start]]], [config.mu_hi],
                                           [config.mu_lo], config.p)
        p_mod = adjust_prior(model0, config.prefs, config.T, order).p_mod

    kappa = np.empty(idx.size)
    kappa_amb = np.empty(idx.size) if p_mod is not None else None
    naive = {f"naive_{mu:g}": np.empty(idx.size) for mu in config.naive_drifts}
    for j, (i, t) in enumerate(zip(idx, t_years)):
        sig = vols[i]
        model = TwoPointModel.from_drifts([[sig]], [config.mu_hi], [config.mu_lo],
                                          config.p)
        query = StrategyQuery(t=float(t), T=config.T, y=[ys[i]])
        kappa[j] = optimal_fraction(model.market, config.prefs, query, order).kappa[0]
        if kappa_amb is not None:
            mod = model.with_p(p_mod)
            kappa_amb[j] = optimal_fraction(mod.market, config.prefs, query, order).kappa[0]
        for mu in config.naive_drifts:
            naive[f"naive_{mu:g}"][j] = gamma * mu / sig**2
    return StrategyPath(
        dates=tuple(series.dates[i] for i in idx), sigma_hat=vols[idx], y=ys[idx],
        kappa_learning=kappa, kappa_naive=naive, kappa_ambiguity=kappa_amb,
        p_mod=p_mod)


def _columns(path_obj: StrategyPath) -> list:
    cols = ["date", "sigma_hat", "Y", "kappa_learning"]
    cols += [f"kappa_{label}" for label in path_obj.kappa_naive]
    if path_obj.kappa_ambiguity is not None:
        cols.append("kappa_ambiguity")
    return cols


def export_csv(path_obj: StrategyPath, dest, header_comments=()) -> None:
    """Write a strategy path as CSV (RFC 4180, 12 significant digits)."""
    own = isinstance(dest, (str, bytes)) or hasattr(dest, "__fspath__")
    fh = open(dest, "w", encoding="utf-8", newline="") if own else dest
    try:
        for comment in header_comments:
            fh.write(f"# {comment}\n")
        writer = csv.writer(fh)
        writer.writerow(_columns(path_obj))
        naive_cols = list(path_obj.kappa_naive.values())
        for i, date in enumerate(path_obj.dates):
            row = [date.isoformat(), _fmt(path_obj.sigma_hat[i]), _fmt(path_obj.y[i]),
                   _fmt(path_obj.kappa_learning[i])]
            row += [_fmt(col[i]) for col in naive_cols]
            if path_obj.kappa_ambiguity is not None:
                row.append(_fmt(path_obj.kappa_ambiguity[i]))
            writer.writerow(row)
    finally:
        if own:
            fh.close()


def read_strategy_csv(path) -> StrategyPath:
    """Parse a strategy-path CSV written by `export_csv` ('#' lines skipped)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    if not rows:
        raise DataError("empty strategy CSV")
    header = rows[0]
    base = ["date", "sigma_hat", "Y", "kappa_learning"]
    if header[: len(base)] != base:
        raise DataError(f"unexpected strategy CSV header {header!r}")
    extra = header[len(base):]
    has_amb = bool(extra) and extra[-1] == "kappa_ambiguity"
    naive_labels = [c.removeprefix("kappa_") for c in (extra[:-1] if has_amb else extra)]
    data = np.array([[float(v) for v in row[1:]] for row in rows[1:]], dtype=float)
    data = data.reshape((len(rows) - 1, len(header) - 1))
    dates = tuple(datetime.date.fromisoformat(r[0]) for r in rows[1:])
    naive = {label: data[:, 3 + i] for i, label in enumerate(naive_labels)}
    return StrategyPath(
        dates=dates, sigma_hat=data[:, 0], y=data[:, 1], kappa_learning=data[:, 2],
        kappa_naive=naive,
        kappa_ambiguity=data[:, -1] if has_amb else None)
