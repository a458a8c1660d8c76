"""Command-line surface: reproducible runs emitting JSON records and CSV.

Every command resolves a single JSON config (built-in defaults, then
``--config FILE``, then dotted ``--key value`` overrides) and echoes the
fully resolved config into its output, so any result can be regenerated
from the artifact alone.  Exit codes: 0 ok, 2 config error, 3 numeric
failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import copy
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import ambiguity as amb
from . import backtest as bt
from . import learning as lrn
from .bayes import Preferences, StrategyQuery, log_optimal_fraction, optimal_fraction, posterior, value
from .errors import AmbMertonError, DataError, InvalidArgumentError, NumericError
from .precommit import precommit_fraction
from .twopoint import TwoPointModel, f_hat

SCHEMA_VERSION = 1

DEFAULT_CONFIG = {
    "model": {"mu_hi": 0.09, "mu_lo": 0.03, "sigma": 0.15, "p": 0.5},
    "prefs": {"alpha": 0.5, "lambda": None},
    "query": {"t": 0.0, "T": 10.0, "y": 0.0},
    "x0": 1.0,
    "seed": 12345,
    "simulate": {"n_paths": 100_000, "n_steps": None, "strategy": "learning",
                 "kappa": 1.0},
    "sweep": {"axis": "T", "grid": None, "quantity": "weight", "profiles": None},
    "backtest": {"prices": None, "window": 250, "trading_days_per_year": 252,
                 "naive_drifts": [0.09, 0.03]},
}

_SWEEP_AXES = ("T", "p", "alpha", "lambda", "mu_hi", "sigma", "y")

_DEFAULT_PROFILES = [{"label": "less_risk_averse", "alpha": 0.5},
                     {"label": "log", "alpha": None},
                     {"label": "more_risk_averse", "alpha": -1.0}]

PRESETS = {
    "fig1": {"sweep": {"axis": "T", "grid": list(np.linspace(0.5, 50.0, 100)),
                       "quantity": "weight"}},
    "fig2": {"sweep": {"axis": "p", "grid": list(np.linspace(0.05, 0.95, 19)),
                       "quantity": "weight"}},
    "fig7": {"sweep": {"axis": "T", "grid": list(np.linspace(1.0, 40.0, 40)),
                       "quantity": "learning_value"}},
    "fig8": {"prefs": {"alpha": -3.0, "lambda": -3.0},
             "sweep": {"axis": "lambda",
                       "grid": list(np.linspace(-12.0, 0.9, 24)),
                       "quantity": "weight"}},
}

_DEFAULT_GRIDS = {
    "T": lambda cfg: list(np.linspace(0.5, 50.0, 100)),
    "p": lambda cfg: list(np.linspace(0.05, 0.95, 19)),
    "alpha": lambda cfg: [a for a in np.linspace(-3.0, 0.75, 16) if a != 0.0],
    "lambda": lambda cfg: [l for l in np.linspace(-12.0, 0.9, 24) if l != 0.0],
    "mu_hi": lambda cfg: list(np.linspace(cfg["model"]["mu_lo"], 0.2, 18)),
    "sigma": lambda cfg: list(np.linspace(0.05, 0.5, 19)),
    "y": lambda cfg: list(np.linspace(-6.0, 6.0, 25)),
}


# ---------------------------------------------------------------------------
# config plumbing
# ---------------------------------------------------------------------------


def _deep_update(base: dict, patch: dict) -> dict:
    for key, val in patch.items():
        if isinstance(val, dict) and isinstance(base.get(key), dict):
            _deep_update(base[key], val)
        else:
            base[key] = val
    return base


def _parse_overrides(tokens: list) -> dict:
    patch: dict = {}
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if not tok.startswith("--"):
            raise InvalidArgumentError(f"unexpected argument {tok!r}")
        if i + 1 >= len(tokens):
            raise InvalidArgumentError(f"override {tok!r} is missing a value")
        key, raw = tok[2:], tokens[i + 1]
        try:
            val = json.loads(raw)
        except json.JSONDecodeError:
            val = raw
        node = patch
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = val
        i += 2
    return patch


def resolve_config(args, extras: list) -> dict:
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    preset = getattr(args, "preset", None)
    if preset is not None:
        if preset not in PRESETS:
            raise InvalidArgumentError(
                f"unknown preset {preset!r}; available: {', '.join(sorted(PRESETS))}")
        _deep_update(cfg, copy.deepcopy(PRESETS[preset]))
    if args.config is not None:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                loaded = json.load(fh)
        except OSError:
            raise
        except json.JSONDecodeError as exc:
            raise InvalidArgumentError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(loaded, dict):
            raise InvalidArgumentError("config file must hold a JSON object")
        _deep_update(cfg, loaded)
    _deep_update(cfg, _parse_overrides(extras))
    return cfg


def _build_model(cfg: dict) -> TwoPointModel:
    m = cfg["model"]
    return TwoPointModel.from_drifts([[float(m["sigma"])]], [float(m["mu_hi"])],
                                     [float(m["mu_lo"])], float(m["p"]))


def _build_prefs(cfg: dict) -> Preferences:
    p = cfg["prefs"]
    lam = p.get("lambda")
    return Preferences(alpha=float(p["alpha"]),
                       lambda_=None if lam is None else float(lam))


def _build_query(cfg: dict) -> StrategyQuery:
    q = cfg["query"]
    return StrategyQuery(t=float(q["t"]), T=float(q["T"]), y=[float(q["y"])])


def _record(command: str, cfg: dict, payload: dict) -> str:
    rec = {"schema_version": SCHEMA_VERSION, "command": command, "config": cfg}
    rec.update(payload)
    return json.dumps(rec, indent=2, sort_keys=True)


def _fmt(x) -> str:
    if x == "" or x is None:
        return ""
    return format(float(x), ".12g")


def _write_csv(dest, comments: list, header: list, rows: list) -> None:
    lines = [f"# {c}" for c in comments]
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(v) if not isinstance(v, str) else v for v in row))
    text = "\n".join(lines) + "\n"
    if dest is None:
        sys.stdout.write(text)
    else:
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _threads() -> int:
    raw = os.environ.get("AMBMERTON_THREADS", "")
    if raw:
        try:
            n = int(raw)
        except ValueError as exc:
            raise InvalidArgumentError(f"AMBMERTON_THREADS must be an integer, got {raw!r}") from exc
        if n < 1:
            raise InvalidArgumentError("AMBMERTON_THREADS must be >= 1")
        return n
    return min(8, os.cpu_count() or 1)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_fraction(cfg: dict) -> str:
    model, prefs, query = _build_model(cfg), _build_prefs(cfg), _build_query(cfg)
    payload: dict = {}
    if prefs.ambiguity_neutral:
        res = optimal_fraction(model.market, prefs, query)
        weights = res.scenario_weights
        if model.p in (0.0, 1.0):  # degenerate prior collapses to one scenario
            weights = np.array([model.p, 1.0 - model.p])
    else:
        res = amb.ambiguous_fraction(model, prefs, query)
        weights = res.scenario_weights
        payload["p_mod"] = amb.adjust_prior(model, prefs, query.T).p_mod
    payload.update({
        "kappa": [float(k) for k in res.kappa],
        "weights": {"upper": float(weights[0]), "lower": float(weights[-1])},
        "degenerate": bool(res.degenerate),
    })
    return _record("fraction", cfg, payload)


def cmd_weight(cfg: dict) -> str:
    model, prefs, query = _build_model(cfg), _build_prefs(cfg), _build_query(cfg)
    payload: dict = {}
    eff = model
    if not prefs.ambiguity_neutral:
        adj = amb.adjust_prior(model, prefs, query.T)
        eff = model.with_p(adj.p_mod)
        payload["p_mod"] = adj.p_mod
    fh_val = f_hat(eff, prefs.gamma, query)
    lower = (1.0 - eff.p) * fh_val
    payload.update({
        "f_hat": fh_val,
        "upper_weight": 1.0 - lower,
        "lower_weight": lower,
        "lower_minus_log": lower - float(1.0 - posterior(model.market, query.t, query.y)[0]
                                         if 0 < model.p < 1 else 1.0 - model.p),
    })
    return _record("weight", cfg, payload)


def cmd_value(cfg: dict) -> str:
    model, prefs = _build_model(cfg), _build_prefs(cfg)
    x0, horizon = float(cfg["x0"]), float(cfg["query"]["T"])
    payload = {"value": value(model.market, prefs, x0, horizon)}
    payload["certainty_equivalent"] = amb.certainty_equivalent(payload["value"], prefs.alpha)
    if not prefs.ambiguity_neutral:
        adj = amb.adjust_prior(model, prefs, horizon)
        payload["p_mod"] = adj.p_mod
        payload["kmm_value"] = amb.kmm_value(model, prefs, x0, horizon)
        payload["kmm_certainty_equivalent"] = amb.certainty_equivalent(
            payload["kmm_value"], prefs.alpha)
    return _record("value", cfg, payload)


def cmd_precommit(cfg: dict) -> str:
    model, prefs = _build_model(cfg), _build_prefs(cfg)
    res = precommit_fraction(model, prefs.alpha, float(cfg["query"]["T"]))
    return _record("precommit", cfg, {
        "kappa_pre": [float(k) for k in res.kappa_pre],
        "foc_residual": res.foc_residual,
        "upper_weight_pre": res.upper_weight_pre,
        "lower_weight_pre": 1.0 - res.upper_weight_pre,
    })


def cmd_adjust(cfg: dict) -> str:
    model, prefs = _build_model(cfg), _build_prefs(cfg)
    adj = amb.adjust_prior(model, prefs, float(cfg["query"]["T"]))
    return _record("adjust", cfg, {
        "q1": adj.q1, "q2": adj.q2, "p_mod": adj.p_mod, "ytilde": adj.ytilde,
        "objective": adj.objective, "log_objective": adj.log_objective,
        "case": adj.case.value if adj.case is not None else "neutral",
    })


def cmd_learning_value(cfg: dict) -> str:
    model = _build_model(cfg)
    horizon = float(cfg["query"]["T"])
    v = lrn.value_log_learning(model, horizon)
    v_pre = lrn.value_log_precommit(model, horizon)
    return _record("learning-value", cfg, {
        "v_learning": v, "v_precommit": v_pre,
        "value_of_learning": (v - v_pre) / horizon,
    })


def cmd_simulate(cfg: dict) -> str:
    model, prefs = _build_model(cfg), _build_prefs(cfg)
    horizon = float(cfg["query"]["T"])
    sim = cfg["simulate"]
    n_steps = sim["n_steps"] or max(int(round(horizon * 100)), 1)
    config = lrn.SimulationConfig(n_paths=int(sim["n_paths"]), n_steps=int(n_steps),
                                  seed=int(cfg["seed"]))
    name = sim["strategy"]
    if name == "learning":
        strategy = lrn.learning_strategy(model, prefs.gamma, horizon)
    elif name == "precommit":
        strategy = lrn.constant_strategy(
            precommit_fraction(model, prefs.alpha, horizon).kappa_pre)
    elif name == "constant":
        strategy = lrn.constant_strategy(float(sim["kappa"]))
    else:
        raise InvalidArgumentError(
            f"unknown strategy {name!r}; use learning | precommit | constant")
    res = lrn.simulate_utility(model, prefs, strategy, float(cfg["x0"]), horizon, config)
    return _record("simulate", cfg, {
        "strategy": name,
        "scenario_utility": [float(v) for v in res.scenario_utility],
        "scenario_utility_se": [float(v) for v in res.scenario_utility_se],
        "mixture_utility": res.mixture_utility,
        "mixture_utility_se": res.mixture_utility_se,
        "kmm_objective": res.kmm_objective,
        "kmm_objective_se": res.kmm_objective_se,
        "n_paths": config.n_paths, "n_steps": config.n_steps, "seed": config.seed,
    })


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


def _weight_row(cfg: dict, axis: str, val: float, label: str, alpha, lam) -> list:
    mcfg = dict(cfg["model"])
    qcfg = dict(cfg["query"])
    if axis in ("p", "mu_hi", "sigma"):
        mcfg[axis] = val
    elif axis in ("T", "y"):
        qcfg[axis] = val
    model = TwoPointModel.from_drifts([[float(mcfg["sigma"])]], [float(mcfg["mu_hi"])],
                                      [float(mcfg["mu_lo"])], float(mcfg["p"]))
    query = StrategyQuery(t=float(qcfg["t"]), T=float(qcfg["T"]), y=[float(qcfg["y"])])
    log_lower = float(1.0 - posterior(model.market, query.t, query.y)[0]) \
        if 0.0 < model.p < 1.0 else 1.0 - model.p
    if alpha is None:  # log investor
        kappa = float(log_optimal_fraction(model.market, query)[0])
        return [axis, val, label, "", "", log_lower, 1.0 - log_lower, kappa, 0.0, ""]
    prefs = Preferences(alpha=alpha, lambda_=lam)
    p_mod = ""
    eff = model
    if not prefs.ambiguity_neutral or axis == "lambda":
        adj = amb.adjust_prior(model, prefs, query.T)
        p_mod = adj.p_mod
        eff = model.with_p(adj.p_mod)
    lower = (1.0 - eff.p) * f_hat(eff, prefs.gamma, query)
    kappa = float(optimal_fraction(eff.market, prefs, query).kappa[0])
    return [axis, val, label, alpha, prefs.lambda_, lower, 1.0 - lower, kappa,
            lower - log_lower, p_mod]


def _learning_row(cfg: dict, axis: str, val: float) -> list:
    mcfg = dict(cfg["model"])
    horizon = float(cfg["query"]["T"])
    if axis == "T":
        horizon = val
    elif axis in ("p", "mu_hi", "sigma"):
        mcfg[axis] = val
    else:
        raise InvalidArgumentError(f"axis {axis!r} is not valid for learning_value sweeps")
    model = TwoPointModel.from_drifts([[float(mcfg["sigma"])]], [float(mcfg["mu_hi"])],
                                      [float(mcfg["mu_lo"])], float(mcfg["p"]))
    v = lrn.value_log_learning(model, horizon)
    v_pre = lrn.value_log_precommit(model, horizon)
    return [axis, val, v, v_pre, (v - v_pre) / horizon]


def cmd_sweep(cfg: dict, out, plot: bool) -> None:
    sweep = cfg["sweep"]
    axis = sweep["axis"]
    if axis not in _SWEEP_AXES:
        raise InvalidArgumentError(
            f"unknown sweep axis {axis!r}; choose one of {', '.join(_SWEEP_AXES)}")
    grid = sweep["grid"]
    if grid is None:
        grid = _DEFAULT_GRIDS[axis](cfg)
    grid = [float(v) for v in grid]
    quantity = sweep.get("quantity", "weight")
    comments = [f"schema_version: {SCHEMA_VERSION}", "command: sweep",
                "config: " + json.dumps(cfg, sort_keys=True)]

    if quantity == "learning_value":
        header = ["axis", "value", "v_learning", "v_precommit", "value_of_learning"]
        with ThreadPoolExecutor(max_workers=_threads()) as pool:
            rows = list(pool.map(lambda v: _learning_row(cfg, axis, v), grid))
    elif quantity == "weight":
        header = ["axis", "value", "profile", "alpha", "lambda", "lower_weight",
                  "upper_weight", "kappa", "lower_minus_log", "p_mod"]
        if axis == "alpha":
            tasks = [(v, "swept", v, None) for v in grid]
        elif axis == "lambda":
            base_alpha = float(cfg["prefs"]["alpha"])
            tasks = [(v, f"alpha_{base_alpha:g}", base_alpha, v) for v in grid]
        else:
            profiles = sweep.get("profiles") or _DEFAULT_PROFILES
            lam = cfg["prefs"].get("lambda")
            tasks = [(v, prof["label"], prof["alpha"],
                      None if (prof["alpha"] is None or lam is None) else float(lam))
                     for v in grid for prof in profiles]
        with ThreadPoolExecutor(max_workers=_threads()) as pool:
            rows = list(pool.map(lambda t: _weight_row(cfg, axis, *t), tasks))
    else:
        raise InvalidArgumentError(
            f"unknown sweep quantity {quantity!r}; use weight | learning_value")

    _write_csv(out, comments, header, rows)
    if plot:
        if out is None:
            raise InvalidArgumentError("--plot requires --out to name the figure file")
        png = os.path.splitext(out)[0] + ".png"
        from .plotting import render_sweep
        render_sweep([dict(zip(header, r)) for r in rows], axis, quantity, png)


def cmd_backtest(cfg: dict, out, plot: bool) -> None:
    bcfg = cfg["backtest"]
    if not bcfg.get("prices"):
        raise InvalidArgumentError("backtest requires backtest.prices "
                                   "(CSV file with columns date,price)")
    series = bt.load_prices(bcfg["prices"])
    config = bt.BacktestConfig(
        window=int(bcfg["window"]), mu_hi=float(cfg["model"]["mu_hi"]),
        mu_lo=float(cfg["model"]["mu_lo"]), p=float(cfg["model"]["p"]),
        prefs=_build_prefs(cfg), T=float(cfg["query"]["T"]),
        trading_days_per_year=int(bcfg["trading_days_per_year"]),
        naive_drifts=tuple(bcfg["naive_drifts"]))
    path_obj = bt.strategy_path(series, config)
    comments = [f"schema_version: {SCHEMA_VERSION}", "command: backtest",
                "config: " + json.dumps(cfg, sort_keys=True)]
    if out is None:
        buf = sys.stdout
        bt.export_csv(path_obj, buf, header_comments=comments)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            bt.export_csv(path_obj, fh, header_comments=comments)
    if plot:
        if out is None:
            raise InvalidArgumentError("--plot requires --out to name the figure file")
        from .plotting import render_backtest
        render_backtest(path_obj, os.path.splitext(out)[0] + ".png")


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ambmerton",
        description="Optimal investment fractions under drift uncertainty, "
                    "learning, and smooth ambiguity.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("fraction", "weight", "value", "precommit", "adjust",
                 "learning-value", "simulate", "sweep", "backtest"):
        p = sub.add_parser(name, help=f"run the {name} computation")
        p.add_argument("--config", default=None, help="JSON config file")
        if name in ("sweep", "backtest"):
            p.add_argument("--out", default=None, help="output CSV path (default stdout)")
            p.add_argument("--plot", action="store_true",
                           help="also render a PNG figure next to --out")
        if name == "sweep":
            p.add_argument("--preset", default=None,
                           help=f"named sweep preset ({', '.join(sorted(PRESETS))})")
    return parser


_JSON_COMMANDS = {
    "fraction": cmd_fraction,
    "weight": cmd_weight,
    "value": cmd_value,
    "precommit": cmd_precommit,
    "adjust": cmd_adjust,
    "learning-value": cmd_learning_value,
    "simulate": cmd_simulate,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args, extras = parser.parse_known_args(argv)
    try:
        cfg = resolve_config(args, extras)
        if args.command in _JSON_COMMANDS:
            print(_JSON_COMMANDS[args.command](cfg))
        elif args.command == "sweep":
            cmd_sweep(cfg, args.out, args.plot)
        else:
            cmd_backtest(cfg, args.out, args.plot)
    except (InvalidArgumentError, KeyError, TypeError) as exc:
        print(f"ambmerton: config error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"ambmerton: numeric failure: {exc}", file=sys.stderr)
        return 3
    except (DataError, OSError) as exc:
        print(f"ambmerton: I/O failure: {exc}", file=sys.stderr)
        return 4
    except AmbMertonError as exc:
        print(f"ambmerton: error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
