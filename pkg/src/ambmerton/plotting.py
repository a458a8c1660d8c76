"""Matplotlib rendering of sweep and backtest reports to image files."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

__all__ = ["render_sweep", "render_backtest"]

_STYLES = ["-", "--", "-.", ":"]


def render_sweep(rows: list, axis: str, quantity: str, out_path) -> None:
    """Plot the swept quantity per investor profile and save to ``out_path``."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    if quantity == "learning_value":
        ax.plot([r["value"] for r in rows], [r["value_of_learning"] for r in rows],
                color="black")
        ax.set_ylabel("value of learning (per year)")
    else:
        ycol = "p_mod" if axis == "lambda" else "lower_weight"
        profiles = []
        for r in rows:
            if r["profile"] not in profiles:
                profiles.append(r["profile"])
        for i, prof in enumerate(profiles):
            sub = [r for r in rows if r["profile"] == prof]
            xs = [r["value"] for r in sub]
            ys = [r[ycol] for r in sub]
            if all(v == "" for v in ys):
                continue
            ax.plot(xs, ys, _STYLES[i % len(_STYLES)], color="black", label=prof)
        ax.set_ylabel("modified probability" if ycol == "p_mod"
                      else "weight on lower Merton fraction")
        if len(profiles) > 1:
            ax.legend(frameon=False)
    ax.set_xlabel(axis)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def render_backtest(path_obj, out_path) -> None:
    """Three stacked panels: volatility estimate, Y path, fractions."""
    fig, axes = plt.subplots(3, 1, figsize=(8, 9), sharex=True)
    dates = path_obj.dates
    axes[0].plot(dates, path_obj.sigma_hat, color="black")
    axes[0].set_ylabel("rolling volatility")
    axes[1].plot(dates, path_obj.y, color="black")
    axes[1].set_ylabel("Y(t)")
    axes[2].plot(dates, path_obj.kappa_learning, color="black", label="learning")
    for i, (label, arr) in enumerate(path_obj.kappa_naive.items()):
        axes[2].plot(dates, arr, _STYLES[(i + 1) % len(_STYLES)], color="gray",
                     label=label)
    if path_obj.kappa_ambiguity is not None:
        axes[2].plot(dates, path_obj.kappa_ambiguity, "-.", color="black",
                     label="ambiguity")
    axes[2].set_ylabel("fraction of wealth")
    axes[2].legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
