"""Result files: delimited output plus optional rendered figures.

CSV files carry the run manifest as `#` comment lines (schema version,
subcommand, resolved config) so every result states exactly how to
reproduce it.  Numbers are written with repr, which round-trips floats
exactly and keeps output byte-identical for identical manifests.  Figure
rendering is optional and lives behind lazy matplotlib imports so the CSV
path stays light.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .experiment import BoundReport, DetectorCurve, RegretTrace

REGRET_SCHEMA = "regret-trace v1"
DETECTOR_SCHEMA = "detector-curve v1"
BOUND_SCHEMA = "bound-check v1"


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_csv(path, comments, header, rows) -> None:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def write_regret_csv(path, trace: RegretTrace, comments) -> None:
    header = [
        "slot",
        "centralized_cum",
        "asa_cum_mean",
        "regret_mean",
        "regret_stderr",
        "good_frac",
    ]
    rows = zip(
        trace.slots,
        trace.centralized_cum,
        trace.asa_cum_mean,
        trace.regret_mean,
        trace.regret_stderr,
        trace.good_frac,
    )
    write_csv(path, [f"schema = {REGRET_SCHEMA}", *comments], header, rows)


def _fit_comment(name, fit) -> str:
    if fit is None:
        return f"{name} = insufficient positive points"
    return (
        f"{name} = slope {fit.slope!r} intercept {fit.intercept!r} "
        f"r_squared {fit.r_squared!r} points {fit.points}"
    )


def write_detector_csv(path, curve: DetectorCurve, comments) -> None:
    header = [
        "L",
        "trials",
        "fa_rate",
        "fa_lo95",
        "fa_hi95",
        "md_rate",
        "md_lo95",
        "md_hi95",
        "h0_mean",
        "h1_mean",
    ]
    rows = [
        (
            curve.lengths[j],
            curve.trials,
            curve.fa[j],
            curve.fa_ci[j, 0],
            curve.fa_ci[j, 1],
            curve.md[j],
            curve.md_ci[j, 0],
            curve.md_ci[j, 1],
            curve.h0_mean[j],
            curve.h1_mean[j],
        )
        for j in range(len(curve.lengths))
    ]
    fit_lines = [_fit_comment("fa_fit", curve.fa_fit), _fit_comment("md_fit", curve.md_fit)]
    write_csv(path, [f"schema = {DETECTOR_SCHEMA}", *comments, *fit_lines], header, rows)


def write_bound_csv(path, report: BoundReport, comments) -> None:
    header = [
        "period",
        "length",
        "end_slot",
        "regret_mean",
        "regret_stderr",
        "pie",
        "bound_mean",
        "bound_stderr",
        "margin",
        "holds",
    ]
    rows = zip(
        report.period,
        report.length,
        report.end_slot,
        report.regret_mean,
        report.regret_stderr,
        report.pie,
        report.bound_mean,
        report.bound_stderr,
        report.margin,
        report.holds,
    )
    write_csv(path, [f"schema = {BOUND_SCHEMA}", *comments], header, rows)


def figure_path(out_path) -> Path:
    return Path(out_path).with_suffix(".png")


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_regret_figure(path, trace: RegretTrace) -> None:
    plt = _plt()
    fig, (ax_r, ax_g) = plt.subplots(
        2, 1, sharex=True, figsize=(7.0, 6.0), height_ratios=[2, 1]
    )
    band = 1.96 * trace.regret_stderr
    ax_r.plot(trace.slots, trace.regret_mean, color="tab:blue", lw=1.5, label="mean regret")
    ax_r.fill_between(
        trace.slots,
        trace.regret_mean - band,
        trace.regret_mean + band,
        color="tab:blue",
        alpha=0.2,
        label="95% CI",
    )
    ax_r.set_ylabel("cumulative regret")
    ax_r.legend(loc="lower right")
    ax_r.set_title(f"{trace.runs} runs, horizon {trace.horizon}")
    ax_g.plot(trace.slots, trace.good_frac, color="tab:green", lw=1.2)
    ax_g.set_ylim(-0.02, 1.02)
    ax_g.set_ylabel("good-config fraction")
    ax_g.set_xlabel("slot")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_detector_figure(path, curve: DetectorCurve) -> None:
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    for name, rate, ci, fit, color in (
        ("false alarm", curve.fa, curve.fa_ci, curve.fa_fit, "tab:blue"),
        ("miss detection", curve.md, curve.md_ci, curve.md_fit, "tab:red"),
    ):
        shown = np.where(rate > 0, rate, np.nan)
        yerr = np.vstack(
            [np.clip(rate - ci[:, 0], 0, None), np.clip(ci[:, 1] - rate, 0, None)]
        )
        ax.errorbar(
            curve.lengths, shown, yerr=yerr, fmt="o", color=color, label=name, capsize=3
        )
        if fit is not None:
            xs = np.linspace(curve.lengths[0], curve.lengths[-1], 100)
            ax.plot(xs, np.exp(fit.intercept + fit.slope * xs), "--", color=color, lw=1)
    ax.set_yscale("log")
    ax.set_xlabel("detection period length (slots)")
    ax.set_ylabel("error rate")
    ax.set_title(
        f"eta {curve.eta:.3f}, occupant rate {curve.occupant_rate}, "
        f"epsilon {curve.epsilon}, {curve.trials} trials"
    )
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_bound_figure(path, report: BoundReport) -> None:
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    ax.plot(report.period, report.regret_mean, "o-", label="measured regret", lw=1.5)
    ax.plot(
        report.period,
        report.bound_mean,
        "s--",
        label="cumulative period bound",
        lw=1.5,
        color="tab:orange",
    )
    ax.set_xlabel("detection period")
    ax.set_ylabel("cumulative count at period end")
    ax.set_title(f"{report.runs} runs")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
