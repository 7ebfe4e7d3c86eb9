#!/usr/bin/env python3
"""Figures from lrdyn CSV output.

usage: plot.py DIR [--show]

For every <prefix>.json summary in DIR the matching CSV is plotted by
experiment kind; PNGs land next to the CSVs.
"""

import argparse
import json
import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402


def convergence(df, ax, label=""):
    ax.semilogy(df["L"], df["gap"].clip(lower=1e-17), "o-", label=label or None)
    ax.set_xlabel("L")
    ax.set_ylabel("|full - effective|")
    ax.set_xticks(sorted(df["L"].unique()))


def plot_converge(df, title):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    convergence(df, ax)
    ax.set_title(title)
    return fig


def plot_mixture(df, title):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    for fiber, part in df.groupby(df["fiber"].astype(str)):
        convergence(part, ax, "mixed" if fiber == "mixed" else f"fiber {fiber}")
    ax.legend()
    ax.set_title(title)
    return fig


def plot_flow(df, title):
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for col in df.columns:
        if col.endswith(".re"):
            base = col[:-3]
            ax.plot(df["t"], df[col], label=f"Re {base}")
            ax.plot(df["t"], df[base + ".im"], "--", label=f"Im {base}")
    ax.set_xlabel("t")
    ax.legend(fontsize="small")
    ax.set_title(title)
    return fig


def plot_simulate(df, title):
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for L, part in df.groupby("L"):
        ax.plot(part["t"], part["re"], label=f"Re, L={L}")
        ax.plot(part["t"], part["im"], "--", label=f"Im, L={L}")
    ax.set_xlabel("t")
    ax.legend(fontsize="small")
    ax.set_title(title)
    return fig


def plot_lrbound(df, title):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.hist(df["ratio"], bins=30)
    ax.axvline(1.0, color="k", lw=0.8)
    ax.set_xlabel("lhs / rhs")
    ax.set_ylabel("draws")
    ax.set_title(title)
    return fig


def plot_density(df, title):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.loglog(df["L"] * 2 + 1, df["gap"].clip(lower=1e-17), "o-", label="energy density gap")
    ax.loglog(df["L"] * 2 + 1, df["ergodicity_defect"], "s-", label="ergodicity defect")
    ax.set_xlabel("2L + 1")
    ax.legend()
    ax.set_title(title)
    return fig


PLOTTERS = {
    "converge": plot_converge,
    "mixture": plot_mixture,
    "selfconsistent": plot_flow,
    "simulate": plot_simulate,
    "lrbound": plot_lrbound,
    "density": plot_density,
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("dir", type=pathlib.Path)
    ap.add_argument("--show", action="store_true")
    args = ap.parse_args()

    summaries = sorted(args.dir.glob("*.json"))
    if not summaries:
        ap.error(f"no summaries in {args.dir}")
    for path in summaries:
        summary = json.loads(path.read_text())
        plot = PLOTTERS.get(summary.get("experiment"))
        if plot is None or not summary.get("csv"):
            continue
        csv = args.dir / summary["csv"][0]
        fig = plot(pd.read_csv(csv), summary["name"])
        fig.tight_layout()
        out = csv.with_suffix(".png")
        fig.savefig(out, dpi=150)
        print(out)
        if args.show:
            plt.show()
        plt.close(fig)


if __name__ == "__main__":
    main()
