"""Autocorrelation panels and update-rate curves from sampler CSV output."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

_FIGURE_DPI = 100
_SAVE_KWARGS = {"dpi": _FIGURE_DPI, "metadata": {"Software": None}}


@dataclass(frozen=True)
class FigureSpec:
    """Input CSVs (one per sampler variant) with labels, plus the target."""

    inputs: tuple  # of (path, label) pairs
    output: str
    variables: tuple = field(default_factory=tuple)


def load_spec(path) -> FigureSpec:
    with open(path) as fh:
        raw = json.load(fh)
    inputs = tuple((entry["path"], entry["label"]) for entry in raw["inputs"])
    if not inputs:
        raise ValueError("the figure spec lists no input files")
    return FigureSpec(inputs, raw["output"], tuple(raw.get("variables", ())))


def _read_csv(path, expected_header):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"input CSV not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != expected_header:
            raise ValueError(
                f"{path}: expected columns {expected_header}, found {header}"
            )
        return list(reader)


def _read_acf(path):
    series = {}
    for variable, lag, value in _read_csv(path, ["variable", "lag", "acf"]):
        series.setdefault(variable, []).append((int(lag), float(value)))
    return {
        variable: [v for _, v in sorted(points)] for variable, points in series.items()
    }


def _read_rates(path):
    rows = [(int(t), float(rate)) for t, rate in _read_csv(path, ["t", "rate"])]
    rates = [rate for _, rate in sorted(rows)]
    bad = [r for r in rates if not 0.0 <= r <= 1.0]
    if bad:
        raise ValueError(f"{path}: update rates outside [0, 1]: {bad[:3]}")
    return rates


def plot_acf(spec: FigureSpec) -> Path:
    """One panel per variable, one autocorrelation curve per variant."""
    if not spec.variables:
        raise ValueError("the figure spec lists no variables")
    data = [(label, _read_acf(path)) for path, label in spec.inputs]
    for label, series in data:
        missing = [v for v in spec.variables if v not in series]
        if missing:
            raise ValueError(f"variant {label!r} lacks variables {missing}")

    n_panels = len(spec.variables)
    fig, axes = plt.subplots(
        1, n_panels, figsize=(4.0 * n_panels, 3.2), squeeze=False, sharey=True
    )
    for ax, variable in zip(axes[0], spec.variables):
        for label, series in data:
            values = series[variable]
            ax.plot(range(len(values)), values, label=label, linewidth=1.2)
        ax.axhline(0.0, color="grey", linewidth=0.6)
        ax.set_title(variable)
        ax.set_xlabel("lag")
    axes[0][0].set_ylabel("autocorrelation")
    axes[0][-1].legend(fontsize=8)
    fig.tight_layout()
    out = Path(spec.output)
    fig.savefig(out, **_SAVE_KWARGS)
    plt.close(fig)
    return out


def plot_update_rates(spec: FigureSpec) -> Path:
    """Per-time update-rate curves, one per variant, on the unit scale."""
    data = [(label, _read_rates(path)) for path, label in spec.inputs]
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    for label, rates in data:
        ax.plot(range(len(rates)), rates, label=label, linewidth=1.2)
    ax.set_xlabel("t")
    ax.set_ylabel("update rate")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(fontsize=8)
    fig.tight_layout()
    out = Path(spec.output)
    fig.savefig(out, **_SAVE_KWARGS)
    plt.close(fig)
    return out
