"""Figure construction from benchmark CSV files.

Rendering never recomputes results: every plotted point is an aggregate of
rows already present in the input CSV, and the same point set can be dumped
as JSON for exact verification.
"""

from __future__ import annotations

import csv
import json
import sys
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

FIGURE_KINDS = ("rmse_vs_m", "lipschitz_scatter", "runtime_bars", "overparam_compare")

BENCH_COLUMNS = (
    "scenario", "method", "k_factor", "m", "trial", "seed",
    "rmse", "kl", "crb", "runtime_s", "iterations", "converged", "success",
)
SCAN_COLUMNS = ("p", "k", "l_a_exact", "l_a_approx", "l_w_exact", "l_w_approx")


class SchemaError(ValueError):
    """The input CSV does not match the benchmark contract."""


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    csv_path: str
    out_path: str
    dump_points: str | None = None
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}; expected one of {FIGURE_KINDS}")


def _read_csv(path, required) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: empty CSV, no header row")
        missing = [c for c in required if c not in reader.fieldnames]
        if missing:
            raise SchemaError(f"{path}: missing column {missing[0]!r}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def _label(row) -> str:
    factor = float(row["k_factor"])
    tag = f"{factor:g}"
    return f"{row['method']}x{tag}"


def _mean(values):
    return float(np.mean(values)) if values else None


def _bench_series(rows, value_column, successful_only):
    """Per-(method, k_factor) series of mean value_column against m."""
    m_values = sorted({int(r["m"]) for r in rows})
    labels = sorted({_label(r) for r in rows})
    series = []
    for label in labels:
        ys = []
        for m in m_values:
            cell = [
                float(r[value_column])
                for r in rows
                if _label(r) == label and int(r["m"]) == m
                and (not successful_only or r["success"] == "true")
                and np.isfinite(float(r[value_column]))
            ]
            if not cell:
                print(
                    f"warning: no successful trials for {label} at m={m}; plotted as a gap",
                    file=sys.stderr,
                )
            ys.append(_mean(cell))
        series.append({"label": label, "x": m_values, "y": ys})
    return series


def _crb_series(rows):
    m_values = sorted({int(r["m"]) for r in rows})
    ys = []
    for m in m_values:
        vals = {float(r["crb"]) for r in rows if int(r["m"]) == m}
        ys.append(float(sorted(vals)[0]) if vals else None)
    return {"label": "crb", "x": m_values, "y": ys}


def extract_series(spec: FigureSpec) -> list[dict]:
    """The exact point sets a figure plots, independent of any styling."""
    if spec.kind == "rmse_vs_m":
        rows = _read_csv(spec.csv_path, BENCH_COLUMNS)
        return _bench_series(rows, "rmse", successful_only=True) + [_crb_series(rows)]
    if spec.kind == "overparam_compare":
        rows = _read_csv(spec.csv_path, BENCH_COLUMNS)
        return _bench_series(rows, "rmse", successful_only=True)
    if spec.kind == "runtime_bars":
        rows = _read_csv(spec.csv_path, BENCH_COLUMNS)
        return _bench_series(rows, "runtime_s", successful_only=False)
    if spec.kind == "lipschitz_scatter":
        rows = _read_csv(spec.csv_path, SCAN_COLUMNS)
        return [
            {
                "label": "amplitude",
                "x": [float(r["l_a_exact"]) for r in rows],
                "y": [float(r["l_a_approx"]) for r in rows],
            },
            {
                "label": "frequency",
                "x": [float(r["l_w_exact"]) for r in rows],
                "y": [float(r["l_w_approx"]) for r in rows],
            },
        ]
    raise SchemaError(f"unknown figure kind {spec.kind!r}")


def _as_float_array(ys):
    return np.array([np.nan if y is None else y for y in ys], dtype=float)


def _render_lines(series, log_y, ylabel, out_path):
    fig, ax = plt.subplots(figsize=(7, 5))
    for entry in series:
        style = {"linestyle": "--", "color": "black"} if entry["label"] == "crb" else {}
        ax.plot(entry["x"], _as_float_array(entry["y"]), marker="o", label=entry["label"], **style)
    if log_y:
        ax.set_yscale("log")
    ax.set_xlabel("samples m")
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def _render_scatter(series, out_path):
    fig, axes = plt.subplots(1, 2, figsize=(11, 5))
    for ax, entry in zip(axes, series):
        ax.scatter(entry["x"], entry["y"], s=12, alpha=0.6)
        lo = min(min(entry["x"]), min(entry["y"]))
        hi = max(max(entry["x"]), max(entry["y"]))
        ax.plot([lo, hi], [lo, hi], "k--", linewidth=1)
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel(f"exact {entry['label']} constant")
        ax.set_ylabel(f"approximate {entry['label']} constant")
        ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def _render_bars(series, out_path):
    fig, ax = plt.subplots(figsize=(7, 5))
    m_values = series[0]["x"] if series else []
    width = 0.8 / max(1, len(series))
    base = np.arange(len(m_values), dtype=float)
    for i, entry in enumerate(series):
        ax.bar(base + i * width, _as_float_array(entry["y"]), width, label=entry["label"])
    ax.set_xticks(base + 0.4 - width / 2)
    ax.set_xticklabels([str(m) for m in m_values])
    ax.set_xlabel("samples m")
    ax.set_ylabel("mean runtime (s)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def render(spec: FigureSpec) -> list[dict]:
    """Render the figure, optionally dump its point sets, return the points."""
    series = extract_series(spec)
    if spec.kind in ("rmse_vs_m", "overparam_compare"):
        _render_lines(series, log_y=(spec.kind == "rmse_vs_m"), ylabel="rmse", out_path=spec.out_path)
    elif spec.kind == "runtime_bars":
        _render_bars(series, spec.out_path)
    else:
        _render_scatter(series, spec.out_path)
    if spec.dump_points:
        payload = {"figure": spec.kind, "series": series}
        with open(spec.dump_points, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2)
            fh.write("\n")
    return series
