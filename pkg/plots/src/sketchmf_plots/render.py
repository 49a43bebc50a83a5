"""Render sketchmf convergence CSVs into log-scale figures.

Reads the CSV emitted by ``sketchmf run``/``sketchmf compare`` (one row per
recorded Krylov dimension, optional leading ``series`` column) and draws a
semilog-y error plot, one curve per series and error column.  If a
diagnostics JSON is supplied, a second panel scatters the sketched Ritz
values together with the resolvent poles of the final quadrature rule, which
makes node/eigenvalue near-collisions visible at a glance.

Usage:
    sketchmf-plot --csv curve.csv --out curve.png
    sketchmf-plot --csv curve.csv --diagnostics curve.json \
        --out curve.pdf --title "conv-diff n=32"

Rendering is read-only: only the output image is written.
"""

import argparse
import csv
import json
import sys

import matplotlib

matplotlib.use("Agg")  # batch output only, never a display

import matplotlib.pyplot as plt
import numpy as np

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_IO = 4

#: columns drawn as curves, with display labels and line styles
CURVE_COLUMNS = [
    ("error_vs_exact", "error", "-"),
    ("error_estimate", "estimate", "--"),
    ("best_approx_error", "best approx", ":"),
]


class SchemaError(ValueError):
    """CSV header does not match the documented schema."""


def _parse_float(text):
    if text is None or text == "":
        return None
    return float(text)


def read_curves(csv_path):
    """Parse the convergence CSV into {series_label: {column: array}}.

    The ``m`` column is required, along with at least one of the error
    columns; anything else missing from the header is reported as a
    SchemaError listing the missing columns.  Missing *values* (empty
    cells) are tolerated and simply skipped when plotting.
    """
    with open(csv_path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = []
        if "m" not in header:
            missing.append("m")
        if not any(col in header for col, _, _ in CURVE_COLUMNS):
            missing.extend(col for col, _, _ in CURVE_COLUMNS)
        if missing:
            raise SchemaError(
                f"{csv_path}: missing required columns: {', '.join(missing)}")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{csv_path}: no data rows")

    series = {}
    for row in rows:
        label = row.get("series", "") or ""
        bucket = series.setdefault(label, {"m": []})
        bucket["m"].append(int(row["m"]))
        for col, _, _ in CURVE_COLUMNS:
            if col in header:
                bucket.setdefault(col, []).append(_parse_float(row[col]))
    return series


def _plot_curves(ax, series, header_warned):
    for label, bucket in series.items():
        m = np.asarray(bucket["m"])
        for col, nice, style in CURVE_COLUMNS:
            if col not in bucket:
                if col not in header_warned:
                    print(f"warning: column {col!r} missing; curve omitted",
                          file=sys.stderr)
                    header_warned.add(col)
                continue
            vals = np.array([np.nan if v is None else v for v in bucket[col]])
            if not np.isfinite(vals).any():
                continue
            name = f"{label} {nice}".strip()
            ax.semilogy(m, vals, style, label=name)
    ax.set_xlabel("Krylov dimension m")
    ax.set_ylabel("relative error")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()


def _plot_diagnostics(ax, diag):
    ritz = np.asarray(diag.get("ritz_values", []), dtype=float)
    nodes = np.asarray(diag.get("quad_nodes", []), dtype=float)
    if ritz.size:
        ax.scatter(ritz[:, 0], ritz[:, 1], marker="x", s=30,
                   label="sketched Ritz values")
    if nodes.size:
        ax.scatter(nodes[:, 0], nodes[:, 1], marker=".", s=15,
                   label="quadrature poles")
    re_all = np.concatenate([p[:, 0] for p in (ritz, nodes) if p.size])
    if re_all.size and np.abs(re_all).max() > 1e3 * max(
            np.abs(ritz[:, 0]).max() if ritz.size else 1.0, 1.0):
        # far-out resolvent poles would squash the Ritz cluster
        ax.set_xscale("symlog")
    ax.set_xlabel("Re")
    ax.set_ylabel("Im")
    eps = diag.get("eps_hat")
    if eps is not None:
        ax.set_title(f"eps_hat = {eps:.3g}")
    ax.grid(True, alpha=0.3)
    ax.legend()


def render(csv_path, out_path, json_path=None, title=None):
    """Render csv_path (plus optional diagnostics) to out_path.

    Returns the matplotlib Figure (useful for inspection in tests).
    """
    series = read_curves(csv_path)
    diag = None
    if json_path is not None:
        with open(json_path) as fh:
            diag = json.load(fh)

    n_panels = 2 if diag is not None else 1
    fig, axes = plt.subplots(1, n_panels, figsize=(6 * n_panels, 4.5))
    axes = np.atleast_1d(axes)
    _plot_curves(axes[0], series, header_warned=set())
    if diag is not None:
        _plot_diagnostics(axes[1], diag)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(out_path)
    return fig


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="sketchmf-plot",
        description="Plot sketchmf convergence CSVs (semilog-y) and "
                    "diagnostics scatter.")
    parser.add_argument("--csv", required=True, help="convergence CSV path")
    parser.add_argument("--diagnostics", default=None,
                        help="diagnostics JSON path (adds a scatter panel)")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--title", default=None, help="figure title")
    args = parser.parse_args(argv)
    try:
        fig = render(args.csv, args.out, json_path=args.diagnostics,
                     title=args.title)
        plt.close(fig)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
