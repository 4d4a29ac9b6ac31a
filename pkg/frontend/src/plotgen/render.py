"""Render sweep-result panels from the simulator's CSV output.

The input is the 11-column results file the simulator writes, one row per
(sweep value, scheme, realization).  A panel selects the rows of one sweep
variable and draws worst-case illumination (dBm) against the swept value,
one line per scheme: the median across realizations, with the interquartile
range shaded.  Rows with status `infeasible` carry no metrics and are
dropped; the panel footnote reports how many were.

The file is consumed purely as text, so this tool has no dependency on the
simulator package itself.
"""

import argparse
import csv
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

EXPECTED_HEADER = (
    "sweep_var", "sweep_value", "scheme", "realization", "wc_illum_dbm",
    "min_sinr_db", "max_tgt_noise_dbm", "pris_dbm", "thm1_bound_dbm",
    "iterations", "status",
)

PANELS = ("pt", "eta", "L", "gamma")

X_LABELS = {
    "pt": "transmit power per antenna (dB)",
    "eta": "amplification gain (dB)",
    "L": "active elements",
    "gamma": "SINR floor (dB)",
}

# canonical draw order; any scheme name outside this list is appended
# alphabetically so an unknown producer still plots
SCHEME_ORDER = ("hybrid", "passive", "random", "noris")
SCHEME_LABELS = {
    "hybrid": "hybrid RIS",
    "passive": "passive RIS",
    "random": "random phases",
    "noris": "no RIS",
}

AGG_HEADER = "panel,sweep_value,scheme,n,median_dbm,q1_dbm,q3_dbm,excluded_rows"


class SchemaError(Exception):
    """The CSV does not conform to the results schema."""


class NoDataError(Exception):
    """Schema fine, but nothing to plot."""


@dataclass(frozen=True)
class Row:
    sweep_var: str
    sweep_value: float
    scheme: str
    realization: int
    wc_illum_dbm: float
    status: str


@dataclass(frozen=True)
class Aggregate:
    sweep_value: float
    scheme: str
    n: int
    median: float
    q1: float
    q3: float


def load_rows(path):
    """Parse the results CSV, checking the header and every field."""
    with open(path, newline="", encoding="ascii") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file, expected header "
                              + ",".join(EXPECTED_HEADER)) from None
        if tuple(header) != EXPECTED_HEADER:
            missing = [c for c in EXPECTED_HEADER if c not in header]
            extra = [c for c in header if c not in EXPECTED_HEADER]
            parts = [f"{path}: header does not match the results schema"]
            if missing:
                parts.append("missing columns: " + ", ".join(missing))
            if extra:
                parts.append("unexpected columns: " + ", ".join(extra))
            if not missing and not extra:
                parts.append("columns out of order: got " + ", ".join(header))
            raise SchemaError("; ".join(parts))
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(EXPECTED_HEADER):
                raise SchemaError(f"{path}:{lineno}: expected "
                                  f"{len(EXPECTED_HEADER)} fields, got {len(rec)}")
            try:
                rows.append(Row(rec[0], float(rec[1]), rec[2], int(rec[3]),
                                float(rec[4]), rec[10]))
            except ValueError as exc:
                raise SchemaError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise NoDataError(f"{path}: no data rows")
    return rows


def aggregate(rows, panel):
    """Median and quartiles per (sweep value, scheme) for one panel.

    Returns (aggregates, excluded) where excluded counts the infeasible rows
    that were dropped.  Aggregates are sorted by (sweep value, scheme) so the
    output order never depends on row order in the file.
    """
    if panel not in PANELS:
        raise ValueError(f"panel must be one of {PANELS}, got {panel!r}")
    panel_rows = [r for r in rows if r.sweep_var == panel]
    if not panel_rows:
        have = ", ".join(sorted({r.sweep_var for r in rows}))
        raise NoDataError(f"no data rows for panel {panel!r} (file has: {have})")
    usable = [r for r in panel_rows if r.status != "infeasible"]
    excluded = len(panel_rows) - len(usable)
    if not usable:
        raise NoDataError(f"panel {panel!r}: all {excluded} rows are infeasible")
    groups = {}
    for r in usable:
        groups.setdefault((r.sweep_value, r.scheme), []).append(r.wc_illum_dbm)
    aggs = []
    for (value, scheme), vals in sorted(groups.items()):
        v = np.asarray(vals)
        aggs.append(Aggregate(value, scheme, len(vals), float(np.median(v)),
                              float(np.percentile(v, 25)),
                              float(np.percentile(v, 75))))
    return aggs, excluded


def _scheme_key(scheme):
    if scheme in SCHEME_ORDER:
        return (SCHEME_ORDER.index(scheme), scheme)
    return (len(SCHEME_ORDER), scheme)


def _draw(aggs, excluded, panel, out_dir):
    matplotlib.rcParams["svg.hashsalt"] = "plotgen"
    fig, ax = plt.subplots(figsize=(5.0, 3.6))
    for scheme in sorted({a.scheme for a in aggs}, key=_scheme_key):
        pts = [a for a in aggs if a.scheme == scheme]
        xs = [a.sweep_value for a in pts]
        med = [a.median for a in pts]
        (line,) = ax.plot(xs, med, marker="o", markersize=3.5,
                          label=SCHEME_LABELS.get(scheme, scheme))
        ax.fill_between(xs, [a.q1 for a in pts], [a.q3 for a in pts],
                        color=line.get_color(), alpha=0.18, linewidth=0)
    ax.set_xlabel(X_LABELS[panel])
    ax.set_ylabel("worst-case illumination (dBm)")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    if excluded:
        fig.text(0.01, 0.01, f"{excluded} infeasible row(s) excluded",
                 fontsize=7, color="0.35")
    fig.tight_layout()
    out = Path(out_dir) / f"panel_{panel}.svg"
    fig.savefig(out, format="svg", metadata={"Date": None})
    plt.close(fig)
    return out


def write_aggregates(aggs, excluded, panel, path):
    """Emit the plotted aggregates; float fields use repr so they round-trip."""
    lines = [AGG_HEADER]
    for a in aggs:
        lines.append(f"{panel},{a.sweep_value!r},{a.scheme},{a.n},"
                     f"{a.median!r},{a.q1!r},{a.q3!r},{excluded}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def render(csv_path, out_dir, panel, dump_path=None):
    """Full pipeline for one panel; returns the path of the written image."""
    rows = load_rows(csv_path)
    aggs, excluded = aggregate(rows, panel)
    out = _draw(aggs, excluded, panel, out_dir)
    if dump_path is not None:
        write_aggregates(aggs, excluded, panel, dump_path)
    return out


def build_parser():
    ap = argparse.ArgumentParser(
        prog="plotgen",
        description="Draw median/IQR sweep panels from simulator result CSVs.")
    ap.add_argument("--csv", required=True, help="results CSV from the simulator")
    ap.add_argument("--panel", required=True, choices=PANELS,
                    help="which sweep variable to plot")
    ap.add_argument("--out", required=True, help="directory for the SVG")
    ap.add_argument("--dump-aggregates", metavar="PATH", default=None,
                    help="also write the plotted medians/quartiles as CSV")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        rows = load_rows(args.csv)
        aggs, excluded = aggregate(rows, args.panel)
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        out = _draw(aggs, excluded, args.panel, out_dir)
        if args.dump_aggregates is not None:
            write_aggregates(aggs, excluded, args.panel, args.dump_aggregates)
        note = f", {excluded} infeasible rows excluded" if excluded else ""
        print(f"wrote {out}: {len(aggs)} aggregate points{note}")
        return 0
    except (SchemaError, NoDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
