"""CSV files and a plot script for the convergence, power and run-time figures.

Every CSV starts with a ``# <name> v1`` line followed by the column header.
Numbers are written with ``repr`` so a fixed seed gives byte-identical files,
except for the timing columns.
"""
from __future__ import annotations

import csv
import io
import os

import numpy as np

from .experiment import ExperimentReport, power_to_dbm

FIG2 = "fig2_convergence.csv"
FIG3 = "fig3_power_vs_ns.csv"
FIG4 = "fig4_runtime_vs_ns.csv"
RAW = "realizations.csv"
PLOT_SCRIPT = "plot_figures.py"

FIG2_COLUMNS = ("iter", "algorithm", "gamma_db", "power_dbm")
FIG3_COLUMNS = ("n_s", "gamma_db", "algorithm", "mean_power_dbm", "std_power_dbm", "n_used",
                "failures", "excluded")
FIG4_COLUMNS = ("n_s", "gamma_db", "algorithm", "mean_time_s", "std_time_s", "mean_iterations", "n_used")
RAW_COLUMNS = ("n_s", "gamma_db", "realization", "algorithm", "digest", "status", "power_dbm",
               "iterations", "converged", "modulus_gap", "solve_time_s")
# excluded from the determinism check
TIMING_COLUMNS = {"mean_time_s", "std_time_s", "solve_time_s"}


def _fmt(v):
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _csv(name: str, columns, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# {name} v1\n")
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(columns)
    for row in rows:
        wr.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def convergence_rows(report: ExperimentReport):
    """Mean power per iteration, at the largest swept N_s.

    Runs that stopped early keep their final value for later iterations.
    """
    cfg = report.config
    N_s = max(cfg.ns_values)
    rows = []
    for g in cfg.gamma_db_values:
        for alg in cfg.algorithms:
            traces = [r.trace_power for r in report.paired(N_s, g, alg) if r.trace_power]
            if not traces:
                continue
            n = max(len(t) for t in traces)
            padded = np.array([list(t) + [t[-1]] * (n - len(t)) for t in traces])
            for i, p in enumerate(padded.mean(axis=0)):
                rows.append((i, alg, g, float(power_to_dbm(p))))
    return rows


def fig3_rows(report: ExperimentReport):
    return [(s.N_s, s.gamma_db, s.algorithm, s.mean_power_dbm, s.std_power_dbm, s.n_used,
             s.failures, s.excluded) for s in report.summary()]


def fig4_rows(report: ExperimentReport):
    return [(s.N_s, s.gamma_db, s.algorithm, s.mean_time, s.std_time, s.mean_iterations, s.n_used)
            for s in report.summary()]


def raw_rows(report: ExperimentReport):
    return [(r.N_s, r.gamma_db, r.realization, r.algorithm, r.digest, r.status,
             r.power_dbm, r.iterations, r.converged, r.modulus_gap, r.solve_time)
            for r in report.records]


PLOT_SOURCE = '''"""Plot the figure CSVs written next to this script (requires matplotlib)."""
import csv
import os
import sys

import matplotlib.pyplot as plt

HERE = os.path.dirname(os.path.abspath(__file__))


def read(name):
    with open(os.path.join(HERE, name)) as fh:
        lines = [l for l in fh if not l.startswith("#")]
    return list(csv.DictReader(lines))


def series(rows, x, y, *keys):
    out = {}
    for r in rows:
        if r[y] == "nan":
            continue
        out.setdefault(tuple(r[k] for k in keys), []).append((float(r[x]), float(r[y])))
    return out


def plot(name, x, y, keys, xlabel, ylabel, out, logy=False):
    fig, ax = plt.subplots()
    for key, pts in sorted(series(read(name), x, y, *keys).items()):
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=" ".join(key))
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if logy:
        ax.set_yscale("log")
    ax.grid(True)
    ax.legend()
    fig.savefig(os.path.join(HERE, out), bbox_inches="tight")


if __name__ == "__main__":
    plot("fig2_convergence.csv", "iter", "power_dbm", ("algorithm", "gamma_db"),
         "iteration", "transmit power (dBm)", "fig2_convergence.png")
    plot("fig3_power_vs_ns.csv", "n_s", "mean_power_dbm", ("algorithm", "gamma_db"),
         "N_s", "average transmit power (dBm)", "fig3_power_vs_ns.png")
    plot("fig4_runtime_vs_ns.csv", "n_s", "mean_time_s", ("algorithm", "gamma_db"),
         "N_s", "average solving time (s)", "fig4_runtime_vs_ns.png", logy=True)
    if "--show" in sys.argv:
        plt.show()
'''


def render(report: ExperimentReport) -> dict[str, str]:
    """File name to contents, without touching the disk."""
    if not report.records:
        raise ValueError("the report has no records")
    return {
        FIG2: _csv("fig2_convergence", FIG2_COLUMNS, convergence_rows(report)),
        FIG3: _csv("fig3_power_vs_ns", FIG3_COLUMNS, fig3_rows(report)),
        FIG4: _csv("fig4_runtime_vs_ns", FIG4_COLUMNS, fig4_rows(report)),
        RAW: _csv("realizations", RAW_COLUMNS, raw_rows(report)),
        PLOT_SCRIPT: PLOT_SOURCE,
    }


def emit_figures(report: ExperimentReport, out_dir) -> list[str]:
    """Write the figure CSVs and the plot script; returns the paths written."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for name, text in render(report).items():
        path = os.path.join(out_dir, name)
        with open(path, "w") as fh:
            fh.write(text)
        paths.append(path)
    return paths


def strip_timing(text: str) -> str:
    """Blank the timing columns of a CSV written by :func:`emit_figures`."""
    lines = text.splitlines()
    if len(lines) < 2:
        return text
    header = next(csv.reader([lines[1]]))
    drop = [i for i, c in enumerate(header) if c in TIMING_COLUMNS]
    out = lines[:2]
    for row in csv.reader(lines[2:]):
        out.append(",".join("" if i in drop else v for i, v in enumerate(row)))
    return "\n".join(out)
