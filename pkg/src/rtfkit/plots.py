"""
Plot data and figures for an experiment report.

Tabular files are whitespace separated with a ``#`` header line, so gnuplot
reads them directly (``plot 'grid_tau50ms.dat' using 1:2``). SVGs are drawn
with matplotlib.
"""

from pathlib import Path

import numpy as np

__all__ = ["emit_plots", "tau_tag", "snr_tag"]


def tau_tag(tau):
    return f"tau{tau * 1000:g}ms"


def snr_tag(snr):
    return f"snr{snr:+g}dB"


def _grid_table(report, tau):
    ests = report.estimators
    snrs = sorted({r["snr_db"] for r in report.rows if r["tau_y"] == tau})
    table = np.full((len(snrs), 1 + 2 * len(ests)), np.nan)
    for i, snr in enumerate(snrs):
        table[i, 0] = snr
        for j, e in enumerate(ests):
            rows = report.select(tau_y=tau, snr_db=snr, estimator=e)
            if rows:
                table[i, 1 + j] = rows[0]["mean_angle"]
                table[i, 1 + len(ests) + j] = rows[0]["delta_snr"]
    header = ["snr_db"] + [f"theta_{e}" for e in ests] + [f"dsnr_{e}" for e in ests]
    return header, table


def _write_dat(path, header, table):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# " + " ".join(header) + "\n")
        for row in table:
            fh.write(" ".join("nan" if np.isnan(v) else repr(float(v)) for v in row) + "\n")


def emit_plots(report, out_dir, svg=True, trace_key=None):
    """Write plot data (and SVGs) for ``report`` into ``out_dir``.

    One ``grid_<tau>.dat`` per tau_y (rows = input SNR, columns = mean angle
    and delta SNR per estimator) and one ``trace_<tau>_<snr>.dat`` per stored
    per-frame trace. Returns the list of written paths.
    """
    if not report.rows:
        raise ValueError("cannot plot an empty report")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    tables = {}
    for tau in report.tau_grid:
        header, table = _grid_table(report, tau)
        tables[tau] = table
        path = out / f"grid_{tau_tag(tau)}.dat"
        _write_dat(path, header, table)
        written.append(path)
    for (tau, snr), trace in sorted(report.traces.items()):
        names = list(trace)
        frames = len(next(iter(trace.values()))) if trace else 0
        table = np.column_stack([np.arange(frames)] + [trace[n] for n in names])
        path = out / f"trace_{tau_tag(tau)}_{snr_tag(snr)}.dat"
        _write_dat(path, ["frame", *names], table)
        written.append(path)
    if svg:
        written += _draw(report, tables, out, trace_key)
    return written


def _draw(report, tables, out, trace_key):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    # fixed ids and no date keep the SVG bytes reproducible
    matplotlib.rcParams["svg.hashsalt"] = "rtfkit"
    # keep labels as text elements
    matplotlib.rcParams["svg.fonttype"] = "none"
    meta = {"Date": None}
    ests = report.estimators
    taus = report.tau_grid
    paths = []
    for kind, col0, ylabel, name in (
            ("theta", 1, "mean Hermitian angle [rad]", "fig_angle.svg"),
            ("dsnr", 1 + len(ests), "SNR improvement [dB]", "fig_delta_snr.svg")):
        fig, axes = plt.subplots(1, len(taus), figsize=(3.2 * len(taus), 3.2),
                                 sharey=True, squeeze=False)
        for ax, tau in zip(axes[0], taus):
            t = tables[tau]
            for j, e in enumerate(ests):
                ax.plot(t[:, 0], t[:, col0 + j], marker="o", label=e)
            ax.set_title(f"tau_y = {tau * 1000:g} ms")
            ax.set_xlabel("input SNR [dB]")
            ax.grid(True, alpha=0.3)
        axes[0, 0].set_ylabel(ylabel)
        axes[0, -1].legend(fontsize="small")
        fig.tight_layout()
        fig.savefig(out / name, format="svg", metadata=meta)
        plt.close(fig)
        paths.append(out / name)
    if report.traces:
        key = trace_key if trace_key in report.traces else sorted(report.traces)[0]
        trace = report.traces[key]
        fig, ax = plt.subplots(figsize=(6, 3.2))
        for e, v in trace.items():
            n = min(len(v), 100)
            ax.plot(np.arange(n), v[:n], label=e)
        ax.set_title(f"tau_y = {key[0] * 1000:g} ms, input SNR = {key[1]:g} dB")
        ax.set_xlabel("frame")
        ax.set_ylabel("Hermitian angle [rad]")
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize="small")
        fig.tight_layout()
        fig.savefig(out / "fig_trace.svg", format="svg", metadata=meta)
        plt.close(fig)
        paths.append(out / "fig_trace.svg")
    return paths
