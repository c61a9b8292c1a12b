"""Result serialization and figure rendering for the CLI.

CSV is the machine-readable contract: every numeric cell is rendered
with 12 significant digits so identical runs produce identical bytes.
Figures are rendered next to the delimited output as PNG files; they
carry the same numbers and exist for quick visual inspection only.

Files are written atomically (temp file + rename) so partial runs never
leave a truncated report behind.
"""

from __future__ import annotations

import csv
import io
import json
import os
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402


def fmt(value) -> str:
    """Fixed 12-significant-digit rendering for reproducible CSV bytes."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.12g}"
    return str(value)


def atomic_write_text(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def write_csv(path: Path, header, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(cell) for cell in row])
    atomic_write_text(path, buf.getvalue())


def _json_default(obj):
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def write_json(path: Path, payload) -> None:
    atomic_write_text(
        path, json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n"
    )


def bound_report_rows(report, param_names) -> list[list]:
    """Flatten a BoundCheckReport into the shared bounds CSV layout."""
    rows = []
    for row in report.rows:
        rows.append(
            [report.name]
            + [row.params.get(name) for name in param_names]
            + [row.exact, row.coupling, row.certificate, row.margin, row.passed]
        )
    return rows


def save_figure(fig, path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def figure_capacity(block_reports, sir_reports, sir_combined, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    bs = [r.horizon for r in block_reports]
    vals = [r.bits for r in block_reports]
    ax.plot(bs, vals, "o-", label="exact block MI (1/b) I(X^b;Y^b)")
    if sir_reports:
        ax.axhline(sir_combined.bits, color="C1", label="SIR estimate")
        if sir_combined.stderr:
            lo = sir_combined.bits - 3 * sir_combined.stderr
            hi = sir_combined.bits + 3 * sir_combined.stderr
            ax.axhspan(lo, hi, color="C1", alpha=0.2, label="SIR +/- 3 stderr")
    ax.set_xlabel("block size b")
    ax.set_ylabel("bits per channel use")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    save_figure(fig, path)


def figure_mixing(report, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    ts = [row.params["t"] for row in report.rows]
    exact = [max(row.exact, 1e-300) for row in report.rows]
    bound = [max(row.certificate, 1e-300) for row in report.rows]
    ax.semilogy(ts, exact, "o-", ms=3, label="exact max TV to stationarity")
    ax.semilogy(ts, bound, "--", label="certificate bound")
    ax.set_xlabel("steps t")
    ax.set_ylabel("total variation")
    bottom = max(min(exact), 1e-18)
    ax.set_ylim(bottom=bottom * 0.5)
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    save_figure(fig, path)


def figure_blocked_tv(reports, path: Path) -> None:
    """Exact TV vs decimation factor with both bounds, one line per (b, n)."""
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    groups: dict[tuple[int, int], dict[int, list]] = {}
    for rep in reports:
        for row in rep.rows:
            key = (row.params["b"], row.params["n"])
            groups.setdefault(key, {}).setdefault(row.params["d"], []).append(row)
    for (b, n), by_d in sorted(groups.items()):
        ds = sorted(by_d)
        worst = [max(r.exact for r in by_d[d]) for d in ds]
        coup = [by_d[d][0].coupling for d in ds]
        ax.semilogy(ds, [max(v, 1e-18) for v in worst], "o-", label=f"exact b={b} n={n}")
        ax.semilogy(ds, [max(v, 1e-18) for v in coup], "--", alpha=0.6)
    ax.set_xlabel("decimation factor d (dashed: coupling bound)")
    ax.set_ylabel("worst-case TV over inputs")
    ax.legend(fontsize=7)
    ax.grid(alpha=0.3)
    save_figure(fig, path)


def figure_protocol(summaries, path: Path) -> None:
    """BER with 3-sigma bars across a parameter sweep (or a single run)."""
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    labels = [s["label"] for s in summaries]
    bers = [s["ber"] for s in summaries]
    errs = [3 * s["stderr"] for s in summaries]
    ax.errorbar(range(len(labels)), bers, yerr=errs, fmt="o", capsize=4)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, fontsize=8)
    ax.set_ylabel("bit error rate (3 sigma bars)")
    ax.grid(alpha=0.3)
    save_figure(fig, path)


def figure_rate_gap(rows, path: Path) -> None:
    """Interleaved-vs-blocked rate gap trend across m for each (r, h)."""
    fig, ax = plt.subplots(figsize=(5.5, 3.5))
    series: dict[tuple[int, int], list[tuple[int, float]]] = {}
    for r, m, h, gap in rows:
        series.setdefault((r, h), []).append((m, gap))
    for (r, h), pts in sorted(series.items()):
        pts.sort()
        ax.plot([p[0] for p in pts], [p[1] for p in pts], "o-", ms=3, label=f"r={r} h={h}")
    ax.set_xlabel("m")
    ax.set_ylabel("rate gap (interleaved - blocked)")
    ax.legend(fontsize=7, ncol=2)
    ax.grid(alpha=0.3)
    save_figure(fig, path)
