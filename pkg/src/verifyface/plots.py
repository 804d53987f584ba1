"""CSV and minimal SVG emission for spectra, training curves and sweeps."""
from __future__ import annotations

import csv
import io
import os

import numpy as np


def atomic_write(path, text: str) -> None:
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def format_csv(header, rows) -> str:
    out = [",".join(header)]
    for row in rows:
        out.append(",".join(v if isinstance(v, str) else f"{v:.9g}" for v in row))
    return "\n".join(out) + "\n"


def parse_csv(text: str):
    """Header plus rows with numeric cells converted to float."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    rows = []
    for row in reader:
        parsed = []
        for cell in row:
            try:
                parsed.append(float(cell))
            except ValueError:
                parsed.append(cell)
        rows.append(parsed)
    return header, rows


def svg_polyline(xs, ys, title: str = "", xlabel: str = "", ylabel: str = "",
                 width: int = 800, height: int = 400) -> str:
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    pad = 50
    finite = np.isfinite(ys)
    x0, x1 = (xs.min(), xs.max()) if xs.size else (0.0, 1.0)
    y0, y1 = (ys[finite].min(), ys[finite].max()) if finite.any() else (0.0, 1.0)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    px = pad + (xs - x0) / (x1 - x0) * (width - 2 * pad)
    py = height - pad - (np.where(finite, ys, y0) - y0) / (y1 - y0) * (height - 2 * pad)
    points = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {width} {height}" '
        f'width="{width}" height="{height}">\n'
        f'<rect width="{width}" height="{height}" fill="white"/>\n'
        f'<line x1="{pad}" y1="{height - pad}" x2="{width - pad}" y2="{height - pad}" stroke="black"/>\n'
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height - pad}" stroke="black"/>\n'
        f'<text x="{width / 2}" y="25" text-anchor="middle" font-size="16">{title}</text>\n'
        f'<text x="{width / 2}" y="{height - 12}" text-anchor="middle" font-size="12">'
        f'{xlabel} [{x0:.4g}, {x1:.4g}]</text>\n'
        f'<text x="12" y="{height / 2}" font-size="12" transform="rotate(-90 12 {height / 2})" '
        f'text-anchor="middle">{ylabel} [{y0:.4g}, {y1:.4g}]</text>\n'
        f'<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{points}"/>\n'
        "</svg>\n"
    )


def svg_path_for(csv_path) -> str:
    root, _ = os.path.splitext(str(csv_path))
    return root + ".svg"


def emit_spectrum(verdict, path) -> tuple[str, str]:
    """Write the best-angle autocovariance spectrum as CSV and SVG.

    ``path`` names the CSV; the SVG goes next to it with a .svg suffix.
    """
    report = verdict.report
    if report is None:
        raise ValueError(f"verdict {verdict.label} carries no spectrum")
    text = format_csv(["frequency", "magnitude"], zip(report.frequencies, report.spectrum))
    atomic_write(path, text)
    svg = svg_path_for(path)
    title = (f"{verdict.label}: angle {report.best_angle} deg, D{report.best_order} "
             f"along {report.best_axis}, peak {report.best_frequency:.4f} c/s, "
             f"score {report.score:.4g}")
    atomic_write(svg, svg_polyline(report.frequencies, report.spectrum, title,
                                   "frequency (cycles/sample)", "magnitude"))
    return str(path), svg


def emit_curve(curve, path) -> tuple[str, str]:
    atomic_write(path, curve.to_csv())
    svg = svg_path_for(path)
    mse = np.asarray(curve.mse)
    atomic_write(svg, svg_polyline(np.arange(1, mse.size + 1), np.log10(np.maximum(mse, 1e-300)),
                                   f"training curve ({curve.stop_reason})", "epoch", "log10 MSE"))
    return str(path), svg
