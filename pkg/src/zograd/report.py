"""Artifact writers: delimited output, minimal SVG, and matplotlib figures.

CSV cells use '.' as the decimal separator and 17 significant digits, which
round-trips 64-bit floats exactly; regression baselines can therefore be
compared byte for byte.  The SVG documents are hand-built polyline/lattice
files with no rendering dependency.  PNG figures are rendered with
matplotlib (Agg) when a plot path is requested and accompany the delimited
output rather than replacing it.
"""

from __future__ import annotations

import json
import math
import sys
from pathlib import Path
from typing import Sequence


def fmt17(x) -> str:
    """17-significant-digit decimal form (exact float64 round trip)."""
    return format(float(x), ".17g")


def _cell(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (int,)) and not isinstance(v, bool):
        return str(v)
    if v is None:
        return ""
    f = float(v)
    if math.isinf(f):
        return "inf" if f > 0 else "-inf"
    if f == 0.0:
        f = 0.0  # drop the sign of negative zero
    return fmt17(f)


def render_csv(columns: Sequence[str], rows: Sequence[Sequence]) -> str:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def render_json(command: str, params: dict, columns: Sequence[str], rows: Sequence[Sequence]) -> str:
    def jsonable(v):
        if isinstance(v, float) and math.isinf(v):
            return "inf" if v > 0 else "-inf"
        if hasattr(v, "item"):
            return v.item()
        return v

    payload = {
        "command": command,
        "params": {k: jsonable(v) for k, v in params.items()},
        "columns": list(columns),
        "rows": [[jsonable(v) for v in row] for row in rows],
    }
    return json.dumps(payload, indent=2, sort_keys=False) + "\n"


def write_text(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


# -- hand-built SVG ----------------------------------------------------------

_W, _H, _M = 640, 400, 48


def _scale(vals, lo_px, hi_px):
    vmin, vmax = min(vals), max(vals)
    span = vmax - vmin or 1.0
    return [lo_px + (v - vmin) / span * (hi_px - lo_px) for v in vals]


def svg_polyline(xs: Sequence[float], ys: Sequence[float]) -> str:
    """Minimal polyline plot: one path plus a frame."""
    px = _scale(xs, _M, _W - _M)
    py = _scale(ys, _H - _M, _M)  # y axis points up
    pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(px, py))
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">\n'
        f'<rect x="{_M}" y="{_M}" width="{_W - 2 * _M}" height="{_H - 2 * _M}" '
        f'fill="none" stroke="#888" stroke-width="1"/>\n'
        f'<polyline points="{pts}" fill="none" stroke="#1f4e9c" stroke-width="1.5"/>\n'
        "</svg>\n"
    )


def svg_lattice(x1: Sequence[float], x2: Sequence[float], vals: Sequence[float]) -> str:
    """Heat lattice: one grayscale rect per (x1, x2) cell."""
    u1 = sorted(set(x1))
    u2 = sorted(set(x2))
    idx1 = {v: i for i, v in enumerate(u1)}
    idx2 = {v: i for i, v in enumerate(u2)}
    cw = (_W - 2 * _M) / len(u1)
    ch = (_H - 2 * _M) / len(u2)
    vmax = max(abs(min(vals)), abs(max(vals))) or 1.0
    cells = []
    for a, b, v in zip(x1, x2, vals):
        # signed grayscale: negative dark, positive light
        shade = int(round(127.5 + 127.5 * v / vmax))
        x = _M + idx1[a] * cw
        y = _H - _M - (idx2[b] + 1) * ch
        cells.append(
            f'<rect x="{x:.2f}" y="{y:.2f}" width="{cw:.2f}" height="{ch:.2f}" '
            f'fill="rgb({shade},{shade},{shade})"/>'
        )
    body = "\n".join(cells)
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">\n{body}\n'
        f'<rect x="{_M}" y="{_M}" width="{_W - 2 * _M}" height="{_H - 2 * _M}" '
        f'fill="none" stroke="#888" stroke-width="1"/>\n</svg>\n'
    )


# -- matplotlib figures ------------------------------------------------------

def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def fig_worstcase_1d(path: str, xs, ys) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(xs, ys, lw=1.5)
    ax.axhline(0.0, color="0.6", lw=0.8)
    ax.set_xlabel("x")
    ax.set_ylabel("worst-case function")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def fig_worstcase_2d(path: str, x1, x2, vals) -> None:
    import numpy as np

    plt = _pyplot()
    u1 = np.unique(x1)
    u2 = np.unique(x2)
    grid = np.asarray(vals).reshape(len(u1), len(u2))
    fig, ax = plt.subplots(figsize=(5.4, 4.4))
    mesh = ax.pcolormesh(u1, u2, grid.T, shading="auto", cmap="coolwarm")
    fig.colorbar(mesh, ax=ax)
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def fig_risk_curve(path: str, ns, mses, bounds) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.loglog(ns, mses, "o-", label="Monte Carlo risk")
    ax.loglog(ns, bounds, "s--", label="closed-form reference")
    ax.set_xlabel("budget n")
    ax.set_ylabel("MSE")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def fig_sp_demo(path: str, rhos, empirical, analytic) -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.loglog(rhos, empirical, "o-", label="empirical risk")
    ax.loglog(rhos, analytic, "s--", label="2 rho^2 p(p-1)/n")
    ax.set_xlabel("gradient magnitude rho")
    ax.set_ylabel("risk")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
