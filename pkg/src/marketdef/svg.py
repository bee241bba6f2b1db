"""Standalone SVG scatter of two principal-component scores, colored by cluster."""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from marketdef.errors import DomainError, OutputError

PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)

WIDTH, HEIGHT, MARGIN = 480, 400, 56


def _pct(f: float) -> str:
    return f"{100.0 * f:.1f}%"


def render_svg(scores, labels, variance_explained=(0.0, 0.0), title: str = "", ids=None) -> str:
    s = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if s.ndim != 2 or s.shape[1] != 2 or len(s) != len(labels):
        raise DomainError("scores must be n x 2 with one label per row")
    if not np.all(np.isfinite(s)):
        raise DomainError("scores must be finite")
    lo, hi = s.min(axis=0), s.max(axis=0)
    span = np.where(hi - lo > 0, hi - lo, 1.0)
    plot_w, plot_h = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN
    px = MARGIN + (s[:, 0] - lo[0]) / span[0] * plot_w
    py = HEIGHT - MARGIN - (s[:, 1] - lo[1]) / span[1] * plot_h
    v1, v2 = variance_explained
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>',
        f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>',
        f'<text x="{WIDTH / 2:.1f}" y="{HEIGHT - 16}" text-anchor="middle" font-size="12">'
        f"Component 1 ({_pct(v1)} of variance)</text>",
        f'<text x="16" y="{HEIGHT / 2:.1f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 16 {HEIGHT / 2:.1f})">Component 2 ({_pct(v2)} of variance)</text>',
    ]
    if title:
        out.append(f'<text x="{WIDTH / 2:.1f}" y="24" text-anchor="middle" font-size="14">{escape(title)}</text>')
    for i, (x, y, lab) in enumerate(zip(px, py, labels)):
        tip = f"<title>{escape(str(ids[i]))}</title>" if ids is not None else ""
        out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="4" fill="{PALETTE[lab % len(PALETTE)]}">{tip}</circle>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg(scores, labels, out, variance_explained=(0.0, 0.0), title: str = "", ids=None) -> Path:
    text = render_svg(scores, labels, variance_explained, title, ids)
    out = Path(out)
    try:
        out.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise OutputError(f"cannot write {out}: {exc}") from exc
    return out
