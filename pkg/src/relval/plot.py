"""Hand-written SVG for the stability-versus-k curve.

Fixed 800x600 canvas. The plot area spans x in [80, 760] and y in
[60, 520]; k maps linearly onto x between the smallest and largest k
(padded by half a step), and stability maps onto y from 0 at the bottom to
``y_max`` at the top, where ``y_max`` is the next 0.25 above
max(1.1, highest CI bound, highest training value).
"""

from __future__ import annotations

import math
from html import escape

WIDTH, HEIGHT = 800, 600
LEFT, RIGHT, TOP, BOTTOM = 80, 760, 60, 520


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def stability_svg(rows: list[dict], title: str = "normalized stability",
                  version: str = "") -> str:
    """Render curve rows (``k, mean_norm, ci_lo, ci_hi, mean_train``) as SVG text."""
    if not rows:
        raise ValueError("nothing to plot")
    ks = [r["k"] for r in rows]
    lo_k, hi_k = min(ks), max(ks)
    pad = 0.5 if lo_k == hi_k else 0.5 * (hi_k - lo_k) / max(len(ks) - 1, 1)
    x0, x1 = lo_k - pad, hi_k + pad
    top_val = max([1.1] + [r["ci_hi"] for r in rows] + [r["mean_train"] for r in rows])
    y_max = math.ceil(top_val * 4) / 4

    def sx(k):
        return LEFT + (k - x0) / (x1 - x0) * (RIGHT - LEFT)

    def sy(v):
        return BOTTOM - min(max(v, 0.0), y_max) / y_max * (BOTTOM - TOP)

    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           f"<!-- relval {version} -->",
           f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="14">',
           f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<text x="{WIDTH / 2}" y="35" text-anchor="middle" font-size="18">'
           f"{escape(title)}</text>"]

    # axes and ticks
    out.append(f'<line x1="{LEFT}" y1="{BOTTOM}" x2="{RIGHT}" y2="{BOTTOM}" stroke="black"/>')
    out.append(f'<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{BOTTOM}" stroke="black"/>')
    for k in ks:
        x = _fmt(sx(k))
        out.append(f'<line x1="{x}" y1="{BOTTOM}" x2="{x}" y2="{BOTTOM + 6}" stroke="black"/>')
        out.append(f'<text x="{x}" y="{BOTTOM + 24}" text-anchor="middle">{k}</text>')
    n_ticks = int(round(y_max / 0.25))
    for i in range(n_ticks + 1):
        v = i * 0.25
        y = _fmt(sy(v))
        out.append(f'<line x1="{LEFT - 6}" y1="{y}" x2="{LEFT}" y2="{y}" stroke="black"/>')
        out.append(f'<text x="{LEFT - 10}" y="{y}" text-anchor="end" '
                   f'dominant-baseline="middle">{v:.2f}</text>')
    out.append(f'<text x="{(LEFT + RIGHT) / 2}" y="{HEIGHT - 25}" text-anchor="middle">'
               "number of clusters</text>")
    out.append(f'<text x="20" y="{(TOP + BOTTOM) / 2}" text-anchor="middle" '
               f'transform="rotate(-90 20 {(TOP + BOTTOM) / 2})">normalized stability</text>')

    # 95% CI band, validation curve, training curve, random-labeling threshold
    band = [(sx(r["k"]), sy(r["ci_hi"])) for r in rows]
    band += [(sx(r["k"]), sy(r["ci_lo"])) for r in reversed(rows)]
    out.append('<polygon class="ci95" fill="steelblue" fill-opacity="0.25" stroke="none" '
               f'points="{" ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in band)}"/>')
    val = " ".join(f"{_fmt(sx(r['k']))},{_fmt(sy(r['mean_norm']))}" for r in rows)
    out.append(f'<polyline class="validation" fill="none" stroke="steelblue" stroke-width="2.5" '
               f'points="{val}"/>')
    for r in rows:
        out.append(f'<circle cx="{_fmt(sx(r["k"]))}" cy="{_fmt(sy(r["mean_norm"]))}" r="4" '
                   'fill="steelblue"/>')
    train = " ".join(f"{_fmt(sx(r['k']))},{_fmt(sy(r['mean_train']))}" for r in rows)
    out.append(f'<polyline class="training" fill="none" stroke="darkorange" stroke-width="2" '
               f'stroke-dasharray="8 5" points="{train}"/>')
    y1 = _fmt(sy(1.0))
    out.append(f'<line class="random-threshold" x1="{LEFT}" y1="{y1}" x2="{RIGHT}" y2="{y1}" '
               'stroke="firebrick" stroke-width="1.5" stroke-dasharray="2 4"/>')

    legend = [("steelblue", "", "validation (95% CI)"),
              ("darkorange", "8 5", "training (resubstitution)"),
              ("firebrick", "2 4", "random labeling")]
    for i, (color, dash, label) in enumerate(legend):
        y = TOP + 15 + 22 * i
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        out.append(f'<line x1="{RIGHT - 230}" y1="{y}" x2="{RIGHT - 195}" y2="{y}" '
                   f'stroke="{color}" stroke-width="2"{dash_attr}/>')
        out.append(f'<text x="{RIGHT - 185}" y="{y}" dominant-baseline="middle">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
