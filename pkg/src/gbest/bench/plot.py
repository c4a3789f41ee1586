"""Mean-and-interval charts of IBS as standalone SVG."""
from __future__ import annotations

import math
from xml.sax.saxutils import escape

from ..metrics import summarize
from .models import ModelSpec

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")


def select(rows, **criteria):
    """Rows whose fields equal every non-None criterion (numbers compared loosely)."""
    out = []
    for r in rows:
        ok = True
        for k, v in criteria.items():
            if v is None:
                continue
            rv = r[k]
            if isinstance(v, (int, float)) and rv is not None and not isinstance(rv, str):
                ok = math.isclose(float(rv), float(v), rel_tol=0, abs_tol=1e-12)
            else:
                ok = rv == v
            if not ok:
                break
        if ok:
            out.append(r)
    return out


def interval_table(rows, parametric: bool = False):
    """Per setting and model label: (mean, low, high)."""
    groups = {}
    for r in rows:
        if r["ibs"] is None:
            continue
        key = (r["setting_id"], ModelSpec(r["model"], r["w"]).label)
        groups.setdefault(key, []).append(r["ibs"])
    table = {}
    for (setting, label), vals in groups.items():
        s = summarize(vals)
        if parametric:
            half = 1.96 * s.sd / math.sqrt(s.n)
            lo, hi = s.mean - half, s.mean + half
        else:
            lo, hi = s.q05, s.q95
        table.setdefault(setting, {})[label] = (s.mean, lo, hi)
    return table


def render_ci_plot(rows, parametric: bool = False, title: str | None = None) -> str:
    """One panel per setting; a dot at the mean and a whisker per model."""
    table = interval_table(rows, parametric)
    if not table:
        raise ValueError("no rows selected for plotting")
    settings = list(table)
    labels = []
    for s in settings:
        for lab in table[s]:
            if lab not in labels:
                labels.append(lab)
    colours = {lab: PALETTE[i % len(PALETTE)] for i, lab in enumerate(labels)}

    lo = min(v[1] for s in settings for v in table[s].values())
    hi = max(v[2] for s in settings for v in table[s].values())
    if hi - lo < 1e-9:
        lo, hi = lo - 0.01, hi + 0.01
    pad = 0.08 * (hi - lo)
    lo, hi = max(0.0, lo - pad), hi + pad

    panel_w, panel_h = max(320, 70 * len(labels) + 80), 260
    left, top, legend_w = 70, 40, 190
    width = left + panel_w + legend_w
    height = top + len(settings) * (panel_h + 50) + 10
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    heading = title or ("Mean IBS with " + ("95% parametric intervals" if parametric else "5%-95% quantile intervals"))
    out.append(f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" font-size="14">{escape(heading)}</text>')

    def ypix(v, y0):
        return y0 + panel_h - (v - lo) / (hi - lo) * panel_h

    for si, setting in enumerate(settings):
        y0 = top + si * (panel_h + 50)
        out.append(f'<text x="{left + panel_w / 2:.1f}" y="{y0 - 6}" text-anchor="middle">{escape(setting)}</text>')
        out.append(f'<rect x="{left}" y="{y0}" width="{panel_w}" height="{panel_h}" fill="none" stroke="#444"/>')
        for tick in range(6):
            v = lo + tick * (hi - lo) / 5
            yy = ypix(v, y0)
            out.append(f'<line x1="{left - 4}" y1="{yy:.2f}" x2="{left + panel_w}" y2="{yy:.2f}" stroke="#ddd"/>')
            out.append(f'<text x="{left - 8}" y="{yy + 4:.2f}" text-anchor="end">{v:.3f}</text>')
        out.append(f'<text x="18" y="{y0 + panel_h / 2:.1f}" transform="rotate(-90 18 {y0 + panel_h / 2:.1f})" '
                   f'text-anchor="middle">IBS</text>')
        step = panel_w / (len(labels) + 1)
        for li, lab in enumerate(labels):
            if lab not in table[setting]:
                continue
            mean, a, b = table[setting][lab]
            x = left + step * (li + 1)
            c = colours[lab]
            out.append(f'<line x1="{x:.2f}" y1="{ypix(a, y0):.2f}" x2="{x:.2f}" y2="{ypix(b, y0):.2f}" '
                       f'stroke="{c}" stroke-width="2"/>')
            for v in (a, b):
                out.append(f'<line x1="{x - 6:.2f}" y1="{ypix(v, y0):.2f}" x2="{x + 6:.2f}" y2="{ypix(v, y0):.2f}" '
                           f'stroke="{c}" stroke-width="2"/>')
            out.append(f'<circle cx="{x:.2f}" cy="{ypix(mean, y0):.2f}" r="4" fill="{c}"/>')
            out.append(f'<text x="{x:.2f}" y="{y0 + panel_h + 16}" text-anchor="middle" font-size="10">'
                       f'{escape(lab)}</text>')
    lx = left + panel_w + 20
    for li, lab in enumerate(labels):
        yy = top + 10 + 18 * li
        out.append(f'<circle cx="{lx}" cy="{yy}" r="4" fill="{colours[lab]}"/>')
        out.append(f'<text x="{lx + 10}" y="{yy + 4}">{escape(lab)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
