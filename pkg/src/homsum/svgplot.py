"""Minimal deterministic SVG writer: log-log polyline charts, no dependencies."""

import math


def _ticks(lo, hi):
    lo_e, hi_e = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
    return [10.0**e for e in range(lo_e, hi_e + 1)]


def loglog_plot(series, path, title="", xlabel="", ylabel="",
                width=640, height=480):
    """series: list of (label, xs, ys) with positive values."""
    pad_l, pad_r, pad_t, pad_b = 70, 20, 40, 50
    xs_all = [x for _, xs, _ in series for x in xs if x > 0]
    ys_all = [y for _, _, ys in series for y in ys if y > 0]
    if not xs_all or not ys_all:
        raise ValueError("loglog_plot needs positive data")
    x0, x1 = min(xs_all), max(xs_all)
    y0, y1 = min(ys_all), max(ys_all)
    if x0 == x1:
        x0, x1 = x0 / 2, x1 * 2
    if y0 == y1:
        y0, y1 = y0 / 2, y1 * 2
    lx0, lx1 = math.log10(x0), math.log10(x1)
    ly0, ly1 = math.log10(y0), math.log10(y1)

    def px(x):
        return pad_l + (math.log10(x) - lx0) / (lx1 - lx0) * (width - pad_l - pad_r)

    def py(y):
        return height - pad_b - (math.log10(y) - ly0) / (ly1 - ly0) * (height - pad_t - pad_b)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.0f}" y="24" text-anchor="middle" '
        f'font-family="monospace" font-size="14">{title}</text>',
        f'<rect x="{pad_l}" y="{pad_t}" width="{width - pad_l - pad_r}" '
        f'height="{height - pad_t - pad_b}" fill="none" stroke="#333"/>',
    ]
    for t in _ticks(x0, x1):
        if x0 <= t <= x1:
            parts.append(f'<line x1="{px(t):.1f}" y1="{height - pad_b}" '
                         f'x2="{px(t):.1f}" y2="{height - pad_b + 5}" stroke="#333"/>')
            parts.append(f'<text x="{px(t):.1f}" y="{height - pad_b + 18}" '
                         f'text-anchor="middle" font-family="monospace" '
                         f'font-size="11">1e{int(math.log10(t))}</text>')
    for t in _ticks(y0, y1):
        if y0 <= t <= y1:
            parts.append(f'<line x1="{pad_l - 5}" y1="{py(t):.1f}" '
                         f'x2="{pad_l}" y2="{py(t):.1f}" stroke="#333"/>')
            parts.append(f'<text x="{pad_l - 8}" y="{py(t):.1f}" text-anchor="end" '
                         f'font-family="monospace" font-size="11">1e{int(math.log10(t))}</text>')
    parts.append(f'<text x="{width / 2:.0f}" y="{height - 12}" text-anchor="middle" '
                 f'font-family="monospace" font-size="12">{xlabel}</text>')
    parts.append(f'<text x="16" y="{height / 2:.0f}" text-anchor="middle" '
                 f'font-family="monospace" font-size="12" '
                 f'transform="rotate(-90 16 {height / 2:.0f})">{ylabel}</text>')
    for k, (label, xs, ys) in enumerate(series):
        color = colors[k % len(colors)]
        pts = " ".join(f"{px(x):.1f},{py(y):.1f}" for x, y in zip(xs, ys)
                       if x > 0 and y > 0)
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                     f'stroke-width="1.5"/>')
        for x, y in zip(xs, ys):
            if x > 0 and y > 0:
                parts.append(f'<circle cx="{px(x):.1f}" cy="{py(y):.1f}" r="3" '
                             f'fill="{color}"/>')
        parts.append(f'<text x="{width - pad_r - 6}" y="{pad_t + 16 + 14 * k}" '
                     f'text-anchor="end" font-family="monospace" font-size="11" '
                     f'fill="{color}">{label}</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")
