"""Minimal self-contained SVG emission for experiment artifacts.

Hand-rolled so the output bytes are deterministic; no plotting dependency.
"""

import math

__all__ = ["heatmap_svg", "line_svg"]

_CELL = 48
_MARGIN_LEFT = 96
_MARGIN_TOP = 56
_MARGIN_BOTTOM = 40


def _color(v):
    """Map v in [0, 1] to a blue -> yellow ramp; NaN renders gray."""
    if v != v:
        return "#b0b0b0"
    v = min(max(v, 0.0), 1.0)
    r = int(round(40 + 215 * v))
    g = int(round(40 + 190 * v))
    b = int(round(160 - 120 * v))
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap_svg(path, values, x_labels, y_labels, title, x_name="", y_name=""):
    """Grid heatmap of values[i][j] (row i = y label i, col j = x label j)."""
    rows = len(y_labels)
    cols = len(x_labels)
    width = _MARGIN_LEFT + cols * _CELL + 24
    height = _MARGIN_TOP + rows * _CELL + _MARGIN_BOTTOM
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" font-family="monospace" font-size="12">',
        f'<text x="{width // 2}" y="20" text-anchor="middle" '
        f'font-size="14">{title}</text>',
    ]
    for i in range(rows):
        for j in range(cols):
            v = values[i][j]
            x = _MARGIN_LEFT + j * _CELL
            y = _MARGIN_TOP + i * _CELL
            parts.append(
                f'<rect x="{x}" y="{y}" width="{_CELL}" height="{_CELL}" '
                f'fill="{_color(v)}" stroke="#404040"/>'
            )
            label = "-" if v != v else f"{v:.2f}"
            parts.append(
                f'<text x="{x + _CELL // 2}" y="{y + _CELL // 2 + 4}" '
                f'text-anchor="middle">{label}</text>'
            )
    for j, lab in enumerate(x_labels):
        x = _MARGIN_LEFT + j * _CELL + _CELL // 2
        parts.append(
            f'<text x="{x}" y="{_MARGIN_TOP + rows * _CELL + 16}" '
            f'text-anchor="middle">{lab}</text>'
        )
    for i, lab in enumerate(y_labels):
        y = _MARGIN_TOP + i * _CELL + _CELL // 2 + 4
        parts.append(
            f'<text x="{_MARGIN_LEFT - 8}" y="{y}" text-anchor="end">{lab}</text>'
        )
    if x_name:
        parts.append(
            f'<text x="{_MARGIN_LEFT + cols * _CELL // 2}" y="{height - 8}" '
            f'text-anchor="middle">{x_name}</text>'
        )
    if y_name:
        parts.append(
            f'<text x="16" y="{_MARGIN_TOP - 12}" text-anchor="start">{y_name}</text>'
        )
    parts.append("</svg>")
    with open(path, "w") as f:
        f.write("\n".join(parts) + "\n")


def line_svg(path, xs, series, title, x_name="", y_name="", log_x=False,
             log_y=False):
    """Polyline plot; series is {name: [y values]} over shared xs."""
    width, height = 560, 360
    pad_l, pad_r, pad_t, pad_b = 72, 24, 48, 56

    def tx(values, log):
        out = []
        for v in values:
            if log:
                v = math.log10(max(v, 1e-300))
            out.append(v)
        return out

    xs_t = tx(xs, log_x)
    all_y = [v for ys in series.values() for v in ys if v == v]
    ys_t = tx(all_y, log_y) if all_y else [0.0]
    x_lo, x_hi = min(xs_t), max(xs_t)
    y_lo, y_hi = min(ys_t), max(ys_t)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0

    def px(x):
        return pad_l + (x - x_lo) / (x_hi - x_lo) * (width - pad_l - pad_r)

    def py(y):
        return height - pad_b - (y - y_lo) / (y_hi - y_lo) * (height - pad_t - pad_b)

    palette = ["#1f5fbf", "#bf4040", "#2f8f2f", "#8f2f8f"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" font-family="monospace" font-size="12">',
        f'<text x="{width // 2}" y="20" text-anchor="middle" '
        f'font-size="14">{title}</text>',
        f'<rect x="{pad_l}" y="{pad_t}" width="{width - pad_l - pad_r}" '
        f'height="{height - pad_t - pad_b}" fill="none" stroke="#404040"/>',
    ]
    for k, (name, ys) in enumerate(series.items()):
        color = palette[k % len(palette)]
        points = []
        for x, y in zip(xs_t, tx(ys, log_y)):
            if y == y:
                points.append(f"{px(x):.1f},{py(y):.1f}")
        parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="2" '
            f'points="{" ".join(points)}"/>'
        )
        parts.append(
            f'<text x="{width - pad_r - 8}" y="{pad_t + 16 + 14 * k}" '
            f'text-anchor="end" fill="{color}">{name}</text>'
        )
    for x_raw, x in zip(xs, xs_t):
        parts.append(
            f'<text x="{px(x):.1f}" y="{height - pad_b + 16}" '
            f'text-anchor="middle">{x_raw:g}</text>'
        )
    if x_name:
        parts.append(
            f'<text x="{width // 2}" y="{height - 8}" '
            f'text-anchor="middle">{x_name}</text>'
        )
    if y_name:
        parts.append(f'<text x="8" y="{pad_t - 8}" text-anchor="start">{y_name}</text>')
    parts.append("</svg>")
    with open(path, "w") as f:
        f.write("\n".join(parts) + "\n")
