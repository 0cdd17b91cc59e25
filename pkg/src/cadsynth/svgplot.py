"""Hand-emitted SVG step plot for precision-recall curves. No plotting
stack: the figure is a fixed-size panel with axes, gridlines, tick labels,
and one step path per curve."""

from __future__ import annotations

from .metrics import PRCurve

_WIDTH, _HEIGHT = 480, 360
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 56, 16, 36, 48
_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _x(recall: float) -> float:
    return _MARGIN_L + recall * (_WIDTH - _MARGIN_L - _MARGIN_R)


def _y(precision: float) -> float:
    return _HEIGHT - _MARGIN_B - precision * (_HEIGHT - _MARGIN_T - _MARGIN_B)


def _step_path(points: tuple[tuple[float, float], ...]) -> str:
    """Step path through (recall, precision) points: precision holds until
    the next recall value, starting from recall 0 at the first precision."""
    first_r, first_p = points[0]
    parts = [f"M {_x(0.0):.2f} {_y(first_p):.2f}", f"L {_x(first_r):.2f} {_y(first_p):.2f}"]
    prev_r = first_r
    for r, p in points[1:]:
        parts.append(f"L {_x(prev_r):.2f} {_y(p):.2f}")
        parts.append(f"L {_x(r):.2f} {_y(p):.2f}")
        prev_r = r
    return " ".join(parts)


def pr_curve_svg(curves: dict[str, PRCurve], title: str = "Precision-Recall") -> str:
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<text x="{_WIDTH / 2:.0f}" y="22" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{title}</text>',
    ]
    # gridlines and ticks at 0, 0.25, 0.5, 0.75, 1
    for i in range(5):
        v = i / 4.0
        gx, gy = _x(v), _y(v)
        lines.append(f'<line x1="{gx:.2f}" y1="{_y(0):.2f}" x2="{gx:.2f}" y2="{_y(1):.2f}" '
                     f'stroke="#dddddd" stroke-width="1"/>')
        lines.append(f'<line x1="{_x(0):.2f}" y1="{gy:.2f}" x2="{_x(1):.2f}" y2="{gy:.2f}" '
                     f'stroke="#dddddd" stroke-width="1"/>')
        lines.append(f'<text x="{gx:.2f}" y="{_y(0) + 18:.2f}" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="11">{v:.2f}</text>')
        lines.append(f'<text x="{_x(0) - 8:.2f}" y="{gy + 4:.2f}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="11">{v:.2f}</text>')
    # axes
    lines.append(f'<line x1="{_x(0):.2f}" y1="{_y(0):.2f}" x2="{_x(1):.2f}" y2="{_y(0):.2f}" '
                 f'stroke="black" stroke-width="1.5"/>')
    lines.append(f'<line x1="{_x(0):.2f}" y1="{_y(0):.2f}" x2="{_x(0):.2f}" y2="{_y(1):.2f}" '
                 f'stroke="black" stroke-width="1.5"/>')
    lines.append(f'<text x="{(_x(0) + _x(1)) / 2:.2f}" y="{_HEIGHT - 10}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="12">Recall</text>')
    lines.append(f'<text x="16" y="{(_y(0) + _y(1)) / 2:.2f}" text-anchor="middle" '
                 f'font-family="sans-serif" font-size="12" '
                 f'transform="rotate(-90 16 {(_y(0) + _y(1)) / 2:.2f})">Precision</text>')

    legend_y = _MARGIN_T + 6
    for index, (name, curve) in enumerate(sorted(curves.items())):
        if not curve.points:
            continue
        color = _COLORS[index % len(_COLORS)]
        lines.append(f'<path d="{_step_path(curve.points)}" fill="none" '
                     f'stroke="{color}" stroke-width="2"/>')
        lines.append(f'<rect x="{_WIDTH - 150}" y="{legend_y - 9}" width="12" height="3" '
                     f'fill="{color}"/>')
        lines.append(f'<text x="{_WIDTH - 132}" y="{legend_y - 4}" '
                     f'font-family="sans-serif" font-size="11">{name}</text>')
        legend_y += 16
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
