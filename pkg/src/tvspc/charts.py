"""Hand-rolled SVG charts for monitoring and diagnosis reports.

Two chart kinds: the T-squared trace of a monitored day with its
control-limit line, and the per-variable contribution bars of one
out-of-control second.  Emitting SVG directly keeps the package free
of plotting dependencies; the output is plain well-formed XML that any
browser renders.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

__all__ = ["t2_chart", "contribution_chart"]

_MARGIN_L = 58
_MARGIN_R = 16
_MARGIN_T = 30
_MARGIN_B = 40


def _fmt(v: float) -> str:
    """Compact coordinate/value formatting for SVG attributes."""
    s = "%.2f" % v
    if s.endswith(".00"):
        s = s[:-3]
    return s


def _tick_values(lo: float, hi: float, target: int = 6) -> list[float]:
    """Round tick positions covering [lo, hi] at a 1-2-5 step."""
    span = hi - lo
    if span <= 0.0:
        return [lo]
    raw = span / target
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        step = mag * mult
        if step >= raw:
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * span:
        ticks.append(0.0 if abs(t) < step * 1e-9 else t)
        t += step
    return ticks


def _decimate(points: list[tuple[float, float]], buckets: int):
    """Per-bucket min/max thinning that keeps spikes visible."""
    if len(points) <= 2 * buckets:
        return points
    xs0 = points[0][0]
    xs1 = points[-1][0]
    width = (xs1 - xs0) / buckets or 1.0
    out: list[tuple[float, float]] = []
    idx = 0
    for b in range(buckets):
        hi_x = xs0 + (b + 1) * width
        lo_pt = hi_pt = None
        while idx < len(points) and (points[idx][0] <= hi_x or b == buckets - 1):
            p = points[idx]
            if lo_pt is None or p[1] < lo_pt[1]:
                lo_pt = p
            if hi_pt is None or p[1] > hi_pt[1]:
                hi_pt = p
            idx += 1
        if lo_pt is None:
            continue
        # emit in x order so the polyline never doubles back
        pair = sorted({lo_pt, hi_pt})
        out.extend(pair)
    return out


def _svg_open(width: int, height: int, title: str) -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<svg xmlns="http://www.w3.org/2000/svg" width="%d" height="%d" '
        'viewBox="0 0 %d %d">' % (width, height, width, height),
        '<rect x="0" y="0" width="%d" height="%d" fill="white"/>' % (width, height),
        '<text x="%d" y="18" font-family="sans-serif" font-size="13" '
        'fill="#222">%s</text>' % (_MARGIN_L, escape(title)),
    ]


def _axes(parts: list[str], width: int, height: int) -> tuple[int, int]:
    x1 = width - _MARGIN_R
    y1 = height - _MARGIN_B
    parts.append(
        '<line x1="%d" y1="%d" x2="%d" y2="%d" stroke="#444" stroke-width="1"/>'
        % (_MARGIN_L, y1, x1, y1)
    )
    parts.append(
        '<line x1="%d" y1="%d" x2="%d" y2="%d" stroke="#444" stroke-width="1"/>'
        % (_MARGIN_L, _MARGIN_T, _MARGIN_L, y1)
    )
    return x1, y1


def t2_chart(
    points,
    *,
    ucl: float | None = None,
    width: int = 960,
    height: int = 320,
    title: str = "Hotelling T2",
) -> str:
    """SVG line chart of T-squared per second with the UCL drawn in.

    ``points`` is a sequence of MonitorPoints (or anything with ``k``,
    ``t2``, ``fault`` attributes); ``ucl`` defaults to the points' own
    control limit.
    """
    pts = list(points)
    if ucl is None and pts:
        ucl = pts[0].ucl
    faults = sum(1 for p in pts if p.fault)
    caption = "%s  (%d points, %d faults)" % (title, len(pts), faults)
    parts = _svg_open(width, height, caption)
    x_right, y_base = _axes(parts, width, height)
    plot_w = x_right - _MARGIN_L
    plot_h = y_base - _MARGIN_T

    if not pts:
        parts.append(
            '<text x="%d" y="%d" font-family="sans-serif" font-size="12" '
            'fill="#888">no data</text>' % (_MARGIN_L + 8, _MARGIN_T + 20)
        )
        parts.append("</svg>")
        return "\n".join(parts) + "\n"

    k_lo = pts[0].k
    k_hi = pts[-1].k if pts[-1].k > k_lo else k_lo + 1
    y_hi = max([p.t2 for p in pts] + ([ucl] if ucl is not None else [])) * 1.08
    if y_hi <= 0.0:
        y_hi = 1.0

    def sx(k: float) -> float:
        return _MARGIN_L + (k - k_lo) / (k_hi - k_lo) * plot_w

    def sy(v: float) -> float:
        return y_base - v / y_hi * plot_h

    for t in _tick_values(0.0, y_hi):
        y = sy(t)
        parts.append(
            '<line x1="%d" y1="%s" x2="%d" y2="%s" stroke="#ddd" '
            'stroke-width="1"/>' % (_MARGIN_L, _fmt(y), x_right, _fmt(y))
        )
        parts.append(
            '<text x="%d" y="%s" font-family="sans-serif" font-size="10" '
            'fill="#444" text-anchor="end">%s</text>'
            % (_MARGIN_L - 6, _fmt(y + 3), _fmt(t))
        )
    for t in _tick_values(k_lo, k_hi):
        x = sx(t)
        parts.append(
            '<line x1="%s" y1="%d" x2="%s" y2="%d" stroke="#444" '
            'stroke-width="1"/>' % (_fmt(x), y_base, _fmt(x), y_base + 4)
        )
        parts.append(
            '<text x="%s" y="%d" font-family="sans-serif" font-size="10" '
            'fill="#444" text-anchor="middle">%d</text>'
            % (_fmt(x), y_base + 16, int(t))
        )
    parts.append(
        '<text x="%d" y="%d" font-family="sans-serif" font-size="11" '
        'fill="#444" text-anchor="middle">second of day k</text>'
        % ((_MARGIN_L + x_right) // 2, height - 8)
    )

    thin = _decimate([(float(p.k), float(p.t2)) for p in pts], plot_w)
    coords = " ".join("%s,%s" % (_fmt(sx(k)), _fmt(sy(v))) for k, v in thin)
    parts.append(
        '<polyline points="%s" fill="none" stroke="#1f77b4" '
        'stroke-width="1"/>' % coords
    )
    if ucl is not None:
        y = sy(ucl)
        parts.append(
            '<line x1="%d" y1="%s" x2="%d" y2="%s" stroke="#d62728" '
            'stroke-width="1.5" stroke-dasharray="6,4"/>'
            % (_MARGIN_L, _fmt(y), x_right, _fmt(y))
        )
        parts.append(
            '<text x="%d" y="%s" font-family="sans-serif" font-size="10" '
            'fill="#d62728" text-anchor="end">UCL=%s</text>'
            % (x_right - 4, _fmt(y - 5), _fmt(ucl))
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def contribution_chart(
    diagnosis,
    variable_names,
    *,
    width: int = 640,
    height: int = 340,
) -> str:
    """SVG bar chart of one second's per-variable T-squared contributions.

    The root-cause bar is drawn in red; bars sum to the second's
    T-squared.
    """
    names = tuple(variable_names)
    contribs = tuple(float(c) for c in diagnosis.contributions)
    caption = "contributions at k=%d  (T2=%s, UCL=%s)" % (
        diagnosis.k,
        _fmt(diagnosis.t2),
        _fmt(diagnosis.ucl),
    )
    parts = _svg_open(width, height, caption)
    x_right, y_base = _axes(parts, width, height)
    plot_w = x_right - _MARGIN_L
    plot_h = y_base - _MARGIN_T

    lo = min(0.0, min(contribs)) * 1.15
    hi = max(0.0, max(contribs)) * 1.15
    if hi - lo <= 0.0:
        hi = 1.0

    def sy(v: float) -> float:
        return y_base - (v - lo) / (hi - lo) * plot_h

    for t in _tick_values(lo, hi):
        y = sy(t)
        parts.append(
            '<line x1="%d" y1="%s" x2="%d" y2="%s" stroke="#ddd" '
            'stroke-width="1"/>' % (_MARGIN_L, _fmt(y), x_right, _fmt(y))
        )
        parts.append(
            '<text x="%d" y="%s" font-family="sans-serif" font-size="10" '
            'fill="#444" text-anchor="end">%s</text>'
            % (_MARGIN_L - 6, _fmt(y + 3), _fmt(t))
        )
    zero_y = sy(0.0)
    parts.append(
        '<line x1="%d" y1="%s" x2="%d" y2="%s" stroke="#444" '
        'stroke-width="1"/>' % (_MARGIN_L, _fmt(zero_y), x_right, _fmt(zero_y))
    )

    n = len(contribs)
    slot = plot_w / max(n, 1)
    bar_w = slot * 0.62
    for j, c in enumerate(contribs):
        x = _MARGIN_L + j * slot + (slot - bar_w) / 2
        top = sy(max(c, 0.0))
        h = abs(sy(c) - zero_y)
        fill = "#d62728" if j == diagnosis.root_cause else "#1f77b4"
        parts.append(
            '<rect x="%s" y="%s" width="%s" height="%s" fill="%s"/>'
            % (_fmt(x), _fmt(top), _fmt(bar_w), _fmt(max(h, 0.5)), fill)
        )
        label_y = top - 4 if c >= 0 else top + h + 11
        parts.append(
            '<text x="%s" y="%s" font-family="sans-serif" font-size="9" '
            'fill="#222" text-anchor="middle">%s</text>'
            % (_fmt(x + bar_w / 2), _fmt(label_y), _fmt(c))
        )
        parts.append(
            '<text x="%s" y="%d" font-family="sans-serif" font-size="10" '
            'fill="#444" text-anchor="middle">%s</text>'
            % (_fmt(x + bar_w / 2), y_base + 16, escape(names[j]))
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
