"""Small deterministic SVG charts (no timestamps, fixed element order)."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

from .errors import EmptyData, InvalidInput
from .fitts import fit_line
from .pathmetrics import METRIC_NAMES

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf")
PLOT_KINDS = ("mt_vs_id_scatter", "intensity_histogram", "metric_bars", "radial_stacked")


def _f(x: float) -> str:
    s = f"{x:.3f}".rstrip("0").rstrip(".")
    return "0" if s == "-0" else s


class _Svg:
    def __init__(self, width: int, height: int, title: str):
        self.parts = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">',
            f"<title>{escape(title)}</title>",
            f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        ]

    def add(self, element: str) -> None:
        self.parts.append(element)

    def text(self, x, y, s, anchor="middle", size=12, **attrs):
        extra = "".join(f' {k.replace("_", "-")}="{v}"' for k, v in attrs.items())
        self.add(f'<text x="{_f(x)}" y="{_f(y)}" font-size="{size}" text-anchor="{anchor}"{extra}>'
                 f"{escape(str(s))}</text>")

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


class _Frame:
    """Linear data-to-pixel mapping for a rectangular plot area."""

    def __init__(self, x0, x1, y0, y1, left=60, top=30, width=480, height=300):
        if x1 == x0:
            x0, x1 = x0 - 0.5, x1 + 0.5
        if y1 == y0:
            y0, y1 = y0 - 0.5, y1 + 0.5
        self.x0, self.x1, self.y0, self.y1 = x0, x1, y0, y1
        self.left, self.top, self.width, self.height = left, top, width, height

    def px(self, x):
        return self.left + (x - self.x0) / (self.x1 - self.x0) * self.width

    def py(self, y):
        return self.top + self.height - (y - self.y0) / (self.y1 - self.y0) * self.height

    def axes(self, svg: _Svg, xlabel: str, ylabel: str, ticks: int = 5):
        l, t, w, h = self.left, self.top, self.width, self.height
        svg.add(f'<path d="M{l} {t} L{l} {t + h} L{l + w} {t + h}" fill="none" stroke="black"/>')
        for k in range(ticks + 1):
            xv = self.x0 + (self.x1 - self.x0) * k / ticks
            yv = self.y0 + (self.y1 - self.y0) * k / ticks
            svg.text(self.px(xv), t + h + 16, _f(xv), size=10)
            svg.text(l - 6, self.py(yv) + 4, _f(yv), anchor="end", size=10)
        svg.text(l + w / 2, t + h + 36, xlabel)
        svg.text(16, t + h / 2, ylabel, transform=f"rotate(-90 16 {_f(t + h / 2)})")


def _padded(lo, hi, frac=0.05):
    span = hi - lo
    return lo - frac * span, hi + frac * span


def mt_vs_id_scatter(series: dict, title: str = "Movement time vs ID") -> str:
    """``series`` maps a name to ``(ids, mts_ms)``; each gets points plus a least-squares line."""
    series = {k: (list(v[0]), list(v[1])) for k, v in series.items() if len(v[0])}
    if not series:
        raise EmptyData("no points to plot")
    xs = [x for ids, _ in series.values() for x in ids]
    ys = [y for _, mts in series.values() for y in mts]
    frame = _Frame(*_padded(min(xs), max(xs)), *_padded(min(0.0, min(ys)), max(ys)))
    svg = _Svg(600, 400, title)
    frame.axes(svg, "Index of difficulty (bits)", "Movement time (ms)")
    for n, (name, (ids, mts)) in enumerate(series.items()):
        colour = PALETTE[n % len(PALETTE)]
        for x, y in zip(ids, mts):
            svg.add(f'<circle class="point" cx="{_f(frame.px(x))}" cy="{_f(frame.py(y))}" r="3" fill="{colour}"/>')
        if len(set(ids)) >= 2:
            slope, intercept = fit_line(ids, mts)
            a, b = min(ids), max(ids)
            svg.add(f'<line class="trend" x1="{_f(frame.px(a))}" y1="{_f(frame.py(intercept + slope * a))}" '
                    f'x2="{_f(frame.px(b))}" y2="{_f(frame.py(intercept + slope * b))}" stroke="{colour}"/>')
        svg.text(frame.left + frame.width - 4, frame.top + 14 * (n + 1), name, anchor="end", fill=colour)
    return svg.render()


def intensity_histogram(histograms: dict, threshold: float | None = None,
                        title: str = "Eye image intensity") -> str:
    """``histograms`` maps a category name to ``(counts, edges)``; bars are drawn as frame fractions."""
    if not histograms or all(sum(c) == 0 for c, _ in histograms.values()):
        raise EmptyData("no histogram counts")
    edges = list(next(iter(histograms.values()))[1])
    fracs = {k: [c / max(sum(counts), 1) for c in counts] for k, (counts, _) in histograms.items()}
    top = max(max(v) for v in fracs.values())
    frame = _Frame(edges[0], edges[-1], 0.0, top * 1.1)
    svg = _Svg(600, 400, title)
    frame.axes(svg, "Mean intensity", "Fraction of frames")
    k = len(fracs)
    for n, (name, vals) in enumerate(fracs.items()):
        colour = PALETTE[n % len(PALETTE)]
        for i, v in enumerate(vals):
            if v == 0:
                continue
            x0, x1 = frame.px(edges[i]), frame.px(edges[i + 1])
            bw = (x1 - x0) / k
            svg.add(f'<rect class="bar" x="{_f(x0 + n * bw)}" y="{_f(frame.py(v))}" width="{_f(bw)}" '
                    f'height="{_f(frame.py(0) - frame.py(v))}" fill="{colour}"/>')
        svg.text(frame.left + frame.width - 4, frame.top + 14 * (n + 1), name, anchor="end", fill=colour)
    if threshold is not None:
        x = frame.px(threshold)
        svg.add(f'<line class="threshold" x1="{_f(x)}" y1="{frame.top}" x2="{_f(x)}" '
                f'y2="{frame.top + frame.height}" stroke="black" stroke-dasharray="4 3"/>')
    return svg.render()


def metric_bars(reports: dict, metrics=METRIC_NAMES, title: str = "Cursor efficiency metrics") -> str:
    """Grouped bars: one group per metric, one bar per condition (``reports[cond][metric]``)."""
    if not reports:
        raise EmptyData("no conditions to plot")
    values = [float(r[m]) for r in reports.values() for m in metrics]
    frame = _Frame(0, len(metrics), min(0.0, min(values)), max(values) * 1.1 if max(values) > 0 else 1.0)
    svg = _Svg(600, 400, title)
    frame.axes(svg, "", "Mean value", ticks=len(metrics))
    k = len(reports)
    for n, (cond, r) in enumerate(reports.items()):
        colour = PALETTE[n % len(PALETTE)]
        for i, m in enumerate(metrics):
            x0 = frame.px(i + 0.1 + 0.8 * n / k)
            bw = frame.px(i + 0.1 + 0.8 * (n + 1) / k) - x0
            y, zero = frame.py(float(r[m])), frame.py(0.0)
            svg.add(f'<rect class="bar" data-metric="{m}" x="{_f(x0)}" y="{_f(min(y, zero))}" width="{_f(bw)}" '
                    f'height="{_f(abs(zero - y))}" fill="{colour}"/>')
        svg.text(frame.left + frame.width - 4, frame.top + 14 * (n + 1), cond, anchor="end", fill=colour)
    for i, m in enumerate(metrics):
        svg.text(frame.px(i + 0.5), frame.top + frame.height + 30, m, size=11)
    return svg.render()


def _wedge(cx, cy, r0, r1, a0, a1) -> str:
    """Annular sector path; angles in degrees clockwise from 12 o'clock."""
    def pt(r, a):
        t = math.radians(a)
        return cx + r * math.sin(t), cy - r * math.cos(t)

    large = 1 if a1 - a0 > 180 else 0
    p1, p2, p3, p4 = pt(r1, a0), pt(r1, a1), pt(r0, a1), pt(r0, a0)
    return (f"M{_f(p1[0])} {_f(p1[1])} A{_f(r1)} {_f(r1)} 0 {large} 1 {_f(p2[0])} {_f(p2[1])} "
            f"L{_f(p3[0])} {_f(p3[1])} A{_f(r0)} {_f(r0)} 0 {large} 0 {_f(p4[0])} {_f(p4[1])} Z")


def radial_stacked(data: dict, metrics=METRIC_NAMES, title: str = "Efficiency metrics by ID") -> str:
    """Radial stacked bars: ``data[modality][id_bits][metric]``.

    The first modality fills the right half of the disc and the second the
    left half; each ID gets one sector per half, and the metrics stack
    outward in ``metrics`` order as magnitudes.  A zero metric draws no band.
    """
    if not data or not any(data.values()):
        raise EmptyData("no radial data")
    if len(data) > 2:
        raise InvalidInput("radial_stacked shows at most two modalities")
    ids = sorted({i for per_id in data.values() for i in per_id})
    totals = [sum(abs(float(v[m])) for m in metrics) for per_id in data.values() for v in per_id.values()]
    peak = max(totals) or 1.0
    cx, cy, inner, outer = 300.0, 230.0, 30.0, 180.0
    svg = _Svg(600, 460, title)
    for half, (modality, per_id) in enumerate(data.items()):
        base = 0.0 if half == 0 else 180.0
        span = 180.0 / len(ids)
        for j, id_bits in enumerate(ids):
            if id_bits not in per_id:
                continue
            a0, a1 = base + j * span + 1.0, base + (j + 1) * span - 1.0
            r = inner
            for k, m in enumerate(metrics):
                v = abs(float(per_id[id_bits][m]))
                if v == 0.0:
                    continue
                r_next = r + (outer - inner) * v / peak
                svg.add(f'<path class="band band-{m}" data-modality="{escape(modality)}" '
                        f'data-id="{_f(id_bits)}" d="{_wedge(cx, cy, r, r_next, a0, a1)}" '
                        f'fill="{PALETTE[k % len(PALETTE)]}"/>')
                r = r_next
            mid = math.radians((a0 + a1) / 2)
            svg.text(cx + (outer + 14) * math.sin(mid), cy - (outer + 14) * math.cos(mid) + 4,
                     _f(id_bits), size=10)
        svg.text(cx + (outer * 0.5 if half == 0 else -outer * 0.5), cy + outer + 40, modality)
    for k, m in enumerate(metrics):
        svg.add(f'<rect x="{20 + 70 * k}" y="436" width="10" height="10" fill="{PALETTE[k % len(PALETTE)]}"/>')
        svg.text(34 + 70 * k, 445, m, anchor="start", size=10)
    return svg.render()


def emit_plot(kind: str, data, **kwargs) -> str:
    if kind not in PLOT_KINDS:
        raise InvalidInput(f"unknown plot kind {kind!r}; expected one of {', '.join(PLOT_KINDS)}")
    if not data:
        raise EmptyData(f"no data for {kind}")
    return {"mt_vs_id_scatter": mt_vs_id_scatter, "intensity_histogram": intensity_histogram,
            "metric_bars": metric_bars, "radial_stacked": radial_stacked}[kind](data, **kwargs)
