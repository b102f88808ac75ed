"""Self-contained deterministic SVG charts (no plotting dependency).

Floats are formatted with fixed precision and series are drawn in call
order, so identical inputs produce byte-identical files.  Non-finite
points break the polyline rather than erroring, which is how +inf rows in
divergence tables show up as gaps.
"""

from __future__ import annotations

import math

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f")
_W, _H = 720, 460
_ML, _MR, _MT, _MB = 72, 20, 40, 56


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _nice_ticks(lo: float, hi: float, n: int = 6) -> list[float]:
    if not (math.isfinite(lo) and math.isfinite(hi)):
        lo, hi = 0.0, 1.0
    if lo == hi:
        lo, hi = lo - 1.0, hi + 1.0
    raw = (hi - lo) / max(n - 1, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-12 * abs(step):
        ticks.append(0.0 if abs(t) < 1e-12 * abs(step) else t)
        t += step
    return ticks


def _tick_label(v: float) -> str:
    return f"{v:.6g}"


class _Frame:
    """Maps data coordinates onto the pixel plot area."""

    def __init__(self, xs: list[float], ys: list[float], logy: bool):
        self.logy = logy
        fx = [x for x in xs if math.isfinite(x)]
        fy = [y for y in ys if math.isfinite(y) and (not logy or y > 0.0)]
        self.xlo, self.xhi = (min(fx), max(fx)) if fx else (0.0, 1.0)
        if fy:
            ylo, yhi = min(fy), max(fy)
        else:
            ylo, yhi = 0.0, 1.0
        if logy:
            ylo, yhi = math.log10(ylo), math.log10(yhi)
        self.ylo, self.yhi = ylo, yhi
        if self.xlo == self.xhi:
            self.xlo, self.xhi = self.xlo - 1.0, self.xhi + 1.0
        if self.ylo == self.yhi:
            self.ylo, self.yhi = self.ylo - 1.0, self.yhi + 1.0

    def px(self, x: float) -> float:
        return _ML + (x - self.xlo) / (self.xhi - self.xlo) * (_W - _ML - _MR)

    def py(self, y: float) -> float:
        if self.logy:
            y = math.log10(y)
        return _H - _MB - (y - self.ylo) / (self.yhi - self.ylo) * (_H - _MT - _MB)

    def visible(self, x: float, y: float) -> bool:
        if not (math.isfinite(x) and math.isfinite(y)):
            return False
        return not self.logy or y > 0.0


def _axes(parts: list[str], frame: _Frame, title: str, xlabel: str, ylabel: str) -> None:
    parts.append(f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>')
    parts.append(
        f'<rect x="{_ML}" y="{_MT}" width="{_W - _ML - _MR}" height="{_H - _MT - _MB}" '
        'fill="none" stroke="#333333" stroke-width="1"/>'
    )
    parts.append(
        f'<text x="{_W // 2}" y="{_MT - 14}" text-anchor="middle" '
        f'font-family="monospace" font-size="14">{title}</text>'
    )
    parts.append(
        f'<text x="{_W // 2}" y="{_H - 12}" text-anchor="middle" '
        f'font-family="monospace" font-size="12">{xlabel}</text>'
    )
    parts.append(
        f'<text x="18" y="{_H // 2}" text-anchor="middle" font-family="monospace" '
        f'font-size="12" transform="rotate(-90 18 {_H // 2})">{ylabel}</text>'
    )
    for t in _nice_ticks(frame.xlo, frame.xhi):
        x = frame.px(t)
        parts.append(
            f'<line x1="{_fmt(x)}" y1="{_H - _MB}" x2="{_fmt(x)}" y2="{_H - _MB + 5}" stroke="#333333"/>'
        )
        parts.append(
            f'<text x="{_fmt(x)}" y="{_H - _MB + 18}" text-anchor="middle" '
            f'font-family="monospace" font-size="10">{_tick_label(t)}</text>'
        )
    for t in _nice_ticks(frame.ylo, frame.yhi):
        y = _H - _MB - (t - frame.ylo) / (frame.yhi - frame.ylo) * (_H - _MT - _MB)
        label = _tick_label(10.0 ** t) if frame.logy else _tick_label(t)
        parts.append(
            f'<line x1="{_ML - 5}" y1="{_fmt(y)}" x2="{_ML}" y2="{_fmt(y)}" stroke="#333333"/>'
        )
        parts.append(
            f'<text x="{_ML - 8}" y="{_fmt(y + 3)}" text-anchor="end" '
            f'font-family="monospace" font-size="10">{label}</text>'
        )


def _legend(parts: list[str], labels: list[str]) -> None:
    for i, label in enumerate(labels):
        color = _PALETTE[i % len(_PALETTE)]
        y = _MT + 16 + 16 * i
        parts.append(
            f'<line x1="{_W - _MR - 150}" y1="{y}" x2="{_W - _MR - 126}" y2="{y}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{_W - _MR - 120}" y="{y + 4}" font-family="monospace" '
            f'font-size="11">{label}</text>'
        )


def render_line_plot(
    series: list[tuple[str, list[float], list[float]]],
    *,
    title: str,
    xlabel: str,
    ylabel: str,
    logy: bool = False,
) -> str:
    """Line chart; series is a list of (label, xs, ys)."""
    all_x = [x for _, xs, _ in series for x in xs]
    all_y = [y for _, _, ys in series for y in ys]
    frame = _Frame(all_x, all_y, logy)
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}">']
    _axes(parts, frame, title, xlabel, ylabel)
    for i, (label, xs, ys) in enumerate(series):
        color = _PALETTE[i % len(_PALETTE)]
        runs: list[list[str]] = [[]]
        for x, y in zip(xs, ys):
            if frame.visible(x, y):
                runs[-1].append(f"{_fmt(frame.px(x))},{_fmt(frame.py(y))}")
            elif runs[-1]:
                runs.append([])
        for run in runs:
            if len(run) >= 2:
                parts.append(
                    f'<polyline points="{" ".join(run)}" fill="none" '
                    f'stroke="{color}" stroke-width="1.5"/>'
                )
            elif len(run) == 1:
                x, y = run[0].split(",")
                parts.append(f'<circle cx="{x}" cy="{y}" r="2" fill="{color}"/>')
    _legend(parts, [label for label, _, _ in series])
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_scatter(
    groups: list[tuple[str, list[tuple[float, float]]]],
    *,
    title: str,
    xlabel: str,
    ylabel: str,
) -> str:
    """Scatter chart; groups is a list of (label, [(x, y), ...])."""
    all_x = [p[0] for _, pts in groups for p in pts]
    all_y = [p[1] for _, pts in groups for p in pts]
    frame = _Frame(all_x, all_y, logy=False)
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}">']
    _axes(parts, frame, title, xlabel, ylabel)
    for i, (label, pts) in enumerate(groups):
        color = _PALETTE[i % len(_PALETTE)]
        for x, y in pts:
            if frame.visible(x, y):
                parts.append(
                    f'<circle cx="{_fmt(frame.px(x))}" cy="{_fmt(frame.py(y))}" '
                    f'r="2.5" fill="{color}" fill-opacity="0.7"/>'
                )
    _legend(parts, [label for label, _ in groups])
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
