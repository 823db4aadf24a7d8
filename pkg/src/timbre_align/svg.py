"""Static SVG bar charts for alignment reports.

Hand-rolled SVG keeps plotting dependency-free: one panel per metric, one bar
group per representation, one colored bar per (strategy, distance) slice.
"""

from __future__ import annotations

from .align import AlignmentReport

_PALETTE = ("#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2",
            "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac")

_PANEL_W = 640
_PANEL_H = 170
_MARGIN_L = 60
_MARGIN_B = 46
_TOP_PAD = 30


def _esc(text: str) -> str:
    return (text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;"))


def render_report_svg(report: AlignmentReport) -> str:
    reps = sorted(report.results)
    metrics = sorted({m for _, _, _, m in report.slices()})
    configs = sorted({(s, d) for _, s, d, _ in report.slices()})

    width = _PANEL_W
    height = _TOP_PAD + len(metrics) * (_PANEL_H + _MARGIN_B) + 24
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" font-family="sans-serif" font-size="10">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]

    # Legend across the top.
    x = _MARGIN_L
    for idx, (strategy, distance) in enumerate(configs):
        color = _PALETTE[idx % len(_PALETTE)]
        parts.append(f'<rect x="{x}" y="8" width="10" height="10" fill="{color}"/>')
        parts.append(f'<text x="{x + 14}" y="17">{_esc(f"{strategy}/{distance}")}</text>')
        x += 14 + 8 * len(f"{strategy}/{distance}") + 18

    for panel, metric in enumerate(metrics):
        top = _TOP_PAD + panel * (_PANEL_H + _MARGIN_B)
        bottom = top + _PANEL_H
        plot_w = width - _MARGIN_L - 16

        values = []
        for rep in reps:
            for strategy, distance in configs:
                leaf = (report.results.get(rep, {}).get(strategy, {})
                        .get(distance, {}).get(metric))
                values.append(leaf.aggregate if leaf else None)
        finite = [v for v in values if v is not None]
        lo = min(0.0, min(finite)) if finite else 0.0
        hi = max(1.0, max(finite)) if finite else 1.0

        def to_y(value: float) -> float:
            return bottom - (value - lo) / (hi - lo) * _PANEL_H

        parts.append(f'<text x="{_MARGIN_L}" y="{top - 6}" font-size="12" '
                     f'font-weight="bold">{_esc(metric)}</text>')
        parts.append(f'<line x1="{_MARGIN_L}" y1="{bottom}" x2="{width - 16}" '
                     f'y2="{bottom}" stroke="#333"/>')
        parts.append(f'<line x1="{_MARGIN_L}" y1="{top}" x2="{_MARGIN_L}" '
                     f'y2="{bottom}" stroke="#333"/>')
        for tick in (lo, (lo + hi) / 2, hi):
            y = to_y(tick)
            parts.append(f'<line x1="{_MARGIN_L - 4}" y1="{y:.1f}" x2="{_MARGIN_L}" '
                         f'y2="{y:.1f}" stroke="#333"/>')
            parts.append(f'<text x="{_MARGIN_L - 8}" y="{y + 3:.1f}" '
                         f'text-anchor="end">{tick:.2g}</text>')

        group_w = plot_w / max(1, len(reps))
        bar_w = max(2.0, min(18.0, group_w / (len(configs) + 1)))
        i = 0
        for g, rep in enumerate(reps):
            group_x = _MARGIN_L + g * group_w + group_w / 2
            start = group_x - bar_w * len(configs) / 2
            for c in range(len(configs)):
                value = values[i]
                i += 1
                if value is None:
                    continue
                color = _PALETTE[c % len(_PALETTE)]
                y0, y1 = sorted((to_y(value), to_y(max(lo, 0.0))))
                parts.append(
                    f'<rect x="{start + c * bar_w:.1f}" y="{y0:.1f}" '
                    f'width="{bar_w:.1f}" height="{max(0.5, y1 - y0):.1f}" '
                    f'fill="{color}"/>'
                )
            parts.append(
                f'<text x="{group_x:.1f}" y="{bottom + 12}" text-anchor="middle">'
                f'{_esc(rep)}</text>'
            )

    parts.append("</svg>")
    return "\n".join(parts) + "\n"
