"""Minimal SVG line plots with min/max bands across seeds (no plotting library needed)."""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

from .sim import MetricsTimeline

WIDTH, HEIGHT, PAD = 640, 360, 50
COLORS = {"resilient": "#c0392b", "nonresilient": "#2e6fbf"}


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def band_plot(timelines: dict[tuple[str, int], MetricsTimeline], metric: str, ylabel: str) -> str:
    """Mean curve per mode with the min-max spread over seeds shaded."""
    by_mode: dict[str, np.ndarray] = {}
    for mode in sorted({m for m, _ in timelines}):
        rows = [getattr(timelines[k], metric) for k in sorted(timelines) if k[0] == mode]
        by_mode[mode] = np.vstack(rows)
    steps = next(iter(by_mode.values())).shape[1]
    lo = min(float(a.min()) for a in by_mode.values())
    hi = max(float(a.max()) for a in by_mode.values())
    if hi == lo:
        hi = lo + 1.0
    sx = (WIDTH - 2 * PAD) / max(steps - 1, 1)
    sy = (HEIGHT - 2 * PAD) / (hi - lo)

    def pt(t: int, v: float) -> str:
        return f"{_fmt(PAD + t * sx)},{_fmt(HEIGHT - PAD - (v - lo) * sy)}"

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<line x1="{PAD}" y1="{HEIGHT - PAD}" x2="{WIDTH - PAD}" y2="{HEIGHT - PAD}" stroke="black"/>',
        f'<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{HEIGHT - PAD}" stroke="black"/>',
        f'<text x="{WIDTH / 2}" y="{HEIGHT - 12}" text-anchor="middle" font-size="12">step</text>',
        f'<text x="14" y="{HEIGHT / 2}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {HEIGHT / 2})">{escape(ylabel)}</text>',
        f'<text x="{PAD - 4}" y="{HEIGHT - PAD}" text-anchor="end" font-size="10">{_fmt(lo)}</text>',
        f'<text x="{PAD - 4}" y="{PAD + 4}" text-anchor="end" font-size="10">{_fmt(hi)}</text>',
        f'<text x="{WIDTH - PAD}" y="{HEIGHT - PAD + 14}" text-anchor="end" font-size="10">{steps}</text>',
    ]
    for k, (mode, arr) in enumerate(by_mode.items()):
        color = COLORS.get(mode, "#555555")
        upper = [pt(t, v) for t, v in enumerate(arr.max(axis=0))]
        lower = [pt(t, v) for t, v in enumerate(arr.min(axis=0))][::-1]
        parts.append(f'<polygon points="{" ".join(upper + lower)}" fill="{color}" fill-opacity="0.2" stroke="none"/>')
        mean = [pt(t, v) for t, v in enumerate(arr.mean(axis=0))]
        parts.append(f'<polyline points="{" ".join(mean)}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        parts.append(f'<text x="{WIDTH - PAD - 4}" y="{PAD + 14 * (k + 1)}" text-anchor="end" '
                     f'font-size="11" fill="{color}">{escape(mode)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
