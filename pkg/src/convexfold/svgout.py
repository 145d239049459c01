"""Minimal SVG emission for bodies, caps, reflections and level sets."""

from __future__ import annotations

from pathlib import Path

import numpy as np


class SvgCanvas:
    """Collects shapes in world coordinates and writes an autoscaled SVG."""

    def __init__(self, size: int = 640, pad: float = 0.05):
        self.size = size
        self.pad = pad
        self.items: list[tuple] = []
        self._pts: list[np.ndarray] = []

    def polygon(self, vertices, stroke="#1f3d7a", fill="none", width=1.5, opacity=1.0):
        v = np.atleast_2d(np.asarray(vertices, dtype=float))
        if len(v) == 0:
            return
        self.items.append(("polygon", v, stroke, fill, width, opacity))
        self._pts.append(v)

    def segment(self, a, b, stroke="#b33", width=1.5, dash=None):
        v = np.array([a, b], dtype=float)
        self.items.append(("segment", v, stroke, width, dash))
        self._pts.append(v)

    def point(self, xy, color="#000", radius=2.5):
        v = np.asarray(xy, dtype=float)[None, :]
        self.items.append(("point", v, color, radius))
        self._pts.append(v)

    def _mapper(self):
        allpts = np.vstack(self._pts) if self._pts else np.zeros((1, 2))
        lo = allpts.min(axis=0)
        hi = allpts.max(axis=0)
        span = np.maximum(hi - lo, 1e-12)
        s = (1 - 2 * self.pad) * self.size / span.max()
        off = 0.5 * (self.size - s * (hi - lo)) - s * lo

        def world_to_svg(pts):
            out = pts * s + off
            out[:, 1] = self.size - out[:, 1]  # y up
            return out

        return world_to_svg

    def write(self, path) -> None:
        to_svg = self._mapper()
        lines = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.size}" '
            f'height="{self.size}" viewBox="0 0 {self.size} {self.size}">'
        ]
        for item in self.items:
            kind = item[0]
            if kind == "polygon":
                _, v, stroke, fill, width, opacity = item
                pts = " ".join(f"{x:.3f},{y:.3f}" for x, y in to_svg(v.copy()))
                lines.append(
                    f'<polygon points="{pts}" stroke="{stroke}" fill="{fill}" '
                    f'stroke-width="{width}" fill-opacity="{opacity}"/>'
                )
            elif kind == "segment":
                _, v, stroke, width, dash = item
                (x1, y1), (x2, y2) = to_svg(v.copy())
                extra = f' stroke-dasharray="{dash}"' if dash else ""
                lines.append(
                    f'<line x1="{x1:.3f}" y1="{y1:.3f}" x2="{x2:.3f}" y2="{y2:.3f}" '
                    f'stroke="{stroke}" stroke-width="{width}"{extra}/>'
                )
            elif kind == "point":
                _, v, color, radius = item
                (x, y), = to_svg(v.copy())
                lines.append(f'<circle cx="{x:.3f}" cy="{y:.3f}" r="{radius}" fill="{color}"/>')
        lines.append("</svg>")
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text("\n".join(lines) + "\n")
