"""
Gráficos SVG determinísticos
============================

SVG emitido à mão (800×600), com eixos, marcas, legenda e escalas log
opcionais. Mesma entrada, mesmos bytes.
"""

from typing import List, Literal, Sequence, Tuple
from xml.sax.saxutils import escape

import numpy as np
from pydantic import BaseModel, Field

from kpp.errors import DataError

WIDTH = 800
HEIGHT = 600
MARGIN_LEFT = 90
MARGIN_RIGHT = 30
MARGIN_TOP = 50
MARGIN_BOTTOM = 70
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2")


class Series(BaseModel):
    name: str
    x: List[float]
    y: List[float]
    kind: Literal["line", "points"] = "line"


class PlotStyle(BaseModel):
    title: str = ""
    x_label: str = "x"
    y_label: str = "y"
    log_x: bool = False
    log_y: bool = False
    legend: bool = True
    ticks: int = Field(default=5, ge=2)


class SVG:
    """Acumulador de elementos SVG"""

    def __init__(self, width: int, height: int):
        self.svg = (
            '<?xml version="1.0" encoding="UTF-8" standalone="no"?>\n'
            f'<svg version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}" '
            'xmlns="http://www.w3.org/2000/svg">\n'
            f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>\n'
        )

    def line(self, x1, y1, x2, y2, stroke="black", width=1.0):
        self.svg += (f'<line x1="{x1:.2f}" y1="{y1:.2f}" x2="{x2:.2f}" y2="{y2:.2f}" '
                     f'stroke="{stroke}" stroke-width="{width:g}"/>\n')

    def rectangle(self, x, y, w, h, stroke="black"):
        self.svg += f'<rect x="{x:.2f}" y="{y:.2f}" width="{w:.2f}" height="{h:.2f}" fill="none" stroke="{stroke}"/>\n'

    def polyline(self, points: Sequence[Tuple[float, float]], stroke: str):
        coords = " ".join(f"{px:.2f},{py:.2f}" for px, py in points)
        self.svg += f'<polyline points="{coords}" fill="none" stroke="{stroke}" stroke-width="1.5"/>\n'

    def circle(self, cx, cy, stroke: str, radius=3.0):
        self.svg += f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{radius:g}" fill="none" stroke="{stroke}"/>\n'

    def text(self, x, y, string, anchor="middle", size=12, extra=""):
        self.svg += (f'<text x="{x:.2f}" y="{y:.2f}" font-family="sans-serif" font-size="{size}" '
                     f'text-anchor="{anchor}" {extra}>{escape(string)}</text>\n')

    def get_svg(self) -> str:
        return f"{self.svg}</svg>\n"


def _validate(series: Sequence[Series], style: PlotStyle) -> None:
    if not series:
        raise DataError("Nenhuma série para plotar")
    for s in series:
        if len(s.x) != len(s.y) or not s.x:
            raise DataError(f"Série '{s.name}' vazia ou com x e y de tamanhos diferentes")
        x = np.asarray(s.x, dtype=float)
        y = np.asarray(s.y, dtype=float)
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise DataError(f"Série '{s.name}' contém NaN ou infinito")
        if style.log_x and np.any(x <= 0):
            raise DataError(f"Série '{s.name}' tem x <= 0 em eixo logarítmico")
        if style.log_y and np.any(y <= 0):
            raise DataError(f"Série '{s.name}' tem y <= 0 em eixo logarítmico")


def _bounds(values: np.ndarray) -> Tuple[float, float]:
    lo, hi = float(values.min()), float(values.max())
    if lo == hi:
        pad = abs(lo) * 0.05 or 1.0
        return lo - pad, hi + pad
    return lo, hi


def _tick_label(value: float, log: bool) -> str:
    if log:
        return f"1e{value:g}" if abs(value - round(value)) < 1e-9 else f"{10 ** value:.3g}"
    return f"{value:.4g}"


def plot_svg(series: Sequence[Series], style: PlotStyle = PlotStyle()) -> str:
    """Documento SVG com uma polilinha por série de linha e círculos por série de pontos"""
    _validate(series, style)
    tx = np.log10 if style.log_x else np.asarray
    ty = np.log10 if style.log_y else np.asarray
    xs = [tx(np.asarray(s.x, dtype=float)) for s in series]
    ys = [ty(np.asarray(s.y, dtype=float)) for s in series]
    x_lo, x_hi = _bounds(np.concatenate(xs))
    y_lo, y_hi = _bounds(np.concatenate(ys))

    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def px(v):
        return MARGIN_LEFT + (v - x_lo) / (x_hi - x_lo) * plot_w

    def py(v):
        return MARGIN_TOP + plot_h - (v - y_lo) / (y_hi - y_lo) * plot_h

    svg = SVG(WIDTH, HEIGHT)
    svg.rectangle(MARGIN_LEFT, MARGIN_TOP, plot_w, plot_h)
    if style.title:
        svg.text(WIDTH / 2, MARGIN_TOP / 2 + 6, style.title, size=16)

    for v in np.linspace(x_lo, x_hi, style.ticks):
        svg.line(px(v), MARGIN_TOP + plot_h, px(v), MARGIN_TOP + plot_h + 6)
        svg.text(px(v), MARGIN_TOP + plot_h + 22, _tick_label(v, style.log_x))
    for v in np.linspace(y_lo, y_hi, style.ticks):
        svg.line(MARGIN_LEFT - 6, py(v), MARGIN_LEFT, py(v))
        svg.text(MARGIN_LEFT - 10, py(v) + 4, _tick_label(v, style.log_y), anchor="end")
    svg.text(MARGIN_LEFT + plot_w / 2, HEIGHT - 20, style.x_label + (" (log)" if style.log_x else ""))
    svg.text(22, MARGIN_TOP + plot_h / 2, style.y_label + (" (log)" if style.log_y else ""),
             extra=f'transform="rotate(-90 22 {MARGIN_TOP + plot_h / 2:.2f})"')

    for k, (s, x, y) in enumerate(zip(series, xs, ys)):
        color = PALETTE[k % len(PALETTE)]
        if s.kind == "line":
            svg.polyline([(px(a), py(b)) for a, b in zip(x, y)], color)
        else:
            for a, b in zip(x, y):
                svg.circle(px(a), py(b), color)
        if style.legend:
            ly = MARGIN_TOP + 16 + 18 * k
            svg.line(MARGIN_LEFT + plot_w - 150, ly - 4, MARGIN_LEFT + plot_w - 125, ly - 4, stroke=color, width=2)
            svg.text(MARGIN_LEFT + plot_w - 118, ly, s.name, anchor="start")

    return svg.get_svg()


def write_svg(path, series: Sequence[Series], style: PlotStyle = PlotStyle()) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(plot_svg(series, style))
