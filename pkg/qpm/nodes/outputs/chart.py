"""Chart output node: writes static SVG line plots and signed heatmaps."""

import logging
import os
import xml.etree.ElementTree as ET
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, Field

from qpm.nodes.base import BaseNode, NodeMeta, NodePort

logger = logging.getLogger(__name__)

SVG_NS = "http://www.w3.org/2000/svg"
MARGIN = 56


class ChartConfig(BaseModel):
    chart_type: Literal["line", "heatmap"] = "line"
    output_path: str
    title: str = ""
    width: int = Field(default=900, ge=200)
    height: int = Field(default=450, ge=150)
    inset: tuple[float, float] | None = Field(default=None, description="x window magnified in a corner panel")
    max_cells: int = Field(default=120, ge=1, description="heatmap cells per axis")


class ChartNode(BaseNode):
    config_model = ChartConfig
    meta = NodeMeta(
        id="chart",
        label="Chart",
        category="output",
        description="Render Y(x) as a line plot or h(x1, x2) as a heatmap, to SVG",
        inputs=[NodePort(name="in", description="'grid' (+ optional 'peaks') or 'joint'")],
        outputs=[],
        config_schema=ChartConfig.model_json_schema(),
    )

    def execute(self, inputs: dict[str, Any], config: dict[str, Any]) -> dict[str, Any]:
        cfg = self.parse_config(config)

        if cfg.chart_type == "line":
            grid = inputs.get("grid")
            if grid is None:
                raise ValueError("No input spectrum provided (missing 'grid' in inputs)")
            root = _line_chart(np.asarray(grid.x), np.asarray(grid.y), cfg, inputs.get("peaks") or [])
        else:
            joint = inputs.get("joint")
            if joint is None:
                raise ValueError("No input joint grid provided (missing 'joint' in inputs)")
            root = _heatmap(np.asarray(joint.x1_axis), np.asarray(joint.x2_axis), np.asarray(joint.h), cfg)

        tree = ET.ElementTree(root)
        ET.indent(tree)
        tree.write(cfg.output_path, encoding="utf-8", xml_declaration=True)
        size = os.path.getsize(cfg.output_path)
        logger.info("wrote %s (%d bytes)", cfg.output_path, size)
        return {"path": cfg.output_path, "size": size, "chart_type": cfg.chart_type}


def _svg(width: int, height: int, title: str) -> ET.Element:
    root = ET.Element("svg", {
        "xmlns": SVG_NS,
        "width": str(width),
        "height": str(height),
        "viewBox": f"0 0 {width} {height}",
        "font-family": "sans-serif",
        "font-size": "11",
    })
    ET.SubElement(root, "rect", {"width": str(width), "height": str(height), "fill": "white"})
    if title:
        t = ET.SubElement(root, "text", {"x": str(width / 2), "y": "20", "text-anchor": "middle", "font-size": "14"})
        t.text = title
    return root


class _Frame:
    """Maps data coordinates into a pixel rectangle."""

    def __init__(self, left, top, width, height, x_lim, y_lim):
        self.left, self.top, self.width, self.height = left, top, width, height
        self.x_lim, self.y_lim = x_lim, y_lim

    def px(self, x):
        x0, x1 = self.x_lim
        return self.left + (np.asarray(x) - x0) / (x1 - x0) * self.width

    def py(self, y):
        y0, y1 = self.y_lim
        return self.top + (1.0 - (np.asarray(y) - y0) / (y1 - y0)) * self.height


def _axes(parent: ET.Element, frame: _Frame, x_label: str, y_label: str, ticks: int = 5) -> None:
    ET.SubElement(parent, "rect", {
        "x": f"{frame.left:.2f}", "y": f"{frame.top:.2f}",
        "width": f"{frame.width:.2f}", "height": f"{frame.height:.2f}",
        "fill": "none", "stroke": "black",
    })
    bottom = frame.top + frame.height
    for v in np.linspace(*frame.x_lim, ticks):
        x = float(frame.px(v))
        ET.SubElement(parent, "line", {"x1": f"{x:.2f}", "y1": f"{bottom:.2f}",
                                       "x2": f"{x:.2f}", "y2": f"{bottom + 4:.2f}", "stroke": "black"})
        t = ET.SubElement(parent, "text", {"x": f"{x:.2f}", "y": f"{bottom + 16:.2f}", "text-anchor": "middle"})
        t.text = f"{v:.3g}"
    for v in np.linspace(*frame.y_lim, ticks):
        y = float(frame.py(v))
        ET.SubElement(parent, "line", {"x1": f"{frame.left - 4:.2f}", "y1": f"{y:.2f}",
                                       "x2": f"{frame.left:.2f}", "y2": f"{y:.2f}", "stroke": "black"})
        t = ET.SubElement(parent, "text", {"x": f"{frame.left - 6:.2f}", "y": f"{y + 4:.2f}", "text-anchor": "end"})
        t.text = f"{v:.3g}"
    if x_label:
        t = ET.SubElement(parent, "text", {"x": f"{frame.left + frame.width / 2:.2f}", "y": f"{bottom + 32:.2f}",
                                           "text-anchor": "middle"})
        t.text = x_label
    if y_label:
        t = ET.SubElement(parent, "text", {"x": f"{frame.left - 40:.2f}", "y": f"{frame.top + frame.height / 2:.2f}",
                                           "text-anchor": "middle",
                                           "transform": f"rotate(-90 {frame.left - 40:.2f} {frame.top + frame.height / 2:.2f})"})
        t.text = y_label


def _polyline(parent: ET.Element, frame: _Frame, x: np.ndarray, y: np.ndarray, colour: str) -> None:
    points = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(frame.px(x), frame.py(y)))
    ET.SubElement(parent, "polyline", {"points": points, "fill": "none", "stroke": colour, "stroke-width": "1"})


def _y_limits(y: np.ndarray) -> tuple[float, float]:
    top = float(np.max(np.abs(y))) if y.size else 1.0
    top = top * 1.05 if top > 0 else 1.0
    return -top, top


def _line_chart(x: np.ndarray, y: np.ndarray, cfg: ChartConfig, peaks: list) -> ET.Element:
    root = _svg(cfg.width, cfg.height, cfg.title)
    x_lim = (float(x[0]), float(x[-1])) if x[-1] > x[0] else (float(x[0]) - 0.5, float(x[0]) + 0.5)
    frame = _Frame(MARGIN, 32, cfg.width - 2 * MARGIN, cfg.height - 32 - MARGIN, x_lim, _y_limits(y))
    _axes(root, frame, "x = l dk / 2", "Y")
    zero = float(frame.py(0.0))
    ET.SubElement(root, "line", {"x1": f"{frame.left:.2f}", "y1": f"{zero:.2f}",
                                 "x2": f"{frame.left + frame.width:.2f}", "y2": f"{zero:.2f}",
                                 "stroke": "#999", "stroke-dasharray": "3,3"})
    _polyline(root, frame, x, y, "#1f4e9c")

    if cfg.inset is not None:
        lo, hi = cfg.inset
        ET.SubElement(root, "rect", {
            "x": f"{float(frame.px(lo)):.2f}", "y": f"{frame.top:.2f}",
            "width": f"{float(frame.px(hi) - frame.px(lo)):.2f}", "height": f"{frame.height:.2f}",
            "fill": "#f5a623", "fill-opacity": "0.12", "stroke": "#f5a623",
        })
        mask = (x >= lo) & (x <= hi)
        if mask.sum() >= 2:
            panel = ET.SubElement(root, "g", {"id": "inset"})
            w, h = frame.width * 0.32, frame.height * 0.38
            inner = _Frame(frame.left + frame.width - w - 8, frame.top + 8, w, h, (lo, hi), _y_limits(y[mask]))
            ET.SubElement(panel, "rect", {"x": f"{inner.left - 30:.2f}", "y": f"{inner.top - 4:.2f}",
                                          "width": f"{inner.width + 34:.2f}", "height": f"{inner.height + 26:.2f}",
                                          "fill": "white", "stroke": "#f5a623"})
            _axes(panel, inner, "", "", ticks=3)
            _polyline(panel, inner, x[mask], y[mask], "#1f4e9c")
            for p in peaks:
                if p.is_twin and lo <= p.x <= hi:
                    cx, cy = float(inner.px(p.x)), float(inner.py(p.height))
                    ET.SubElement(panel, "circle", {"cx": f"{cx:.2f}", "cy": f"{cy:.2f}", "r": "3", "fill": "#c0392b"})
                    t = ET.SubElement(panel, "text", {"x": f"{cx:.2f}", "y": f"{cy - 6:.2f}",
                                                      "text-anchor": "middle", "font-size": "9"})
                    t.text = f"{p.x:.4f}"
    return root


def _colour(value: float, vmax: float) -> str:
    """Diverging blue-white-red scale centred at 0."""
    t = 0.0 if vmax == 0 else max(-1.0, min(1.0, value / vmax))
    if t >= 0:
        r, g, b = 255, round(255 * (1 - t)), round(255 * (1 - t))
    else:
        r, g, b = round(255 * (1 + t)), round(255 * (1 + t)), 255
    return f"#{r:02x}{g:02x}{b:02x}"


def _block_extremes(h: np.ndarray, max_cells: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Shrink h to at most max_cells per axis, keeping the signed value of largest magnitude per block."""
    rows = np.array_split(np.arange(h.shape[0]), min(max_cells, h.shape[0]))
    cols = np.array_split(np.arange(h.shape[1]), min(max_cells, h.shape[1]))
    out = np.empty((len(rows), len(cols)))
    for i, r in enumerate(rows):
        for j, c in enumerate(cols):
            block = h[np.ix_(r, c)]
            out[i, j] = block.flat[int(np.argmax(np.abs(block)))]
    return out, np.array([r[0] for r in rows]), np.array([c[0] for c in cols])


def _heatmap(x1: np.ndarray, x2: np.ndarray, h: np.ndarray, cfg: ChartConfig) -> ET.Element:
    root = _svg(cfg.width, cfg.height, cfg.title)
    cells, ri, ci = _block_extremes(h, cfg.max_cells)
    vmax = float(np.max(np.abs(h))) if h.size else 0.0

    side = min(cfg.width - 2 * MARGIN - 80, cfg.height - 32 - MARGIN)
    x_lim = (float(x1[0]), float(x1[-1])) if len(x1) > 1 else (float(x1[0]) - 0.5, float(x1[0]) + 0.5)
    y_lim = (float(x2[0]), float(x2[-1])) if len(x2) > 1 else (float(x2[0]) - 0.5, float(x2[0]) + 0.5)
    frame = _Frame(MARGIN, 32, side, side, x_lim, y_lim)

    cw = side / cells.shape[0]
    ch = side / cells.shape[1]
    heat = ET.SubElement(root, "g", {"id": "cells", "shape-rendering": "crispEdges"})
    for i in range(cells.shape[0]):
        for j in range(cells.shape[1]):
            # x1 runs along the horizontal axis, x2 upwards
            ET.SubElement(heat, "rect", {
                "x": f"{frame.left + i * cw:.2f}", "y": f"{frame.top + side - (j + 1) * ch:.2f}",
                "width": f"{cw:.2f}", "height": f"{ch:.2f}", "fill": _colour(float(cells[i, j]), vmax),
            })
    _axes(root, frame, "x1", "x2")

    # colour bar
    bar_x = frame.left + side + 24
    steps = 32
    for k in range(steps):
        v = vmax * (1 - 2 * (k + 0.5) / steps)
        ET.SubElement(root, "rect", {"x": f"{bar_x:.2f}", "y": f"{frame.top + k * side / steps:.2f}",
                                     "width": "14", "height": f"{side / steps + 0.5:.2f}", "fill": _colour(v, vmax)})
    for v, y in ((vmax, frame.top), (0.0, frame.top + side / 2), (-vmax, frame.top + side)):
        t = ET.SubElement(root, "text", {"x": f"{bar_x + 18:.2f}", "y": f"{y + 4:.2f}"})
        t.text = f"{v:.3g}"
    return root
