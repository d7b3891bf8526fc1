"""Tests for compute nodes and the export, chart and table output nodes."""

import csv
import json
import xml.etree.ElementTree as ET

import pytest

from qpm.analysis import design_search
from qpm.cascade import joint_grid
from qpm.engine.executor import PipelineExecutor
from qpm.nodes.compute.design import NO_DESIGN, DesignNode
from qpm.nodes.compute.joint import JointNode
from qpm.nodes.compute.verify import VerifyNode, perturbed
from qpm.nodes.outputs.chart import ChartNode
from qpm.nodes.outputs.export import ExportNode, format_value
from qpm.nodes.outputs.table import HEADER, TableNode, render
from qpm.spectral import g_effective, spectrum_grid

SVG = "{http://www.w3.org/2000/svg}"
STRUCTURE = {"l": 10.25, "n": 22, "m": 8}


# ---------------------------------------------------------------------------
# Compute nodes
# ---------------------------------------------------------------------------

class TestJointNode:
    def test_document(self):
        out = JointNode().execute({}, {"structure": STRUCTURE, "x1": [1.0, 2.0], "x2": [1.0, 2.0],
                                       "samples": [101, 101]})
        doc = out["document"]
        assert out["rows"] == 101 * 101
        assert len(doc["extrema"]) == 4
        assert doc["spot_check"]["max_dev"] < 1e-9

    def test_narrow_window_skips_extrema(self):
        out = JointNode().execute({}, {"structure": STRUCTURE, "x1": [1.5, 1.5], "x2": [1.0, 2.0],
                                       "samples": [1, 51]})
        assert out["document"]["extrema"] == []
        assert out["joint"].h.shape == (1, 51)


class TestVerifyNode:
    def test_passes(self):
        out = VerifyNode().execute({}, {"structure": STRUCTURE, "samples": 128, "random_samples": 500})
        assert out["passed"]
        assert out["document"]["offenders"] == []
        assert out["rows"] == 128

    def test_perturbation_fails(self):
        out = VerifyNode().execute({}, {"structure": STRUCTURE, "samples": 128, "random_samples": 0,
                                        "fourier_order": None, "perturb": 1e-6})
        assert not out["passed"]
        assert [c["name"] for c in out["document"]["offenders"]] == ["closed_vs_segment_sum"]

    def test_perturbed_closed_form(self, opposite_spec):
        assert perturbed(0.5)(0.3, opposite_spec) == pytest.approx(1.5 * g_effective(0.3, opposite_spec))


class TestDesignNode:
    def test_scenario(self):
        out = DesignNode().execute({}, {"scenario": "triplet", "n_range": [22, 22], "m_range": [9, 9]})
        doc = out["document"]
        assert doc["source"] == "triplet"
        assert doc["status"] == "ok"
        assert (doc["dk1"], doc["dk2"]) == (0.32, 0.87)

    def test_no_design(self):
        out = DesignNode().execute({}, {"dk1": 0.32, "dk2": 0.87, "l_range": [1.0, 1.1],
                                        "n_range": [22, 22], "m_range": [8, 8]})
        assert out["document"]["status"] == NO_DESIGN
        assert out["designs"] == []

    def test_unknown_scenario(self):
        with pytest.raises(ValueError):
            DesignNode().execute({}, {"scenario": "sfg"})


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

class TestExportNode:
    def test_csv(self, tmp_path, opposite_spec):
        grid = spectrum_grid(opposite_spec, 1.0, 2.0, samples=21)
        path = tmp_path / "s.csv"
        out = ExportNode().execute(
            {"table": grid.rows(), "columns": ["dk", "x", "y", "re_g", "im_g", "abs_g"]},
            {"format": "csv", "output_path": str(path)},
        )
        assert out["rows"] == 21
        assert out["size"] == path.stat().st_size
        with open(path, newline="") as f:
            rows = list(csv.DictReader(f))
        assert list(rows[0]) == ["dk", "x", "y", "re_g", "im_g", "abs_g"]
        assert float(rows[5]["y"]) == grid.y[5]
        assert b"\r\n" not in path.read_bytes()

    def test_json(self, tmp_path):
        path = tmp_path / "d.json"
        ExportNode().execute({"document": {"a": [1, 2]}}, {"format": "json", "output_path": str(path)})
        assert json.loads(path.read_text()) == {"a": [1, 2]}
        assert path.read_text().endswith("\n")

    def test_missing_input(self, tmp_path):
        with pytest.raises(ValueError, match="table"):
            ExportNode().execute({}, {"format": "csv", "output_path": str(tmp_path / "x.csv")})
        with pytest.raises(ValueError, match="document"):
            ExportNode().execute({}, {"format": "json", "output_path": str(tmp_path / "x.json")})

    def test_unwritable_path(self, tmp_path):
        with pytest.raises(OSError):
            ExportNode().execute({"document": {}}, {"format": "json",
                                                    "output_path": str(tmp_path / "missing" / "x.json")})

    def test_float_format_roundtrips(self):
        value = 0.1 + 0.2
        assert float(format_value(value)) == value
        assert format_value(3) == 3


# ---------------------------------------------------------------------------
# Chart
# ---------------------------------------------------------------------------

class TestChartNode:
    def test_line_chart_with_inset(self, tmp_path, registry):
        path = tmp_path / "s.svg"
        pipeline = {
            "nodes": [
                {"id": "s", "type": "spectrum", "config": {"structure": STRUCTURE, "x_min": 0.0, "x_max": 3.0}},
                {"id": "p", "type": "peaks", "config": {"x_min": 1.3, "x_max": 1.8}},
                {"id": "c", "type": "chart", "config": {"chart_type": "line", "output_path": str(path),
                                                        "title": "Y", "inset": [1.4, 1.75]}},
            ],
            "edges": [{"source": "s", "target": "p"}, {"source": "s", "target": "c"},
                      {"source": "p", "target": "c"}],
        }
        results = PipelineExecutor(registry).run(pipeline)
        assert results["c"]["chart_type"] == "line"
        root = ET.parse(path).getroot()
        assert root.tag == f"{SVG}svg"
        inset = root.find(f"{SVG}g[@id='inset']")
        assert inset is not None
        assert len(inset.findall(f"{SVG}circle")) == 2

    def test_heatmap(self, tmp_path, opposite_spec):
        path = tmp_path / "h.svg"
        grid = joint_grid(opposite_spec, (1.0, 2.0), (1.0, 2.0), (201, 201))
        ChartNode().execute({"joint": grid}, {"chart_type": "heatmap", "output_path": str(path), "max_cells": 50})
        root = ET.parse(path).getroot()
        cells = root.find(f"{SVG}g[@id='cells']")
        assert len(cells.findall(f"{SVG}rect")) == 50 * 50
        fills = {r.get("fill") for r in cells}
        assert "#ffffff" in fills or len(fills) > 2

    def test_missing_input(self, tmp_path):
        with pytest.raises(ValueError, match="grid"):
            ChartNode().execute({}, {"chart_type": "line", "output_path": str(tmp_path / "a.svg")})
        with pytest.raises(ValueError, match="joint"):
            ChartNode().execute({}, {"chart_type": "heatmap", "output_path": str(tmp_path / "a.svg")})


# ---------------------------------------------------------------------------
# Table
# ---------------------------------------------------------------------------

class TestTableNode:
    def test_render(self, tmp_path):
        designs = design_search(0.32, 0.87, (5.0, 15.0), (22, 22), (8, 9))
        path = tmp_path / "t.txt"
        out = TableNode().execute({"designs": designs}, {"page_size": 3, "output_path": str(path)})
        lines = out["text"].splitlines()
        assert lines[0].split() == list(HEADER)
        assert len(lines) == 1 + min(3, len(designs))
        assert out["total"] == len(designs)
        assert path.read_text() == out["text"]

    def test_empty(self):
        assert render([]) == "no design found\n"
        assert TableNode().execute({"designs": []}, {})["rows"] == 0
