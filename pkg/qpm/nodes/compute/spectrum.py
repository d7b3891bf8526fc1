"""Spectrum node: evaluates Y and G over an x window."""

from typing import Any

from qpm.config import SpectrumSection
from qpm.lattice import StructureSpec
from qpm.nodes.base import BaseNode, NodeMeta, NodePort
from qpm.spectral import spectrum_grid

COLUMNS = ["dk", "x", "y", "re_g", "im_g", "abs_g"]


class SpectrumConfig(SpectrumSection):
    structure: StructureSpec


class SpectrumNode(BaseNode):
    config_model = SpectrumConfig
    meta = NodeMeta(
        id="spectrum",
        label="Spectrum",
        category="compute",
        description="Closed-form Y(x) and G(dk) of a phase-reversed lattice",
        inputs=[],
        outputs=[NodePort(name="out", description="SpectrumGrid plus its CSV table")],
        config_schema=SpectrumConfig.model_json_schema(),
    )

    def execute(self, inputs: dict[str, Any], config: dict[str, Any]) -> dict[str, Any]:
        cfg = self.parse_config(config)
        grid = spectrum_grid(cfg.structure, cfg.x_min, cfg.x_max, cfg.samples, uniform=cfg.uniform)
        return {
            "grid": grid,
            "table": grid.rows(),
            "columns": COLUMNS,
            "rows": len(grid.x),
        }
