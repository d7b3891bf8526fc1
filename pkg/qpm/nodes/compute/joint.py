"""Joint node: h(x1, x2) over a window, its dominant extrema and an oracle spot check."""

from typing import Any

from qpm.cascade import dominant_extrema, joint_grid, spot_check
from qpm.config import JointSection
from qpm.lattice import StructureSpec
from qpm.nodes.base import BaseNode, NodeMeta, NodePort
from qpm.spectral import feature_width

COLUMNS = ["x1", "x2", "h"]


class JointConfig(JointSection):
    structure: StructureSpec


class JointNode(BaseNode):
    config_model = JointConfig
    meta = NodeMeta(
        id="joint",
        label="Joint spectrum",
        category="compute",
        description="Separable joint function h = (MN)^2 Y(x1) Y(x2)",
        inputs=[],
        outputs=[NodePort(name="out", description="JointGrid, row-major table and extrema document")],
        config_schema=JointConfig.model_json_schema(),
    )

    def execute(self, inputs: dict[str, Any], config: dict[str, Any]) -> dict[str, Any]:
        cfg = self.parse_config(config)
        grid = joint_grid(cfg.structure, cfg.x1, cfg.x2, cfg.samples)
        check = spot_check(grid, cfg.spot_check_fraction)

        # extrema need a window at least one feature wide on both axes
        width = feature_width(cfg.structure)
        extrema = []
        if cfg.x1[1] - cfg.x1[0] >= width and cfg.x2[1] - cfg.x2[0] >= width:
            extrema = dominant_extrema(cfg.structure, cfg.x1, cfg.x2, cfg.extrema)

        return {
            "joint": grid,
            "table": grid.rows(),
            "columns": COLUMNS,
            "rows": grid.h.size,
            "document": {
                "structure": cfg.structure.model_dump(mode="json"),
                "x1": list(cfg.x1),
                "x2": list(cfg.x2),
                "extrema": [e.model_dump() for e in extrema],
                "spot_check": check.model_dump(),
            },
        }
