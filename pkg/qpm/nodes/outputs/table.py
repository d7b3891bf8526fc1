"""Table output node: fixed-width text table of ranked designs."""

import logging
from pathlib import Path
from typing import Any

from pydantic import BaseModel, Field

from qpm.nodes.base import BaseNode, NodeMeta, NodePort

logger = logging.getLogger(__name__)

HEADER = ("rank", "l_um", "N", "M", "x1_peak", "x2_peak", "r1", "r2", "score")


class TableConfig(BaseModel):
    page_size: int = Field(default=100, ge=1)
    output_path: str | None = None


class TableNode(BaseNode):
    config_model = TableConfig
    meta = NodeMeta(
        id="table",
        label="Design table",
        category="output",
        description="Render ranked designs as a human-readable table",
        inputs=[NodePort(name="in", description="'designs' list")],
        outputs=[],
        config_schema=TableConfig.model_json_schema(),
    )

    def execute(self, inputs: dict[str, Any], config: dict[str, Any]) -> dict[str, Any]:
        cfg = self.parse_config(config)
        designs = inputs.get("designs")
        if designs is None:
            raise ValueError("No input designs provided (missing 'designs' in inputs)")

        text = render(designs[:cfg.page_size])
        if cfg.output_path:
            Path(cfg.output_path).write_text(text)
            logger.info("wrote %s", cfg.output_path)
        return {"text": text, "rows": min(len(designs), cfg.page_size), "total": len(designs)}


def render(designs: list) -> str:
    if not designs:
        return "no design found\n"
    lines = [HEADER]
    for rank, d in enumerate(designs, start=1):
        p1, p2 = d.matched_peaks
        lines.append((
            str(rank), f"{d.spec.l:.4f}", str(d.spec.n), str(d.spec.m),
            f"{p1.x:.5f}", f"{p2.x:.5f}",
            f"{d.residuals[0]:.2e}", f"{d.residuals[1]:.2e}", f"{d.score:.4f}",
        ))
    widths = [max(len(row[k]) for row in lines) for k in range(len(HEADER))]
    return "".join("  ".join(cell.rjust(w) for cell, w in zip(row, widths)) + "\n" for row in lines)
