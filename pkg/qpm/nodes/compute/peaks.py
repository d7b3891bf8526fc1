"""Peaks node: refined maxima of |Y| over the upstream spectrum window."""

from typing import Any

from pydantic import BaseModel

from qpm.analysis import find_peaks
from qpm.nodes.base import BaseNode, NodeMeta, NodePort


class PeaksConfig(BaseModel):
    x_min: float | None = None
    x_max: float | None = None


class PeaksNode(BaseNode):
    config_model = PeaksConfig
    meta = NodeMeta(
        id="peaks",
        label="Peaks",
        category="compute",
        description="Locate and refine the maxima of |Y|, labelling twin pairs",
        inputs=[NodePort(name="in", description="SpectrumGrid")],
        outputs=[NodePort(name="out", description="Peak list and its JSON document")],
        config_schema=PeaksConfig.model_json_schema(),
    )

    def execute(self, inputs: dict[str, Any], config: dict[str, Any]) -> dict[str, Any]:
        grid = inputs.get("grid")
        if grid is None:
            raise ValueError("No input spectrum provided (missing 'grid' in inputs)")
        cfg = self.parse_config(config)
        x_min = cfg.x_min if cfg.x_min is not None else float(grid.x[0])
        x_max = cfg.x_max if cfg.x_max is not None else float(grid.x[-1])

        peaks = find_peaks(grid.spec, x_min, x_max)
        return {
            "peaks": peaks,
            "document": {
                "structure": grid.spec.model_dump(mode="json"),
                "window": [x_min, x_max],
                "peaks": [p.model_dump(mode="json") for p in peaks],
            },
        }
