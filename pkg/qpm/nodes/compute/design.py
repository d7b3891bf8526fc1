"""Design node: searches (l, N, M) that double-phase-match a pair of mismatches."""

from typing import Any

from qpm.analysis import DesignSettings, design_search
from qpm.cascade import get_scenario
from qpm.config import DesignSection
from qpm.nodes.base import BaseNode, NodeMeta, NodePort

NO_DESIGN = "no design found"


class DesignNode(BaseNode):
    config_model = DesignSection
    meta = NodeMeta(
        id="design",
        label="Design search",
        category="compute",
        description="Enumerate lattices placing dk1 on a peak and rank how well dk2 lands",
        inputs=[],
        outputs=[NodePort(name="out", description="Ranked DesignResult list and its JSON document")],
        config_schema=DesignSection.model_json_schema(),
    )

    def execute(self, inputs: dict[str, Any], config: dict[str, Any]) -> dict[str, Any]:
        cfg = self.parse_config(config)
        if cfg.dk1 is not None:
            dk1, dk2, source = cfg.dk1, cfg.dk2, "explicit"
        else:
            scenario = get_scenario(cfg.scenario)
            dk1, dk2, source = scenario.dk1, scenario.dk2, scenario.name

        settings = DesignSettings(max_results=cfg.max_results, side_orders=cfg.side_orders,
                                  allow_odd=cfg.allow_odd, workers=cfg.workers,
                                  min_height=cfg.min_height)
        designs = design_search(dk1, dk2, cfg.l_range, cfg.n_range, cfg.m_range, settings)

        document: dict[str, Any] = {
            "dk1": dk1,
            "dk2": dk2,
            "source": source,
            "l_range": list(cfg.l_range),
            "n_range": list(cfg.n_range),
            "m_range": list(cfg.m_range),
            "min_height": cfg.min_height,
            "status": "ok" if designs else NO_DESIGN,
            "designs": [d.model_dump(mode="json") for d in designs],
        }
        return {"designs": designs, "document": document, "rows": len(designs)}
