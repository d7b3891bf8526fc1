"""Export output node: writes the upstream table to CSV or its document to JSON."""

import csv
import json
import logging
import os
from typing import Any, Literal

from pydantic import BaseModel

from qpm.nodes.base import BaseNode, NodeMeta, NodePort

logger = logging.getLogger(__name__)


class ExportConfig(BaseModel):
    format: Literal["csv", "json"] = "csv"
    output_path: str


class ExportNode(BaseNode):
    config_model = ExportConfig
    meta = NodeMeta(
        id="export",
        label="Export",
        category="output",
        description="Export a table to CSV or a document to JSON",
        inputs=[NodePort(name="in", description="'table' + 'columns' for CSV, 'document' for JSON")],
        outputs=[],
        config_schema=ExportConfig.model_json_schema(),
    )

    def execute(self, inputs: dict[str, Any], config: dict[str, Any]) -> dict[str, Any]:
        cfg = self.parse_config(config)

        if cfg.format == "csv":
            table = inputs.get("table")
            if table is None:
                raise ValueError("No input table provided (missing 'table' in inputs)")
            columns = inputs.get("columns") or (list(table[0]) if table else [])
            _write_csv(cfg.output_path, columns, table)
            n = len(table)
        else:
            document = inputs.get("document")
            if document is None:
                raise ValueError("No input document provided (missing 'document' in inputs)")
            _write_json(cfg.output_path, document)
            n = len(document) if isinstance(document, list) else 1

        size = os.path.getsize(cfg.output_path)
        logger.info("wrote %s (%d bytes)", cfg.output_path, size)
        return {
            "path": cfg.output_path,
            "size": size,
            "format": cfg.format,
            "rows": n,
        }


def format_value(value: Any) -> Any:
    """Floats with 17 significant digits so identical runs give identical bytes."""
    if isinstance(value, float):
        return format(value, ".17g")
    return value


def _write_csv(path: str, columns: list[str], rows: list[dict]) -> None:
    """Write rows to a CSV file with '\\n' line endings."""
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        writer.writerows({k: format_value(row[k]) for k in columns} for row in rows)


def _write_json(path: str, document: Any) -> None:
    """Write a document to a JSON file."""
    with open(path, "w") as f:
        json.dump(document, f, indent=2)
        f.write("\n")
