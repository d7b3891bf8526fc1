"""Pipeline node contract.

A node takes the merged outputs of its upstream nodes (spectrum grids,
peak lists, design rankings, verification summaries) and its own config
dict, and returns a dict of named outputs. Compute nodes evaluate a
lattice; output nodes write files.
"""

from typing import Any, Literal

from pydantic import BaseModel, Field


class NodePort(BaseModel):
    name: str
    description: str = ""


class NodeMeta(BaseModel):
    id: str                                          # e.g. "spectrum"
    label: str
    category: Literal["compute", "output"]
    description: str = ""
    inputs: list[NodePort] = Field(default_factory=list)
    outputs: list[NodePort] = Field(default_factory=list)
    config_schema: dict[str, Any] = Field(default_factory=dict)  # JSON Schema of config_model


class BaseNode:
    """One step of a qpm pipeline.

    Subclasses set `meta` and override `execute()`. With a pydantic
    `config_model`, `parse_config()` validates the node's config section;
    invalid configs raise pydantic.ValidationError.
    """

    meta: NodeMeta
    config_model: type[BaseModel] | None = None

    def parse_config(self, config: dict[str, Any]) -> Any:
        if self.config_model is None:
            return config
        return self.config_model.model_validate(config)

    def execute(self, inputs: dict[str, Any], config: dict[str, Any]) -> dict[str, Any]:
        raise NotImplementedError
