"""Index of the pipeline node types, found by scanning the qpm.nodes packages.

Compute nodes (spectrum, peaks, joint, design, verify) live in
qpm.nodes.compute; writers (export, chart, table) in qpm.nodes.outputs. A
node type is any BaseNode subclass with a NodeMeta, registered under its
meta.id.
"""

import importlib
import logging
import pkgutil
from typing import Any

from qpm.nodes.base import BaseNode

logger = logging.getLogger(__name__)

# package -> category its nodes must declare
NODE_PACKAGES = {
    "qpm.nodes.compute": "compute",
    "qpm.nodes.outputs": "output",
}


def _node_classes(module) -> list[type[BaseNode]]:
    """BaseNode subclasses defined in module itself, not imported into it."""
    found = []
    for name in dir(module):
        attr = getattr(module, name)
        if (isinstance(attr, type) and issubclass(attr, BaseNode) and attr is not BaseNode
                and attr.__module__ == module.__name__ and hasattr(attr, "meta")):
            found.append(attr)
    return found


class NodeRegistry:
    """Node types by id."""

    def __init__(self):
        self.node_types: dict[str, type[BaseNode]] = {}

    def register(self, cls: type[BaseNode], category: str | None = None) -> None:
        """Add one node type; ids are unique and categories must match their package."""
        node_id = cls.meta.id
        if category is not None and cls.meta.category != category:
            raise ValueError(f"node {node_id!r} declares category {cls.meta.category!r}, "
                             f"expected {category!r}")
        existing = self.node_types.get(node_id)
        if existing is not None and existing is not cls:
            raise ValueError(f"node id {node_id!r} defined by both "
                             f"{existing.__module__}.{existing.__name__} and {cls.__module__}.{cls.__name__}")
        self.node_types[node_id] = cls

    def discover(self, packages: dict[str, str] | None = None) -> None:
        for pkg_name, category in (packages or NODE_PACKAGES).items():
            pkg = importlib.import_module(pkg_name)
            for _importer, modname, _ispkg in pkgutil.iter_modules(pkg.__path__):
                mod = importlib.import_module(f"{pkg_name}.{modname}")
                for cls in _node_classes(mod):
                    self.register(cls, category)
        logger.debug("registered node types: %s", sorted(self.node_types))

    def get(self, node_type_id: str) -> type[BaseNode]:
        try:
            return self.node_types[node_type_id]
        except KeyError:
            raise KeyError(f"unknown node type {node_type_id!r}; known: {sorted(self.node_types)}") from None

    def list_meta(self) -> list[dict[str, Any]]:
        """Metadata of every node type, config JSON schema included."""
        return [cls.meta.model_dump() for cls in self.node_types.values()]


_registry: NodeRegistry | None = None


def get_registry() -> NodeRegistry:
    global _registry
    if _registry is None:
        _registry = NodeRegistry()
        _registry.discover()
    return _registry
