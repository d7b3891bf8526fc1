"""Pipeline executor: walks DAG topologically and executes nodes eagerly."""

import logging
from collections import defaultdict
from typing import Any, Callable

from qpm.engine.registry import NodeRegistry

logger = logging.getLogger(__name__)


def topological_order(pipeline: dict[str, Any]) -> list[str]:
    """Node ids in execution order (Kahn's algorithm, ties kept in declaration order)."""
    nodes = [n["id"] for n in pipeline["nodes"]]
    edges = pipeline.get("edges", [])

    downstream = defaultdict(list)
    in_degree = {n_id: 0 for n_id in nodes}
    for e in edges:
        if e["source"] not in in_degree or e["target"] not in in_degree:
            raise ValueError(f"Edge refers to unknown node: {e['source']} -> {e['target']}")
        downstream[e["source"]].append(e["target"])
        in_degree[e["target"]] += 1

    queue = [n_id for n_id in nodes if in_degree[n_id] == 0]
    order = []
    while queue:
        n_id = queue.pop(0)
        order.append(n_id)
        for target in downstream[n_id]:
            in_degree[target] -= 1
            if in_degree[target] == 0:
                queue.append(target)

    if len(order) != len(nodes):
        raise ValueError("Pipeline has a cycle")
    return order


class PipelineExecutor:
    """Walks a pipeline DAG in topological order, executing each node eagerly."""

    def __init__(self, registry: NodeRegistry):
        self.registry = registry

    def run(
        self,
        pipeline: dict[str, Any],
        on_node_start: Callable[[str], None] | None = None,
        on_node_done: Callable[[str, dict], None] | None = None,
        on_node_error: Callable[[str, Exception], None] | None = None,
    ) -> dict[str, Any]:
        """Execute the pipeline, return {node_id: output_dict}.

        Execution stops at the first failing node, whose result is {"error": message}.
        """
        nodes = {n["id"]: n for n in pipeline["nodes"]}
        upstream = defaultdict(list)
        for e in pipeline.get("edges", []):
            upstream[e["target"]].append(e["source"])

        order = topological_order(pipeline)
        results: dict[str, Any] = {}

        for n_id in order:
            node_def = nodes[n_id]
            node_cls = self.registry.get(node_def["type"])
            node = node_cls()

            # Merge upstream outputs into input dict
            inputs: dict[str, Any] = {}
            for up_id in upstream[n_id]:
                inputs.update(results.get(up_id, {}))

            if on_node_start:
                on_node_start(n_id)

            try:
                output = node.execute(inputs, node_def.get("config", {}))
                results[n_id] = output
                if on_node_done:
                    on_node_done(n_id, output)
            except Exception as exc:
                logger.debug("node %s failed: %s", n_id, exc)
                results[n_id] = {"error": str(exc)}
                if on_node_error:
                    on_node_error(n_id, exc)
                break  # stop on first error

        return results
