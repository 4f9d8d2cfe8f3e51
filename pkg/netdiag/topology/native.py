from netdiag import exceptions, status
from netdiag.topology.base import (
    KIND_HINTS,
    Dialect,
    RawLink,
    RawNode,
    TopologyDialect,
)

from typing import Any, Dict, List, Tuple  # noqa: F401


class NativeDialect(TopologyDialect):
    """Reads netdiag's own layout: {controller, nodes[{id, kind}], links}."""

    dialect = Dialect.NATIVE

    def extract(
        self, data: "Dict[str, Any]"
    ) -> "Tuple[List[RawNode], List[RawLink], str]":
        controller_id = self.require(data, "controller", str)
        nodes = []
        for idx, node in enumerate(self.require(data, "nodes", list)):
            where = "nodes[{}]".format(idx)
            raw_id = self.require(node, "id", str, where=where)
            kind = node.get("kind")
            if kind is not None and kind not in KIND_HINTS:
                raise exceptions.ClassificationError(
                    status.MESSAGE_UNKNOWN_KIND_HINT.format(
                        node=raw_id, kind=kind
                    )
                )
            nodes.append(RawNode(raw_id, kind))
        links = []
        for idx, link in enumerate(self.require(data, "links", list)):
            where = "links[{}]".format(idx)
            links.append(
                RawLink(
                    self.require(link, "id", str, where=where),
                    self.require(link, "a", str, where=where),
                    self.require(link, "b", str, where=where),
                )
            )
        return nodes, links, controller_id
