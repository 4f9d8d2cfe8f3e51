from netdiag.topology.base import Dialect, RawLink, RawNode, TopologyDialect

from typing import Any, Dict, List, Optional, Tuple  # noqa: F401

HOST_PREFIX = "host:"
SWITCH_PREFIX = "openflow:"


class OpenDaylightDialect(TopologyDialect):
    """Reads the network-topology layout used by OpenDaylight.

    Links there are unidirectional, so a link and its reverse collapse into
    one RawLink keyed by the smaller link-id. The controller is described
    next to the topology with the switches it manages.
    """

    dialect = Dialect.OPENDAYLIGHT

    def extract(
        self, data: "Dict[str, Any]"
    ) -> "Tuple[List[RawNode], List[RawLink], str]":
        network = self.require(data, "network-topology", dict)
        topologies = self.require(
            network, "topology", list, where="network-topology"
        )
        if not topologies:
            raise self.type_error("network-topology.topology", list)
        topology = topologies[0]
        where = "network-topology.topology[0]"
        controller = self.require(data, "controller", dict)
        controller_id = self.require(
            controller, "node-id", str, where="controller"
        )
        managed = self.require(
            controller, "managed-nodes", list, where="controller"
        )

        nodes = [RawNode(controller_id, "controller")]
        for idx, node in enumerate(topology.get("node", [])):
            node_id = self.require(
                node, "node-id", str, where="{}.node[{}]".format(where, idx)
            )
            nodes.append(RawNode(node_id, _kind_hint(node)))

        links = [
            RawLink(
                "{}/{}".format(controller_id, node_id), controller_id, node_id
            )
            for node_id in managed
        ]
        pending = {}  # type: Dict[Tuple[str, str], List[str]]
        for idx, link in enumerate(topology.get("link", [])):
            lwhere = "{}.link[{}]".format(where, idx)
            link_id = self.require(link, "link-id", str, where=lwhere)
            src = self.require(
                self.require(link, "source", dict, where=lwhere),
                "source-node",
                str,
                where=lwhere + ".source",
            )
            dst = self.require(
                self.require(link, "destination", dict, where=lwhere),
                "dest-node",
                str,
                where=lwhere + ".destination",
            )
            reverse = pending.get((dst, src))
            if reverse:
                other_id = reverse.pop(0)
                links.append(RawLink(min(link_id, other_id), dst, src))
            else:
                pending.setdefault((src, dst), []).append(link_id)
        # Unpaired directions still describe a physical link
        for (src, dst), link_ids in sorted(pending.items()):
            for link_id in link_ids:
                links.append(RawLink(link_id, src, dst))
        return nodes, links, controller_id


def _kind_hint(node: "Dict[str, Any]") -> "Optional[str]":
    node_id = node["node-id"]
    if "host-tracker-service:addresses" in node or node_id.startswith(
        HOST_PREFIX
    ):
        return "host"
    if node_id.startswith(SWITCH_PREFIX):
        return "switch"
    return None
