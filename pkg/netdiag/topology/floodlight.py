from netdiag.topology.base import Dialect, RawLink, RawNode, TopologyDialect

from typing import Any, Dict, List, Tuple  # noqa: F401


class FloodlightDialect(TopologyDialect):
    """Reads the layout of Floodlight's REST dumps merged into one document.

    Switches are keyed by DPID, hosts by their first MAC address and host
    links are derived from attachment points. Switches flagged with
    controlConnected get a control link to the controller.
    """

    dialect = Dialect.FLOODLIGHT

    def extract(
        self, data: "Dict[str, Any]"
    ) -> "Tuple[List[RawNode], List[RawLink], str]":
        controller = self.require(data, "controller", dict)
        controller_id = self.require(controller, "id", str, where="controller")
        switches = self.require(data, "switches", list)
        hosts = self.require(data, "hosts", list)
        switch_links = self.require(data, "links", list)

        nodes = [RawNode(controller_id, "controller")]
        links = []
        for idx, switch in enumerate(switches):
            where = "switches[{}]".format(idx)
            dpid = self.require(switch, "switchDPID", str, where=where)
            nodes.append(RawNode(dpid, "switch"))
            if switch.get("controlConnected", False):
                links.append(
                    RawLink(
                        "{}>{}".format(controller_id, dpid),
                        controller_id,
                        dpid,
                    )
                )
        for idx, host in enumerate(hosts):
            where = "hosts[{}]".format(idx)
            macs = self.require(host, "mac", list, where=where)
            if not macs:
                raise self.type_error(where + ".mac", list)
            mac = macs[0]
            nodes.append(RawNode(mac, "host"))
            points = self.require(host, "attachmentPoint", list, where=where)
            for pidx, point in enumerate(points):
                pwhere = "{}.attachmentPoint[{}]".format(where, pidx)
                dpid = self.require(point, "switchDPID", str, where=pwhere)
                links.append(
                    RawLink(
                        "{}@{}/{}".format(mac, dpid, point.get("port", "")),
                        mac,
                        dpid,
                    )
                )
        for idx, link in enumerate(switch_links):
            where = "links[{}]".format(idx)
            src = self.require(link, "src-switch", str, where=where)
            dst = self.require(link, "dst-switch", str, where=where)
            link_id = "{}/{}-{}/{}".format(
                src, link.get("src-port", ""), dst, link.get("dst-port", "")
            )
            links.append(RawLink(link_id, src, dst))
        return nodes, links, controller_id
