"""Classification of raw topologies into network and link descriptors."""

import logging
import time
from collections import namedtuple

import networkx as nx

from netdiag import exceptions, status, util
from netdiag.defaults import SCHEMA_VERSION
from netdiag.topology.base import (
    ELEMENT_TYPE_ORDER,
    ControlMode,
    Dialect,
    Element,
    ElementType,
    LinkDescriptor,
    LinkEntry,
    NetworkDescriptor,
    RawLink,
    RawNode,
    RawTopology,
)

from typing import Any, Dict, List, Optional, Set, Tuple  # noqa: F401

LOG = logging.getLogger(__name__)

SnapshotDiff = namedtuple(
    "SnapshotDiff", ("added", "removed", "changed", "rebuild_required")
)

_HINT_BY_TYPE = {
    ElementType.CONTROLLER: "controller",
    ElementType.MASTER_SWITCH: "switch",
    ElementType.SLAVE_SWITCH: "switch",
    ElementType.HOST: "host",
}


def classify(raw: RawTopology) -> "Tuple[NetworkDescriptor, LinkDescriptor]":
    """Assign every node and link one of the seven element types.

    Normalized ids are numbered per type in lexicographic raw_id order. The
    returned descriptor has no control mode yet; see detect_control_mode.
    """
    controller = raw.controller_id
    hints = dict((n.raw_id, n.kind_hint) for n in raw.nodes)
    if controller not in hints:
        raise exceptions.ClassificationError(
            status.MESSAGE_UNKNOWN_CONTROLLER.format(controller=controller)
        )
    extra_controllers = sorted(
        node_id
        for node_id, hint in hints.items()
        if hint == "controller" and node_id != controller
    )
    if extra_controllers:
        raise exceptions.UnsupportedTopologyError(
            status.MESSAGE_MULTIPLE_CONTROLLERS.format(
                controllers=", ".join([controller] + extra_controllers)
            )
        )

    graph = nx.MultiGraph()
    graph.add_nodes_from(hints)
    for link in raw.links:
        if link.endpoint_a == link.endpoint_b:
            raise exceptions.ClassificationError(
                status.MESSAGE_SELF_LOOP.format(
                    link=link.raw_id, node=link.endpoint_a
                )
            )
        graph.add_edge(link.endpoint_a, link.endpoint_b, key=link.raw_id)
    for node_id in sorted(hints):
        if node_id != controller and graph.degree(node_id) == 0:
            raise exceptions.IsolationError(node_id)

    hosts = _detect_hosts(graph, hints, controller)
    node_types = {controller: ElementType.CONTROLLER}  # type: Dict[str, Any]
    for node_id in hints:
        if node_id == controller:
            continue
        if node_id in hosts:
            node_types[node_id] = ElementType.HOST
        elif graph.has_edge(node_id, controller):
            node_types[node_id] = ElementType.MASTER_SWITCH
        else:
            node_types[node_id] = ElementType.SLAVE_SWITCH

    link_types = {}
    for link in raw.links:
        link_types[link.raw_id] = _link_type(link, node_types)

    raw_types = dict(node_types)
    raw_types.update(link_types)
    normalized = _normalize_ids(raw_types)
    elements = sorted(
        (
            Element(normalized[raw_id], raw_id, element_type)
            for raw_id, element_type in raw_types.items()
        ),
        key=lambda e: id_sort_key(e.element_id),
    )
    entries = sorted(
        (
            LinkEntry(
                normalized[link.raw_id],
                normalized[link.endpoint_a],
                normalized[link.endpoint_b],
            )
            for link in raw.links
        ),
        key=lambda e: id_sort_key(e.link_id),
    )
    descriptor = NetworkDescriptor(elements, time.monotonic())
    LOG.debug(
        "Classified %d elements: %s",
        len(elements),
        ", ".join(
            "{}={}".format(t.prefix, c)
            for t, c in descriptor.type_counts().items()
        ),
    )
    return descriptor, LinkDescriptor(entries)


def _detect_hosts(
    graph: "nx.MultiGraph", hints: "Dict[str, Optional[str]]", controller: str
) -> "Set[str]":
    hosts = set(n for n, hint in hints.items() if hint == "host")

    def host_candidate(node_id):
        # A node with no hint and a single link that does not reach the
        # controller
        if hints[node_id] is not None or graph.degree(node_id) != 1:
            return False
        (neighbor,) = list(graph.neighbors(node_id))
        return neighbor != controller

    for node_id, hint in hints.items():
        if not host_candidate(node_id):
            continue
        (neighbor,) = list(graph.neighbors(node_id))
        if neighbor in hosts or host_candidate(neighbor):
            # Two leaves linked to each other are switches
            continue
        hosts.add(node_id)
    return hosts


def _link_type(link: RawLink, node_types: "Dict[str, ElementType]"):
    type_a = node_types[link.endpoint_a]
    type_b = node_types[link.endpoint_b]
    ends = (type_a, type_b)
    if ElementType.CONTROLLER in ends:
        other = type_b if type_a == ElementType.CONTROLLER else type_a
        if other == ElementType.HOST:
            host = (
                link.endpoint_a
                if type_a == ElementType.HOST
                else link.endpoint_b
            )
            raise exceptions.ClassificationError(
                status.MESSAGE_HOST_TO_CONTROLLER.format(
                    link=link.raw_id, host=host
                )
            )
        return ElementType.CONTROL_LINK
    if type_a == type_b == ElementType.HOST:
        raise exceptions.ClassificationError(
            status.MESSAGE_HOST_TO_HOST.format(
                link=link.raw_id, a=link.endpoint_a, b=link.endpoint_b
            )
        )
    if ElementType.HOST in ends:
        return ElementType.ACCESS_LINK
    return ElementType.INTER_SWITCH_LINK


def _normalize_ids(raw_types: "Dict[str, ElementType]") -> "Dict[str, str]":
    normalized = {}
    for element_type in ELEMENT_TYPE_ORDER:
        raw_ids = sorted(
            raw_id for raw_id, t in raw_types.items() if t == element_type
        )
        for k, raw_id in enumerate(raw_ids, 1):
            normalized[raw_id] = "{}_{}".format(element_type.prefix, k)
    return normalized


_ORDER_BY_PREFIX = dict(
    (t.prefix, i) for i, t in enumerate(ELEMENT_TYPE_ORDER)
)


def id_sort_key(element_id: str) -> "Tuple[int, int]":
    """Sort key putting normalized ids in descriptor order."""
    prefix, k = element_id.rsplit("_", 1)
    return (_ORDER_BY_PREFIX[prefix], int(k))


def detect_control_mode(
    descriptor: NetworkDescriptor, links: LinkDescriptor
) -> ControlMode:
    """Tell out-of-band from in-band control by the control links present.

    A network with a single switch is reported as out-of-band; with one
    switch both modes describe the same wiring.
    """
    switches = [s.element_id for s in descriptor.switches]
    if not switches:
        return ControlMode.OUT_OF_BAND
    controlled = set()
    data_plane = nx.Graph()
    data_plane.add_nodes_from(switches)
    for entry in links:
        link_type = descriptor.get(entry.link_id).type
        if link_type == ElementType.CONTROL_LINK:
            controlled.update(
                e
                for e in (entry.endpoint_a, entry.endpoint_b)
                if e in data_plane
            )
        elif link_type == ElementType.INTER_SWITCH_LINK:
            data_plane.add_edge(entry.endpoint_a, entry.endpoint_b)
    if not controlled:
        raise exceptions.NoControlPathError()
    if len(controlled) == len(switches):
        return ControlMode.OUT_OF_BAND
    reachable = set()  # type: Set[str]
    for switch in controlled:
        reachable.update(nx.node_connected_component(data_plane, switch))
    unreachable = sorted(set(switches) - reachable)
    if unreachable:
        raise exceptions.PartitionedControlError(
            ", ".join(sorted(controlled)), unreachable
        )
    if len(controlled) > 1:
        raise exceptions.UnsupportedTopologyError(
            status.MESSAGE_HYBRID_CONTROL.format(
                count=len(controlled), total=len(switches)
            )
        )
    return ControlMode.IN_BAND


def interpret(raw: RawTopology) -> "Tuple[NetworkDescriptor, LinkDescriptor]":
    """Classify raw and record its control mode in the descriptor."""
    descriptor, links = classify(raw)
    mode = detect_control_mode(descriptor, links)
    LOG.debug("Detected %s control", mode.value)
    return descriptor.with_control_mode(mode), links


def to_raw(
    descriptor: NetworkDescriptor, links: LinkDescriptor
) -> RawTopology:
    """Rebuild the RawTopology a descriptor was classified from."""
    raw_of = dict((e.element_id, e.raw_id) for e in descriptor.elements)
    nodes = [
        RawNode(e.raw_id, _HINT_BY_TYPE[e.type]) for e in descriptor.nodes
    ]
    raw_links = [
        RawLink(
            raw_of[entry.link_id],
            raw_of[entry.endpoint_a],
            raw_of[entry.endpoint_b],
        )
        for entry in links
    ]
    controller = descriptor.controller
    return RawTopology(
        nodes,
        raw_links,
        Dialect.NATIVE,
        controller.raw_id if controller else "",
    )


def descriptor_to_dict(
    descriptor: NetworkDescriptor, links: LinkDescriptor
) -> "Dict[str, Any]":
    """Serializable form, without the process-local snapshot instant."""
    mode = descriptor.control_mode
    return {
        "schema_version": SCHEMA_VERSION,
        "control_mode": mode.value if mode else None,
        "elements": [
            {
                "element_id": e.element_id,
                "raw_id": e.raw_id,
                "type": e.type.value,
            }
            for e in descriptor.elements
        ],
        "links": [
            {
                "link_id": entry.link_id,
                "endpoint_a": entry.endpoint_a,
                "endpoint_b": entry.endpoint_b,
            }
            for entry in links
        ],
    }


def descriptor_from_dict(
    data: "Dict[str, Any]"
) -> "Tuple[NetworkDescriptor, LinkDescriptor]":
    try:
        elements = [
            Element(e["element_id"], e["raw_id"], ElementType(e["type"]))
            for e in data["elements"]
        ]
        entries = [
            LinkEntry(e["link_id"], e["endpoint_a"], e["endpoint_b"])
            for e in data["links"]
        ]
        mode = data.get("control_mode")
        control_mode = ControlMode(mode) if mode else None
    except (KeyError, TypeError, ValueError) as e:
        raise exceptions.InputError(
            status.MESSAGE_INVALID_DOCUMENT.format(
                what="descriptor", error=repr(e)
            )
        )
    descriptor = NetworkDescriptor(elements, time.monotonic(), control_mode)
    for entry in entries:
        for element_id in (entry.link_id, entry.endpoint_a, entry.endpoint_b):
            if element_id not in descriptor:
                raise exceptions.ReferentialError(entry.link_id, element_id)
    return descriptor, LinkDescriptor(entries)


def _snapshot_map(
    descriptor: NetworkDescriptor, links: LinkDescriptor
) -> "Dict[str, Dict[str, str]]":
    raw_of = dict((e.element_id, e.raw_id) for e in descriptor.elements)
    snapshot = dict(
        (e.raw_id, {"type": e.type.value}) for e in descriptor.elements
    )
    for entry in links:
        ends = sorted((raw_of[entry.endpoint_a], raw_of[entry.endpoint_b]))
        snapshot[raw_of[entry.link_id]]["endpoints"] = "|".join(ends)
    return snapshot


def diff_snapshots(
    old: "Tuple[NetworkDescriptor, LinkDescriptor]",
    new: "Tuple[NetworkDescriptor, LinkDescriptor]",
) -> SnapshotDiff:
    """Compare two snapshots by raw id and decide whether to rebuild."""
    old_map = _snapshot_map(*old)
    new_map = _snapshot_map(*new)
    deltas = util.get_dict_deltas(old_map, new_map)
    removed = sorted(k for k, v in deltas.items() if v is util.DROPPED_KEY)
    added = sorted(k for k in deltas if k not in old_map)
    changed = sorted(
        k for k in deltas if k in old_map and deltas[k] is not util.DROPPED_KEY
    )
    return SnapshotDiff(
        added, removed, changed, bool(added or removed or changed)
    )
