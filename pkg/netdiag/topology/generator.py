"""Synthetic topologies: linear, tree, ring and star networks."""

import enum
import logging
from collections import namedtuple

from netdiag import exceptions, status
from netdiag.topology.base import (
    ControlMode,
    Dialect,
    LinkDescriptor,
    NetworkDescriptor,
    RawLink,
    RawNode,
    RawTopology,
)
from netdiag.topology.classify import interpret

from typing import List, Optional, Tuple  # noqa: F401

LOG = logging.getLogger(__name__)

CONTROLLER_RAW_ID = "c0"
DEFAULT_TREE_FANOUT = 2


@enum.unique
class KindName(enum.Enum):
    LINEAR = "linear"
    TREE = "tree"
    RING = "ring"
    STAR = "star"


class TopologyKind(namedtuple("TopologyKind", ("name", "fanout", "depth"))):
    """A generator shape; fanout and depth only apply to trees.

    A tree without depth derives it from the host count, which must then be
    an exact power of the fanout.
    """

    @classmethod
    def linear(cls) -> "TopologyKind":
        return cls(KindName.LINEAR, None, None)

    @classmethod
    def ring(cls) -> "TopologyKind":
        return cls(KindName.RING, None, None)

    @classmethod
    def star(cls) -> "TopologyKind":
        return cls(KindName.STAR, None, None)

    @classmethod
    def tree(
        cls, fanout: int = DEFAULT_TREE_FANOUT, depth: "Optional[int]" = None
    ) -> "TopologyKind":
        if fanout < 2 or (depth is not None and depth < 1):
            raise exceptions.ShapeError(
                status.MESSAGE_TREE_PARAMETERS.format(
                    fanout=fanout, depth=depth
                )
            )
        return cls(KindName.TREE, fanout, depth)

    @classmethod
    def parse(cls, text: str) -> "TopologyKind":
        """Parse "linear", "ring", "star", "tree", "tree:F" or "tree:F:D"."""
        name, _, params = text.strip().lower().partition(":")
        try:
            kind_name = KindName(name)
        except ValueError:
            raise exceptions.ShapeError(
                status.MESSAGE_UNKNOWN_TOPOLOGY_KIND.format(
                    kind=text, valid=", ".join(k.value for k in KindName)
                )
            )
        if kind_name != KindName.TREE:
            if params:
                raise exceptions.ShapeError(
                    status.MESSAGE_UNKNOWN_TOPOLOGY_KIND.format(
                        kind=text, valid=", ".join(k.value for k in KindName)
                    )
                )
            return cls(kind_name, None, None)
        values = [p for p in params.split(":") if p] if params else []
        try:
            numbers = [int(v) for v in values]
        except ValueError:
            numbers = []
            values = ["invalid"]
        if len(values) > 2 or len(numbers) != len(values):
            raise exceptions.ShapeError(
                status.MESSAGE_UNKNOWN_TOPOLOGY_KIND.format(
                    kind=text, valid="tree, tree:F, tree:F:D"
                )
            )
        fanout = numbers[0] if numbers else DEFAULT_TREE_FANOUT
        depth = numbers[1] if len(numbers) > 1 else None
        return cls.tree(fanout, depth)

    def __str__(self) -> str:
        if self.name != KindName.TREE:
            return self.name.value
        if self.depth is None:
            return "tree:{}".format(self.fanout)
        return "tree:{}:{}".format(self.fanout, self.depth)


def tree_depth(fanout: int, n_hosts: int) -> int:
    """Return d with fanout ** d == n_hosts, or raise ShapeError."""
    depth, leaves = 0, 1
    while leaves < n_hosts:
        leaves *= fanout
        depth += 1
    if depth < 1 or leaves != n_hosts:
        raise exceptions.ShapeError(
            status.MESSAGE_TREE_SHAPE.format(
                n_hosts=n_hosts, fanout=fanout, depth="derived"
            )
        )
    return depth


class _RawBuilder:
    def __init__(self, n_hosts: int, n_switches: int) -> None:
        self.width = max(4, len(str(max(n_hosts, n_switches))))
        self.nodes = [RawNode(CONTROLLER_RAW_ID, "controller")]
        self.links = []  # type: List[RawLink]

    def switch(self, i: int) -> str:
        return "s{:0{w}d}".format(i, w=self.width)

    def host(self, i: int) -> str:
        return "h{:0{w}d}".format(i, w=self.width)

    def add_switches(self, count: int) -> None:
        for i in range(1, count + 1):
            self.nodes.append(RawNode(self.switch(i), "switch"))

    def add_host(self, i: int, switch: int) -> None:
        host = self.host(i)
        self.nodes.append(RawNode(host, "host"))
        self.links.append(
            RawLink("al-{}".format(host), host, self.switch(switch))
        )

    def add_control_link(self, switch: int) -> None:
        name = self.switch(switch)
        self.links.append(
            RawLink("cl-{}".format(name), CONTROLLER_RAW_ID, name)
        )

    def add_inter_switch_link(self, i: int, j: int) -> None:
        a, b = sorted((self.switch(i), self.switch(j)))
        self.links.append(RawLink("il-{}-{}".format(a, b), a, b))

    def build(self) -> RawTopology:
        return RawTopology(
            self.nodes, self.links, Dialect.NATIVE, CONTROLLER_RAW_ID
        )


def generate_raw(
    kind: TopologyKind, n_hosts: int, mode: ControlMode
) -> RawTopology:
    if n_hosts < 1:
        raise exceptions.ShapeError(
            status.MESSAGE_INVALID_HOST_COUNT.format(n_hosts=n_hosts)
        )
    # (switch, parent) pairs and the switch each host attaches to
    edges = []  # type: List[Tuple[int, int]]
    if kind.name == KindName.TREE:
        depth = kind.depth
        if depth is None:
            depth = tree_depth(kind.fanout, n_hosts)
        leaves = kind.fanout ** (depth - 1)
        if n_hosts < leaves or n_hosts % leaves:
            raise exceptions.ShapeError(
                status.MESSAGE_TREE_SHAPE.format(
                    n_hosts=n_hosts, fanout=kind.fanout, depth=depth
                )
            )
        n_switches = (kind.fanout ** depth - 1) // (kind.fanout - 1)
        for child in range(2, n_switches + 1):
            edges.append(((child - 2) // kind.fanout + 1, child))
        first_leaf = n_switches - leaves + 1
        per_leaf = n_hosts // leaves
        host_switch = [first_leaf + i // per_leaf for i in range(n_hosts)]
    elif kind.name == KindName.STAR:
        n_switches = 1
        host_switch = [1] * n_hosts
    else:
        n_switches = n_hosts
        edges = [(i, i + 1) for i in range(1, n_switches)]
        if kind.name == KindName.RING and n_switches >= 3:
            edges.append((1, n_switches))
        host_switch = list(range(1, n_hosts + 1))

    builder = _RawBuilder(n_hosts, n_switches)
    builder.add_switches(n_switches)
    for i, switch in enumerate(host_switch, 1):
        builder.add_host(i, switch)
    if mode == ControlMode.IN_BAND:
        builder.add_control_link(1)
    else:
        for switch in range(1, n_switches + 1):
            builder.add_control_link(switch)
    for a, b in edges:
        builder.add_inter_switch_link(a, b)
    return builder.build()


def generate_topology(
    kind: TopologyKind, n_hosts: int, mode: ControlMode
) -> "Tuple[NetworkDescriptor, LinkDescriptor]":
    """Build a classified network of the given shape and control mode.

    In-band networks get one control link, to the lowest-numbered switch.
    A one-switch network is always detected as out-of-band.
    """
    raw = generate_raw(kind, n_hosts, mode)
    descriptor, links = interpret(raw)
    LOG.debug(
        "Generated %s network with %d hosts: %d elements",
        kind,
        n_hosts,
        len(descriptor),
    )
    return descriptor, links
