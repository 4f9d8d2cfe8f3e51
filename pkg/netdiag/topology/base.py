import abc
import enum
import json
import logging
from collections import namedtuple

from netdiag import exceptions, status

from typing import (  # noqa: F401
    Any,
    Dict,
    Iterable,
    List,
    Optional,
    Sequence,
    Tuple,
)

LOG = logging.getLogger(__name__)


RawNode = namedtuple("RawNode", ("raw_id", "kind_hint"))
RawLink = namedtuple("RawLink", ("raw_id", "endpoint_a", "endpoint_b"))

# A classified element and a link's endpoints, both by normalized id
Element = namedtuple("Element", ("element_id", "raw_id", "type"))
LinkEntry = namedtuple("LinkEntry", ("link_id", "endpoint_a", "endpoint_b"))

KIND_HINTS = ("switch", "host", "controller")


@enum.unique
class ElementType(enum.Enum):
    CONTROLLER = "controller"
    MASTER_SWITCH = "master-switch"
    SLAVE_SWITCH = "slave-switch"
    HOST = "host"
    CONTROL_LINK = "control-link"
    ACCESS_LINK = "access-link"
    INTER_SWITCH_LINK = "inter-switch-link"

    @property
    def prefix(self) -> str:
        return _PREFIXES[self]

    @property
    def is_link(self) -> bool:
        return self in LINK_TYPES

    @property
    def is_switch(self) -> bool:
        return self in (ElementType.MASTER_SWITCH, ElementType.SLAVE_SWITCH)


_PREFIXES = {
    ElementType.CONTROLLER: "C",
    ElementType.MASTER_SWITCH: "MS",
    ElementType.SLAVE_SWITCH: "SS",
    ElementType.HOST: "H",
    ElementType.CONTROL_LINK: "CL",
    ElementType.ACCESS_LINK: "AL",
    ElementType.INTER_SWITCH_LINK: "IL",
}

# Descriptor order: nodes first, then links
ELEMENT_TYPE_ORDER = tuple(ElementType)
NODE_TYPES = ELEMENT_TYPE_ORDER[:4]
LINK_TYPES = ELEMENT_TYPE_ORDER[4:]


@enum.unique
class ControlMode(enum.Enum):
    OUT_OF_BAND = "out-of-band"
    IN_BAND = "in-band"


@enum.unique
class Dialect(enum.Enum):
    NATIVE = "native"
    FLOODLIGHT = "floodlight-style"
    OPENDAYLIGHT = "opendaylight-style"


class RawTopology:
    """Nodes and links as read from a controller, before classification."""

    def __init__(
        self,
        nodes: "Iterable[RawNode]",
        links: "Iterable[RawLink]",
        source_dialect: Dialect,
        controller_id: str,
    ) -> None:
        self.nodes = tuple(nodes)
        self.links = tuple(links)
        self.source_dialect = source_dialect
        self.controller_id = controller_id
        self._validate()

    def _validate(self) -> None:
        node_ids = set()
        for node in self.nodes:
            if node.raw_id in node_ids:
                raise exceptions.InputError(
                    status.MESSAGE_DUPLICATE_RAW_ID.format(
                        what="node", raw_id=node.raw_id
                    )
                )
            node_ids.add(node.raw_id)
        link_ids = set()
        for link in self.links:
            if link.raw_id in link_ids:
                raise exceptions.InputError(
                    status.MESSAGE_DUPLICATE_RAW_ID.format(
                        what="link", raw_id=link.raw_id
                    )
                )
            link_ids.add(link.raw_id)
            for endpoint in (link.endpoint_a, link.endpoint_b):
                if endpoint not in node_ids:
                    raise exceptions.ReferentialError(link.raw_id, endpoint)

    def with_controller(self, controller_id: str) -> "RawTopology":
        return RawTopology(
            self.nodes, self.links, self.source_dialect, controller_id
        )

    def __eq__(self, other):
        if not isinstance(other, RawTopology):
            return NotImplemented
        return (
            self.nodes == other.nodes
            and self.links == other.links
            and self.source_dialect == other.source_dialect
            and self.controller_id == other.controller_id
        )

    def __repr__(self):
        return "RawTopology({} nodes, {} links, {}, controller={})".format(
            len(self.nodes),
            len(self.links),
            self.source_dialect.value,
            self.controller_id,
        )


class NetworkDescriptor:
    """Classified snapshot of every network element at one instant."""

    def __init__(
        self,
        elements: "Iterable[Element]",
        snapshot_instant: float,
        control_mode: "Optional[ControlMode]" = None,
    ) -> None:
        self.elements = tuple(elements)
        self.snapshot_instant = snapshot_instant
        self.control_mode = control_mode
        self._by_id = dict((e.element_id, e) for e in self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def __contains__(self, element_id: str) -> bool:
        return element_id in self._by_id

    def get(self, element_id: str) -> Element:
        return self._by_id[element_id]

    def of_type(self, *types: ElementType) -> "List[Element]":
        return [e for e in self.elements if e.type in types]

    @property
    def controller(self) -> "Optional[Element]":
        controllers = self.of_type(ElementType.CONTROLLER)
        return controllers[0] if controllers else None

    @property
    def switches(self) -> "List[Element]":
        return self.of_type(
            ElementType.MASTER_SWITCH, ElementType.SLAVE_SWITCH
        )

    @property
    def nodes(self) -> "List[Element]":
        return self.of_type(*NODE_TYPES)

    @property
    def links(self) -> "List[Element]":
        return self.of_type(*LINK_TYPES)

    def type_counts(self) -> "Dict[ElementType, int]":
        counts = dict((t, 0) for t in ELEMENT_TYPE_ORDER)
        for element in self.elements:
            counts[element.type] += 1
        return counts

    def with_control_mode(self, mode: ControlMode) -> "NetworkDescriptor":
        return NetworkDescriptor(self.elements, self.snapshot_instant, mode)

    def without(self, element_ids: "Iterable[str]") -> "NetworkDescriptor":
        """Return a descriptor with element_ids dropped (ids kept as is)."""
        dropped = set(element_ids)
        return NetworkDescriptor(
            [e for e in self.elements if e.element_id not in dropped],
            self.snapshot_instant,
            self.control_mode,
        )


class LinkDescriptor:
    """Endpoints of every link, by normalized element id."""

    def __init__(self, entries: "Iterable[LinkEntry]") -> None:
        self.entries = tuple(entries)
        self._by_id = dict((e.link_id, e) for e in self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def get(self, link_id: str) -> LinkEntry:
        return self._by_id[link_id]

    def incident(self, element_id: str) -> "List[LinkEntry]":
        return [
            e
            for e in self.entries
            if element_id in (e.endpoint_a, e.endpoint_b)
        ]

    def degree(self, element_id: str) -> int:
        return len(self.incident(element_id))

    def without(self, link_ids: "Iterable[str]") -> "LinkDescriptor":
        dropped = set(link_ids)
        return LinkDescriptor(
            [e for e in self.entries if e.link_id not in dropped]
        )


class TopologyDialect(metaclass=abc.ABCMeta):
    """Adapter from one controller's topology JSON layout to RawTopology."""

    @property
    @abc.abstractmethod
    def dialect(self) -> Dialect:
        """The Dialect this adapter reads"""
        pass

    @abc.abstractmethod
    def extract(
        self, data: "Dict[str, Any]"
    ) -> "Tuple[List[RawNode], List[RawLink], str]":
        """Return nodes, links and the controller id found in data"""
        pass

    def parse(
        self, document: bytes, source: str = "<document>"
    ) -> RawTopology:
        data = decode_json(document, source)
        if not isinstance(data, dict):
            raise self.type_error("<root>", dict)
        nodes, links, controller_id = self.extract(data)
        raw = RawTopology(nodes, links, self.dialect, controller_id)
        LOG.debug("Parsed %r from %s", raw, source)
        return raw

    def require(
        self,
        data: "Dict[str, Any]",
        field: str,
        expected: "Optional[type]" = None,
        where: str = "",
    ) -> "Any":
        """Return data[field], raising DialectError when it is absent.

        :param where: path of data inside the document, used in messages
        """
        name = "{}.{}".format(where, field) if where else field
        if not isinstance(data, dict) or field not in data:
            raise exceptions.DialectError(self.dialect.value, name)
        value = data[field]
        if expected is not None and not isinstance(value, expected):
            raise self.type_error(name, expected)
        return value

    def type_error(self, field: str, expected: type) -> Exception:
        names = {list: "a list", dict: "an object", str: "a string"}
        return exceptions.DialectError(
            self.dialect.value,
            field,
            status.MESSAGE_DIALECT_FIELD_TYPE.format(
                dialect=self.dialect.value,
                field=field,
                expected=names.get(expected, expected.__name__),
            ),
        )


def decode_json(document: bytes, source: str = "<document>") -> "Any":
    """Decode a UTF-8 JSON document, reporting failures by byte offset."""
    try:
        text = document.decode("utf-8")
    except UnicodeDecodeError as e:
        raise exceptions.ParseError(source, e.start, "invalid UTF-8")
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        offset = len(text[: e.pos].encode("utf-8"))
        raise exceptions.ParseError(source, offset, e.msg)
