from netdiag import exceptions, status
from netdiag.topology.base import (  # noqa: F401
    ELEMENT_TYPE_ORDER,
    LINK_TYPES,
    NODE_TYPES,
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
    TopologyDialect,
    decode_json,
)
from netdiag.topology.classify import (  # noqa: F401
    SnapshotDiff,
    classify,
    descriptor_from_dict,
    descriptor_to_dict,
    detect_control_mode,
    diff_snapshots,
    id_sort_key,
    interpret,
    to_raw,
)
from netdiag.topology.floodlight import FloodlightDialect
from netdiag.topology.native import NativeDialect
from netdiag.topology.opendaylight import OpenDaylightDialect

from typing import Dict, List, Optional, Type, Union  # noqa: F401


DIALECT_CLASSES = [
    NativeDialect,
    FloodlightDialect,
    OpenDaylightDialect,
]  # type: List[Type[TopologyDialect]]


DIALECT_CLASS_BY_NAME = dict(
    (cls.dialect.value, cls) for cls in DIALECT_CLASSES
)  # type: Dict[str, Type[TopologyDialect]]


def parse_dialect(
    document: bytes,
    dialect: "Union[Dialect, str]",
    source: str = "<document>",
    controller_id: "Optional[str]" = None,
) -> RawTopology:
    """Parse a topology document in the given dialect.

    :param controller_id: overrides the controller named by the document
    """
    name = dialect.value if isinstance(dialect, Dialect) else dialect
    dialect_cls = DIALECT_CLASS_BY_NAME.get(name)
    if dialect_cls is None:
        raise exceptions.InputError(
            status.MESSAGE_UNKNOWN_DIALECT.format(
                dialect=name, valid=", ".join(sorted(DIALECT_CLASS_BY_NAME))
            )
        )
    raw = dialect_cls().parse(document, source)
    if controller_id and controller_id != raw.controller_id:
        raw = raw.with_controller(controller_id)
    return raw
