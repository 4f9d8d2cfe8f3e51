"""Per-element dependency templates and their instantiation into fragments.

A node template has a physical layer (one CPU and its network cards) and a
logical layer (one VNF life-cycle chain: process, config, active). A link
template is a single link-state vertex.
"""

import enum
import logging
from collections import namedtuple

from netdiag import exceptions, status
from netdiag.topology import (
    ElementType,
    LinkDescriptor,
    NetworkDescriptor,
    NODE_TYPES,
)
from netdiag.topology.generator import KindName, TopologyKind, tree_depth

from typing import (  # noqa: F401
    Callable,
    Dict,
    List,
    Optional,
    Sequence,
    Tuple,
    Union,
)

LOG = logging.getLogger(__name__)


@enum.unique
class LayerTag(enum.Enum):
    PHYSICAL = "physical"
    LOGICAL_INITIATED = "logical-initiated"
    LOGICAL_CONFIGURED = "logical-configured"
    LOGICAL_ACTIVATED = "logical-activated"

    @property
    def rank(self) -> int:
        return LAYER_ORDER.index(self)


LAYER_ORDER = tuple(LayerTag)


@enum.unique
class VertexKind(enum.Enum):
    CPU = "cpu"
    NETWORK_CARD = "network-card"
    VNF_PROCESS = "vnf-process"
    VNF_CONFIG = "vnf-config"
    VNF_ACTIVE = "vnf-active"
    LINK_STATE = "link-state"

    @property
    def code(self) -> str:
        """Short code used in vertex labels, e.g. NC in MS_1.NC_2"""
        return _KIND_CODES[self]

    @property
    def layer(self) -> LayerTag:
        return _KIND_LAYERS[self]


_KIND_CODES = {
    VertexKind.CPU: "CPU",
    VertexKind.NETWORK_CARD: "NC",
    VertexKind.VNF_PROCESS: "VNFP",
    VertexKind.VNF_CONFIG: "VNFC",
    VertexKind.VNF_ACTIVE: "VNFA",
    VertexKind.LINK_STATE: "LINK",
}

_KIND_LAYERS = {
    VertexKind.CPU: LayerTag.PHYSICAL,
    VertexKind.NETWORK_CARD: LayerTag.PHYSICAL,
    VertexKind.VNF_PROCESS: LayerTag.LOGICAL_INITIATED,
    VertexKind.VNF_CONFIG: LayerTag.LOGICAL_CONFIGURED,
    VertexKind.VNF_ACTIVE: LayerTag.LOGICAL_ACTIVATED,
    VertexKind.LINK_STATE: LayerTag.PHYSICAL,
}

# port_slots: how many links a network card can carry (None: any number).
# Vertices other than network cards carry none.
VertexSpec = namedtuple(
    "VertexSpec",
    ("local_index", "kind", "layer", "label_pattern", "port_slots"),
)

NodeTemplate = namedtuple(
    "NodeTemplate", ("element_type", "vertices", "intra_edges", "nic_count")
)
LinkTemplate = namedtuple("LinkTemplate", ("element_type", "vertices"))

FragmentVertex = namedtuple(
    "FragmentVertex", ("label", "kind", "layer", "local_index", "port_slots")
)


class GraphFragment(
    namedtuple("GraphFragment", ("owner_element", "vertices", "edges"))
):
    """One element's instantiated template.

    edges are E_INSIDE edges as (local_index, local_index) pairs.
    """

    def __len__(self) -> int:
        return len(self.vertices)

    def vertex(self, local_index: int) -> FragmentVertex:
        return self.vertices[local_index]


@enum.unique
class ProfileMode(enum.Enum):
    TABLE_COMPAT = "table-compat"
    DEGREE_ADAPTIVE = "degree-adaptive"


TABLE_COMPAT_NIC_COUNTS = {
    ElementType.HOST: 2,
    ElementType.MASTER_SWITCH: 4,
    ElementType.SLAVE_SWITCH: 4,
    ElementType.CONTROLLER: 1,
}


class TemplateProfile(namedtuple("TemplateProfile", ("mode", "nic_counts"))):
    @classmethod
    def table_compat(cls) -> "TemplateProfile":
        return cls(ProfileMode.TABLE_COMPAT, dict(TABLE_COMPAT_NIC_COUNTS))

    @classmethod
    def degree_adaptive(cls) -> "TemplateProfile":
        return cls(ProfileMode.DEGREE_ADAPTIVE, {})

    @classmethod
    def from_name(cls, name: str) -> "TemplateProfile":
        try:
            mode = ProfileMode(name)
        except ValueError:
            raise exceptions.ConfigError(
                status.MESSAGE_UNKNOWN_PROFILE.format(
                    profile=name,
                    valid=", ".join(m.value for m in ProfileMode),
                )
            )
        if mode == ProfileMode.TABLE_COMPAT:
            return cls.table_compat()
        return cls.degree_adaptive()

    @property
    def name(self) -> str:
        return self.mode.value


def _spec(local_index: int, kind: VertexKind, k: int, port_slots=0):
    return VertexSpec(
        local_index,
        kind,
        kind.layer,
        "{{element}}.{}_{}".format(kind.code, k),
        port_slots,
    )


def node_template(
    element_type: ElementType,
    nic_count: int,
    port_slots: "Optional[int]" = 1,
) -> NodeTemplate:
    """CPU at 0, network cards at 1..n, then the VNF chain."""
    vertices = [_spec(0, VertexKind.CPU, 1)]
    for k in range(1, nic_count + 1):
        vertices.append(_spec(k, VertexKind.NETWORK_CARD, k, port_slots))
    process = nic_count + 1
    vertices.append(_spec(process, VertexKind.VNF_PROCESS, 1))
    vertices.append(_spec(process + 1, VertexKind.VNF_CONFIG, 1))
    vertices.append(_spec(process + 2, VertexKind.VNF_ACTIVE, 1))
    edges = [(0, k) for k in range(1, nic_count + 1)]
    edges += [(0, process), (process, process + 1), (process + 1, process + 2)]
    return NodeTemplate(element_type, tuple(vertices), tuple(edges), nic_count)


def link_template(element_type: ElementType) -> LinkTemplate:
    return LinkTemplate(element_type, (_spec(0, VertexKind.LINK_STATE, 1),))


def _node_builder(
    element_type: ElementType, profile: TemplateProfile, degree: int
) -> NodeTemplate:
    if profile.mode == ProfileMode.TABLE_COMPAT:
        nic_count = profile.nic_counts[element_type]
        # The controller's management card terminates every control link
        slots = None if element_type == ElementType.CONTROLLER else 1
        return node_template(element_type, nic_count, slots)
    return node_template(element_type, degree)


def _link_builder(
    element_type: ElementType, profile: TemplateProfile, degree: int
) -> LinkTemplate:
    return link_template(element_type)


# Element type -> template builder(element_type, profile, degree)
TEMPLATE_BUILDERS = dict(
    [(t, _node_builder) for t in NODE_TYPES]
    + [
        (t, _link_builder)
        for t in (
            ElementType.CONTROL_LINK,
            ElementType.ACCESS_LINK,
            ElementType.INTER_SWITCH_LINK,
        )
    ]
)  # type: Dict[ElementType, Callable]


def template_for(
    element_type: ElementType,
    profile: TemplateProfile,
    degree: "Optional[int]" = None,
) -> "Union[NodeTemplate, LinkTemplate]":
    builder = TEMPLATE_BUILDERS.get(element_type)
    if builder is None:
        raise exceptions.TemplateError(
            status.MESSAGE_TEMPLATE_MISSING.format(name=element_type.value)
        )
    if (
        not element_type.is_link
        and profile.mode == ProfileMode.DEGREE_ADAPTIVE
        and not degree
    ):
        raise exceptions.TemplateError(
            status.MESSAGE_ISOLATED_TEMPLATE.format(
                element=element_type.value
            )
        )
    return builder(element_type, profile, degree or 0)


def instantiate(
    template: "Union[NodeTemplate, LinkTemplate]", element_id: str
) -> GraphFragment:
    vertices = tuple(
        FragmentVertex(
            spec.label_pattern.format(element=element_id),
            spec.kind,
            spec.layer,
            spec.local_index,
            spec.port_slots,
        )
        for spec in template.vertices
    )
    edges = getattr(template, "intra_edges", ())
    return GraphFragment(element_id, vertices, tuple(edges))


def instantiate_all(
    descriptor: NetworkDescriptor,
    links: LinkDescriptor,
    profile: TemplateProfile,
) -> "List[GraphFragment]":
    """Return one fragment per element, in descriptor order."""
    fragments = []
    for element in descriptor.elements:
        degree = None
        if profile.mode == ProfileMode.DEGREE_ADAPTIVE:
            degree = links.degree(element.element_id)
        try:
            template = template_for(element.type, profile, degree)
        except exceptions.TemplateError as e:
            if element.type.is_link or element.type not in TEMPLATE_BUILDERS:
                raise
            raise exceptions.TemplateError(
                status.MESSAGE_ISOLATED_TEMPLATE.format(
                    element=element.element_id
                )
            ) from e
        fragments.append(instantiate(template, element.element_id))
    LOG.debug(
        "Instantiated %d fragments with %d vertices (%s profile)",
        len(fragments),
        sum(len(f) for f in fragments),
        profile.name,
    )
    return fragments


def expected_vertex_count(
    kind: TopologyKind,
    n_hosts: int,
    profile: "Optional[TemplateProfile]" = None,
) -> int:
    """Closed-form vertex count of an out-of-band linear or binary tree.

    V = 4 + 10 * N_SWITCHES + 7 * N_HOSTS under the table-compat profile.
    """
    if profile is None:
        profile = TemplateProfile.table_compat()
    if profile.mode != ProfileMode.TABLE_COMPAT:
        raise exceptions.DomainError(
            status.MESSAGE_UNSUPPORTED_VERTEX_COUNT_KIND.format(
                kind="{} ({} profile)".format(kind, profile.name)
            )
        )
    if kind.name == KindName.LINEAR:
        n_switches = n_hosts
    elif kind.name == KindName.TREE and kind.fanout == 2:
        depth = kind.depth or tree_depth(2, n_hosts)
        n_switches = 2 ** depth - 1
    else:
        raise exceptions.DomainError(
            status.MESSAGE_UNSUPPORTED_VERTEX_COUNT_KIND.format(kind=kind)
        )
    return 4 + 10 * n_switches + 7 * n_hosts
