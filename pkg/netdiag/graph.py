"""Global dependency graph: assembly, topological sort and link edges."""

import enum
import json
import logging
from collections import namedtuple

import networkx as nx

from netdiag import exceptions, status
from netdiag.defaults import SCHEMA_VERSION
from netdiag.templates import (
    GraphFragment,
    LayerTag,
    TemplateProfile,
    VertexKind,
    instantiate_all,
)
from netdiag.topology import (
    ElementType,
    LinkDescriptor,
    NetworkDescriptor,
    decode_json,
    descriptor_from_dict,
    descriptor_to_dict,
    id_sort_key,
)

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

Vertex = namedtuple(
    "Vertex",
    ("index", "label", "kind", "layer", "owner", "local_index", "port_slots"),
)
Edge = namedtuple("Edge", ("source", "target", "edge_class"))


@enum.unique
class EdgeClass(enum.Enum):
    E_INSIDE = "inside"
    E_INTER = "inter"


@enum.unique
class ExportFormat(enum.Enum):
    DOT = "dot"
    JSON = "json"


# Links take network cards in this order, then by descriptor order
LINK_SLOT_ORDER = (
    ElementType.CONTROL_LINK,
    ElementType.INTER_SWITCH_LINK,
    ElementType.ACCESS_LINK,
)


class DependencyGraph:
    """Immutable vertex and edge lists of the global dependency graph.

    owners keeps element ids in assembly order; it breaks ties whenever the
    graph is sorted so that re-sorting never moves a vertex. topology is the
    (descriptor, links) pair the graph was built from, when known.
    """

    def __init__(
        self,
        vertices: "Iterable[Vertex]",
        edges: "Iterable[Edge]",
        sorted: bool = False,
        owners: "Optional[Sequence[str]]" = None,
        topology: "Optional[Tuple[NetworkDescriptor, LinkDescriptor]]" = None,
    ) -> None:
        self.vertices = tuple(vertices)
        self.edges = tuple(edges)
        self.sorted = sorted
        if owners is None:
            owners = []
            for vertex in self.vertices:
                if vertex.owner not in owners:
                    owners.append(vertex.owner)
        self.owners = tuple(owners)
        self.topology = topology
        self._by_label = dict((v.label, v) for v in self.vertices)
        self._by_owner = {}  # type: Dict[str, List[Vertex]]
        for vertex in self.vertices:
            self._by_owner.setdefault(vertex.owner, []).append(vertex)
        self._parents = dict(
            (v.index, []) for v in self.vertices
        )  # type: Dict[int, List[int]]
        self._children = dict(
            (v.index, []) for v in self.vertices
        )  # type: Dict[int, List[int]]
        for edge in self.edges:
            self._parents[edge.target].append(edge.source)
            self._children[edge.source].append(edge.target)

    def __len__(self) -> int:
        return len(self.vertices)

    def __contains__(self, label: str) -> bool:
        return label in self._by_label

    def __repr__(self):
        return "DependencyGraph({} vertices, {} edges, sorted={})".format(
            len(self.vertices), len(self.edges), self.sorted
        )

    def vertex(self, label: str) -> Vertex:
        try:
            return self._by_label[label]
        except KeyError:
            raise exceptions.EvidenceError(
                status.MESSAGE_UNKNOWN_VERTEX.format(label=label)
            )

    def at(self, index: int) -> Vertex:
        return self.vertices[index]

    def parents(self, index: int) -> "List[int]":
        return sorted(self._parents[index])

    def children(self, index: int) -> "List[int]":
        return sorted(self._children[index])

    def edges_of(self, edge_class: EdgeClass) -> "List[Edge]":
        return [e for e in self.edges if e.edge_class == edge_class]

    def vertices_of(self, owner: str) -> "List[Vertex]":
        return sorted(
            self._by_owner.get(owner, []), key=lambda v: v.local_index
        )

    def of_kind(self, *kinds: VertexKind) -> "List[Vertex]":
        return [v for v in self.vertices if v.kind in kinds]

    def to_networkx(self) -> "nx.DiGraph":
        digraph = nx.DiGraph()
        digraph.add_nodes_from(v.index for v in self.vertices)
        digraph.add_edges_from((e.source, e.target) for e in self.edges)
        return digraph

    def with_topology(
        self, descriptor: NetworkDescriptor, links: LinkDescriptor
    ) -> "DependencyGraph":
        return DependencyGraph(
            self.vertices,
            self.edges,
            self.sorted,
            self.owners,
            (descriptor, links),
        )


def assemble(fragments: "Sequence[GraphFragment]") -> DependencyGraph:
    """Disjoint union of fragments, indexed in fragment order."""
    vertices = []
    edges = []
    seen = set()
    for fragment in fragments:
        offset = len(vertices)
        for fv in fragment.vertices:
            if fv.label in seen:
                raise exceptions.LabelCollisionError(fv.label)
            seen.add(fv.label)
            vertices.append(
                Vertex(
                    offset + fv.local_index,
                    fv.label,
                    fv.kind,
                    fv.layer,
                    fragment.owner_element,
                    fv.local_index,
                    fv.port_slots,
                )
            )
        for a, b in fragment.edges:
            edges.append(Edge(offset + a, offset + b, EdgeClass.E_INSIDE))
    vertices.sort(key=lambda v: v.index)
    return DependencyGraph(
        vertices, edges, False, [f.owner_element for f in fragments]
    )


def _raise_on_cycle(digraph: "nx.DiGraph", g: DependencyGraph) -> None:
    if nx.is_directed_acyclic_graph(digraph):
        return
    cycle = nx.find_cycle(digraph)
    labels = [g.at(u).label for u, _ in cycle]
    labels.append(labels[0])
    raise exceptions.CycleError(labels)


def _sorted_order(g: DependencyGraph, digraph: "nx.DiGraph") -> "List[int]":
    rank = dict((owner, i) for i, owner in enumerate(g.owners))

    def vertex_key(index):
        v = g.at(index)
        return (rank[v.owner], v.layer.rank, v.local_index, v.label)

    fragments = nx.DiGraph()
    fragments.add_nodes_from(g.owners)
    for edge in g.edges:
        a, b = g.at(edge.source).owner, g.at(edge.target).owner
        if a != b:
            fragments.add_edge(a, b)
    if not nx.is_directed_acyclic_graph(fragments):
        # Fragments depend on each other both ways; order vertex by vertex
        return list(
            nx.lexicographical_topological_sort(digraph, key=vertex_key)
        )
    order = []  # type: List[int]
    for owner in nx.lexicographical_topological_sort(
        fragments, key=lambda o: rank[o]
    ):
        members = [v.index for v in g.vertices_of(owner)]
        order.extend(
            nx.lexicographical_topological_sort(
                digraph.subgraph(members), key=vertex_key
            )
        )
    return order


def topological_sort(g: DependencyGraph) -> DependencyGraph:
    """Renumber vertices so every edge goes from a lower to a higher index.

    Fragments stay contiguous whenever their dependencies allow; within a
    fragment vertices follow their layer, then their template index.
    """
    digraph = g.to_networkx()
    _raise_on_cycle(digraph, g)
    order = _sorted_order(g, digraph)
    new_index = dict((old, new) for new, old in enumerate(order))
    vertices = [g.at(old)._replace(index=new) for new, old in enumerate(order)]
    edges = sorted(
        (
            e._replace(source=new_index[e.source], target=new_index[e.target])
            for e in g.edges
        ),
        key=lambda e: (e.source, e.target),
    )
    return DependencyGraph(vertices, edges, True, g.owners, g.topology)


def is_sorted(g: DependencyGraph) -> bool:
    return all(e.source < e.target for e in g.edges)


def _slot_key(entry) -> "Tuple[int, Tuple[int, int]]":
    prefix = entry.link_id.rsplit("_", 1)[0]
    ranks = dict((t.prefix, i) for i, t in enumerate(LINK_SLOT_ORDER))
    return (ranks.get(prefix, len(ranks)), id_sort_key(entry.link_id))


def add_inter_edges(
    g: DependencyGraph, links: LinkDescriptor
) -> DependencyGraph:
    """Connect each link-state vertex to a network card at both ends.

    Each endpoint gets its lowest-index card with a free port slot.
    """
    used = {}  # type: Dict[int, int]
    edges = list(g.edges)
    for entry in sorted(links, key=_slot_key):
        link_vertices = [
            v
            for v in g.vertices_of(entry.link_id)
            if v.kind == VertexKind.LINK_STATE
        ]
        if not link_vertices:
            raise exceptions.ModelError(
                status.MESSAGE_MISSING_LINK_VERTEX.format(link=entry.link_id)
            )
        source = link_vertices[0]
        for endpoint in (entry.endpoint_a, entry.endpoint_b):
            card = _free_card(g, endpoint, used)
            if card is None:
                raise exceptions.CapacityError(endpoint, entry.link_id)
            used[card.index] = used.get(card.index, 0) + 1
            edges.append(Edge(source.index, card.index, EdgeClass.E_INTER))
    result = DependencyGraph(
        g.vertices, edges, g.sorted, g.owners, g.topology
    )
    if not (g.sorted and is_sorted(result)):
        LOG.debug("Link edges break the vertex order; sorting again")
        result = topological_sort(result)
    return result


def _free_card(
    g: DependencyGraph, element_id: str, used: "Dict[int, int]"
) -> "Optional[Vertex]":
    for vertex in g.vertices_of(element_id):
        if vertex.kind != VertexKind.NETWORK_CARD:
            continue
        if (
            vertex.port_slots is None
            or used.get(vertex.index, 0) < vertex.port_slots
        ):
            return vertex
    return None


def build_model(
    descriptor: NetworkDescriptor,
    links: LinkDescriptor,
    profile: "Optional[TemplateProfile]" = None,
) -> DependencyGraph:
    """Instantiate, assemble, sort and connect the model of a network."""
    if profile is None:
        profile = TemplateProfile.degree_adaptive()
    fragments = instantiate_all(descriptor, links, profile)
    g = topological_sort(assemble(fragments))
    g = add_inter_edges(g, links).with_topology(descriptor, links)
    LOG.debug(
        "Built model: %d vertices, %d inside edges, %d inter edges",
        len(g),
        len(g.edges_of(EdgeClass.E_INSIDE)),
        len(g.edges_of(EdgeClass.E_INTER)),
    )
    return g


def summary(g: DependencyGraph) -> "Dict[str, Any]":
    by_kind = dict((k.value, 0) for k in VertexKind)
    by_layer = dict((t.value, 0) for t in LayerTag)
    for vertex in g.vertices:
        by_kind[vertex.kind.value] += 1
        by_layer[vertex.layer.value] += 1
    return {
        "vertices": len(g),
        "edges": len(g.edges),
        "elements": len(g.owners),
        "sorted": g.sorted,
        "vertices_by_kind": by_kind,
        "vertices_by_layer": by_layer,
        "edges_by_class": dict(
            (c.value, len(g.edges_of(c))) for c in EdgeClass
        ),
    }


def graph_to_dict(g: DependencyGraph) -> "Dict[str, Any]":
    topology = None
    if g.topology is not None:
        topology = descriptor_to_dict(*g.topology)
    return {
        "schema_version": SCHEMA_VERSION,
        "sorted": g.sorted,
        "fragments": list(g.owners),
        "vertices": [
            {
                "index": v.index,
                "label": v.label,
                "kind": v.kind.value,
                "layer": v.layer.value,
                "owner": v.owner,
                "local_index": v.local_index,
                "port_slots": v.port_slots,
            }
            for v in g.vertices
        ],
        "edges": [
            {"from": e.source, "to": e.target, "class": e.edge_class.value}
            for e in g.edges
        ],
        "topology": topology,
    }


def _dot_quote(text: str) -> str:
    return '"{}"'.format(text.replace("\\", "\\\\").replace('"', '\\"'))


def _to_dot(g: DependencyGraph) -> str:
    lines = ["digraph netdiag {"]
    for v in g.vertices:
        lines.append(
            "  {} [label={}, kind={}];".format(
                v.index, _dot_quote(v.label), _dot_quote(v.kind.value)
            )
        )
    for e in g.edges:
        style = "dashed" if e.edge_class == EdgeClass.E_INSIDE else "solid"
        lines.append(
            "  {} -> {} [style={}];".format(e.source, e.target, style)
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


def export(g: DependencyGraph, fmt: "ExportFormat" = ExportFormat.JSON):
    """Render g as JSON or Graphviz DOT, returning bytes."""
    if fmt == ExportFormat.DOT:
        text = _to_dot(g)
    else:
        text = json.dumps(graph_to_dict(g), indent=2, sort_keys=True) + "\n"
    return text.encode("utf-8")


def import_graph(document: bytes, source: str = "<model>") -> DependencyGraph:
    """Restore a graph from its JSON export."""
    data = decode_json(document, source)
    try:
        if data["schema_version"] != SCHEMA_VERSION:
            raise ValueError(
                "unsupported schema_version {!r}".format(
                    data["schema_version"]
                )
            )
        vertices = [
            Vertex(
                int(v["index"]),
                v["label"],
                VertexKind(v["kind"]),
                LayerTag(v["layer"]),
                v["owner"],
                int(v["local_index"]),
                v["port_slots"],
            )
            for v in data["vertices"]
        ]
        edges = [
            Edge(int(e["from"]), int(e["to"]), EdgeClass(e["class"]))
            for e in data["edges"]
        ]
        owners = list(data["fragments"])
        sorted_flag = bool(data["sorted"])
    except (KeyError, TypeError, ValueError) as e:
        raise exceptions.InputError(
            status.MESSAGE_INVALID_DOCUMENT.format(
                what="model", error=str(e)
            )
        )
    indices = sorted(v.index for v in vertices)
    if indices != list(range(len(vertices))) or any(
        not (0 <= e.source < len(vertices) and 0 <= e.target < len(vertices))
        for e in edges
    ):
        raise exceptions.InputError(
            status.MESSAGE_INVALID_DOCUMENT.format(
                what="model", error="vertex indices are not 0..V-1"
            )
        )
    vertices.sort(key=lambda v: v.index)
    topology = None
    if data.get("topology"):
        topology = descriptor_from_dict(data["topology"])
    return DependencyGraph(vertices, edges, sorted_flag, owners, topology)
