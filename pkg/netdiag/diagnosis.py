"""Root-cause calculation: alarm plus observations to a ranked report."""

import datetime
import enum
import logging
from collections import namedtuple

import networkx as nx

from netdiag import exceptions, inference, status, util
from netdiag.bayes import BayesianNetwork, Evidence, NoisyOrCpt
from netdiag.defaults import DEFAULT_TIE_EPSILON, DEFAULT_TOP_K
from netdiag.graph import DependencyGraph
from netdiag.status import State
from netdiag.templates import VertexKind
from netdiag.topology import (
    ControlMode,
    ElementType,
    LinkDescriptor,
    NetworkDescriptor,
    decode_json,
    id_sort_key,
)

from typing import (  # noqa: F401
    Any,
    Dict,
    Iterable,
    List,
    Optional,
    Sequence,
    Set,
    Tuple,
)

LOG = logging.getLogger(__name__)

SERVICE_LABEL = "SERVICE"


@enum.unique
class AlarmKind(enum.Enum):
    INFRASTRUCTURE_FAILURE = "infrastructure-failure"
    SERVICE_DEGRADATION = "service-degradation"


class ServiceAlarm(
    namedtuple("ServiceAlarm", ("kind", "endpoints", "raised_at"))
):
    def __new__(
        cls,
        kind: AlarmKind,
        endpoints: "Optional[Tuple[str, str]]" = None,
        raised_at: "Optional[datetime.datetime]" = None,
    ):
        if kind == AlarmKind.SERVICE_DEGRADATION and not endpoints:
            raise exceptions.EvidenceError(
                status.MESSAGE_ALARM_NEEDS_ENDPOINTS
            )
        if endpoints is not None:
            endpoints = tuple(endpoints)
        return super().__new__(cls, kind, endpoints, raised_at)

    @classmethod
    def from_dict(cls, data: "Dict[str, Any]") -> "ServiceAlarm":
        if not isinstance(data, dict) or "kind" not in data:
            raise exceptions.EvidenceError(
                status.MESSAGE_INVALID_DOCUMENT.format(
                    what="alarm", error="missing field: kind"
                )
            )
        try:
            kind = AlarmKind(data["kind"])
        except ValueError:
            raise exceptions.EvidenceError(
                status.MESSAGE_UNKNOWN_ALARM_KIND.format(
                    kind=data["kind"],
                    valid=", ".join(k.value for k in AlarmKind),
                )
            )
        endpoints = data.get("endpoints")
        if endpoints is not None and (
            not isinstance(endpoints, list) or len(endpoints) != 2
        ):
            raise exceptions.EvidenceError(
                status.MESSAGE_INVALID_DOCUMENT.format(
                    what="alarm", error="endpoints must be two host ids"
                )
            )
        raised_at = None
        if data.get("raised_at"):
            try:
                raised_at = util.parse_rfc3339_date(str(data["raised_at"]))
            except ValueError as e:
                raise exceptions.EvidenceError(
                    status.MESSAGE_INVALID_DOCUMENT.format(
                        what="alarm", error=str(e)
                    )
                )
        return cls(kind, endpoints, raised_at)

    def to_dict(self) -> "Dict[str, Any]":
        return {
            "kind": self.kind.value,
            "endpoints": list(self.endpoints) if self.endpoints else None,
            "raised_at": self.raised_at,
        }


class ObservationSet:
    """NIC states and CPU utilizations reported by monitoring."""

    def __init__(
        self,
        nic_states: "Optional[Dict[str, Any]]" = None,
        cpu_utilization: "Optional[Dict[str, Any]]" = None,
    ) -> None:
        self.nic_states = {}  # type: Dict[str, State]
        for label, value in (nic_states or {}).items():
            try:
                self.nic_states[label] = (
                    value if isinstance(value, State) else State(value)
                )
            except ValueError:
                raise exceptions.EvidenceError(
                    status.MESSAGE_INVALID_STATE.format(
                        value=value, valid="up, down"
                    )
                )
        self.cpu_utilization = {}  # type: Dict[str, float]
        for label, value in (cpu_utilization or {}).items():
            try:
                number = float(value)
            except (TypeError, ValueError):
                number = -1.0
            if not 0.0 <= number <= 1.0:
                raise exceptions.EvidenceError(
                    status.MESSAGE_INVALID_UTILIZATION.format(
                        label=label, value=value
                    )
                )
            self.cpu_utilization[label] = number

    def __eq__(self, other):
        if not isinstance(other, ObservationSet):
            return NotImplemented
        return (
            self.nic_states == other.nic_states
            and self.cpu_utilization == other.cpu_utilization
        )

    def __repr__(self):
        return "ObservationSet(nics={}, cpus={})".format(
            len(self.nic_states), len(self.cpu_utilization)
        )

    def to_dict(self) -> "Dict[str, Any]":
        return {
            "nic_states": dict(
                (k, v.value) for k, v in sorted(self.nic_states.items())
            ),
            "cpu_utilization": dict(sorted(self.cpu_utilization.items())),
        }


def load_observations(
    document: bytes, source: str = "<evidence>"
) -> "Tuple[Optional[ServiceAlarm], ObservationSet]":
    """Read an evidence file: an optional alarm plus observations."""
    data = decode_json(document, source)
    if not isinstance(data, dict):
        raise exceptions.EvidenceError(
            status.MESSAGE_INVALID_DOCUMENT.format(
                what="evidence", error="expected a JSON object"
            )
        )
    for field in ("nic_states", "cpu_utilization"):
        if not isinstance(data.get(field) or {}, dict):
            raise exceptions.EvidenceError(
                status.MESSAGE_INVALID_DOCUMENT.format(
                    what="evidence", error="{} must be an object".format(field)
                )
            )
    alarm = None
    if data.get("alarm"):
        alarm = ServiceAlarm.from_dict(data["alarm"])
    observations = ObservationSet(
        data.get("nic_states"), data.get("cpu_utilization")
    )
    return alarm, observations


def _vertex_label(g: DependencyGraph, element_id: str, kind: VertexKind):
    for vertex in g.vertices_of(element_id):
        if vertex.kind == kind:
            return vertex.label
    raise exceptions.ModelError(
        status.MESSAGE_MISSING_LINK_VERTEX.format(link=element_id)
    )


def _data_plane(
    descriptor: NetworkDescriptor, links: LinkDescriptor, hosts: "Set[str]"
) -> "nx.Graph":
    """Switches and the given hosts, joined by inter-switch/access links."""
    plane = nx.Graph()
    plane.add_nodes_from(s.element_id for s in descriptor.switches)
    plane.add_nodes_from(hosts)
    for entry in links:
        if entry.link_id not in descriptor:
            continue
        link_type = descriptor.get(entry.link_id).type
        if link_type == ElementType.CONTROL_LINK:
            continue
        a, b = entry.endpoint_a, entry.endpoint_b
        if a not in plane or b not in plane:
            continue
        if plane.has_edge(a, b):
            plane[a][b]["links"].append(entry.link_id)
        else:
            plane.add_edge(a, b, links=[entry.link_id])
    return plane


def _path_links(plane: "nx.Graph", path: "Sequence[str]") -> "List[str]":
    return [
        min(plane[a][b]["links"], key=id_sort_key)
        for a, b in zip(path, path[1:])
    ]


def _control_path(
    descriptor: NetworkDescriptor,
    links: LinkDescriptor,
    plane: "nx.Graph",
    switch: str,
) -> "Tuple[List[str], List[str]]":
    """Nodes and links from switch to the controller in in-band mode."""
    masters = [
        s.element_id
        for s in descriptor.of_type(ElementType.MASTER_SWITCH)
    ]
    switches = plane.subgraph(s.element_id for s in descriptor.switches)
    path = min(
        (
            p
            for master in masters
            if nx.has_path(switches, switch, master)
            for p in nx.all_shortest_paths(switches, switch, master)
        ),
        key=lambda p: (len(p), p),
    )
    control = [
        e.link_id
        for e in links.incident(path[-1])
        if descriptor.get(e.link_id).type == ElementType.CONTROL_LINK
    ]
    return path, _path_links(switches, path) + sorted(
        control, key=id_sort_key
    )[:1]


def service_elements(
    descriptor: NetworkDescriptor,
    links: LinkDescriptor,
    alarm: ServiceAlarm,
) -> "Tuple[List[str], List[str]]":
    """Nodes and links whose failure can raise alarm.

    A degradation covers the fewest-hop data path between its endpoints
    (ties to the lexicographically smallest path, parallel links to the
    lowest link id), and in in-band mode the control path of every
    switch on it. Both include the controller.
    """
    controller = descriptor.controller
    controller_ids = [controller.element_id] if controller else []
    if alarm.kind == AlarmKind.INFRASTRUCTURE_FAILURE:
        control_links = [
            e.element_id for e in descriptor.of_type(ElementType.CONTROL_LINK)
        ]
        return controller_ids, control_links
    src, dst = alarm.endpoints
    for endpoint in (src, dst):
        if (
            endpoint not in descriptor
            or descriptor.get(endpoint).type != ElementType.HOST
        ):
            raise exceptions.EvidenceError(
                status.MESSAGE_ALARM_ENDPOINT_NOT_HOST.format(
                    element=endpoint
                )
            )
    plane = _data_plane(descriptor, links, {src, dst})
    try:
        path = min(nx.all_shortest_paths(plane, src, dst))
    except nx.NetworkXNoPath:
        raise exceptions.UnreachableEndpointsError(src, dst)
    nodes = list(path)
    path_links = _path_links(plane, path)
    if descriptor.control_mode == ControlMode.IN_BAND:
        for node in path:
            if node in (src, dst) or not descriptor.get(node).type.is_switch:
                continue
            control_nodes, control_links = _control_path(
                descriptor, links, plane, node
            )
            nodes += [n for n in control_nodes if n not in nodes]
            path_links += [
                link for link in control_links if link not in path_links
            ]
    return nodes + controller_ids, path_links


def attach_service_vertex(
    bn: BayesianNetwork,
    alarm: ServiceAlarm,
    descriptor: "Optional[NetworkDescriptor]" = None,
    links: "Optional[LinkDescriptor]" = None,
) -> BayesianNetwork:
    """Add a deterministic-OR service vertex the alarm is evidence on."""
    if descriptor is None or links is None:
        if bn.graph.topology is None:
            raise exceptions.InputError(
                status.MESSAGE_MODEL_WITHOUT_TOPOLOGY
            )
        descriptor, links = bn.graph.topology
    nodes, path_links = service_elements(descriptor, links, alarm)
    parents = [
        _vertex_label(bn.graph, link, VertexKind.LINK_STATE)
        for link in path_links
    ] + [
        _vertex_label(bn.graph, node, VertexKind.VNF_ACTIVE)
        for node in dict.fromkeys(nodes)
    ]
    LOG.debug(
        "Service vertex for %s alarm has parents: %s",
        alarm.kind.value,
        ", ".join(parents),
    )
    cpt = NoisyOrCpt(0.0, (0.0,) * len(parents))
    return bn.extend(SERVICE_LABEL, parents, cpt)


def ingest_observations(
    obs: ObservationSet, bn: BayesianNetwork
) -> Evidence:
    """NIC states become hard evidence; CPU load u becomes (1 - u, u)."""
    for labels, expected in (
        (obs.nic_states, VertexKind.NETWORK_CARD),
        (obs.cpu_utilization, VertexKind.CPU),
    ):
        for label in sorted(labels):
            if label not in bn.graph:
                raise exceptions.EvidenceError(
                    status.MESSAGE_UNKNOWN_VERTEX.format(label=label)
                )
            actual = bn.graph.vertex(label).kind
            if actual != expected:
                raise exceptions.MappingError(
                    status.MESSAGE_WRONG_KIND_OBSERVATION.format(
                        label=label,
                        actual=actual.value,
                        expected=expected.value,
                    )
                )
    soft = dict(
        (label, (1.0 - u, u)) for label, u in obs.cpu_utilization.items()
    )
    return Evidence(dict(obs.nic_states), soft)


ElementScore = namedtuple(
    "ElementScore", ("element_id", "score", "sub_causes")
)
VertexScore = namedtuple("VertexScore", ("label", "posterior"))


class RootCauseReport:
    """Ranked elements and vertices with the evidence that produced them.

    sub_causes of an element are, per unobserved vertex, the probability
    that the vertex failed on its own rather than through a parent.
    """

    def __init__(
        self,
        element_ranking: "Sequence[ElementScore]",
        vertex_ranking: "Sequence[VertexScore]",
        evidence: Evidence,
        alarm: "Optional[ServiceAlarm]" = None,
        tie_epsilon: float = DEFAULT_TIE_EPSILON,
        log_evidence: float = 0.0,
        top_k: int = DEFAULT_TOP_K,
    ) -> None:
        self.element_ranking = list(element_ranking)
        self.vertex_ranking = list(vertex_ranking)
        self.evidence = evidence
        self.alarm = alarm
        self.tie_epsilon = tie_epsilon
        self.log_evidence = log_evidence
        self.top_k = top_k
        self.groups = _tie_groups(self.element_ranking, tie_epsilon)

    @property
    def ties(self) -> "List[List[str]]":
        return [group for group in self.groups if len(group) > 1]

    def top_group(self) -> "List[str]":
        return list(self.groups[0]) if self.groups else []

    def score_of(self, element_id: str) -> "Optional[float]":
        for item in self.element_ranking:
            if item.element_id == element_id:
                return item.score
        return None

    def to_dict(self) -> "Dict[str, Any]":
        return {
            "alarm": self.alarm.to_dict() if self.alarm else None,
            "element_ranking": [
                {
                    "element_id": item.element_id,
                    "score": item.score,
                    "sub_causes": [
                        {"label": label, "posterior": p}
                        for label, p in item.sub_causes
                    ],
                }
                for item in self.element_ranking
            ],
            "vertex_ranking": [
                {"label": item.label, "posterior": item.posterior}
                for item in self.vertex_ranking
            ],
            "ties": self.ties,
            "tie_epsilon": self.tie_epsilon,
            "top_k": self.top_k,
            "evidence": self.evidence.to_dict(),
        }


def _tie_groups(
    ranking: "Sequence[ElementScore]", epsilon: float
) -> "List[List[str]]":
    groups = []  # type: List[List[str]]
    leader = None
    for item in ranking:
        if leader is not None and leader - item.score < epsilon:
            groups[-1].append(item.element_id)
        else:
            groups.append([item.element_id])
            leader = item.score
    return groups


def diagnose(
    bn: BayesianNetwork,
    alarm: "Optional[ServiceAlarm]",
    obs: ObservationSet,
    tie_epsilon: float = DEFAULT_TIE_EPSILON,
    top_k: int = DEFAULT_TOP_K,
    heuristic: str = inference.MIN_FILL,
) -> RootCauseReport:
    """Rank elements by P(some unobserved vertex of theirs is down).

    Without an alarm only the observations are used.
    """
    evidence = ingest_observations(obs, bn)
    if alarm is not None:
        bn = attach_service_vertex(bn, alarm)
        evidence = evidence.combine(Evidence({SERVICE_LABEL: State.DOWN}))
    candidates = [
        v.label for v in bn.graph.vertices if v.label not in evidence.hard
    ]
    by_element = {}  # type: Dict[str, List[str]]
    for label in candidates:
        owner = bn.graph.vertex(label).owner
        by_element.setdefault(owner, []).append(label)
    if not candidates:
        LOG.debug("Every vertex carries hard evidence")
        evidence.validate(bn)
        return RootCauseReport(
            [], [], evidence, alarm, tie_epsilon, top_k=top_k
        )
    result = inference.infer(
        bn,
        evidence,
        marginals=candidates,
        disjunctions=by_element,
        leaks=candidates,
        heuristic=heuristic,
    )
    element_ranking = sorted(
        (
            ElementScore(
                element_id,
                result.disjunctions[element_id],
                sorted(
                    ((label, result.leaks[label]) for label in labels),
                    key=lambda kv: (-kv[1], kv[0]),
                ),
            )
            for element_id, labels in by_element.items()
        ),
        key=lambda item: (-item.score, item.element_id),
    )
    vertex_ranking = sorted(
        (VertexScore(k, v) for k, v in result.marginals.items()),
        key=lambda item: (-item.posterior, item.label),
    )
    LOG.debug(
        "Ranked %d elements; top: %s",
        len(element_ranking),
        element_ranking[0].element_id,
    )
    return RootCauseReport(
        element_ranking,
        vertex_ranking,
        evidence,
        alarm,
        tie_epsilon,
        result.log_evidence,
        top_k,
    )


def explain(report: RootCauseReport, top_k: "Optional[int]" = None) -> str:
    """Plain-text summary of the top elements and tie groups."""
    top_k = top_k or report.top_k
    if not report.element_ranking:
        return status.MESSAGE_NO_CANDIDATES + "\n"
    lines = []
    if report.alarm is not None:
        alarm = report.alarm.kind.value
        if report.alarm.endpoints:
            alarm += " between {} and {}".format(*report.alarm.endpoints)
        lines.append("Alarm: {}".format(alarm))
    top = report.element_ranking[0]
    lines.append(
        "Most probable root cause: {} ({:.1%})".format(
            top.element_id, top.score
        )
    )
    for label, posterior in top.sub_causes:
        lines.append("  {:<16} {:.1%}".format(label, posterior))
    lines.append("")
    lines.append("Ranking:")
    for rank, item in enumerate(report.element_ranking[:top_k], 1):
        lines.append(
            "  {:>3}. {:<10} {:.4f}".format(rank, item.element_id, item.score)
        )
    for group in report.ties:
        lines.append(
            status.wrap_line(
                "Tied within {:g}: {}".format(
                    report.tie_epsilon, ", ".join(group)
                )
            )
        )
    return "\n".join(lines) + "\n"
