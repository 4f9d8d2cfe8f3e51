"""Fault injection, synthetic monitoring and diagnosis campaigns."""

import csv
import enum
import io
import itertools
import logging
import os
import random
import time
from collections import namedtuple

from netdiag import exceptions, status, util
from netdiag.bayes import PriorConfig, attach_parameters
from netdiag.defaults import (
    BACKGROUND_CPU_LOAD_RANGE,
    DEFAULT_BENCH_REPETITIONS,
    DEFAULT_TIE_EPSILON,
    DEFAULT_TOP_K,
)
from netdiag.diagnosis import (
    AlarmKind,
    ObservationSet,
    RootCauseReport,
    ServiceAlarm,
    diagnose,
    service_elements,
)
from netdiag.graph import DependencyGraph, build_model
from netdiag.status import State
from netdiag.templates import TemplateProfile, VertexKind
from netdiag.topology import (
    ControlMode,
    ElementType,
    LinkDescriptor,
    NetworkDescriptor,
    id_sort_key,
)
from netdiag.topology.generator import (
    KindName,
    TopologyKind,
    generate_topology,
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

DEFAULT_CPU_LOAD = 0.95


@enum.unique
class FaultMode(enum.Enum):
    NODE_SHUTDOWN = "node-shutdown"
    LINK_CUT = "link-cut"
    CPU_LOAD = "cpu-load"

    @classmethod
    def from_value(cls, value: str) -> "FaultMode":
        try:
            return cls(value)
        except ValueError:
            raise exceptions.ScenarioError(
                status.MESSAGE_UNKNOWN_FAULT_MODE.format(
                    mode=value, valid=", ".join(m.value for m in cls)
                )
            )


# load only applies to CPU_LOAD faults
Fault = namedtuple("Fault", ("target", "mode", "load"))
Fault.__new__.__defaults__ = (None,)


class FaultScenario(namedtuple("FaultScenario", ("faults", "seed"))):
    def __new__(cls, faults: "Iterable[Fault]", seed: int = 0):
        return super().__new__(cls, tuple(faults), seed)

    @property
    def targets(self) -> "List[str]":
        return sorted((f.target for f in self.faults), key=id_sort_key)

    def validate(self, descriptor: NetworkDescriptor) -> None:
        seen = set()  # type: Set[str]
        for fault in self.faults:
            if fault.target not in descriptor:
                raise exceptions.ScenarioError(
                    status.MESSAGE_UNKNOWN_TARGET.format(target=fault.target)
                )
            if fault.target in seen:
                raise exceptions.ScenarioError(
                    status.MESSAGE_DUPLICATE_FAULT.format(target=fault.target)
                )
            seen.add(fault.target)
            element_type = descriptor.get(fault.target).type
            if element_type.is_link != (fault.mode == FaultMode.LINK_CUT):
                raise exceptions.ScenarioError(
                    status.MESSAGE_FAULT_MODE_MISMATCH.format(
                        mode=fault.mode.value,
                        element_type=element_type.value,
                        target=fault.target,
                    )
                )
            if fault.mode == FaultMode.CPU_LOAD and not (
                fault.load is not None and 0.0 <= fault.load <= 1.0
            ):
                raise exceptions.ScenarioError(
                    status.MESSAGE_INVALID_LOAD.format(
                        target=fault.target, value=fault.load
                    )
                )


class GroundTruth(
    namedtuple(
        "GroundTruth", ("vertex_states", "cpu_loads", "nic_labels", "targets")
    )
):
    """True state of every vertex after faults, plus CPU loads."""

    @property
    def down(self) -> "List[str]":
        return sorted(
            label
            for label, state in self.vertex_states.items()
            if state == State.DOWN
        )


def inject(
    descriptor: NetworkDescriptor,
    links: LinkDescriptor,
    scenario: FaultScenario,
    graph: "Optional[DependencyGraph]" = None,
) -> GroundTruth:
    """Apply faults and propagate failures down every dependency edge.

    A shut down node loses all its vertices; a cut link takes down the
    network cards it feeds. Peer cards of a shut down node stay up.
    """
    scenario.validate(descriptor)
    if graph is None:
        graph = build_model(descriptor, links)
    down = set()  # type: Set[int]
    stack = []  # type: List[int]
    loads = {}  # type: Dict[str, float]
    for fault in scenario.faults:
        if fault.mode == FaultMode.NODE_SHUTDOWN:
            stack += [v.index for v in graph.vertices_of(fault.target)]
        elif fault.mode == FaultMode.LINK_CUT:
            stack += [
                v.index
                for v in graph.vertices_of(fault.target)
                if v.kind == VertexKind.LINK_STATE
            ]
        else:
            cpu = _cpu_label(graph, fault.target)
            loads[cpu] = float(fault.load)
    while stack:
        index = stack.pop()
        if index not in down:
            down.add(index)
            stack.extend(graph.children(index))
    if loads:
        rng = random.Random(scenario.seed)
        low, high = BACKGROUND_CPU_LOAD_RANGE
        for node in descriptor.nodes:
            cpu = _cpu_label(graph, node.element_id)
            if cpu not in loads:
                loads[cpu] = round(rng.uniform(low, high), 6)
    states = dict(
        (v.label, State.DOWN if v.index in down else State.UP)
        for v in graph.vertices
    )
    nics = tuple(
        v.label for v in graph.of_kind(VertexKind.NETWORK_CARD)
    )
    LOG.debug(
        "Injected %d faults: %d vertices down", len(scenario.faults), len(down)
    )
    return GroundTruth(states, loads, nics, tuple(scenario.targets))


def _cpu_label(graph: DependencyGraph, element_id: str) -> str:
    for vertex in graph.vertices_of(element_id):
        if vertex.kind == VertexKind.CPU:
            return vertex.label
    raise exceptions.ScenarioError(
        status.MESSAGE_UNKNOWN_TARGET.format(target=element_id)
    )


@enum.unique
class VisibilityMode(enum.Enum):
    ALL_NICS = "all-nics"
    SAMPLED = "sampled"
    CPU_ONLY = "cpu-only"


class Visibility(namedtuple("Visibility", ("mode", "fraction", "seed"))):
    """Which parts of the truth monitoring reports."""

    @classmethod
    def all_nics(cls) -> "Visibility":
        return cls(VisibilityMode.ALL_NICS, 1.0, None)

    @classmethod
    def cpu_only(cls) -> "Visibility":
        return cls(VisibilityMode.CPU_ONLY, 0.0, None)

    @classmethod
    def sampled(cls, fraction: float, seed: int = 0) -> "Visibility":
        if not 0.0 <= fraction <= 1.0:
            raise exceptions.ScenarioError(
                status.MESSAGE_INVALID_FRACTION.format(value=fraction)
            )
        return cls(VisibilityMode.SAMPLED, fraction, seed)

    @classmethod
    def from_dict(cls, data: "Any") -> "Visibility":
        if isinstance(data, str):
            data = {"mode": data}
        try:
            mode = VisibilityMode(data.get("mode", "all-nics"))
        except (AttributeError, ValueError):
            raise exceptions.ScenarioError(
                status.MESSAGE_INVALID_CAMPAIGN.format(
                    error="visibility: {!r}".format(data)
                )
            )
        if mode == VisibilityMode.SAMPLED:
            return cls.sampled(
                float(data.get("fraction", 1.0)), int(data.get("seed", 0))
            )
        if mode == VisibilityMode.CPU_ONLY:
            return cls.cpu_only()
        return cls.all_nics()

    def to_dict(self) -> "Dict[str, Any]":
        return {
            "mode": self.mode.value,
            "fraction": self.fraction,
            "seed": self.seed,
        }


def synthesize_observations(
    truth: GroundTruth, visibility: "Optional[Visibility]" = None
) -> ObservationSet:
    """Report NIC states and CPU loads as a monitoring system would."""
    visibility = visibility or Visibility.all_nics()
    nics = list(truth.nic_labels)
    if visibility.mode == VisibilityMode.CPU_ONLY:
        nics = []
    elif visibility.mode == VisibilityMode.SAMPLED:
        rng = random.Random(visibility.seed)
        count = int(round(visibility.fraction * len(nics)))
        chosen = set(rng.sample(nics, count))
        nics = [label for label in nics if label in chosen]
    return ObservationSet(
        dict((label, truth.vertex_states[label]) for label in nics),
        dict(truth.cpu_loads),
    )


def derive_alarm(
    descriptor: NetworkDescriptor,
    links: LinkDescriptor,
    scenario: FaultScenario,
) -> ServiceAlarm:
    """The alarm a service monitor would raise for scenario.

    Controller and control-link faults raise an infrastructure failure.
    Other faults degrade the first host pair (in id order) whose service
    path crosses a faulted element.
    """
    targets = set(f.target for f in scenario.faults)
    infrastructure = ServiceAlarm(AlarmKind.INFRASTRUCTURE_FAILURE)
    if any(
        descriptor.get(t).type
        in (ElementType.CONTROLLER, ElementType.CONTROL_LINK)
        for t in targets
    ):
        return infrastructure
    hosts = sorted(
        (h.element_id for h in descriptor.of_type(ElementType.HOST)),
        key=id_sort_key,
    )
    pairs = list(itertools.combinations(hosts, 2)) or [
        (h, h) for h in hosts
    ]
    for src, dst in pairs:
        alarm = ServiceAlarm(AlarmKind.SERVICE_DEGRADATION, (src, dst))
        try:
            nodes, path_links = service_elements(descriptor, links, alarm)
        except exceptions.UnreachableEndpointsError:
            continue
        if targets & (set(nodes) | set(path_links)):
            return alarm
    return infrastructure


class CampaignConfig:
    """Grid of topologies, control modes, sizes and fault modes.

    trials is the number of trials per grid cell.
    """

    def __init__(
        self,
        topologies: "Sequence[TopologyKind]" = (TopologyKind.linear(),),
        modes: "Sequence[ControlMode]" = (ControlMode.OUT_OF_BAND,),
        sizes: "Sequence[int]" = (4,),
        fault_modes: "Sequence[FaultMode]" = (FaultMode.NODE_SHUTDOWN,),
        trials: int = 1,
        seed: int = 0,
        faults_per_trial: int = 1,
        visibility: "Optional[Visibility]" = None,
        cpu_load: float = DEFAULT_CPU_LOAD,
        profile: "Optional[TemplateProfile]" = None,
        priors: "Optional[PriorConfig]" = None,
        tie_epsilon: float = DEFAULT_TIE_EPSILON,
        top_k: int = DEFAULT_TOP_K,
    ) -> None:
        if trials < 0 or faults_per_trial < 1 or top_k < 1:
            raise exceptions.ScenarioError(
                status.MESSAGE_INVALID_CAMPAIGN.format(
                    error="trials >= 0, faults_per_trial >= 1 and"
                    " top_k >= 1 are required"
                )
            )
        self.topologies = list(topologies)
        self.modes = list(modes)
        self.sizes = sorted(sizes)
        self.fault_modes = list(fault_modes)
        self.trials = trials
        self.seed = seed
        self.faults_per_trial = faults_per_trial
        self.visibility = visibility or Visibility.all_nics()
        self.cpu_load = cpu_load
        self.profile = profile or TemplateProfile.degree_adaptive()
        self.priors = priors or PriorConfig()
        self.tie_epsilon = tie_epsilon
        self.top_k = top_k

    @classmethod
    def from_dict(
        cls, data: "Dict[str, Any]", base_dir: str = ""
    ) -> "CampaignConfig":
        if not isinstance(data, dict):
            raise exceptions.ScenarioError(
                status.MESSAGE_INVALID_CAMPAIGN.format(
                    error="expected a mapping"
                )
            )
        try:
            kwargs = {
                "topologies": [
                    TopologyKind.parse(str(k))
                    for k in data.get("topologies", ["linear"])
                ],
                "modes": [
                    ControlMode(m)
                    for m in data.get("modes", ["out-of-band"])
                ],
                "sizes": [int(n) for n in data.get("sizes", [4])],
                "fault_modes": [
                    FaultMode.from_value(m)
                    for m in data.get("fault_modes", ["node-shutdown"])
                ],
                "trials": int(data.get("trials", 1)),
                "seed": int(data.get("seed", 0)),
                "faults_per_trial": int(data.get("faults_per_trial", 1)),
                "visibility": Visibility.from_dict(
                    data.get("visibility", "all-nics")
                ),
                "cpu_load": float(data.get("cpu_load", DEFAULT_CPU_LOAD)),
                "tie_epsilon": float(
                    data.get("tie_epsilon", DEFAULT_TIE_EPSILON)
                ),
                "top_k": int(data.get("top_k", DEFAULT_TOP_K)),
            }  # type: Dict[str, Any]
        except (TypeError, ValueError) as e:
            raise exceptions.ScenarioError(
                status.MESSAGE_INVALID_CAMPAIGN.format(error=str(e))
            )
        if data.get("profile"):
            kwargs["profile"] = TemplateProfile.from_name(data["profile"])
        if data.get("priors"):
            priors = data["priors"]
            if isinstance(priors, str):
                kwargs["priors"] = PriorConfig.load(
                    os.path.join(base_dir, priors)
                )
            else:
                kwargs["priors"] = PriorConfig.from_dict(priors)
        return cls(**kwargs)

    @classmethod
    def load(cls, path: str) -> "CampaignConfig":
        data = util.load_yaml_file(path, "campaign")
        return cls.from_dict(data or {}, os.path.dirname(path))

    def cells(self) -> "List[Tuple[TopologyKind, ControlMode, int, Any]]":
        return list(
            itertools.product(
                self.topologies, self.modes, self.sizes, self.fault_modes
            )
        )


TrialOutcome = namedtuple(
    "TrialOutcome",
    ("cell", "trial", "targets", "top_group", "hit", "topk_hit", "error"),
)


class CampaignReport:
    def __init__(
        self,
        outcomes: "Sequence[TrialOutcome]",
        durations: "Optional[Sequence[float]]" = None,
    ) -> None:
        self.outcomes = list(outcomes)
        self.durations = list(durations or [])

    @property
    def trials(self) -> int:
        return len(self.outcomes)

    @property
    def hits(self) -> int:
        return sum(1 for o in self.outcomes if o.hit)

    @property
    def failures(self) -> int:
        return sum(1 for o in self.outcomes if o.error)

    @property
    def top1_accuracy(self) -> "Optional[float]":
        if not self.outcomes:
            return None
        return self.hits / self.trials

    @property
    def topk_accuracy(self) -> "Optional[float]":
        if not self.outcomes:
            return None
        return sum(1 for o in self.outcomes if o.topk_hit) / self.trials

    def breakdown(self) -> "List[Dict[str, Any]]":
        cells = {}  # type: Dict[str, Dict[str, Any]]
        for outcome in self.outcomes:
            row = cells.setdefault(
                outcome.cell,
                {
                    "cell": outcome.cell,
                    "trials": 0,
                    "hits": 0,
                    "topk_hits": 0,
                    "failures": 0,
                },
            )
            row["trials"] += 1
            row["hits"] += int(outcome.hit)
            row["topk_hits"] += int(outcome.topk_hit)
            row["failures"] += int(bool(outcome.error))
        return [cells[k] for k in sorted(cells)]

    def to_dict(self, timings: bool = False) -> "Dict[str, Any]":
        data = {
            "trials": self.trials,
            "hits": self.hits,
            "failures": self.failures,
            "top1_accuracy": self.top1_accuracy,
            "topk_accuracy": self.topk_accuracy,
            "breakdown": self.breakdown(),
            "outcomes": [o._asdict() for o in self.outcomes],
        }  # type: Dict[str, Any]
        if timings:
            data["timings"] = _timing_stats(self.durations)
        return data


def _timing_stats(durations: "Sequence[float]") -> "Dict[str, Any]":
    if not durations:
        return {"count": 0, "mean_s": None, "min_s": None, "max_s": None}
    return {
        "count": len(durations),
        "mean_s": sum(durations) / len(durations),
        "min_s": min(durations),
        "max_s": max(durations),
    }


def _cell_name(kind, mode, n_hosts, fault_mode) -> str:
    return "{}/{}/{}/{}".format(kind, mode.value, n_hosts, fault_mode.value)


def _score(
    report: RootCauseReport, targets: "Sequence[str]", top_k: int
) -> "Tuple[bool, bool]":
    group = report.top_group()
    hit = set(group) == set(targets)
    ranked = [item.element_id for item in report.element_ranking[:top_k]]
    return hit, set(targets) <= set(ranked)


def run_campaign(config: CampaignConfig) -> CampaignReport:
    """Run every trial of every grid cell; failed trials count as misses.

    Each trial draws its faults from its own seeded generator, so a trial's
    outcome does not depend on the trials run before it.
    """
    outcomes = []
    durations = []
    for kind, mode, n_hosts, fault_mode in config.cells():
        cell = _cell_name(kind, mode, n_hosts, fault_mode)
        try:
            descriptor, links = generate_topology(kind, n_hosts, mode)
            graph = build_model(descriptor, links, config.profile)
            bn = attach_parameters(graph, config.priors)
        except exceptions.UserFacingError as e:
            LOG.debug("Cell %s could not be built: %s", cell, e.msg)
            outcomes += [
                TrialOutcome(cell, i, [], [], False, False, e.msg)
                for i in range(config.trials)
            ]
            continue
        if fault_mode == FaultMode.LINK_CUT:
            candidates = [e.element_id for e in descriptor.links]
        else:
            candidates = [e.element_id for e in descriptor.nodes]
        for i in range(config.trials):
            rng = random.Random("{}:{}:{}".format(config.seed, cell, i))
            count = min(config.faults_per_trial, len(candidates))
            targets = sorted(rng.sample(candidates, count), key=id_sort_key)
            scenario = FaultScenario(
                [
                    Fault(
                        t,
                        fault_mode,
                        config.cpu_load
                        if fault_mode == FaultMode.CPU_LOAD
                        else None,
                    )
                    for t in targets
                ],
                rng.randrange(2 ** 32),
            )
            started = time.perf_counter()
            try:
                truth = inject(descriptor, links, scenario, graph)
                obs = synthesize_observations(truth, config.visibility)
                alarm = derive_alarm(descriptor, links, scenario)
                report = diagnose(
                    bn, alarm, obs, config.tie_epsilon, config.top_k
                )
            except exceptions.UserFacingError as e:
                LOG.debug("Trial %s#%d failed: %s", cell, i, e.msg)
                outcomes.append(
                    TrialOutcome(cell, i, targets, [], False, False, e.msg)
                )
                continue
            durations.append(time.perf_counter() - started)
            hit, topk_hit = _score(report, targets, config.top_k)
            LOG.debug(
                "Trial %s#%d: faults %s, top group %s",
                cell,
                i,
                targets,
                report.top_group(),
            )
            outcomes.append(
                TrialOutcome(
                    cell, i, targets, report.top_group(), hit, topk_hit, None
                )
            )
    return CampaignReport(outcomes, durations)


class BenchConfig:
    """Topology kinds and the element-count range to time model builds on.

    n_hosts, when given, replaces the range with explicit host counts.
    """

    def __init__(
        self,
        kinds: "Sequence[TopologyKind]" = (
            TopologyKind.linear(),
            TopologyKind.tree(),
        ),
        min_elements: int = 15,
        max_elements: int = 500,
        repetitions: int = DEFAULT_BENCH_REPETITIONS,
        mode: ControlMode = ControlMode.OUT_OF_BAND,
        profile: "Optional[TemplateProfile]" = None,
        n_hosts: "Optional[Sequence[int]]" = None,
    ) -> None:
        if repetitions < 1 or min_elements > max_elements:
            raise exceptions.ScenarioError(
                status.MESSAGE_INVALID_BENCH.format(
                    error="repetitions >= 1 and min_elements <= max_elements"
                    " are required"
                )
            )
        for kind in kinds:
            if kind.name not in (KindName.LINEAR, KindName.TREE) or (
                kind.name == KindName.TREE and kind.fanout != 2
            ):
                raise exceptions.ScenarioError(
                    status.MESSAGE_INVALID_BENCH.format(
                        error="only linear and binary tree kinds are timed"
                    )
                )
        self.kinds = list(kinds)
        self.min_elements = min_elements
        self.max_elements = max_elements
        self.repetitions = repetitions
        self.mode = mode
        self.profile = profile or TemplateProfile.table_compat()
        self.n_hosts = sorted(n_hosts) if n_hosts else None

    @classmethod
    def from_dict(cls, data: "Dict[str, Any]") -> "BenchConfig":
        if not isinstance(data, dict):
            raise exceptions.ScenarioError(
                status.MESSAGE_INVALID_BENCH.format(error="expected a mapping")
            )
        try:
            kwargs = {
                "kinds": [
                    TopologyKind.parse(str(k))
                    for k in data.get("kinds", ["linear", "tree"])
                ],
                "min_elements": int(data.get("min_elements", 15)),
                "max_elements": int(data.get("max_elements", 500)),
                "repetitions": int(
                    data.get("repetitions", DEFAULT_BENCH_REPETITIONS)
                ),
                "mode": ControlMode(data.get("mode", "out-of-band")),
                "n_hosts": data.get("n_hosts"),
            }  # type: Dict[str, Any]
        except (TypeError, ValueError) as e:
            raise exceptions.ScenarioError(
                status.MESSAGE_INVALID_BENCH.format(error=str(e))
            )
        if data.get("profile"):
            kwargs["profile"] = TemplateProfile.from_name(data["profile"])
        return cls(**kwargs)

    @classmethod
    def load(cls, path: str) -> "BenchConfig":
        return cls.from_dict(util.load_yaml_file(path, "bench") or {})

    def sizes(self, kind: TopologyKind) -> "List[int]":
        """Host counts whose element count falls within the range."""
        if self.n_hosts:
            return list(self.n_hosts)
        sizes = []
        if kind.name == KindName.LINEAR:
            # 5 elements per host: switch, host, and three links
            n = 1
            while 5 * n <= self.max_elements:
                if 5 * n >= self.min_elements:
                    sizes.append(n)
                n += 1
        else:
            n = 2
            while 5 * n - 3 <= self.max_elements:
                if 5 * n - 3 >= self.min_elements:
                    sizes.append(n)
                n *= 2
        return sizes


BenchRow = namedtuple(
    "BenchRow",
    (
        "kind",
        "n_hosts",
        "n_switches",
        "n_elements",
        "n_vertices",
        "repetitions",
        "mean_s",
        "min_s",
        "max_s",
    ),
)


def benchmark_build(config: BenchConfig) -> "List[BenchRow]":
    """Time build_model per topology size, sizes in ascending order."""
    rows = []
    for kind in config.kinds:
        for n_hosts in config.sizes(kind):
            descriptor, links = generate_topology(kind, n_hosts, config.mode)
            timings = []
            n_vertices = 0
            for _ in range(config.repetitions):
                started = time.perf_counter()
                graph = build_model(descriptor, links, config.profile)
                timings.append(time.perf_counter() - started)
                n_vertices = len(graph)
            rows.append(
                BenchRow(
                    str(kind),
                    n_hosts,
                    len(descriptor.switches),
                    len(descriptor),
                    n_vertices,
                    config.repetitions,
                    sum(timings) / len(timings),
                    min(timings),
                    max(timings),
                )
            )
            LOG.debug(
                "Timed %s with %d hosts: mean %.6fs",
                kind,
                n_hosts,
                rows[-1].mean_s,
            )
    return rows


def bench_csv(rows: "Sequence[BenchRow]") -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(BenchRow._fields)
    for row in rows:
        writer.writerow(
            [
                "{:.9f}".format(value) if isinstance(value, float) else value
                for value in row
            ]
        )
    return out.getvalue()
