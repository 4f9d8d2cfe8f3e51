"""Noisy-OR parameterization of a dependency graph and exact queries.

Every vertex is binary (up or down). Production queries go through
netdiag.inference; enumerate_joint is the brute-force reference.
"""

import logging
import math
from collections import namedtuple

import numpy as np

from netdiag import exceptions, status, util
from netdiag.defaults import DEFAULT_ENUMERATION_CAP, DEFAULT_LEAKS
from netdiag.graph import DependencyGraph
from netdiag.status import State
from netdiag.templates import VertexKind

from typing import (  # noqa: F401
    Any,
    Dict,
    Iterable,
    List,
    Mapping,
    Optional,
    Sequence,
    Tuple,
    Union,
)

LOG = logging.getLogger(__name__)


class NoisyOrCpt(namedtuple("NoisyOrCpt", ("leak", "inhibitions"))):
    """P(down | parents) = 1 - (1 - leak) * prod(inhibition of down parents)

    inhibitions holds one value per parent, in parent order.
    """

    def p_down(self, parent_states: "Sequence[Any]") -> float:
        return cpt_probability(self, parent_states)


def cpt_probability(
    cpt: NoisyOrCpt, parent_states: "Sequence[Union[State, str]]"
) -> float:
    if len(parent_states) != len(cpt.inhibitions):
        raise exceptions.ModelError(
            status.MESSAGE_ARITY_MISMATCH.format(
                expected=len(cpt.inhibitions), actual=len(parent_states)
            )
        )
    survive = 1.0 - cpt.leak
    for inhibition, parent_state in zip(cpt.inhibitions, parent_states):
        if _as_state(parent_state) == State.DOWN:
            survive *= inhibition
    return 1.0 - survive


def _as_state(value: "Union[State, str]") -> State:
    if isinstance(value, State):
        return value
    return State.from_value(value)


def _check_probability(name: str, value: "Any") -> float:
    try:
        number = float(value)
    except (TypeError, ValueError):
        number = float("nan")
    if math.isnan(number) or not 0.0 <= number <= 1.0:
        raise exceptions.ConfigError(
            status.MESSAGE_INVALID_LEAK.format(name=name, value=value)
        )
    return number


class PriorConfig:
    """Leaks per vertex kind, per-label overrides and a default inhibition.

    The file layout is::

        leaks: {network-card: 0.005, ...}
        overrides: {"C_1.CPU_1": 0.5}
        inhibition: 0.0
    """

    def __init__(
        self,
        leaks: "Optional[Mapping[str, Any]]" = None,
        overrides: "Optional[Mapping[str, Any]]" = None,
        inhibition: float = 0.0,
    ) -> None:
        valid_kinds = [k.value for k in VertexKind]
        self.leaks = dict(DEFAULT_LEAKS)
        for kind, leak in (leaks or {}).items():
            if kind not in valid_kinds:
                raise exceptions.ConfigError(
                    status.MESSAGE_UNKNOWN_PRIOR_KIND.format(
                        kind=kind, valid=", ".join(valid_kinds)
                    )
                )
            self.leaks[kind] = _check_probability(kind, leak)
        self.overrides = dict(
            (label, _check_probability(label, leak))
            for label, leak in (overrides or {}).items()
        )
        self.inhibition = _check_probability("inhibition", inhibition)

    @classmethod
    def from_dict(cls, data: "Optional[Mapping[str, Any]]") -> "PriorConfig":
        data = data or {}
        if not isinstance(data, dict):
            raise exceptions.ConfigError(
                status.MESSAGE_INVALID_DOCUMENT.format(
                    what="priors", error="expected a mapping"
                )
            )
        unknown = set(data) - {"leaks", "overrides", "inhibition"}
        if unknown:
            raise exceptions.ConfigError(
                status.MESSAGE_INVALID_DOCUMENT.format(
                    what="priors",
                    error="unknown keys: {}".format(
                        ", ".join(sorted(unknown))
                    ),
                )
            )
        return cls(
            data.get("leaks"),
            data.get("overrides"),
            data.get("inhibition", 0.0),
        )

    @classmethod
    def load(cls, path: "Optional[str]") -> "PriorConfig":
        if not path:
            return cls()
        return cls.from_dict(util.load_yaml_file(path, "priors"))

    def leak_for(self, kind: VertexKind) -> float:
        return self.leaks[kind.value]

    def to_dict(self) -> "Dict[str, Any]":
        return {
            "leaks": dict(self.leaks),
            "overrides": dict(self.overrides),
            "inhibition": self.inhibition,
        }


class BayesianNetwork:
    """A dependency graph with one noisy-OR table per vertex.

    Variables are numbered like graph vertices; variables added by extend
    come after them, so numbering stays topological.
    """

    def __init__(
        self, graph: DependencyGraph, cpts: "Sequence[NoisyOrCpt]"
    ) -> None:
        if len(cpts) != len(graph):
            raise exceptions.ModelError(
                status.MESSAGE_ARITY_MISMATCH.format(
                    expected=len(graph), actual=len(cpts)
                )
            )
        self.graph = graph
        self.labels = [v.label for v in graph.vertices]
        self.parents = [tuple(graph.parents(v.index)) for v in graph.vertices]
        self.cpts = list(cpts)
        self._index = dict((label, i) for i, label in enumerate(self.labels))
        for index, cpt in enumerate(self.cpts):
            self._check_arity(index, cpt)

    def _check_arity(self, index: int, cpt: NoisyOrCpt) -> None:
        if len(cpt.inhibitions) != len(self.parents[index]):
            raise exceptions.ModelError(
                status.MESSAGE_ARITY_MISMATCH.format(
                    expected=len(self.parents[index]),
                    actual=len(cpt.inhibitions),
                )
            )

    def __len__(self) -> int:
        return len(self.labels)

    def __contains__(self, label: str) -> bool:
        return label in self._index

    def index_of(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise exceptions.EvidenceError(
                status.MESSAGE_UNKNOWN_VERTEX.format(label=label)
            )

    def cpt(self, label: str) -> NoisyOrCpt:
        return self.cpts[self.index_of(label)]

    def extend(
        self, label: str, parent_labels: "Sequence[str]", cpt: NoisyOrCpt
    ) -> "BayesianNetwork":
        """Return a copy with one more variable that no vertex depends on."""
        if label in self._index:
            raise exceptions.LabelCollisionError(label)
        parents = tuple(sorted(self.index_of(p) for p in parent_labels))
        extended = _copy(self)
        extended.labels.append(label)
        extended.parents.append(parents)
        extended.cpts.append(cpt)
        extended._index[label] = len(extended.labels) - 1
        extended._check_arity(len(extended.labels) - 1, cpt)
        return extended

    def with_cpt(self, label: str, cpt: NoisyOrCpt) -> "BayesianNetwork":
        index = self.index_of(label)
        self._check_arity(index, cpt)
        changed = _copy(self)
        changed.cpts[index] = cpt
        return changed


def _copy(bn: BayesianNetwork) -> BayesianNetwork:
    copy = BayesianNetwork.__new__(BayesianNetwork)
    copy.graph = bn.graph
    copy.labels = list(bn.labels)
    copy.parents = list(bn.parents)
    copy.cpts = list(bn.cpts)
    copy._index = dict(bn._index)
    return copy


def attach_parameters(
    graph: DependencyGraph, priors: "Optional[PriorConfig]" = None
) -> BayesianNetwork:
    """Give every vertex a noisy-OR table from its kind's prior."""
    if priors is None:
        priors = PriorConfig()
    for label in sorted(priors.overrides):
        if label not in graph:
            raise exceptions.ConfigError(
                status.MESSAGE_UNKNOWN_OVERRIDE.format(label=label)
            )
    cpts = [
        NoisyOrCpt(
            priors.leak_for(vertex.kind),
            (priors.inhibition,) * len(graph.parents(vertex.index)),
        )
        for vertex in graph.vertices
    ]
    bn = BayesianNetwork(graph, cpts)
    for label, leak in sorted(priors.overrides.items()):
        bn = bn.with_cpt(label, bn.cpt(label)._replace(leak=leak))
    LOG.debug(
        "Attached %d noisy-OR tables, %d overridden",
        len(cpts),
        len(priors.overrides),
    )
    return bn


class Evidence:
    """Hard observations (label -> State) and soft likelihood pairs.

    hard may be a mapping or an iterable of (label, state) pairs; pairs
    observing one label both up and down are rejected.
    """

    def __init__(
        self,
        hard: "Any" = None,
        soft: "Optional[Mapping[str, Sequence[float]]]" = None,
    ) -> None:
        pairs = hard.items() if isinstance(hard, dict) else (hard or ())
        self.hard = {}  # type: Dict[str, State]
        for label, value in pairs:
            try:
                state = _as_state(value)
            except ValueError as e:
                raise exceptions.EvidenceError(str(e))
            previous = self.hard.get(label)
            if previous is not None and previous != state:
                raise exceptions.EvidenceError(
                    status.MESSAGE_CONFLICTING_EVIDENCE.format(
                        label=label,
                        first=previous.value,
                        second=state.value,
                    )
                )
            self.hard[label] = state
        self.soft = {}  # type: Dict[str, Tuple[float, float]]
        for label, value in (soft or {}).items():
            if label in self.hard:
                raise exceptions.EvidenceError(
                    status.MESSAGE_HARD_SOFT_OVERLAP.format(label=label)
                )
            self.soft[label] = _likelihood(label, value)

    def __len__(self) -> int:
        return len(self.hard) + len(self.soft)

    def __eq__(self, other):
        if not isinstance(other, Evidence):
            return NotImplemented
        return self.hard == other.hard and self.soft == other.soft

    def __repr__(self):
        return "Evidence(hard={}, soft={})".format(
            len(self.hard), len(self.soft)
        )

    @property
    def labels(self) -> "List[str]":
        return sorted(set(self.hard) | set(self.soft))

    def combine(self, other: "Evidence") -> "Evidence":
        """Union of two evidence sets; conflicts raise EvidenceError."""
        hard = list(self.hard.items()) + list(other.hard.items())
        soft = dict(self.soft)
        for label, value in other.soft.items():
            if label in soft and soft[label] != value:
                raise exceptions.EvidenceError(
                    status.MESSAGE_CONFLICTING_EVIDENCE.format(
                        label=label, first=soft[label], second=value
                    )
                )
            soft[label] = value
        return Evidence(hard, soft)

    def validate(self, bn: BayesianNetwork) -> None:
        for label in self.labels:
            bn.index_of(label)

    def assignment(self) -> "List[Tuple[str, str]]":
        return sorted((k, v.value) for k, v in self.hard.items())

    def to_dict(self) -> "Dict[str, Any]":
        return {
            "hard": dict((k, v.value) for k, v in sorted(self.hard.items())),
            "soft": dict((k, list(v)) for k, v in sorted(self.soft.items())),
        }


def _likelihood(label: str, value: "Any") -> "Tuple[float, float]":
    try:
        up, down = (float(v) for v in value)
    except (TypeError, ValueError):
        up = down = float("nan")
    if (
        math.isnan(up)
        or math.isnan(down)
        or not (0.0 <= up <= 1.0 and 0.0 <= down <= 1.0)
        or up == down == 0.0
    ):
        raise exceptions.EvidenceError(
            status.MESSAGE_INVALID_LIKELIHOOD.format(label=label, value=value)
        )
    return (up, down)


def _joint_weights(
    bn: BayesianNetwork, evidence: Evidence, cap: int
) -> "Tuple[np.ndarray, np.ndarray]":
    """Return every state vector (True: down) with its weighted probability.

    Raises ContradictionError when the evidence has zero likelihood.
    """
    count = len(bn)
    if count > cap:
        raise exceptions.SizeError(
            status.MESSAGE_ENUMERATION_CAP.format(cap=cap, count=count)
        )
    evidence.validate(bn)
    codes = np.arange(2 ** count, dtype=np.int64)
    states = ((codes[:, None] >> np.arange(count)) & 1).astype(bool)
    weights = np.ones(len(codes))
    for index, cpt in enumerate(bn.cpts):
        survive = np.full(len(codes), 1.0 - cpt.leak)
        for parent, inhibition in zip(bn.parents[index], cpt.inhibitions):
            down = states[:, parent]
            survive = np.where(down, survive * inhibition, survive)
        weights *= np.where(states[:, index], 1.0 - survive, survive)
    for label, state in evidence.hard.items():
        column = states[:, bn.index_of(label)]
        weights *= column if state == State.DOWN else ~column
    for label, (up, down) in evidence.soft.items():
        weights *= np.where(states[:, bn.index_of(label)], down, up)
    total = weights.sum()
    if total <= 0.0:
        raise exceptions.ContradictionError(evidence.assignment())
    return states, weights / total


def enumerate_joint(
    bn: BayesianNetwork,
    evidence: "Optional[Evidence]" = None,
    queries: "Optional[Iterable[str]]" = None,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> "Dict[str, float]":
    """P(down | evidence) per queried label by summing the full joint."""
    evidence = evidence or Evidence()
    states, weights = _joint_weights(bn, evidence, cap)
    labels = list(queries) if queries is not None else list(bn.labels)
    return dict(
        (label, float(weights[states[:, bn.index_of(label)]].sum()))
        for label in labels
    )


def enumerate_disjunction(
    bn: BayesianNetwork,
    evidence: "Optional[Evidence]",
    vertex_set: "Iterable[str]",
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> float:
    """P(any of vertex_set is down | evidence) by summing the full joint."""
    columns = [bn.index_of(label) for label in vertex_set]
    if not columns:
        raise exceptions.EvidenceError(status.MESSAGE_EMPTY_VERTEX_SET)
    states, weights = _joint_weights(bn, evidence or Evidence(), cap)
    return float(weights[states[:, columns].any(axis=1)].sum())
