"""Exact posterior queries by variable elimination.

Elimination records a tree of clusters (one per eliminated variable). A
second pass from the roots back down calibrates every cluster, so one run
answers all marginal, disjunction and leak queries together.
"""

import heapq
import logging
import math
from collections import namedtuple

import numpy as np

from netdiag import exceptions, status
from netdiag.bayes import BayesianNetwork, Evidence, NoisyOrCpt
from netdiag.status import State

from typing import (  # noqa: F401
    Dict,
    Iterable,
    List,
    Mapping,
    Optional,
    Sequence,
    Set,
    Tuple,
)

LOG = logging.getLogger(__name__)

# Variables with more parents than this get a chain of small factors
# instead of one table over all parents
DIRECT_PARENT_LIMIT = 4
MAX_FACTOR_WIDTH = 22
# np.einsum takes a bounded number of operands
EINSUM_CHUNK = 16

MIN_FILL = "min-fill"
MIN_DEGREE = "min-degree"
HEURISTICS = (MIN_FILL, MIN_DEGREE)

# Axes of table follow scope, which is sorted; axis value 1 is down
Factor = namedtuple("Factor", ("scope", "table"))

QueryResult = namedtuple(
    "QueryResult", ("marginals", "disjunctions", "leaks", "log_evidence")
)


class _FactorSet:
    """Factors of a network restricted to the variables a query needs."""

    def __init__(self, bn: BayesianNetwork) -> None:
        self.bn = bn
        self.factors = []  # type: List[Factor]
        self.next_var = len(bn)

    def new_var(self) -> int:
        var = self.next_var
        self.next_var += 1
        return var

    def add(self, scope: "Sequence[int]", table: np.ndarray) -> None:
        axes = sorted(range(len(scope)), key=lambda i: scope[i])
        self.factors.append(
            Factor(
                tuple(scope[i] for i in axes),
                np.transpose(np.asarray(table, dtype=float), axes),
            )
        )

    def add_noisy_or(
        self,
        var: int,
        parents: "Sequence[int]",
        cpt: NoisyOrCpt,
        expose_leak: bool = False,
    ) -> "Optional[int]":
        """Add the factors of one noisy-OR variable.

        With expose_leak the spontaneous failure gets its own variable,
        whose id is returned.
        """
        if not expose_leak and len(parents) <= DIRECT_PARENT_LIMIT:
            self.add(tuple(parents) + (var,), _direct_table(cpt))
            return None
        leak = self.new_var()
        self.add((leak,), [1.0 - cpt.leak, cpt.leak])
        if not parents:
            self.add((leak, var), np.eye(2))
            return leak
        previous = leak
        for i, (parent, inhibition) in enumerate(
            zip(parents, cpt.inhibitions)
        ):
            link = var if i == len(parents) - 1 else self.new_var()
            self.add((previous, parent, link), _or_step_table(inhibition))
            previous = link
        return leak


def _direct_table(cpt: NoisyOrCpt) -> np.ndarray:
    count = len(cpt.inhibitions)
    survive = np.full((2,) * count, 1.0 - cpt.leak)
    for i, inhibition in enumerate(cpt.inhibitions):
        shape = [1] * count
        shape[i] = 2
        survive = survive * np.array([1.0, inhibition]).reshape(shape)
    return np.stack([survive, 1.0 - survive], axis=-1)


def _or_step_table(inhibition: float) -> np.ndarray:
    """Table over (previous, parent, next): next = previous OR parent."""
    down = np.array([[0.0, 1.0 - inhibition], [1.0, 1.0]])
    return np.stack([1.0 - down, down], axis=-1)


def _ancestors(bn: BayesianNetwork, roots: "Iterable[int]") -> "Set[int]":
    seen = set()  # type: Set[int]
    stack = list(roots)
    while stack:
        var = stack.pop()
        if var in seen:
            continue
        seen.add(var)
        stack.extend(bn.parents[var])
    return seen


def elimination_order(
    scopes: "Iterable[Sequence[int]]", heuristic: str = MIN_FILL
) -> "List[int]":
    """Greedy elimination order over the interaction graph of scopes.

    Ties go to the lower degree, then the lower variable id.
    """
    if heuristic not in HEURISTICS:
        raise exceptions.ConfigError(
            status.MESSAGE_UNKNOWN_HEURISTIC.format(
                heuristic=heuristic, valid=", ".join(HEURISTICS)
            )
        )
    adjacent = {}  # type: Dict[int, Set[int]]
    for scope in scopes:
        for var in scope:
            adjacent.setdefault(var, set()).update(scope)
    for var, neighbors in adjacent.items():
        neighbors.discard(var)

    def score(var):
        neighbors = adjacent[var]
        if heuristic == MIN_DEGREE:
            return (len(neighbors), var)
        missing = sum(len(neighbors - adjacent[n]) - 1 for n in neighbors)
        return (missing // 2, len(neighbors), var)

    current = dict((var, score(var)) for var in adjacent)
    heap = [(s, var) for var, s in current.items()]
    heapq.heapify(heap)
    order = []
    while heap:
        entry, var = heapq.heappop(heap)
        if var not in current or current[var] != entry:
            continue
        del current[var]
        order.append(var)
        neighbors = adjacent.pop(var)
        for n in neighbors:
            adjacent[n].discard(var)
            adjacent[n].update(neighbors - {n})
        for n in neighbors:
            current[n] = score(n)
            heapq.heappush(heap, (current[n], n))
    return order


def _local(scope: "Sequence[int]", index: "Dict[int, int]") -> "List[int]":
    return [index[v] for v in scope]


def _product(
    factors: "Sequence[Factor]", scope: "Tuple[int, ...]"
) -> np.ndarray:
    index = dict((v, i) for i, v in enumerate(scope))
    labels = list(range(len(scope)))
    result = np.ones((2,) * len(scope))
    for start in range(0, len(factors), EINSUM_CHUNK):
        operands = [result, labels]
        for factor in factors[start : start + EINSUM_CHUNK]:
            operands += [factor.table, _local(factor.scope, index)]
        result = np.einsum(*(operands + [labels]))
    return result


def _marginal(
    table: np.ndarray,
    scope: "Tuple[int, ...]",
    keep: "Tuple[int, ...]",
) -> np.ndarray:
    index = dict((v, i) for i, v in enumerate(scope))
    return np.einsum(table, _local(scope, index), _local(keep, index))


class _Cluster:
    __slots__ = (
        "var",
        "scope",
        "separator",
        "potential",
        "message",
        "children",
        "parent",
        "downward",
        "belief",
    )

    def __init__(self, var, scope, separator, potential, message, children):
        self.var = var
        self.scope = scope
        self.separator = separator
        self.potential = potential
        self.message = message
        self.children = children
        self.parent = None
        self.downward = None
        self.belief = None


class CalibratedTree:
    """Clusters with calibrated beliefs; answers P(var = down)."""

    def __init__(self, clusters: "Dict[int, _Cluster]", log_evidence: float):
        self.clusters = clusters
        self.log_evidence = log_evidence

    def p_down(self, var: int) -> float:
        cluster = self.clusters[var]
        table = _marginal(cluster.belief, cluster.scope, (var,))
        return float(table[1] / table.sum())


def calibrate(
    factors: "Sequence[Factor]",
    heuristic: str = MIN_FILL,
    assignment: "Sequence[Tuple[str, str]]" = (),
) -> CalibratedTree:
    """Eliminate every variable, then pass beliefs back down the tree.

    :param assignment: hard evidence, reported if the evidence turns out
        to be impossible
    """
    order = elimination_order([f.scope for f in factors], heuristic)
    store = dict(enumerate(factors))
    holders = {}  # type: Dict[int, Set[int]]
    for fid, factor in store.items():
        for var in factor.scope:
            holders.setdefault(var, set()).add(fid)
    origin = {}  # type: Dict[int, int]
    clusters = {}  # type: Dict[int, _Cluster]
    log_evidence = 0.0
    width = 0
    for var in order:
        fids = sorted(holders.pop(var))
        bucket = [store.pop(fid) for fid in fids]
        for fid, factor in zip(fids, bucket):
            for other in factor.scope:
                if other != var:
                    holders[other].discard(fid)
        scope = tuple(sorted(set().union(*(f.scope for f in bucket))))
        width = max(width, len(scope))
        if len(scope) > MAX_FACTOR_WIDTH:
            raise exceptions.ModelError(
                status.MESSAGE_FACTOR_TOO_WIDE.format(
                    width=len(scope), limit=MAX_FACTOR_WIDTH
                )
            )
        potential = _product(bucket, scope)
        separator = tuple(v for v in scope if v != var)
        message = _marginal(potential, scope, separator)
        total = float(message.sum())
        if total <= 0.0:
            raise exceptions.ContradictionError(assignment)
        log_evidence += math.log(total)
        message = message / total
        children = [origin[fid] for fid in fids if fid in origin]
        cluster = _Cluster(var, scope, separator, potential, message, children)
        for child in children:
            clusters[child].parent = var
        clusters[var] = cluster
        if separator:
            fid = len(factors) + len(clusters)
            store[fid] = Factor(separator, message)
            origin[fid] = var
            for other in separator:
                holders[other].add(fid)

    for var in reversed(order):
        cluster = clusters[var]
        belief = cluster.potential
        if cluster.downward is not None:
            index = dict((v, i) for i, v in enumerate(cluster.scope))
            labels = list(range(len(cluster.scope)))
            belief = np.einsum(
                belief,
                labels,
                cluster.downward,
                _local(cluster.separator, index),
                labels,
            )
        cluster.belief = belief / belief.sum()
        for child_var in cluster.children:
            child = clusters[child_var]
            incoming = _marginal(
                cluster.belief, cluster.scope, child.separator
            )
            downward = np.divide(
                incoming,
                child.message,
                out=np.zeros_like(incoming),
                where=child.message > 0,
            )
            child.downward = downward / downward.sum()
    LOG.debug(
        "Eliminated %d variables from %d factors, widest cluster %d",
        len(order),
        len(factors),
        width,
    )
    return CalibratedTree(clusters, log_evidence)


def infer(
    bn: BayesianNetwork,
    evidence: "Optional[Evidence]" = None,
    marginals: "Optional[Iterable[str]]" = None,
    disjunctions: "Optional[Mapping[str, Iterable[str]]]" = None,
    leaks: "Optional[Iterable[str]]" = None,
    heuristic: str = MIN_FILL,
) -> QueryResult:
    """Answer marginal, disjunction and leak queries in a single pass.

    A disjunction is P(at least one vertex of the set is down); it gets a
    temporary deterministic-OR vertex over the set. A leak query is the
    probability that the vertex failed on its own rather than through a
    parent.
    """
    evidence = evidence or Evidence()
    evidence.validate(bn)
    marginal_labels = list(marginals or ())
    leak_labels = list(leaks or ())
    hard = dict((bn.index_of(k), v) for k, v in evidence.hard.items())

    disjunction_results = {}  # type: Dict[str, float]
    disjunction_sets = {}  # type: Dict[str, List[int]]
    for name, labels in sorted((disjunctions or {}).items()):
        members = sorted(set(bn.index_of(label) for label in labels))
        if not members:
            raise exceptions.EvidenceError(status.MESSAGE_EMPTY_VERTEX_SET)
        if any(hard.get(m) == State.DOWN for m in members):
            disjunction_results[name] = 1.0
            continue
        members = [m for m in members if m not in hard]
        if not members:
            disjunction_results[name] = 0.0
            continue
        disjunction_sets[name] = members

    targets = set(bn.index_of(label) for label in marginal_labels)
    targets.update(bn.index_of(label) for label in leak_labels)
    for members in disjunction_sets.values():
        targets.update(members)
    targets.update(bn.index_of(label) for label in evidence.labels)
    relevant = _ancestors(bn, targets)

    factor_set = _FactorSet(bn)
    exposed = set(bn.index_of(label) for label in leak_labels)
    leak_vars = {}  # type: Dict[int, int]
    for var in sorted(relevant):
        leak_var = factor_set.add_noisy_or(
            var, bn.parents[var], bn.cpts[var], var in exposed
        )
        if leak_var is not None and var in exposed:
            leak_vars[var] = leak_var
    for var, state in sorted(hard.items(), key=lambda kv: kv[0]):
        factor_set.add(
            (var,), [0.0, 1.0] if state == State.DOWN else [1.0, 0.0]
        )
    for label, (up, down) in sorted(evidence.soft.items()):
        factor_set.add((bn.index_of(label),), [up, down])
    query_vars = {}  # type: Dict[str, int]
    for name, members in disjunction_sets.items():
        if len(members) == 1:
            query_vars[name] = members[0]
            continue
        query = factor_set.new_var()
        factor_set.add_noisy_or(
            query, members, NoisyOrCpt(0.0, (0.0,) * len(members))
        )
        query_vars[name] = query

    if not factor_set.factors:
        return QueryResult({}, disjunction_results, {}, 0.0)
    tree = calibrate(factor_set.factors, heuristic, evidence.assignment())

    results = {}  # type: Dict[str, float]
    for label in marginal_labels:
        var = bn.index_of(label)
        if var in hard:
            results[label] = 1.0 if hard[var] == State.DOWN else 0.0
        else:
            results[label] = tree.p_down(var)
    for name, var in query_vars.items():
        disjunction_results[name] = tree.p_down(var)
    leak_results = dict(
        (label, tree.p_down(leak_vars[bn.index_of(label)]))
        for label in leak_labels
    )
    return QueryResult(
        results, disjunction_results, leak_results, tree.log_evidence
    )


def eliminate_variables(
    bn: BayesianNetwork,
    evidence: "Optional[Evidence]" = None,
    queries: "Optional[Iterable[str]]" = None,
    heuristic: str = MIN_FILL,
) -> "Dict[str, float]":
    """P(down | evidence) for each queried label (all labels by default)."""
    labels = list(queries) if queries is not None else list(bn.labels)
    return infer(bn, evidence, marginals=labels, heuristic=heuristic).marginals


def posterior_disjunctions(
    bn: BayesianNetwork,
    evidence: "Optional[Evidence]",
    vertex_sets: "Mapping[str, Iterable[str]]",
    heuristic: str = MIN_FILL,
) -> "Dict[str, float]":
    return infer(
        bn, evidence, disjunctions=vertex_sets, heuristic=heuristic
    ).disjunctions


def posterior_disjunction(
    bn: BayesianNetwork,
    evidence: "Optional[Evidence]",
    vertex_set: "Iterable[str]",
    heuristic: str = MIN_FILL,
) -> float:
    """P(at least one vertex of vertex_set is down | evidence)."""
    return posterior_disjunctions(
        bn, evidence, {"query": list(vertex_set)}, heuristic
    )["query"]


def leak_posteriors(
    bn: BayesianNetwork,
    evidence: "Optional[Evidence]",
    labels: "Iterable[str]",
    heuristic: str = MIN_FILL,
) -> "Dict[str, float]":
    return infer(bn, evidence, leaks=labels, heuristic=heuristic).leaks
