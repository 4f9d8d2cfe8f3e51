from netdiag import status

from typing import Iterable, Optional, Sequence, Tuple  # noqa: F401


class UserFacingError(Exception):
    """
    An exception to be raised when an execution-ending error is encountered.

    :param msg:
        Takes a single parameter, which is the user-facing error message that
        should be emitted before exiting non-zero.
    """

    exit_code = 1

    def __init__(self, msg: str) -> None:
        super().__init__(msg)
        self.msg = msg


class InputError(UserFacingError):
    """Malformed or inconsistent input: documents, configs, observations."""

    exit_code = 3


class ModelError(UserFacingError):
    """A model-building or inference invariant cannot be satisfied."""

    exit_code = 4


class ParseError(InputError):
    def __init__(self, source: str, offset: int, error: str) -> None:
        self.offset = offset
        super().__init__(
            status.MESSAGE_MALFORMED_JSON.format(
                source=source, offset=offset, error=error
            )
        )


class DialectError(InputError):
    """A topology document does not have the layout of its dialect."""

    def __init__(
        self, dialect: str, field: str, msg: "Optional[str]" = None
    ) -> None:
        self.field = field
        if msg is None:
            msg = status.MESSAGE_DIALECT_FIELD_MISSING.format(
                dialect=dialect, field=field
            )
        super().__init__(msg)


class ReferentialError(InputError):
    def __init__(self, link: str, node: str) -> None:
        self.link = link
        super().__init__(
            status.MESSAGE_DANGLING_ENDPOINT.format(link=link, node=node)
        )


class TopologyError(InputError):
    """The topology cannot be classified into the supported element types."""

    pass


class ClassificationError(TopologyError):
    pass


class IsolationError(TopologyError):
    def __init__(self, node: str) -> None:
        super().__init__(status.MESSAGE_ISOLATED_NODE.format(node=node))


class UnsupportedTopologyError(TopologyError):
    pass


class NoControlPathError(TopologyError):
    def __init__(self) -> None:
        super().__init__(status.MESSAGE_NO_CONTROL_PATH)


class PartitionedControlError(TopologyError):
    def __init__(self, master: str, switches: "Sequence[str]") -> None:
        super().__init__(
            status.MESSAGE_PARTITIONED_CONTROL.format(
                master=master, switches=", ".join(switches)
            )
        )


class ShapeError(TopologyError):
    pass


class ConfigError(InputError):
    pass


class EvidenceError(InputError):
    pass


class MappingError(EvidenceError):
    """An observation names a vertex of the wrong kind."""

    pass


class UnreachableEndpointsError(InputError):
    def __init__(self, src: str, dst: str) -> None:
        super().__init__(
            status.MESSAGE_UNREACHABLE_ENDPOINTS.format(src=src, dst=dst)
        )


class ScenarioError(InputError):
    pass


class TemplateError(ModelError):
    pass


class LabelCollisionError(ModelError):
    def __init__(self, label: str) -> None:
        self.label = label
        super().__init__(status.MESSAGE_LABEL_COLLISION.format(label=label))


class CycleError(ModelError):
    def __init__(self, cycle: "Sequence[str]") -> None:
        self.cycle = list(cycle)
        super().__init__(
            status.MESSAGE_CYCLE.format(cycle=" -> ".join(self.cycle))
        )


class CapacityError(ModelError):
    def __init__(self, element: str, link: str) -> None:
        super().__init__(
            status.MESSAGE_CAPACITY.format(element=element, link=link)
        )


class DomainError(ModelError):
    pass


class SizeError(ModelError):
    pass


class ContradictionError(UserFacingError):
    """The evidence has zero probability under the model.

    :param assignment: (label, state) pairs of the hard evidence involved
    """

    exit_code = 5

    def __init__(self, assignment: "Iterable[Tuple[str, str]]") -> None:
        self.assignment = sorted(assignment)
        rendered = ", ".join(
            "{}={}".format(label, state) for label, state in self.assignment
        )
        super().__init__(
            status.MESSAGE_CONTRADICTION.format(
                assignment=rendered or "<soft evidence only>"
            )
        )
