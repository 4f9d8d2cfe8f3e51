import enum
import json
import textwrap

from netdiag.defaults import PRINT_WRAP_WIDTH

from typing import Any, Dict, List, Optional, Tuple  # noqa: F401


@enum.unique
class State(enum.Enum):
    """
    Binary state of every modeled vertex

    (The value of each member is the string used in evidence files and
    report output.)
    """

    UP = "up"
    DOWN = "down"

    @classmethod
    def from_value(cls, value: "Any") -> "State":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(
                MESSAGE_INVALID_STATE.format(
                    value=value, valid=", ".join(s.value for s in cls)
                )
            )


@enum.unique
class OutputFormat(enum.Enum):
    JSON = "json"
    YAML = "yaml"
    TEXT = "text"


# Input and format problems
MESSAGE_MALFORMED_JSON = (
    "Malformed JSON in {source} at byte offset {offset}: {error}"
)
MESSAGE_NOT_UTF8 = "{source} is not valid UTF-8 at byte offset {offset}"
MESSAGE_UNKNOWN_DIALECT = (
    "Unknown topology dialect: {dialect}. Choose one of: {valid}"
)
MESSAGE_DIALECT_FIELD_MISSING = (
    "{dialect} topology document is missing required field: {field}"
)
MESSAGE_DIALECT_FIELD_TYPE = (
    "{dialect} topology field {field} must be {expected}"
)
MESSAGE_DUPLICATE_RAW_ID = "Duplicate {what} id in topology: {raw_id}"
MESSAGE_DANGLING_ENDPOINT = "Link {link} references undeclared node {node}"
MESSAGE_INVALID_STATE = "Invalid state {value!r}; expected one of: {valid}"
MESSAGE_INVALID_DOCUMENT = "Invalid {what} document: {error}"

# Topology classification
MESSAGE_UNKNOWN_CONTROLLER = "Controller {controller} is not a declared node"
MESSAGE_ISOLATED_NODE = "Node {node} is not attached to any link"
MESSAGE_SELF_LOOP = "Link {link} connects node {node} to itself"
MESSAGE_HOST_TO_HOST = "Link {link} connects two hosts: {a} and {b}"
MESSAGE_HOST_TO_CONTROLLER = (
    "Link {link} connects host {host} directly to the controller"
)
MESSAGE_MULTIPLE_CONTROLLERS = (
    "Multiple controllers are not supported: {controllers}"
)
MESSAGE_UNKNOWN_KIND_HINT = "Node {node} has unknown kind {kind!r}"
MESSAGE_NO_CONTROL_PATH = (
    "No control link connects the controller to any switch"
)
MESSAGE_PARTITIONED_CONTROL = (
    "Switches unreachable from master {master} over inter-switch links:"
    " {switches}"
)
MESSAGE_HYBRID_CONTROL = (
    "Unsupported hybrid control: {count} of {total} switches have a"
    " control link"
)
MESSAGE_INVALID_HOST_COUNT = "Host count must be at least 1, got {n_hosts}"
MESSAGE_TREE_SHAPE = (
    "{n_hosts} hosts cannot be spread over a tree with fanout {fanout}"
    " and depth {depth}"
)
MESSAGE_TREE_PARAMETERS = (
    "Tree topologies need fanout >= 2 and depth >= 1, got fanout {fanout}"
    " and depth {depth}"
)
MESSAGE_UNKNOWN_TOPOLOGY_KIND = (
    "Unknown topology kind: {kind}. Choose one of: {valid}"
)

# Model building
MESSAGE_TEMPLATE_MISSING = "No template registered for element type {name}"
MESSAGE_ISOLATED_TEMPLATE = (
    "Element {element} has no incident links; its network cards cannot"
    " be sized"
)
MESSAGE_LABEL_COLLISION = "Vertex label {label} appears in more than one place"
MESSAGE_CYCLE = "Dependency graph contains a cycle: {cycle}"
MESSAGE_CAPACITY = (
    "Element {element} has no free network card for link {link}"
)
MESSAGE_MISSING_LINK_VERTEX = "No link-state vertex found for link {link}"
MESSAGE_UNSUPPORTED_VERTEX_COUNT_KIND = (
    "Closed-form vertex count is only defined for linear and binary tree"
    " topologies, not {kind}"
)
MESSAGE_UNKNOWN_PROFILE = (
    "Unknown template profile: {profile}. Choose one of: {valid}"
)

# Inference
MESSAGE_INVALID_LEAK = "Leak for {name} must be within [0, 1], got {value}"
MESSAGE_UNKNOWN_PRIOR_KIND = (
    "Unknown vertex kind in priors: {kind}. Choose from: {valid}"
)
MESSAGE_UNKNOWN_OVERRIDE = "Prior override for unknown vertex: {label}"
MESSAGE_ARITY_MISMATCH = (
    "Expected {expected} parent states for this table, got {actual}"
)
MESSAGE_CONFLICTING_EVIDENCE = (
    "Vertex {label} is observed both {first} and {second}"
)
MESSAGE_HARD_SOFT_OVERLAP = (
    "Vertex {label} carries both hard and soft evidence"
)
MESSAGE_INVALID_LIKELIHOOD = (
    "Likelihood for {label} must be two values in [0, 1], not both 0;"
    " got {value}"
)
MESSAGE_UNKNOWN_VERTEX = "Unknown vertex label: {label}"
MESSAGE_ENUMERATION_CAP = (
    "Exhaustive enumeration is capped at {cap} vertices; this network has"
    " {count}"
)
MESSAGE_FACTOR_TOO_WIDE = (
    "Elimination produced a factor over {width} variables (limit {limit});"
    " the model is too densely connected for exact inference"
)
MESSAGE_EMPTY_VERTEX_SET = "A disjunction query needs at least one vertex"
MESSAGE_CONTRADICTION = (
    "Observations are impossible under the model; offending assignment:"
    " {assignment}"
)
MESSAGE_UNKNOWN_HEURISTIC = (
    "Unknown elimination heuristic: {heuristic}. Choose one of: {valid}"
)

# Diagnosis
MESSAGE_ALARM_NEEDS_ENDPOINTS = "A service degradation alarm needs endpoints"
MESSAGE_ALARM_ENDPOINT_NOT_HOST = "Alarm endpoint {element} is not a host"
MESSAGE_UNKNOWN_ALARM_KIND = (
    "Unknown alarm kind: {kind}. Choose one of: {valid}"
)
MESSAGE_UNREACHABLE_ENDPOINTS = "No data path between {src} and {dst}"
MESSAGE_MODEL_WITHOUT_TOPOLOGY = (
    "The model carries no topology; a service alarm cannot be attached"
)
MESSAGE_WRONG_KIND_OBSERVATION = (
    "Observation {label} is a {actual} vertex, expected {expected}"
)
MESSAGE_INVALID_UTILIZATION = (
    "CPU utilization for {label} must be within [0, 1], got {value}"
)
MESSAGE_NO_CANDIDATES = "No unobserved candidates: every vertex is observed."

# Simulation
MESSAGE_UNKNOWN_TARGET = "Fault target {target} is not in the topology"
MESSAGE_FAULT_MODE_MISMATCH = (
    "Fault {mode} cannot target {element_type} {target}"
)
MESSAGE_DUPLICATE_FAULT = "More than one fault targets {target}"
MESSAGE_INVALID_LOAD = (
    "CPU load for {target} must be within [0, 1], got {value}"
)
MESSAGE_UNKNOWN_FAULT_MODE = (
    "Unknown fault mode: {mode}. Choose one of: {valid}"
)
MESSAGE_INVALID_FRACTION = (
    "Sampled fraction must be within [0, 1], got {value}"
)
MESSAGE_INVALID_CAMPAIGN = "Invalid campaign configuration: {error}"
MESSAGE_INVALID_BENCH = "Invalid benchmark configuration: {error}"

# Configuration and CLI
MESSAGE_INVALID_CONFIG_VALUE = "Invalid value in config. {key}: {value}"
MESSAGE_MISSING_FILE = "Could not find {what} file: {path}"
MESSAGE_UNEXPECTED_ERROR = """\
Unexpected error(s) occurred.
For more details, see the log: {log_file}"""
MESSAGE_CONNECTIVITY_ERROR = "Failed to retrieve topology from {url}: {error}"
LOG_CONNECTIVITY_ERROR_TMPL = "Failed to access URL: {url}. {error}"


def get_section_column_content(
    column_data: "List[Tuple[str, str]]", header: "Optional[str]" = None
) -> "List[str]":
    """Return a list of content lines to print to console for a section

    Content lines will be right-aligned based on max value length of first
    column.
    """
    content = [""]
    if header:
        content.append(header)
    if not column_data:
        return content
    template_length = max([len(pair[0]) for pair in column_data])
    if template_length > 0:
        template = "{{:>{}}}: {{}}".format(template_length)
        content.extend([template.format(*pair) for pair in column_data])
    else:
        content.extend([pair[1] for pair in column_data])
    return content


def wrap_line(line: str, indent: str = "  ") -> str:
    return "\n".join(
        textwrap.wrap(line, width=PRINT_WRAP_WIDTH, subsequent_indent=indent)
    )


def format_json(data: "Any", indent: "Optional[int]" = 2) -> str:
    """Canonical JSON rendering: stable key order, trailing newline."""
    from netdiag.util import DatetimeAwareJSONEncoder

    return (
        json.dumps(
            data, cls=DatetimeAwareJSONEncoder, indent=indent, sort_keys=True
        )
        + "\n"
    )


def format_yaml(data: "Any") -> str:
    import yaml

    # Round-trip through JSON so enums and datetimes come out as plain
    # scalars
    return yaml.safe_dump(
        json.loads(format_json(data)), default_flow_style=False
    )


def render(
    data: "Any", output_format: OutputFormat, text_renderer=None
) -> str:
    if output_format == OutputFormat.YAML:
        return format_yaml(data)
    if output_format == OutputFormat.TEXT and text_renderer is not None:
        return text_renderer(data)
    return format_json(data)
