#!/usr/bin/env python

"""Self-modeling fault diagnosis for software-defined networks."""

import argparse
import logging
import os
import sys
from functools import wraps

from netdiag import (
    config,
    diagnosis,
    exceptions,
    graph,
    simulator,
    status,
    util,
    version,
)
from netdiag.bayes import PriorConfig, attach_parameters, enumerate_disjunction
from netdiag.defaults import CONFIG_FIELD_ENVVAR_ALLOWLIST
from netdiag.serviceclient import TopologyClient
from netdiag.templates import TemplateProfile
from netdiag.topology import (
    DIALECT_CLASS_BY_NAME,
    Dialect,
    decode_json,
    descriptor_from_dict,
    descriptor_to_dict,
    interpret,
    parse_dialect,
)

from typing import Any, Optional  # noqa: F401

NAME = "netdiag"

USAGE_TMPL = "{name} {command} [flags]"
EPILOG_TMPL = (
    "Use {name} {command} --help for more information about a command."
)

DEFAULT_LOG_FORMAT = (
    "%(asctime)s - %(filename)s:(%(lineno)d) [%(levelname)s]: %(message)s"
)

OUTPUT_FORMATS = [f.value for f in status.OutputFormat]

# Where the unexpected-error message points users; set by setup_logging
_LOG_FILE = None  # type: Optional[str]


class NetDiagArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, message + "\n")


def _add_output_flags(parser, formats=None):
    parser.add_argument(
        "--format",
        choices=formats or OUTPUT_FORMATS,
        default=None,
        help="output format (default: json)",
    )
    parser.add_argument(
        "--output",
        metavar="PATH",
        help="write output to PATH instead of standard output",
    )


def parse_parser(parser):
    """Build or extend an arg parser for parse subcommand."""
    parser.usage = USAGE_TMPL.format(name=NAME, command="parse")
    parser.prog = "parse"
    parser._optionals.title = "Flags"
    parser.add_argument(
        "source", help="topology document: a file path or an http(s) URL"
    )
    parser.add_argument(
        "--dialect",
        choices=sorted(DIALECT_CLASS_BY_NAME),
        default=Dialect.NATIVE.value,
        help="layout of the topology document (default: native)",
    )
    parser.add_argument(
        "--controller",
        metavar="ID",
        help="raw id of the controller, overriding the document",
    )
    _add_output_flags(parser, ["json", "yaml"])
    return parser


def model_parser(parser):
    """Build or extend an arg parser for model subcommand."""
    parser.usage = USAGE_TMPL.format(name=NAME, command="model")
    parser.prog = "model"
    parser._optionals.title = "Flags"
    parser.add_argument(
        "descriptor",
        help="descriptor produced by parse, or a model to re-sort",
    )
    parser.add_argument(
        "--profile",
        choices=config.VALID_PROFILES,
        help="template profile (default from config: degree-adaptive)",
    )
    parser.add_argument(
        "--export",
        choices=[f.value for f in graph.ExportFormat],
        default=graph.ExportFormat.JSON.value,
        help="model format (default: json)",
    )
    parser.add_argument(
        "--summary",
        action="store_true",
        help="print vertex and edge counts instead of the model",
    )
    parser.add_argument(
        "--output",
        metavar="PATH",
        help="write output to PATH instead of standard output",
    )
    return parser


def diagnose_parser(parser):
    """Build or extend an arg parser for diagnose subcommand."""
    parser.usage = USAGE_TMPL.format(name=NAME, command="diagnose")
    parser.prog = "diagnose"
    parser._optionals.title = "Flags"
    parser.add_argument("model", help="model exported by the model command")
    parser.add_argument(
        "evidence", help="JSON file with an optional alarm and observations"
    )
    parser.add_argument("--priors", metavar="PATH", help="prior file (YAML)")
    parser.add_argument(
        "--tie-epsilon",
        type=float,
        help="scores closer than this are reported as ties",
    )
    parser.add_argument(
        "--top-k", type=int, help="elements listed in text output"
    )
    parser.add_argument(
        "--heuristic",
        choices=config.VALID_HEURISTICS,
        help="variable elimination order heuristic",
    )
    parser.add_argument(
        "--pretty",
        action="store_true",
        help="human-readable text output (same as --format text)",
    )
    parser.add_argument(
        "--verify",
        action="store_true",
        help=(
            "cross-check element scores by exhaustive enumeration (small"
            " models only)"
        ),
    )
    _add_output_flags(parser)
    return parser


def simulate_parser(parser):
    """Build or extend an arg parser for simulate subcommand."""
    parser.usage = USAGE_TMPL.format(name=NAME, command="simulate")
    parser.prog = "simulate"
    parser._optionals.title = "Flags"
    parser.add_argument("campaign", help="campaign configuration (YAML)")
    parser.add_argument(
        "--seed", type=int, help="override the campaign seed"
    )
    parser.add_argument(
        "--timings",
        action="store_true",
        help="include diagnosis wall times in the report",
    )
    _add_output_flags(parser)
    return parser


def bench_parser(parser):
    """Build or extend an arg parser for bench subcommand."""
    parser.usage = USAGE_TMPL.format(name=NAME, command="bench")
    parser.prog = "bench"
    parser._optionals.title = "Flags"
    parser.add_argument(
        "config", nargs="?", help="benchmark configuration (YAML)"
    )
    parser.add_argument(
        "--repetitions", type=int, help="builds timed per topology size"
    )
    parser.add_argument(
        "--output",
        metavar="PATH",
        help="write the CSV table to PATH instead of standard output",
    )
    return parser


def _read_source(source: str, cfg: config.NetDiagConfig) -> bytes:
    if util.is_service_url(source):
        return TopologyClient(cfg).fetch(source)
    if not os.path.exists(source):
        raise exceptions.InputError(
            status.MESSAGE_MISSING_FILE.format(what="input", path=source)
        )
    return util.load_file(source, decode=False)


def _emit(content: str, output: "Optional[str]") -> None:
    if output:
        util.write_file(output, content)
    else:
        sys.stdout.write(content)


def _output_format(args) -> status.OutputFormat:
    if getattr(args, "pretty", False):
        return status.OutputFormat.TEXT
    return status.OutputFormat(args.format or "json")


def action_parse(args, cfg, **kwargs):
    document = _read_source(args.source, cfg)
    raw = parse_dialect(
        document, args.dialect, args.source, controller_id=args.controller
    )
    descriptor, links = interpret(raw)
    _emit(
        status.render(
            descriptor_to_dict(descriptor, links), _output_format(args)
        ),
        args.output,
    )
    return 0


def action_model(args, cfg, **kwargs):
    cfg.override(profile=args.profile)
    document = _read_source(args.descriptor, cfg)
    data = decode_json(document, args.descriptor)
    if isinstance(data, dict) and "vertices" in data:
        model = graph.topological_sort(
            graph.import_graph(document, args.descriptor)
        )
    else:
        if not isinstance(data, dict):
            raise exceptions.InputError(
                status.MESSAGE_INVALID_DOCUMENT.format(
                    what="descriptor", error="expected a JSON object"
                )
            )
        descriptor, links = descriptor_from_dict(data)
        model = graph.build_model(
            descriptor, links, TemplateProfile.from_name(cfg.profile)
        )
    if args.summary:
        content = status.format_json(graph.summary(model))
    else:
        export_format = graph.ExportFormat(args.export)
        content = graph.export(model, export_format).decode("utf-8")
    _emit(content, args.output)
    return 0


def _verify_scores(bn, alarm, report, cap):
    """Recompute element scores by enumeration; log any disagreement."""
    if alarm is not None:
        bn = diagnosis.attach_service_vertex(bn, alarm)
    worst = 0.0
    for item in report.element_ranking:
        labels = [
            v.label
            for v in bn.graph.vertices_of(item.element_id)
            if v.label not in report.evidence.hard
        ]
        exact = enumerate_disjunction(bn, report.evidence, labels, cap)
        worst = max(worst, abs(exact - item.score))
    logging.info("Largest score deviation from enumeration: %.3g", worst)
    if worst > 1e-9:
        logging.warning(
            "Element scores deviate from enumeration by up to %.3g", worst
        )


def action_diagnose(args, cfg, **kwargs):
    cfg.override(
        priors_file=args.priors,
        tie_epsilon=args.tie_epsilon,
        top_k=args.top_k,
        elimination_heuristic=args.heuristic,
    )
    model = graph.import_graph(_read_source(args.model, cfg), args.model)
    if not model.sorted:
        model = graph.topological_sort(model)
    bn = attach_parameters(model, PriorConfig.load(cfg.priors_file))
    alarm, observations = diagnosis.load_observations(
        _read_source(args.evidence, cfg), args.evidence
    )
    report = diagnosis.diagnose(
        bn,
        alarm,
        observations,
        tie_epsilon=cfg.tie_epsilon,
        top_k=cfg.top_k,
        heuristic=cfg.elimination_heuristic,
    )
    if args.verify:
        _verify_scores(bn, alarm, report, cfg.enumeration_cap)
    _emit(
        status.render(
            report.to_dict(),
            _output_format(args),
            lambda _data: diagnosis.explain(report),
        ),
        args.output,
    )
    return 0


def _campaign_text(data):
    def rate(value):
        return "n/a" if value is None else "{:.3f}".format(value)

    content = status.get_section_column_content(
        [
            ("Trials", str(data["trials"])),
            ("Hits", str(data["hits"])),
            ("Failures", str(data["failures"])),
            ("Top-1 accuracy", rate(data["top1_accuracy"])),
            ("Top-k accuracy", rate(data["topk_accuracy"])),
        ],
        header="Campaign:",
    )
    content.extend(
        status.get_section_column_content(
            [
                (row["cell"], "{hits}/{trials}".format(**row))
                for row in data["breakdown"]
            ],
            header="Hits per cell:",
        )
    )
    return "\n".join(content) + "\n"


def action_simulate(args, cfg, **kwargs):
    campaign = simulator.CampaignConfig.load(args.campaign)
    if args.seed is not None:
        campaign.seed = args.seed
    report = simulator.run_campaign(campaign)
    _emit(
        status.render(
            report.to_dict(timings=args.timings),
            _output_format(args),
            _campaign_text,
        ),
        args.output,
    )
    return 0


def action_bench(args, cfg, **kwargs):
    if args.config:
        bench = simulator.BenchConfig.load(args.config)
    else:
        bench = simulator.BenchConfig()
    if args.repetitions is not None:
        bench = simulator.BenchConfig(
            bench.kinds,
            bench.min_elements,
            bench.max_elements,
            args.repetitions,
            bench.mode,
            bench.profile,
            bench.n_hosts,
        )
    rows = simulator.benchmark_build(bench)
    _emit(simulator.bench_csv(rows), args.output)
    return 0


def get_version(_args=None, _cfg=None):
    return version.get_version()


def print_version(_args=None, _cfg=None):
    print(get_version(_args, _cfg))
    return 0


def get_parser():
    parser = NetDiagArgumentParser(
        prog=NAME,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        usage=USAGE_TMPL.format(name=NAME, command="<command>"),
        epilog=EPILOG_TMPL.format(name=NAME, command="<command>"),
        description=__doc__,
    )
    parser.add_argument(
        "--debug",
        action="store_true",
        help="show all debug log messages to console",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=get_version(),
        help="show version of {}".format(NAME),
    )
    parser._optionals.title = "Flags"
    subparsers = parser.add_subparsers(
        title="Available Commands", dest="command", metavar=""
    )
    subparsers.required = True

    parser_parse = subparsers.add_parser(
        "parse", help="classify a topology document into descriptors"
    )
    parse_parser(parser_parse)
    parser_parse.set_defaults(action=action_parse)

    parser_model = subparsers.add_parser(
        "model", help="build the dependency model of a classified network"
    )
    model_parser(parser_model)
    parser_model.set_defaults(action=action_model)

    parser_diagnose = subparsers.add_parser(
        "diagnose", help="rank root causes for an alarm and observations"
    )
    diagnose_parser(parser_diagnose)
    parser_diagnose.set_defaults(action=action_diagnose)

    parser_simulate = subparsers.add_parser(
        "simulate", help="run a fault-injection diagnosis campaign"
    )
    simulate_parser(parser_simulate)
    parser_simulate.set_defaults(action=action_simulate)

    parser_bench = subparsers.add_parser(
        "bench", help="time model builds over topology sizes"
    )
    bench_parser(parser_bench)
    parser_bench.set_defaults(action=action_bench)

    parser_version = subparsers.add_parser(
        "version", help="show version of {}".format(NAME)
    )
    parser_version.set_defaults(action=print_version)
    return parser


def setup_logging(console_level, log_level, log_file=None):
    """Setup console logging and debug logging to log_file"""
    global _LOG_FILE
    console_formatter = util.LogFormatter()
    log_formatter = logging.Formatter(DEFAULT_LOG_FORMAT)
    root = logging.getLogger()
    root.setLevel(min(console_level, log_level))
    # Setup console logging
    stderr_found = False
    for handler in root.handlers:
        if hasattr(handler, "stream") and hasattr(handler.stream, "name"):
            if handler.stream.name == "<stderr>":
                handler.setLevel(console_level)
                handler.setFormatter(console_formatter)
                handler.set_name("console")  # Used to disable console logging
                stderr_found = True
                break
    if not stderr_found:
        console = logging.StreamHandler(sys.stderr)
        console.setFormatter(console_formatter)
        console.setLevel(console_level)
        console.set_name("console")  # Used to disable console logging
        root.addHandler(console)
    if log_file:
        filehandler = logging.FileHandler(log_file)
        filehandler.setLevel(log_level)
        filehandler.setFormatter(log_formatter)
        root.addHandler(filehandler)
        _LOG_FILE = log_file


def main_error_handler(func):
    @wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except KeyboardInterrupt:
            with util.disable_log_to_console():
                logging.error("KeyboardInterrupt")
            print("Interrupt received; exiting.", file=sys.stderr)
            sys.exit(1)
        except util.UrlError as exc:
            with util.disable_log_to_console():
                logging.exception(
                    status.LOG_CONNECTIVITY_ERROR_TMPL.format(
                        url=exc.url, error=exc
                    )
                )
            print(
                status.MESSAGE_CONNECTIVITY_ERROR.format(
                    url=exc.url, error=exc
                ),
                file=sys.stderr,
            )
            sys.exit(exceptions.InputError.exit_code)
        except exceptions.UserFacingError as exc:
            with util.disable_log_to_console():
                logging.error(exc.msg)
            print("{}".format(exc.msg), file=sys.stderr)
            sys.exit(exc.exit_code)
        except Exception:
            with util.disable_log_to_console():
                logging.exception("Unhandled exception, please file a bug")
            print(
                status.MESSAGE_UNEXPECTED_ERROR.format(
                    log_file=_LOG_FILE or "<no log file configured>"
                ),
                file=sys.stderr,
            )
            sys.exit(1)

    return wrapper


@main_error_handler
def main(sys_argv=None):
    if not sys_argv:
        sys_argv = sys.argv
    parser = get_parser()
    cli_arguments = sys_argv[1:]
    if not cli_arguments:
        parser.print_usage()
        print("Try '{} --help' for more information.".format(NAME))
        sys.exit(1)
    args = parser.parse_args(args=cli_arguments)
    cfg = config.NetDiagConfig()

    console_level = logging.DEBUG if args.debug else logging.INFO
    setup_logging(console_level, cfg.log_level, cfg.log_file)
    logging.debug("Executed with sys.argv: %r", sys_argv)
    netdiag_environment = [
        "{}={}".format(k, v)
        for k, v in sorted(os.environ.items())
        if k.lower() in CONFIG_FIELD_ENVVAR_ALLOWLIST
        or k in ("NETDIAG_LOG", "NETDIAG_CONFIG_FILE")
    ]
    if netdiag_environment:
        logging.debug(
            "Executed with netdiag environment variables: %r",
            netdiag_environment,
        )
    return args.action(args, cfg)


if __name__ == "__main__":
    sys.exit(main())
