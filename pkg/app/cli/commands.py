import argparse
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional

import orjson
import pandas as pd
from pydantic import BaseModel, ValidationError

from app.cli.config_file import ConfigValues, load_config_file, parse_component, parse_grid_axis
from app.dependencies.dependency_container import DependencyContainer
from app.exceptions.classification_exceptions import ClassificationError, ConfigError, HypothesisViolationError
from app.exceptions.expression_exceptions import ExpressionError, ParseError
from app.exceptions.geometry_exceptions import GeometryError
from app.interfaces.geometry_interfaces import IRunOrchestrator
from app.observability.metrics import attach_metrics
from app.observability.tracing import setup_tracing
from app.schemas.schemas import (
    ErrorDetail,
    ErrorResponse,
    GridSpec,
    HomogeneityReport,
    InvariantTable,
    RunConfig,
    VerificationReport,
)
from config.app_config import settings

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INVALID_INPUT = 2
EXIT_HYPOTHESIS_VIOLATED = 3

COMMANDS = ("verify", "classify", "invariants")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="curvature-homogeneity",
        description="Curvature and curvature-homogeneity checks for metrics on R^3 with coordinates (t, x, y).",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    helps = {
        "verify": "compare engine curvature derivatives with closed forms and identities",
        "classify": "CH_0 / CH_k(1,3) / SCH_k(1,3) verdicts over a sample grid",
        "invariants": "tabulate scalar invariants per grid point",
    }
    for name in COMMANDS:
        sub = subparsers.add_parser(name, help=helps[name])
        sub.add_argument("--family", choices=["f", "h", "custom"], help="metric family")
        sub.add_argument("--function", help="defining function, e.g. 'exp(x)' or 't^3'")
        sub.add_argument("--component", action="append", default=[], metavar="IJ=EXPR",
                         help="custom metric entry such as tt=1 (repeatable)")
        sub.add_argument("--order", type=int, help="highest derivative order r")
        sub.add_argument("--grid", action="append", default=[], metavar="COORD=MIN:MAX:COUNT",
                         help="sample axis (repeatable); other coordinates are pinned at 0")
        sub.add_argument("--tolerance", type=float, help="relative tolerance for constancy checks")
        sub.add_argument("--format", choices=["json", "csv"], help="output format")
        sub.add_argument("--output", help="write the report here instead of stdout")
        sub.add_argument("--workers", type=int, help="worker threads")
        sub.add_argument("--config", help="flat key = value run file; flags override it")
    return parser


def merge_config(args: argparse.Namespace, file_values: Optional[ConfigValues] = None) -> RunConfig:
    """Flags take precedence over run-file values; repeated keys are replaced, not merged."""
    file_values = file_values or {}
    if file_values.get("command") not in (None, args.command):
        raise ConfigError(f"run file is for '{file_values['command']}', not '{args.command}'", field="command")

    def pick(name: str, flag):
        return flag if flag is not None else file_values.get(name)

    grid_texts: List[str] = args.grid or file_values.get("grid", [])
    component_texts: List[str] = args.component or file_values.get("component", [])
    if not grid_texts:
        raise ConfigError("no sample grid given", field="grid")
    components: Dict[str, str] = dict(parse_component(text) for text in component_texts)

    fields = {
        "command": args.command,
        "family": pick("family", args.family),
        "function": pick("function", args.function),
        "components": components,
        "order": pick("order", args.order),
        "grid": GridSpec(axes=[parse_grid_axis(text) for text in grid_texts]),
        "tolerance": pick("tolerance", args.tolerance),
        "output_format": pick("format", args.format),
        "workers": pick("workers", args.workers),
    }
    if fields["family"] is None:
        raise ConfigError("--family is required", field="family")
    return RunConfig(**{key: value for key, value in fields.items() if value is not None})


def resolve_output(args: argparse.Namespace, file_values: Optional[ConfigValues] = None) -> Optional[str]:
    """Report destination: --output, else the run file's ``output``, else stdout (None)."""
    if args.output is not None:
        return args.output
    return (file_values or {}).get("output") or None


def render_json(config: RunConfig, report: BaseModel) -> bytes:
    payload = {
        "config": config.model_dump(mode="json"),
        **report.model_dump(mode="json"),
        "tool_version": settings.TOOL_VERSION,
    }
    return orjson.dumps(payload, option=orjson.OPT_INDENT_2) + b"\n"


def report_frame(report: BaseModel) -> pd.DataFrame:
    if isinstance(report, InvariantTable):
        records = []
        for row in report.rows:
            record = {"t": row.point[0], "x": row.point[1], "y": row.point[2],
                      "excluded": row.excluded, "reason": row.reason}
            record.update(row.quantities)
            record.update(row.invariants)
            record.update(row.diagnostics)
            records.append(record)
        return pd.DataFrame.from_records(records)
    if isinstance(report, VerificationReport):
        return pd.DataFrame.from_records([check.model_dump(mode="json") for check in report.checks])
    if isinstance(report, HomogeneityReport):
        return pd.DataFrame.from_records([verdict.model_dump(mode="json") for verdict in report.verdicts])
    raise TypeError(f"no tabular form for {type(report).__name__}")


def render(config: RunConfig, report: BaseModel) -> bytes:
    if config.output_format == "csv":
        return report_frame(report).to_csv(index=False, lineterminator="\n").encode("utf-8")
    return render_json(config, report)


def exit_code_for(report: BaseModel) -> int:
    if isinstance(report, VerificationReport) and not report.passed:
        return EXIT_CHECK_FAILED
    return EXIT_OK


def emit_error(code: str, message: str, field: Optional[str] = None) -> None:
    response = ErrorResponse(error=ErrorDetail(code=code, message=message, field=field))
    sys.stderr.write(orjson.dumps(response.model_dump(mode="json")).decode("utf-8") + "\n")


def run(config: RunConfig, orchestrator: IRunOrchestrator) -> BaseModel:
    handlers = {
        "verify": orchestrator.verify,
        "classify": orchestrator.classify,
        "invariants": orchestrator.invariants,
    }
    return handlers[config.command](config)


def main(argv: Optional[List[str]] = None, container: Optional[DependencyContainer] = None) -> int:
    logging.basicConfig(level=settings.LOG_LEVEL, stream=sys.stderr)
    attach_metrics()
    setup_tracing()

    args = build_parser().parse_args(argv)
    try:
        file_values = load_config_file(args.config) if args.config else None
        config = merge_config(args, file_values)
        output_path = resolve_output(args, file_values)
        container = container or DependencyContainer()
        report = run(config, container.get(IRunOrchestrator))
    except ParseError as e:
        emit_error(e.error_code, e.message, field="expression")
        return EXIT_INVALID_INPUT
    except ConfigError as e:
        emit_error(e.error_code, e.message, field=e.field)
        return EXIT_INVALID_INPUT
    except ValidationError as e:
        first = e.errors()[0]
        emit_error("VALIDATION_ERROR", str(first.get("msg")), field=".".join(str(p) for p in first.get("loc", ())))
        return EXIT_INVALID_INPUT
    except HypothesisViolationError as e:
        emit_error(e.error_code, e.message)
        return EXIT_HYPOTHESIS_VIOLATED
    except (ExpressionError, GeometryError, ClassificationError) as e:
        emit_error(e.error_code, e.message)
        return EXIT_INVALID_INPUT

    output = render(config, report)
    if output_path:
        Path(output_path).write_bytes(output)
        logger.info(f"Report written to {output_path}")
    else:
        sys.stdout.write(output.decode("utf-8"))
    return exit_code_for(report)
