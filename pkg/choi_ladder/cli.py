"""
Command-line interface.

    choi-ladder certify MAPFILE --mode channel --schedule 2,4,8
    choi-ladder extract-kraus CHOIFILE --output kraus.json
    choi-ladder convergence MAPFILE --p inf --probe probe.json
    choi-ladder build-traceout DILATIONFILE --output kraus.json

Reports go to stdout, logs to stderr. Exit codes: 0 success or pass, 1 certification
failure or non-PSD Choi input, 2 invalid input.
"""

import argparse
import json
import logging
import sys
from collections.abc import Sequence

import numpy as np
import structlog
from pydantic import BaseModel

from .certification import MODES, CertificationReport, certify
from .config import settings
from .constructions import traceout_channel
from .errors import ChoiLadderError, NotPSDError, ParseError
from .mapfile import (
    ChoiDocument,
    DilationDocument,
    KrausDocument,
    OperatorDocument,
    build_oracle,
    load_mapfile,
    write_mapfile,
)
from .maps import (
    KrausOracle,
    choi_from_oracle,
    choi_reconstruction_error,
    kraus_from_choi,
    kraus_sum,
)
from .truncation import (
    ConvergenceTable,
    geometric_decay_operator,
    map_truncation_residuals,
    operator_norm,
    parse_exponent,
    residual_schedule,
)

logger = structlog.get_logger(__name__)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INPUT = 2

TRACEOUT_TOL = 1e-8


def configure_logging() -> None:
    """Route JSON log events to stderr so stdout carries only reports."""
    level = logging.DEBUG if settings.debug else getattr(logging, settings.log_level.upper())
    logging.basicConfig(stream=sys.stderr, level=level, format="%(message)s", force=True)
    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.dict_tracebacks,
            structlog.processors.JSONRenderer(),
        ],
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=True,
    )


class SummaryReport(BaseModel):
    """Outcome of extract-kraus and build-traceout."""

    command: str
    output: str
    kraus_count: int
    dim_in: int
    dim_out: int
    reconstruction_error: float | None = None
    kraus_sum_deviation: float | None = None
    subchannel: bool | None = None
    channel: bool | None = None


def _schedule(text: str) -> list[int]:
    try:
        levels = [int(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"invalid schedule {text!r}") from e
    if not levels:
        raise argparse.ArgumentTypeError("schedule must not be empty")
    return levels


def _emit(model: BaseModel, fmt: str, text: str) -> None:
    if fmt == "json":
        print(json.dumps(model.model_dump(mode="json"), sort_keys=True, indent=2))
    else:
        print(text)


def _yes(flag: bool | None) -> str:
    if flag is None:
        return "-"
    return "PASS" if flag else "FAIL"


def _optional(value: float | None) -> str:
    return "-" if value is None else f"{value:.6e}"


def format_report(report: CertificationReport) -> str:
    lines = [
        f"oracle: {report.oracle} (dim_in={report.dim_in}, dim_out={report.dim_out})",
        f"mode: {report.mode}",
        f"{'level':>5} {'n':>4} {'m':>4} {'min_eigenvalue':>15} {'psd':>4} "
        f"{'excess':>14} {'trace_dev':>14}",
    ]
    for row in report.levels:
        lines.append(
            f"{row.level:>5} {row.n:>4} {row.m:>4} {row.choi_min_eigenvalue:>15.6e} "
            f"{'yes' if row.choi_psd else 'no':>4} "
            f"{_optional(row.subchannel_max_excess):>14} "
            f"{_optional(row.trace_preservation_max_dev):>14}"
        )
    cp = report.verdicts.cp
    verdict = f"cp={_yes(cp.passed)}"
    if not cp.passed:
        verdict += f" (level {cp.witness_level}, min eigenvalue {cp.witness_min_eigenvalue:.6e})"
    verdict += (
        f" subchannel={_yes(report.verdicts.subchannel)}"
        f" channel={_yes(report.verdicts.channel)}"
    )
    lines.append(f"verdicts: {verdict}")
    return "\n".join(lines)


def format_table(table: ConvergenceTable) -> str:
    lines = [
        f"quantity: {table.quantity}  p: {table.p}  eps: {table.eps:g}",
        f"{'level':>5} {'residual':>15}",
    ]
    for row in table.rows:
        flag = "  WARN" if row.warn else ""
        lines.append(f"{row.level:>5} {row.residual:>15.6e}{flag}")
    return "\n".join(lines)


def format_summary(summary: SummaryReport) -> str:
    lines = [
        f"wrote {summary.kraus_count} Kraus operators "
        f"({summary.dim_out}x{summary.dim_in}) to {summary.output}"
    ]
    if summary.reconstruction_error is not None:
        lines.append(f"choi reconstruction error: {summary.reconstruction_error:.6e}")
    if summary.kraus_sum_deviation is not None:
        lines.append(f"||kraus_sum - I||_inf: {summary.kraus_sum_deviation:.6e}")
        lines.append(
            f"subchannel={_yes(summary.subchannel)} channel={_yes(summary.channel)}"
        )
    return "\n".join(lines)


def cmd_certify(args: argparse.Namespace) -> int:
    oracle = build_oracle(load_mapfile(args.input), seed=args.seed)
    report = certify(oracle, args.mode, args.schedule, args.tol)
    _emit(report, args.format, format_report(report))
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_extract_kraus(args: argparse.Namespace) -> int:
    doc = load_mapfile(args.input)
    if isinstance(doc, ChoiDocument):
        choi = doc.to_choi()
    else:
        oracle = build_oracle(doc, seed=args.seed)
        choi = choi_from_oracle(oracle, oracle.dim_in, oracle.dim_out)

    try:
        kraus = kraus_from_choi(choi, args.rank_tol)
    except NotPSDError as e:
        print(f"NotPSD: {e}", file=sys.stderr)
        return EXIT_FAIL

    write_mapfile(KrausDocument.from_kraus(kraus), args.output)
    summary = SummaryReport(
        command="extract-kraus",
        output=str(args.output),
        kraus_count=len(kraus),
        dim_in=kraus.dim_in,
        dim_out=kraus.dim_out,
        reconstruction_error=choi_reconstruction_error(kraus, choi),
    )
    _emit(summary, args.format, format_summary(summary))
    return EXIT_OK


def cmd_convergence(args: argparse.Namespace) -> int:
    exponent = parse_exponent(args.p)
    doc = load_mapfile(args.input)

    if isinstance(doc, OperatorDocument):
        g = doc.matrix.to_array()
        levels = args.schedule or _default_levels(g.shape[0])
        table = residual_schedule(g, exponent, levels, args.tol)
    else:
        oracle = build_oracle(doc, seed=args.seed)
        if args.probe:
            probe_doc = load_mapfile(args.probe)
            if not isinstance(probe_doc, OperatorDocument):
                raise ParseError("$.type", "probe must be an operator document")
            probe = probe_doc.matrix.to_array()
        else:
            probe = geometric_decay_operator(oracle.dim_in)
        levels = args.schedule or _default_levels(oracle.dim_in)
        table = map_truncation_residuals(oracle, probe, exponent, levels, args.tol)

    _emit(table, args.format, format_table(table))
    return EXIT_OK


def _default_levels(dim: int) -> list[int]:
    return [*(n for n in settings.default_schedule if n < dim), dim]


def cmd_build_traceout(args: argparse.Namespace) -> int:
    doc = load_mapfile(args.input)
    if not isinstance(doc, DilationDocument):
        raise ParseError("$.type", f"expected a dilation document, got {doc.type!r}")

    kraus = traceout_channel(doc.to_spec())
    write_mapfile(KrausDocument.from_kraus(kraus), args.output)

    oracle = KrausOracle(kraus, name="traceout")
    tol = TRACEOUT_TOL if args.tol is None else args.tol
    report = certify(oracle, "channel", args.schedule, tol)
    summary = SummaryReport(
        command="build-traceout",
        output=str(args.output),
        kraus_count=len(kraus),
        dim_in=kraus.dim_in,
        dim_out=kraus.dim_out,
        kraus_sum_deviation=operator_norm(kraus_sum(kraus) - np.eye(kraus.dim_in)),
        subchannel=report.verdicts.subchannel,
        channel=report.verdicts.channel,
    )
    _emit(summary, args.format, format_summary(summary))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=None, help="Verdict tolerance override")
    common.add_argument(
        "--rank-tol", type=float, default=None, help="Kraus extraction eigenvalue cutoff"
    )
    common.add_argument(
        "--schedule", type=_schedule, default=None, help="Comma-separated truncation levels"
    )
    common.add_argument("--format", choices=["text", "json"], default="text")
    common.add_argument(
        "--seed", type=int, default=None, help="Seed for random builtins (default from settings)"
    )

    parser = argparse.ArgumentParser(
        prog="choi-ladder",
        description="Certify completely positive maps through truncated Choi matrices.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("certify", parents=[common], help="Run a certification ladder")
    p.add_argument("input", help="MapFile path")
    p.add_argument("--mode", choices=MODES, default="cp")
    p.set_defaults(handler=cmd_certify)

    p = sub.add_parser(
        "extract-kraus", parents=[common], help="Kraus operators of a Choi matrix"
    )
    p.add_argument("input", help="MapFile path (choi, or any map at its full dimensions)")
    p.add_argument("-o", "--output", required=True, help="Kraus MapFile to write")
    p.set_defaults(handler=cmd_extract_kraus)

    p = sub.add_parser("convergence", parents=[common], help="Truncation residual table")
    p.add_argument("input", help="MapFile path (operator or map)")
    p.add_argument("--p", default="1", help="Schatten exponent, a number >= 1 or 'inf'")
    p.add_argument("--probe", default=None, help="Operator MapFile to push through the map")
    p.set_defaults(handler=cmd_convergence)

    p = sub.add_parser(
        "build-traceout", parents=[common], help="Kraus form of a dilation's trace-out map"
    )
    p.add_argument("input", help="Dilation MapFile path")
    p.add_argument("-o", "--output", required=True, help="Kraus MapFile to write")
    p.set_defaults(handler=cmd_build_traceout)

    return parser


def _report_error(e: Exception) -> None:
    message = str(e) if isinstance(e, ParseError) else f"{type(e).__name__}: {e}"
    print(message, file=sys.stderr)


def main(argv: Sequence[str] | None = None) -> int:
    configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    log = logger.bind(command=args.command)
    try:
        return args.handler(args)
    except (ChoiLadderError, ValueError, OSError) as e:
        log.error("Command failed", error=str(e), error_type=type(e).__name__)
        _report_error(e)
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
