import argparse
import logging
import sys
from typing import List, Optional

from src.cli.commands import (
    COMMAND_HANDLERS,
    EXIT_CAP_EXCEEDED,
    EXIT_PARSE_ERROR,
)
from src.cli.config import ALL_CONTIGUOUS, FORMATS, LOG_LEVELS, build_config
from src.core.errors import CapExceededError, CircuitParseError, LittleEntError
from src.core.experiments import TRACE_MEASURES
from src.core.report_storage import ReportStorage
from src.core.verification import SUITES

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags given on the command line win")
    common.add_argument("--seed", type=int, help="seed for every random stream")
    common.add_argument("--out", help="write the result here instead of stdout")
    common.add_argument("--format", choices=FORMATS, help="report format (default json)")
    common.add_argument("--threads", type=int, help="worker threads (default: CPU count)")
    common.add_argument("--db", help="append the run to this SQLite ledger")
    common.add_argument("--log-level", dest="log_level",
                        choices=LOG_LEVELS, help="default WARNING")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="littleent",
        description="Dilute quantum circuits to near-product states and measure how little entanglement they carry.",
    )
    common = _common_options()
    sub = parser.add_subparsers(dest="command", required=True)

    dilute = sub.add_parser("dilute", parents=[common], help="add the ε-rotated control ancilla to a circuit")
    dilute.add_argument("input", help="circuit file")
    dilute.add_argument("--epsilon", type=float)

    decide = sub.add_parser("decide", parents=[common], help="decide p ≥ 2/3 or p ≤ 1/3 on the diluted circuit")
    decide.add_argument("input", help="circuit file")
    decide.add_argument("--epsilon", type=float)
    decide.add_argument("--fail-prob", dest="fail_prob", type=float, help="default 1e-3")
    decide.add_argument("--runs", type=int, help="override the Hoeffding run count")
    decide.add_argument("--literal", action="store_true", default=None,
                        help="re-simulate the circuit for every repetition")

    trace = sub.add_parser("trace", parents=[common], help="measure entanglement at every step")
    trace.add_argument("input", help="circuit file")
    trace.add_argument("--epsilon", type=float, help="dilution parameter of the traced circuit")
    trace.add_argument("--dilute", action="store_true", default=None, help="dilute the input before tracing")
    trace.add_argument("--bipartitions", help=f"'{ALL_CONTIGUOUS}' (default) or A sides like '0,1;2'")
    trace.add_argument("--measures", help=f"comma-separated subset of {','.join(TRACE_MEASURES)}")
    trace.add_argument("--runs", type=int, help="repetition count for the integrated-entanglement figure")

    verify = sub.add_parser("verify", parents=[common], help="run the bound verification suites")
    verify.add_argument("--suite", dest="suites", help=f"comma-separated subset of {','.join(SUITES)}")
    verify.add_argument("--samples", type=int, help="override every suite's sample count")
    verify.add_argument("--m", type=int, help="counterexample half-system size (default 10)")
    verify.add_argument("--alpha", type=float, help="counterexample Renyi order (default 0.5)")
    verify.add_argument("--inject-violation", dest="inject_violation", action="store_true", default=None,
                        help="append a known-failing check to every suite")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    config_path = args.pop("config", None)

    logging.basicConfig(level=args.get("log_level") or "WARNING", format=LOG_FORMAT, stream=sys.stderr)

    config = None
    report = {}
    try:
        config = build_config(command, args, config_path)
        logging.getLogger().setLevel(config.log_level)
        exit_code, report = COMMAND_HANDLERS[command](config)
    except CircuitParseError as e:
        for diagnostic in e.diagnostics:
            print(diagnostic, file=sys.stderr)
        exit_code = EXIT_PARSE_ERROR
    except CapExceededError as e:
        print(f"Error: {e}", file=sys.stderr)
        exit_code = EXIT_CAP_EXCEEDED
    except LittleEntError as e:
        print(f"Error: {e}", file=sys.stderr)
        exit_code = EXIT_PARSE_ERROR

    if config is not None and config.db:
        storage = ReportStorage(config.db)
        storage.record_run(command, config.seed, config.to_dict(), report, exit_code)
        storage.close()
    return exit_code
