"""osteoplan command line.

    osteoplan plan --mesh bone.stl --landmarks landmarks.json --specimen S01 --side left --out out/
    osteoplan jig --plan out/S01_left_plan.json --mesh bone.stl --out out/
    osteoplan register --session session.json --out out/
    osteoplan simulate --plan ... --mesh ... --landmarks ... --method guided --seed 7 --out out/
    osteoplan evaluate out/results_guided.json --out report/
    osteoplan compare --a out/results_guided.json --b out/results_freehand.json --out report/
    osteoplan demo --seed 42 --out demo/

Exit codes: 0 ok, 1 usage, 2 validation, 3 I/O.
"""

from __future__ import annotations

import argparse
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import NoReturn

from ..core import (
    BaseWorkflow,
    LogManager,
    MeshFormatError,
    OsteoplanError,
    RunContext,
    RunPaths,
    TimedLogger,
    TimingCollector,
)
from ..planning import Side
from ..simulation import MethodEnum
from .commands import (
    CompareWorkflow,
    EvaluateWorkflow,
    JigWorkflow,
    PlanWorkflow,
    RegisterWorkflow,
    SimulateWorkflow,
)
from .demo import DemoWorkflow

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_IO = 3

WORKFLOWS: dict[str, type[BaseWorkflow]] = {  # type: ignore[type-arg]
    "plan": PlanWorkflow,
    "jig": JigWorkflow,
    "register": RegisterWorkflow,
    "simulate": SimulateWorkflow,
    "evaluate": EvaluateWorkflow,
    "compare": CompareWorkflow,
    "demo": DemoWorkflow,
}


class UsageError(Exception):
    """Bad command line."""


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        raise UsageError(f"{self.prog}: {message}")


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="run seed")
    parser.add_argument("--config", type=str, default=None, help="YAML settings overriding the packaged defaults")
    parser.add_argument("--log-dir", type=Path, default=Path("logs"), help="log directory (PATH_LOG wins)")


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="osteoplan", description="Pelvic tumor resection planning and cut simulation")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    plan = commands.add_parser("plan", help="margin planes from a bone mesh and pelvic landmarks")
    _common(plan)
    plan.add_argument("--mesh", required=True, help="bone mesh (STL or PLY)")
    plan.add_argument("--landmarks", required=True, help="landmark JSON")
    plan.add_argument("--specimen", default="S01")
    plan.add_argument("--side", choices=[s.value for s in Side], default=Side.LEFT.value)
    plan.add_argument("--radius", type=float, default=None, help="tumor radius in mm")
    plan.add_argument("--margin", type=float, default=None, help="safety margin in mm")
    plan.add_argument("--hip-center", type=float, nargs=3, default=None, metavar=("X", "Y", "Z"))
    plan.add_argument("--allow-findings", action="store_true", help="write the plan despite validation findings")

    jig = commands.add_parser("jig", help="assemble and place the staged modular jig")
    _common(jig)
    jig.add_argument("--plan", required=True)
    jig.add_argument("--mesh", default=None, help="bone mesh for pin selection")
    jig.add_argument("--catalog", default=None, help="jig catalog JSON (OSTEOPLAN_CATALOG otherwise)")

    register = commands.add_parser("register", help="simulated fiducial registration and tracking")
    _common(register)
    register.add_argument("--session", required=True)
    register.add_argument("--plan", default=None, help="plan with a pattern pose to project")
    register.add_argument("--mesh", default=None, help="bone mesh receiving the projected pattern")

    simulate = commands.add_parser("simulate", help="execute planned cuts with sampled errors")
    _common(simulate)
    simulate.add_argument("--manifest", default=None, help="batch manifest JSON")
    simulate.add_argument("--plan", default=None)
    simulate.add_argument("--mesh", default=None)
    simulate.add_argument("--landmarks", default=None)
    simulate.add_argument("--method", choices=[m.value for m in MethodEnum], default=MethodEnum.FREEHAND.value)
    simulate.add_argument("--error-model", default=None, help="error-model JSON instead of the method preset")
    simulate.add_argument("--strict", action="store_true", help="fail on void cuts")

    evaluate = commands.add_parser("evaluate", help="deviation metrics and tables for trial results")
    _common(evaluate)
    evaluate.add_argument("results", nargs="+")
    evaluate.add_argument("--fragments", default=None, help="fragment folder (results folder/fragments otherwise)")
    evaluate.add_argument("--heatmaps", action="store_true")

    compare = commands.add_parser("compare", help="rank-sum comparison of two result files")
    _common(compare)
    compare.add_argument("--a", required=True)
    compare.add_argument("--b", required=True)
    compare.add_argument("--fragments", default=None)
    compare.add_argument("--heatmaps", action="store_true")

    demo = commands.add_parser("demo", help="synthetic study end to end")
    _common(demo)
    demo.add_argument("--specimens", type=int, default=None)
    demo.add_argument("--heatmaps", action="store_true")
    return parser


def _check(args: argparse.Namespace) -> None:
    match args.command:
        case "plan":
            if args.radius is not None and args.radius <= 0:
                raise UsageError("--radius must be positive")
            if args.margin is not None and args.margin < 0:
                raise UsageError("--margin must be >= 0")
        case "simulate":
            if args.seed is None:
                raise UsageError("simulate needs --seed")
        case "demo":
            if args.specimens is not None and args.specimens < 1:
                raise UsageError("--specimens must be >= 1")


def exit_code(exc: BaseException) -> int:
    match exc:
        case UsageError():
            return EXIT_USAGE
        case MeshFormatError() | OSError():
            return EXIT_IO
        case OsteoplanError():
            return EXIT_VALIDATION
    raise exc


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        _check(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE

    collector = TimingCollector()
    try:
        run_logger = LogManager(args.log_dir, f"osteoplan.{args.command}").create_logger()
        context = RunContext(
            run_id=args.command if args.seed is None else f"{args.command}-{args.seed}",
            paths=RunPaths(output_dir=args.out, log_dir=args.log_dir),
            logger=TimedLogger(run_logger, collector),
            timing_collector=collector,
        )
        WORKFLOWS[args.command](context).execute(args)
    except (OsteoplanError, OSError, UsageError) as exc:
        print(f"osteoplan {args.command}: {exc}", file=sys.stderr)
        return exit_code(exc)
    return EXIT_OK


__all__ = ["EXIT_IO", "EXIT_OK", "EXIT_USAGE", "EXIT_VALIDATION", "UsageError", "build_parser", "exit_code", "main"]
