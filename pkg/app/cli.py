"""``nhssh`` command line: sweep, winding, compile-pulses, evolve, reproduce.

Exit status: 0 success, 1 invalid input, 2 numerical failure, 3 a
reproduction check missed its reference.
"""

import argparse
import json
import logging
import sys
import typing as t

from app.core.errors import ReproductionMismatch, SimulationError, ValidationFailure
from app.core.logging import configure_logging
from app.parsing import parse_k
from app.schemas.run import KGrid, Mode, OutputFormat, RunConfig
from app.services import runner

logger = logging.getLogger("nhssh")

REPRODUCE_TARGETS = ("s1", "s2", "s3", "winding")


class UsageParser(argparse.ArgumentParser):
    """Argument errors exit 1, the invalid-input status."""

    def error(self, message: str) -> t.NoReturn:
        self.print_usage(sys.stderr)
        self.exit(ValidationFailure.exit_code, f"{self.prog}: error: {message}\n")


def _k_value(raw: str) -> float:
    try:
        return parse_k(raw)
    except ValidationFailure as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _k_grid(raw: str) -> KGrid:
    try:
        return KGrid.parse(raw)
    except ValidationFailure as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _psi0(raw: str) -> tuple[float, float]:
    parts = [p for p in raw.replace(" ", "").split(",") if p]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("psi0 takes two comma-separated amplitudes")
    return float(parts[0]), float(parts[1])


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON or TOML run configuration; flags override it")
    parser.add_argument("--v", type=float, help="intracell hopping")
    parser.add_argument("--r", type=float, help="intercell hopping")
    parser.add_argument("--gamma", type=float, help="energy scale, rad/μs")
    parser.add_argument("--k", type=_k_value, help="single momentum, e.g. 0.5pi")
    parser.add_argument("--k-grid", type=_k_grid, help="start:stop:count or k1,k2,...; 'pi' suffix for units of π")
    parser.add_argument("--mode", choices=[m.value for m in Mode])
    parser.add_argument("--psi0", type=_psi0, help="initial amplitudes, e.g. 1,0")
    parser.add_argument("--eta0", type=float, help="initial dilation scale η(0)")
    parser.add_argument("--step", type=float, help="dilation time step, μs")
    parser.add_argument("--horizon", type=float, help="evolution time, μs")
    parser.add_argument("--shots", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--workers", type=int)
    parser.add_argument("--out", help="output file")
    parser.add_argument("--format", choices=[f.value for f in OutputFormat])
    parser.add_argument("--hermitian-limit", action="store_true", default=None, help="drop the gain/loss term")
    parser.add_argument("--log-level", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = UsageParser(prog="nhssh", description="Non-Hermitian SSH dilation simulator.")
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="spin texture ⟨σx⟩, ⟨σz⟩ over a k grid")
    _common(sweep)

    winding = sub.add_parser("winding", help="winding number from the model or a texture table")
    _common(winding)
    winding.add_argument("--data", help="texture table path or built-in name (s1, s2, s3)")
    winding.add_argument("--n-grid", type=int, default=1000)
    winding.add_argument("--bootstrap", type=int, default=0, help="resamples within the error bars")

    pulses = sub.add_parser("compile-pulses", help="microwave/RF schedule for one momentum")
    _common(pulses)
    pulses.add_argument("--lab-check", type=float, metavar="HORIZON", help="lab-frame check up to HORIZON μs")

    evolve = sub.add_parser("evolve", help="populations and fidelity to R1 versus time")
    _common(evolve)
    evolve.add_argument("--samples", type=int, default=21)

    reproduce = sub.add_parser("reproduce", help="check model output against the reference tables")
    reproduce.add_argument("tables", nargs="*", help=f"any of {', '.join(REPRODUCE_TARGETS)}; default all")
    reproduce.add_argument("--log-level", default=None)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    base = RunConfig.from_file(args.config) if args.config else RunConfig()
    dilation: dict[str, t.Any] = {"eta0": args.eta0, "step": args.step}
    if args.horizon is not None and args.horizon > base.dilation.horizon:
        dilation["horizon"] = args.horizon
    return base.with_overrides(
        v=args.v,
        r=args.r,
        gamma=args.gamma,
        k=args.k,
        k_grid=args.k_grid,
        mode=args.mode,
        psi0=args.psi0,
        horizon=args.horizon,
        workers=args.workers,
        out=args.out,
        format=args.format,
        hermitian_limit=args.hermitian_limit,
        dilation=dilation,
        readout={"shots": args.shots, "seed": args.seed},
    )


def dispatch(args: argparse.Namespace) -> t.Any:
    if args.command == "reproduce":
        result = runner.cmd_reproduce(list(args.tables or REPRODUCE_TARGETS))
        if not result["passed"]:
            failed = [r["check"] for r in result["reports"] if not r["passed"]]
            raise ReproductionMismatch(f"reference mismatch in {failed}", result)
        return result

    config = config_from_args(args)
    if args.command == "sweep":
        return runner.cmd_sweep(config)
    if args.command == "winding":
        return runner.cmd_winding(config, data=args.data, n_grid=args.n_grid, bootstrap=args.bootstrap)
    if args.command == "compile-pulses":
        return runner.cmd_compile_pulses(config, lab_check=args.lab_check)
    if args.command == "evolve":
        return runner.cmd_evolve(config, samples=args.samples)
    raise ValidationFailure(f"unknown command {args.command!r}")


def main(argv: t.Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        result = dispatch(args)
    except ReproductionMismatch as exc:
        logger.error("%s", exc.args[0])
        print(json.dumps(exc.args[1], indent=2, default=str))
        return exc.exit_code
    except SimulationError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return exc.exit_code
    print(json.dumps(result, indent=2, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
