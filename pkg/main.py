import argparse
import logging
import os
import sys
from dataclasses import dataclass
from typing import Optional, Sequence

from dotenv import load_dotenv

from certify import Certificate, TraceError, certify_ball, cross_check_small, dump_trace
from hcalc import HVector, HVectorError, boundary_h, check_ball, check_sphere, format_vector, parse_hvector
from poset_core import (
    PosetError,
    PseudomanifoldError,
    boundary,
    dump_poset,
    f_vector,
    h_vector,
    is_pure,
    load_poset,
    pseudomanifold_violations,
    strongly_connected,
    validate,
)
from realizer import InadmissibleError, RealizationError, realize

load_dotenv()

log = logging.getLogger("cellball")

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_INPUT = 2

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


def _env(name: str, default: Optional[str] = None) -> Optional[str]:
    value = os.environ.get(name)
    if value is None or value.strip() == "":
        return default
    return value


def _env_int(name: str, default: int) -> int:
    value = _env(name)
    if value is None:
        return default
    try:
        number = int(value)
    except ValueError:
        raise ValueError(f"{name} must be an integer, got {value!r}")
    if number < 1:
        raise ValueError(f"{name} must be positive, got {number}")
    return number


@dataclass(frozen=True)
class Config:
    sweep_d: int
    sweep_facets: int
    sweep_workers: int
    width_entry_max: int
    log_level: str


def load_config() -> Config:
    level = (_env("CELLBALL_LOG_LEVEL", "WARNING") or "WARNING").upper()
    if level not in LOG_LEVELS:
        raise ValueError(f"CELLBALL_LOG_LEVEL must be one of {', '.join(LOG_LEVELS)}, got {level!r}")
    return Config(
        sweep_d=_env_int("CELLBALL_SWEEP_D", 5),
        sweep_facets=_env_int("CELLBALL_SWEEP_FACETS", 8),
        sweep_workers=_env_int("CELLBALL_SWEEP_WORKERS", 1),
        width_entry_max=_env_int("CELLBALL_WIDTH_ENTRY_MAX", 4),
        log_level=level,
    )


@dataclass(frozen=True)
class CliConfig:
    command: str
    h: Optional[str] = None
    poset_path: Optional[str] = None
    trace_path: Optional[str] = None
    out_path: Optional[str] = None
    sphere: bool = False
    d_max: Optional[int] = None
    facet_max: Optional[int] = None
    quiet: bool = False

    def __post_init__(self) -> None:
        paths = [p for p in (self.poset_path, self.trace_path, self.out_path) if p]
        if len({os.path.abspath(p) for p in paths}) != len(paths):
            raise ValueError("input and output paths must be distinct")
        for name in ("d_max", "facet_max"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ValueError(f"--{'d' if name == 'd_max' else 'facets'} must be positive")


def _read_h(text: str) -> Optional[HVector]:
    try:
        return parse_hvector(text)
    except HVectorError as exc:
        print(f"Input error: {exc}")
        return None


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)


# --------------------------------------------------------------------------- #
# COMMANDS
# --------------------------------------------------------------------------- #

def cmd_check(h_text: str, sphere: bool = False) -> int:
    h = _read_h(h_text)
    if h is None:
        return EXIT_INPUT
    report = check_sphere(h) if sphere else check_ball(h)
    for line in report.render():
        print(line)
    return EXIT_OK if report.admissible else EXIT_NEGATIVE


def cmd_realize(h_text: str, out_poset: Optional[str] = None, out_trace: Optional[str] = None) -> int:
    h = _read_h(h_text)
    if h is None:
        return EXIT_INPUT
    try:
        result = realize(h)
    except InadmissibleError as exc:
        print(f"refused: {exc}")
        for line in exc.report.render():
            print(line)
        return EXIT_NEGATIVE

    P = result.poset
    print(f"realized h = ({h}) via case {result.case}")
    print(f"elements: {len(P.elements)}, facets: {P.facet_count()}, glue steps: {result.trace.glue_count()}")
    if result.case == 3:
        print(f"n = {result.n}, m = {result.m}, s = {format_vector(result.s)}")
        print(f"gamma = ({result.gamma}), delta_bar = ({result.delta_bar})")
        print(f"h' = ({result.h_prime}), h'' = ({result.h_double_prime})")
    elif result.middle is not None:
        print(f"capped at index {result.middle}")

    if out_poset:
        _write(out_poset, dump_poset(P))
        print(f"wrote poset to {out_poset}")
    if out_trace:
        _write(out_trace, dump_trace(result.trace))
        print(f"wrote trace to {out_trace}")
    return EXIT_OK


def cmd_verify(poset_path: str, trace_path: str, h_text: str) -> int:
    h = _read_h(h_text)
    if h is None:
        return EXIT_INPUT
    try:
        report = certify_ball(Certificate(poset_path, trace_path, h))
    except (OSError, PosetError, TraceError) as exc:
        print(f"Input error: {exc}")
        return EXIT_INPUT
    for line in report.render():
        print(line)
    return EXIT_OK if report.ok else EXIT_NEGATIVE


def cmd_info(poset_path: str) -> int:
    try:
        P = load_poset(poset_path)
        report = validate(P)
    except (OSError, PosetError) as exc:
        print(f"Input error: {exc}")
        return EXIT_INPUT
    if not report.ok:
        print(f"invalid: {report.describe()}")
        return EXIT_NEGATIVE

    h = h_vector(P)
    print(f"d = {P.d}")
    print(f"f = ({format_vector(f_vector(P))})")
    print(f"h = ({h})")
    if P.d >= 1:
        print(f"boundary h = ({boundary_h(h)})")

    bad = pseudomanifold_violations(P)
    print(f"pure: {'yes' if is_pure(P) else 'no'}, strongly connected: {'yes' if strongly_connected(P) else 'no'}")
    if bad:
        print(f"pseudomanifold: no (elements {format_vector(bad)} have more than two covers)")
        return EXIT_OK
    print("pseudomanifold: yes")
    try:
        B = boundary(P)
    except PseudomanifoldError as exc:
        print(f"boundary: {exc}")
        return EXIT_OK
    if B.is_empty():
        print("boundary: empty")
    else:
        view = B.as_poset(P.d - 1)
        print(f"boundary f = ({format_vector(f_vector(view))}), h = ({h_vector(view)})")
    return EXIT_OK


def cmd_sweep(d_max: int, facet_max: int, out: Optional[str], config: Config, quiet: bool = False) -> int:
    report = cross_check_small(
        d_max,
        facet_max,
        workers=config.sweep_workers,
        progress=not quiet,
        width_entry_max=config.width_entry_max,
    )
    if out:
        _write(out, report.to_tsv())
        for line in report.summary_lines():
            print(line)
        print(f"wrote sweep table to {out}")
    else:
        print(report.to_tsv(), end="")
    return EXIT_OK if report.ok else EXIT_NEGATIVE


# --------------------------------------------------------------------------- #
# ENTRY POINT
# --------------------------------------------------------------------------- #

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--quiet",
        action="store_true",
        default=argparse.SUPPRESS,
        help="Only log errors and hide the sweep progress bar.",
    )
    parser = argparse.ArgumentParser(
        description="Check, realize and certify h-vectors of simplicial cell balls",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", parents=[common], help="Evaluate the ball (or sphere) conditions.")
    check.add_argument("h", help="Comma-separated h-vector, e.g. 1,0,0,1,0")
    check.add_argument("--sphere", action="store_true", help="Use the sphere conditions instead.")

    real = sub.add_parser("realize", parents=[common], help="Build a ball with the given h-vector.")
    real.add_argument("h")
    real.add_argument("--out", default=None, help="Write the canonical poset file here.")
    real.add_argument("--trace", default=None, help="Write the construction trace here.")

    verify = sub.add_parser("verify", parents=[common], help="Certify a poset file against a trace and h.")
    verify.add_argument("poset")
    verify.add_argument("trace")
    verify.add_argument("h")

    info = sub.add_parser("info", parents=[common], help="Print face counts and boundary data of a poset file.")
    info.add_argument("poset")

    sweep = sub.add_parser("sweep", parents=[common], help="Realize and certify every small admissible vector.")
    sweep.add_argument("--d", type=int, default=None, help="Largest d (default CELLBALL_SWEEP_D).")
    sweep.add_argument("--facets", type=int, default=None, help="Largest h-vector sum (default CELLBALL_SWEEP_FACETS).")
    sweep.add_argument("--out", default=None, help="Write the TSV table here instead of stdout.")
    return parser


def _cli_config(args: argparse.Namespace) -> CliConfig:
    quiet = getattr(args, "quiet", False)
    if args.command == "check":
        return CliConfig("check", h=args.h, sphere=args.sphere, quiet=quiet)
    if args.command == "realize":
        return CliConfig("realize", h=args.h, out_path=args.out, trace_path=args.trace, quiet=quiet)
    if args.command == "verify":
        return CliConfig("verify", h=args.h, poset_path=args.poset, trace_path=args.trace, quiet=quiet)
    if args.command == "info":
        return CliConfig("info", poset_path=args.poset, quiet=quiet)
    return CliConfig("sweep", out_path=args.out, d_max=args.d, facet_max=args.facets, quiet=quiet)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)

    try:
        cfg = load_config()
    except ValueError as exc:
        print(f"Configuration error: {exc}")
        return EXIT_INPUT

    try:
        cli = _cli_config(args)
    except ValueError as exc:
        print(f"Input error: {exc}")
        return EXIT_INPUT

    logging.basicConfig(
        level=logging.ERROR if cli.quiet else getattr(logging, cfg.log_level),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    log.debug("running %s", cli.command)

    try:
        if cli.command == "check":
            return cmd_check(cli.h, sphere=cli.sphere)
        if cli.command == "realize":
            return cmd_realize(cli.h, cli.out_path, cli.trace_path)
        if cli.command == "verify":
            return cmd_verify(cli.poset_path, cli.trace_path, cli.h)
        if cli.command == "info":
            return cmd_info(cli.poset_path)
        return cmd_sweep(
            cli.d_max or cfg.sweep_d,
            cli.facet_max or cfg.sweep_facets,
            cli.out_path,
            cfg,
            quiet=cli.quiet,
        )
    except RealizationError as exc:
        print(f"internal construction error ({exc.claim}): {exc}", file=sys.stderr)
        return EXIT_NEGATIVE


if __name__ == "__main__":
    raise SystemExit(main())
