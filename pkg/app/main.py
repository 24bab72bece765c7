import argparse
import sys
from typing import Optional, Sequence

from pydantic import ValidationError

from app.cli import output
from app.cli.commands import EXIT_INPUT, run
from app.core.config import settings
from app.core.exceptions import PolyballError
from app.core.logging import setup_logging
from app.schemas.files import RunConfig
from app.services.construction_service import parse_construct


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _chain(text: str) -> list[list[int]]:
    return [_ints(part) for part in text.split(";") if part.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polyball",
        description="Exact Euler characteristic and curvature of regular polyball elements.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--qmax", type=_ints, default=[], help="truncation box, e.g. 6,6 (one value repeats)")
    common.add_argument("--format", choices=["csv", "json"], default=settings.OUTPUT_FORMAT)
    common.add_argument("--out", default=settings.OUTPUT_DIR or None, help="write reports into this directory")
    common.add_argument("--workers", type=int, default=settings.WORKERS)
    common.add_argument("-v", "--verbose", action="store_true", help="log at DEBUG on stderr")

    inputs = argparse.ArgumentParser(add_help=False)
    inputs.add_argument("--tuple", dest="tuple_path", help="tuple JSON file")
    inputs.add_argument("--subspace", dest="subspace_path", help="subspace JSON file")
    inputs.add_argument("--construct", help="inline construction, e.g. t=5/8,omega=1/2")
    inputs.add_argument("--shape", type=_ints, help="shape for --construct, e.g. 2,2")
    inputs.add_argument("--source", choices=["coinvariant", "restriction"], default="coinvariant")

    for name in ("chi", "curv", "curv-simplex"):
        p = sub.add_parser(name, parents=[common, inputs], help=f"{name} sequence over the truncation box")
        p.add_argument("--inner-cutoff", type=_ints, help="numeric mode cutoff for non-homogeneous generators")
        if name == "chi":
            p.add_argument("--chain", type=_chain, help="cofinal chain, e.g. '0,0;1,1;2,3'")
    sub.add_parser("gbc-check", parents=[common, inputs], help="trace = rank at every truncation")
    sub.add_parser("verify-identities", parents=[common, inputs], help="exact identity checks")
    sub.add_parser("construct", parents=[common, inputs], help="expansion and suffix sets of M(t)")
    suite = sub.add_parser("suite", parents=[common], help="run the built-in verification suites")
    suite.add_argument("--names", type=lambda s: [x for x in s.split(",") if x], default=[])
    suite.add_argument("--seed", type=int)
    suite.add_argument("--size", type=int)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    construction = None
    if getattr(args, "construct", None):
        construction = parse_construct(args.construct, args.shape)
    return RunConfig(
        command=args.command,
        tuple_path=getattr(args, "tuple_path", None),
        subspace_path=getattr(args, "subspace_path", None),
        construction=construction,
        source=getattr(args, "source", "coinvariant"),
        q_max=args.qmax,
        inner_cutoff=getattr(args, "inner_cutoff", None),
        chain=getattr(args, "chain", None),
        suites=getattr(args, "names", []),
        seed=getattr(args, "seed", None),
        size=getattr(args, "size", None),
        output_format=args.format,
        out_dir=args.out,
        workers=args.workers,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging("DEBUG" if args.verbose else settings.LOG_LEVEL)
    try:
        config = config_from_args(args)
    except (PolyballError, ValidationError) as e:
        output.emit_error(e)
        return EXIT_INPUT
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
