"""Command line interface.

Every command parses a ``.spec`` file, runs the compatibility gate and then
one group of checks; the report goes to stdout (or ``--out``), logs to stderr.

Exit codes: 0 when every check passes, 1 on a failed certification, 2 on
parse or usage errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Optional, Sequence

from bicomplex import __version__
from bicomplex.config import get_settings
from bicomplex.exceptions import SpecParseError
from bicomplex.services import certification as suites
from bicomplex.services.certification import Session
from bicomplex.services.reporting import Checker, render
from bicomplex.services.spec_parser import parse_document, resolve, source_map
from bicomplex.utils.logging import configure_logging
from bicomplex.utils.metrics import metrics

logger = logging.getLogger(__name__)
settings = get_settings()

Suite = Callable[[Session, Checker, int], None]


def _linfty(session: Session, checker: Checker, arity: int) -> None:
    suites.linfty_suite(session, checker, arity)


def _run_all(session: Session, checker: Checker, arity: int) -> None:
    for name, suite in COMMANDS.items():
        if name != "report":
            suite(session, checker, arity)


def _simple(suite: Callable[[Session, Checker], None]) -> Suite:
    return lambda session, checker, arity: suite(session, checker)


COMMANDS: dict[str, Suite] = {
    "check": _simple(suites.axiom_suite),
    "develop": _simple(suites.development_suite),
    "triple": _simple(suites.triple_suite),
    "brackets": _simple(suites.bracket_suite),
    "linfty-verify": _linfty,
    "mc": _simple(suites.mc_suite),
    "momentum": _simple(suites.momentum_suite),
    "report": _run_all,
}

HELP = {
    "check": "compatibility gate and bicomplex axioms on seeded forms",
    "develop": "build and certify the development of omega",
    "triple": "canonical (or supplied) Hamiltonian triple, redefinitions, classification",
    "brackets": "bracket identities and the dgLa on local functionals",
    "linfty-verify": "generalized Jacobi identities, quasi-inverse, perturbation lemma",
    "mc": "master equation, descent and Maurer-Cartan elements",
    "momentum": "multisymplectic momentum map",
    "report": "every check above in one report",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bicomplex", description="Certify BV theories in the variational bicomplex."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub = commands.add_parser(name, help=HELP[name])
        sub.add_argument("spec", type=Path, help="theory specification (.spec)")
        sub.add_argument("--arity", type=int, default=None, help="maximal arity (at most 4)")
        sub.add_argument("--samples", type=int, default=None, help="samples per randomized check")
        sub.add_argument("--seed", type=int, default=None, help="seed of the sample generator")
        sub.add_argument(
            "--jet-cap", type=int, default=None, help=f"jet order cap (default: {settings.jet_cap})"
        )
        sub.add_argument("--format", choices=("text", "json"), default=None)
        sub.add_argument("--out", type=Path, default=None, help="write the report to PATH")
        sub.add_argument("--metrics", type=Path, default=None, help="write Prometheus metrics")
        sub.add_argument("--log-level", default=None)
        sub.add_argument("--log-format", choices=("text", "json"), default=None)
    return parser


def _usage_error(message: str) -> int:
    print(f"bicomplex: error: {message}", file=sys.stderr)
    return 2


def run(args: argparse.Namespace) -> int:
    """Execute one parsed command line and return its exit code."""
    try:
        text = args.spec.read_text(encoding="utf-8")
    except OSError as e:
        return _usage_error(f"cannot read {args.spec}: {e.strerror or e}")

    try:
        document = parse_document(text)
        spec = resolve(
            document, name=args.spec.stem, jet_cap=args.jet_cap, source=source_map(text)
        )
    except SpecParseError as e:
        return _usage_error(f"{args.spec}: {e}")

    options = document.options
    arity = args.arity or options.arity or settings.max_arity
    if not 1 <= arity <= 4:
        return _usage_error("--arity must be between 1 and 4")
    samples = args.samples or options.samples or settings.default_samples
    if samples < 1:
        return _usage_error("--samples must be positive")
    seed = args.seed if args.seed is not None else options.seed
    seed = seed if seed is not None else settings.default_seed

    logger.info(f"Running {args.command} on {args.spec} (seed={seed}, samples={samples})")
    session = Session(spec=spec, samples=samples, seed=seed)
    checker = Checker(args.command, spec.name, seed)
    if suites.compatibility_gate(session, checker):
        COMMANDS[args.command](session, checker, arity)
    else:
        checker.skip(args.command, "compatibility gate failed")

    report = checker.report()
    output = render(report, args.format)
    if args.out is not None:
        args.out.write_text(output, encoding="utf-8")
    else:
        sys.stdout.write(output)
    if args.metrics is not None:
        args.metrics.write_bytes(metrics.export_metrics())

    failure = report.first_failure()
    if failure is not None:
        summary = f"{failure.name}: {failure.residual or failure.message}"
        print(f"bicomplex: {report.status.value}: {summary}", file=sys.stderr)
        return 1
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level, args.log_format)
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
