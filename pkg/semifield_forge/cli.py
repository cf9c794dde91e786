from __future__ import annotations

import argparse
import contextlib
import json
import logging
import sys
import time
from collections.abc import Callable, Iterator, Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import Any, TypeVar

import numpy as np

from . import __version__
from .config import Settings, get_settings
from .constructions import (
    choose_beta_bar,
    commutative_isotopism,
    decide_strong,
    search_semilinear_g,
    symplectic_isotopism,
)
from .errors import InvalidParams, SemifieldError, SizeBoundExceeded
from .families import BHBParams, LMPTBParams, bhb, lmptb, reconcile_g_bounds
from .field_tower import FieldCtx, TowerParams, make_ctx
from .isotopy import IsotopismTriple, knuth_orbit, nuclei, semilinearity_constraint, verify_isotopism
from .presemifield import Presemifield, multiplication_table
from .reports import CheckResult, PresemifieldSummary, RunReport, TripleRecord, report_schema
from .selftest import SUITE_FIELDS, run_selftest

__all__ = ("main", "build_parser", "cmd_construct", "cmd_isotopy", "cmd_strong", "cmd_selftest")

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_SELFTEST_FAILED = 1
EXIT_INVALID_PARAMS = 2
EXIT_SIZE_BOUND = 3
EXIT_VERIFICATION_FAILED = 4

# flags that change how a run executes, not what it reports
_EXECUTION_FLAGS = {"func", "jobs", "timing", "verbose", "quiet", "dump_table"}

T = TypeVar("T")


class _Timer:
    def __init__(self, enabled: bool) -> None:
        self.enabled = enabled
        self.stages: dict[str, float] = {}

    @contextlib.contextmanager
    def stage(self, name: str) -> Iterator[None]:
        start = time.perf_counter()
        try:
            yield
        finally:
            self.stages[name] = round(time.perf_counter() - start, 3)
            logger.debug("%s took %.3fs", name, self.stages[name])

    @property
    def report(self) -> dict[str, float] | None:
        return dict(self.stages) if self.enabled else None


def _parallel(jobs: int, *thunks: Callable[[], T]) -> list[T]:
    if jobs <= 1:
        return [thunk() for thunk in thunks]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(thunk) for thunk in thunks]
        return [future.result() for future in futures]


def _status(name: str, passed: bool, detail: str = "") -> CheckResult:
    return CheckResult(name=name, status="passed" if passed else "failed", detail=detail)


def _modulus(raw: str) -> list[int]:
    try:
        return [int(c) for c in raw.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"modulus must be a list of integers, got {raw!r}") from None


def _echo(args: argparse.Namespace) -> dict[str, Any]:
    return {k: v for k, v in sorted(vars(args).items()) if k not in _EXECUTION_FLAGS}


def _context(args: argparse.Namespace, settings: Settings, d: int | None = None) -> FieldCtx:
    params = TowerParams.from_q(args.q, args.ell, d)
    return make_ctx(params, modulus_override=args.modulus, size_bound=settings.size_bound)


def _dump_table(S: Presemifield, path: str) -> None:
    ctx = S.ctx
    table = multiplication_table(S)
    xs, ys = np.meshgrid(ctx.elements(), ctx.elements(), indexing="ij")
    rows = np.stack([xs.ravel(), ys.ravel(), table.ravel()], axis=1)
    np.savetxt(path, rows, fmt="%d", delimiter=",", header="x,y,product", comments="")
    logger.info("wrote %d products of %s to %s", len(rows), S.label, path)


def _pairs_check(S1: Presemifield, S2: Presemifield, triple: IsotopismTriple) -> CheckResult:
    name = f"pairs_oracle {S1.label} -> {S2.label}"
    try:
        result = verify_isotopism(S1, S2, triple, method="pairs")
    except SizeBoundExceeded as exc:
        return CheckResult(name=name, status="skipped", detail=str(exc))
    detail = f"witness={result.witness}" if result.witness else ""
    return _status(name, result.status == "verified", detail)


# commands


def cmd_construct(args: argparse.Namespace, settings: Settings) -> RunReport:
    timer = _Timer(args.timing)
    report = RunReport(version=__version__, command="construct", args=_echo(args))
    with timer.stage("field"):
        ctx = _context(args, settings, args.d if args.family == "BHB" else None)
    report.field = ctx.describe()
    with timer.stage("construct"):
        if args.family == "BHB":
            bparams = BHBParams.build(ctx, d=args.d, beta_index=args.beta_index)
            S = bhb(ctx, bparams)
            report.families.append(bparams.descriptor(ctx))
        else:
            lparams = LMPTBParams.build(ctx)
            S = lmptb(ctx, lparams)
            report.families.append(lparams.descriptor(ctx))
            report.g_bounds = reconcile_g_bounds(ctx, lparams)
    with timer.stage("validity"):
        orders = nuclei(S) if args.nuclei else None
        summary = PresemifieldSummary.of(S, nuclei=orders, exhaustive=args.slow_oracles)
    report.presemifields.append(summary)
    report.checks += [
        _status("is_presemifield", summary.is_presemifield),
        _status("commutative", summary.commutative),
    ]
    if args.orbit:
        with timer.stage("knuth_orbit"):
            report.knuth_orbit = knuth_orbit(S)
    if args.dump_table:
        with timer.stage("dump_table"):
            _dump_table(S, args.dump_table)
    report.timing = timer.report
    return report


def cmd_isotopy(args: argparse.Namespace, settings: Settings) -> RunReport:
    timer = _Timer(args.timing)
    report = RunReport(version=__version__, command="isotopy", args=_echo(args))
    with timer.stage("field"):
        ctx = _context(args, settings)
    report.field = ctx.describe()
    report.families += [
        LMPTBParams.build(ctx).descriptor(ctx),
        BHBParams.build(ctx, d=2, beta=choose_beta_bar(ctx)).descriptor(ctx),
    ]
    with timer.stage("isotopisms"):
        symplectic, commutative = _parallel(
            args.jobs, lambda: symplectic_isotopism(ctx), lambda: commutative_isotopism(ctx)
        )
    P, B, triple = commutative
    with timer.stage("semilinearity"):
        constraint = semilinearity_constraint(P, B, triple)
    report.triples += [
        TripleRecord.from_triple(ctx, symplectic.triple),
        TripleRecord.from_triple(ctx, triple, semilinearity=constraint),
    ]
    with timer.stage("nuclei"):
        nP, nB = _parallel(args.jobs, lambda: nuclei(P), lambda: nuclei(B))
    report.presemifields += [PresemifieldSummary.of(P, nuclei=nP), PresemifieldSummary.of(B, nuclei=nB)]
    report.checks += [
        _status("symplectic_isotopism", symplectic.triple.status == "verified"),
        _status("commutative_isotopism", triple.status == "verified"),
        _status("commutative_isotopism_not_strong", not triple.is_strong),
        _status("nuclei_equal", nP == nB),
    ]
    if args.slow_oracles:
        with timer.stage("pairs_oracle"):
            report.checks.append(_pairs_check(P, B, triple))
    report.timing = timer.report
    return report


def cmd_strong(args: argparse.Namespace, settings: Settings) -> RunReport:
    timer = _Timer(args.timing)
    report = RunReport(version=__version__, command="strong", args=_echo(args))
    with timer.stage("field"):
        ctx = _context(args, settings)
    report.field = ctx.describe()
    report.families += [
        LMPTBParams.build(ctx).descriptor(ctx),
        BHBParams.build(ctx, d=2, beta=choose_beta_bar(ctx)).descriptor(ctx),
    ]
    with timer.stage("decide"):
        certificate = decide_strong(ctx)
    report.certificate = certificate
    report.checks += [_status(name, value) for name, value in sorted(certificate.flags.items())]
    if args.slow_oracles:
        with timer.stage("semilinear_search"):
            search = search_semilinear_g(ctx)
        report.semilinear_search = search
        report.checks.append(
            _status(
                "semilinear_search_agrees",
                bool(search.solutions) == (certificate.verdict == "exists"),
                f"{len(search.solutions)} of {search.candidates} candidates",
            )
        )
    report.timing = timer.report
    return report


def cmd_selftest(args: argparse.Namespace, settings: Settings) -> RunReport:
    result = run_selftest(
        seed=args.seed,
        jobs=args.jobs,
        settings=settings,
        slow_oracles=args.slow_oracles,
        fields=SUITE_FIELDS,
    )
    return RunReport(
        version=__version__,
        command="selftest",
        args=_echo(args),
        checks=result.checks,
        timing=result.timing if args.timing else None,
    )


# entry point


def _add_common(parser: argparse.ArgumentParser, field: bool = True) -> None:
    if field:
        parser.add_argument("--q", type=int, required=True, help="odd prime power q = p^h")
        parser.add_argument("--ell", type=int, required=True, help="odd degree ell > 1")
        parser.add_argument(
            "--modulus", type=_modulus, default=None, help="coefficients c0,...,cn of the field modulus"
        )
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--jobs", type=int, default=1, help="worker threads")
    parser.add_argument("--max-field-bits", type=int, default=None, help="size bound 2**BITS on p^n")
    parser.add_argument(
        "--slow-oracles",
        action="store_true",
        help="all-pairs checks and the brute-force semilinear search",
    )
    parser.add_argument("--timing", action="store_true", help="include stage timings in the report")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="count", default=0)
    verbosity.add_argument("--quiet", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semifield-forge", description="Commutative presemifields over small finite fields."
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    construct = sub.add_parser("construct", help="build a family member and check it")
    construct.add_argument("--family", choices=("LMPTB", "BHB"), required=True)
    construct.add_argument("--d", type=int, default=2, help="BHB twist degree")
    construct.add_argument("--beta-index", type=int, default=None, help="BHB beta = g^INDEX, default 1")
    construct.add_argument("--nuclei", action="store_true", help="compute nuclei orders")
    construct.add_argument("--orbit", action="store_true", help="the six Knuth-type derivatives")
    construct.add_argument("--dump-table", metavar="PATH", default=None, help="CSV of x,y,x*y indices")
    _add_common(construct)
    construct.set_defaults(func=cmd_construct)

    isotopy = sub.add_parser("isotopy", help="isotopisms between the LMPTB and BHB families")
    _add_common(isotopy)
    isotopy.set_defaults(func=cmd_isotopy)

    strong = sub.add_parser("strong", help="decide strong isotopy of the two families")
    _add_common(strong)
    strong.set_defaults(func=cmd_strong)

    selftest = sub.add_parser("selftest", help="run the invariant suites")
    _add_common(selftest, field=False)
    selftest.set_defaults(func=cmd_selftest)

    schema = sub.add_parser("schema", help="print the JSON schema of reports")
    schema.set_defaults(func=None)
    return parser


def _configure_logging(args: argparse.Namespace) -> None:
    if args.quiet:
        level = logging.ERROR
    elif args.verbose > 1:
        level = logging.DEBUG
    else:
        level = logging.INFO if args.verbose else logging.WARNING
    logging.basicConfig(stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s")


def _summary(report: RunReport) -> str:
    counts = {s: sum(c.status == s for c in report.checks) for s in ("passed", "failed", "skipped")}
    lines = [f"{report.command}: " + ", ".join(f"{v} {k}" for k, v in counts.items())]
    lines += [f"  FAILED {c.name} {c.detail}".rstrip() for c in report.failed()]
    if report.certificate is not None:
        lines.append(f"  strong isotopism: {report.certificate.verdict}")
    return "\n".join(lines)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.func is None:
        print(json.dumps(report_schema(), indent=2, sort_keys=True))
        return EXIT_OK
    _configure_logging(args)
    try:
        settings = get_settings().with_field_bits(args.max_field_bits)
        report = args.func(args, settings)
    except InvalidParams as exc:
        logger.error("invalid parameters: %s", exc)
        return EXIT_INVALID_PARAMS
    except SizeBoundExceeded as exc:
        logger.error("size bound: %s", exc)
        return EXIT_SIZE_BOUND
    except SemifieldError as exc:
        logger.error("verification failed: %s: %s", type(exc).__name__, exc)
        return EXIT_VERIFICATION_FAILED
    print(report.model_dump_json(indent=2))
    print(_summary(report), file=sys.stderr)
    if report.ok:
        return EXIT_OK
    return EXIT_SELFTEST_FAILED if report.command == "selftest" else EXIT_VERIFICATION_FAILED
