"""
Invariant suites run by the `selftest` command.

A suite is a generator of named zero-argument checks over one field. Each check returns a bool; a
`SizeBoundExceeded` marks it skipped and any other library error marks it failed with the message as
detail. Suites for different fields and modules run concurrently, results keep submission order.
"""
from __future__ import annotations

import logging
import math
import time
from collections.abc import Callable, Iterator, Sequence
from concurrent.futures import ThreadPoolExecutor
from typing import NamedTuple

import numpy as np

from . import linpoly
from .config import Settings, get_settings
from .constructions import (
    choose_beta_bar,
    commutative_isotopism,
    decide_strong,
    search_semilinear_g,
    solve_xi,
    strong_isotopism_map,
    symplectic_isotopism,
    xi_identities,
    xi_maps,
    xi_normalized_symplectic,
)
from .errors import SemifieldError, Singular, SizeBoundExceeded
from .families import (
    BHBParams,
    GBounds,
    LMPTBParams,
    b_explicit,
    beta_power_condition,
    bhb,
    bhb_symplectic,
    bhb_transpose_formula,
    decompose_lmptb,
    f_of_y,
    kernels_intersect_trivially,
    lmptb,
    lmptb_symplectic,
    phi_small,
    phi_small_inv,
    reconcile_g_bounds,
)
from .field_tower import (
    FieldCtx,
    TowerParams,
    find_omega,
    gcd_identities,
    is_square,
    make_ctx,
    solve_power_eq,
)
from .isotopy import (
    dual_transform,
    frobenius_twist,
    nuclei,
    semilinearity_constraint,
    transpose_transform,
    ts_inverse_transform,
    ts_transform,
    verify_isotopism,
)
from .presemifield import (
    Presemifield,
    SpreadSet,
    do_monomial,
    dual,
    field_presemifield,
    from_planar_do,
    is_commutative,
    is_planar,
    is_presemifield,
    multiply,
    spread_set,
    spread_set_dual,
    to_planar_do,
    transpose,
    ts,
)
from .reports import CheckResult

__all__ = ("SUITE_FIELDS", "SLOW_FIELDS", "SelftestResult", "run_selftest", "run_suite")

logger = logging.getLogger(__name__)

SUITE_FIELDS: tuple[tuple[int, int], ...] = ((3, 3), (5, 3), (3, 5))
# h > 1, above the table bound; only the regular suites run here
SLOW_FIELDS: tuple[tuple[int, int], ...] = ((9, 3),)

Check = tuple[str, Callable[[], bool]]
Suite = Callable[[FieldCtx, np.random.Generator, Settings], Iterator[Check]]


class SelftestResult(NamedTuple):
    checks: list[CheckResult]
    timing: dict[str, float]


def _random_invertible(ctx: FieldCtx, rng: np.random.Generator, count: int) -> np.ndarray:
    out = np.zeros((0, ctx.n), dtype=np.int64)
    while len(out) < count:
        batch = ctx.random(rng, 2 * count * ctx.n).reshape(2 * count, ctx.n)
        ok = linpoly.nonsingular_mask(linpoly.as_matrices(ctx, batch), ctx.p)
        out = np.concatenate([out, batch[ok]])
    return out[:count]


def _both_families(ctx: FieldCtx) -> tuple[Presemifield, Presemifield]:
    P = lmptb(ctx, LMPTBParams.build(ctx))
    B = bhb(ctx, BHBParams.build(ctx, d=2, beta=choose_beta_bar(ctx)))
    return P, B


def _exhaustive_scope(ctx: FieldCtx, rng: np.random.Generator, settings: Settings) -> np.ndarray:
    """Every nonzero element within the table bound, a random sample above it."""
    if ctx.order <= settings.table_bound:
        return ctx.nonzero()
    return np.unique(ctx.random(rng, settings.random_pairs, nonzero=True))


# field_tower


def field_tower_suite(ctx: FieldCtx, rng: np.random.Generator, settings: Settings) -> Iterator[Check]:
    pairs = settings.random_pairs

    def frobenius_composition() -> bool:
        xs = ctx.random(rng, 100)
        shifts = rng.integers(0, ctx.n, size=(100, 2))
        composes = all(
            ctx.frob(ctx.frob(int(x), int(a)), int(b)) == ctx.frob(int(x), int(a + b))
            for x, (a, b) in zip(xs, shifts)
        )
        base = ctx.subfield_elements(ctx.h)
        fixed = np.array_equal(ctx.frob(xs, 0), xs) and np.array_equal(ctx.frob(base, ctx.h), base)
        return composes and fixed

    def frobenius_homomorphism() -> bool:
        x, y = ctx.random(rng, pairs), ctx.random(rng, pairs)
        return all(
            np.array_equal(ctx.frob(ctx.mul(x, y), k), ctx.mul(ctx.frob(x, k), ctx.frob(y, k)))
            and np.array_equal(ctx.frob(ctx.add(x, y), k), ctx.add(ctx.frob(x, k), ctx.frob(y, k)))
            for k in range(ctx.n)
        )

    def subfield_sizes() -> bool:
        xs = ctx.elements()
        sizes = {k: int(np.count_nonzero(ctx.in_subfield(xs, ctx.h * k))) for k in (1, 2, ctx.ell)}
        return sizes == {k: ctx.q**k for k in (1, 2, ctx.ell)}

    def quadratic_character() -> bool:
        x, y = ctx.random(rng, pairs, nonzero=True), ctx.random(rng, pairs, nonzero=True)
        same_class = is_square(ctx, x) == is_square(ctx, y)
        multiplicative = np.array_equal(is_square(ctx, ctx.mul(x, y)), same_class)
        nonsquares = int(np.count_nonzero(~np.asarray(is_square(ctx, ctx.nonzero()))))
        generator = ctx.generator
        return (
            multiplicative
            and nonsquares == (ctx.order - 1) // 2
            and not is_square(ctx, generator)
            and bool(is_square(ctx, ctx.mul(generator, generator)))
        )

    def power_equation_counts() -> bool:
        Q = ctx.q**ctx.ell
        xs = ctx.nonzero()
        scan = ctx.order <= settings.table_bound
        for k in (1, 2, ctx.q - 1, ctx.q ** (ctx.ell + 2) - 1, 2 * Q - 2):
            for a in ctx.random(rng, 5, nonzero=True):
                solutions = solve_power_eq(ctx, k, int(a))
                g = math.gcd(k, ctx.order - 1)
                if len(solutions) not in (0, g):
                    return False
                if any(ctx.pow(x, k) != a for x in solutions):
                    return False
                if scan and len(solutions) != int(np.count_nonzero(np.asarray(ctx.pow(xs, k)) == a)):
                    return False
        a = int(ctx.random(rng, 1, nonzero=True)[0])
        return solve_power_eq(ctx, 1, a) == (a,)

    def gcd_identities_hold() -> bool:
        return gcd_identities(ctx.q, ctx.ell, 2) == (ctx.q - 1, 2)

    def omega() -> bool:
        w = find_omega(ctx)
        sigma = int(ctx.mul(w, w))
        return (
            ctx.add(ctx.qpow(w, 1), w) == 0
            and not ctx.in_subfield(w, ctx.h)
            and bool(ctx.in_subfield(sigma, ctx.h))
            and not ctx.is_square_in(sigma, ctx.h)
        )

    yield "frobenius_composition", frobenius_composition
    yield "frobenius_homomorphism", frobenius_homomorphism
    yield "subfield_sizes", subfield_sizes
    yield "quadratic_character", quadratic_character
    yield "power_equation_counts", power_equation_counts
    yield "gcd_identities", gcd_identities_hold
    yield "omega", omega


# linpoly


def linpoly_suite(ctx: FieldCtx, rng: np.random.Generator, settings: Settings) -> Iterator[Check]:
    pairs = settings.random_pairs
    a = _random_invertible(ctx, rng, pairs)
    b = _random_invertible(ctx, rng, pairs)
    c = _random_invertible(ctx, rng, 100)

    def conjugate_of_composition() -> bool:
        lhs = linpoly.conjugate_many(ctx, linpoly.compose_many(ctx, a, b))
        rhs = linpoly.compose_many(ctx, linpoly.conjugate_many(ctx, b), linpoly.conjugate_many(ctx, a))
        return np.array_equal(lhs, rhs)

    def conjugate_of_inverse() -> bool:
        for row in a:
            phi = linpoly.LinearizedMap.from_array(row)
            lhs = linpoly.conjugate(ctx, linpoly.invert(ctx, phi))
            if lhs != linpoly.invert(ctx, linpoly.conjugate(ctx, phi)):
                return False
        return True

    def conjugate_involution_and_additivity() -> bool:
        twice = linpoly.conjugate_many(ctx, linpoly.conjugate_many(ctx, a))
        summed = linpoly.conjugate_many(ctx, ctx.add(a, b))
        split = ctx.add(linpoly.conjugate_many(ctx, a), linpoly.conjugate_many(ctx, b))
        scalars = np.zeros_like(a)
        scalars[:, 0] = a[:, 0]
        return (
            np.array_equal(twice, a)
            and np.array_equal(summed, split)
            and np.array_equal(linpoly.conjugate_many(ctx, scalars), scalars)
        )

    def composition_associative() -> bool:
        x, y = a[:100], b[:100]
        left = linpoly.compose_many(ctx, linpoly.compose_many(ctx, x, y), c)
        right = linpoly.compose_many(ctx, x, linpoly.compose_many(ctx, y, c))
        return np.array_equal(left, right)

    def composition_pointwise() -> bool:
        xs = ctx.elements() if ctx.order <= settings.table_bound else ctx.random(rng, 1000)
        for x, y in zip(a[:10], b[:10]):
            composed = linpoly.evaluate_many(ctx, linpoly.compose_many(ctx, x, y)[None, :], xs)[0]
            inner = linpoly.evaluate_many(ctx, y[None, :], xs)[0]
            if not np.array_equal(composed, linpoly.evaluate_many(ctx, x[None, :], inner)[0]):
                return False
        return True

    def matrix_of_composition() -> bool:
        product = linpoly.as_matrices(ctx, linpoly.compose_many(ctx, a, b))
        left, right = linpoly.as_matrices(ctx, a), linpoly.as_matrices(ctx, b)
        mats = np.einsum("bij,bjk->bik", left, right) % ctx.p
        return np.array_equal(product, mats)

    def inversion() -> bool:
        frob = linpoly.frobenius(ctx, 1)
        trace_like = linpoly.add(ctx, linpoly.identity(ctx), linpoly.frobenius(ctx, ctx.h * ctx.ell))
        try:
            linpoly.invert(ctx, trace_like)
        except Singular:
            singular = True
        else:
            singular = False
        return (
            singular
            and linpoly.invert(ctx, linpoly.identity(ctx)) == linpoly.identity(ctx)
            and linpoly.invert(ctx, frob) == linpoly.frobenius(ctx, -1)
            and linpoly.rank(ctx, linpoly.zero(ctx)) == 0
        )

    def semilinear_types() -> bool:
        degree = 2 * ctx.h
        return (
            linpoly.semilinear_type(ctx, linpoly.frobenius(ctx, 1), degree) == 1
            and linpoly.semilinear_type(ctx, linpoly.frobenius(ctx, degree), degree) == 0
            and linpoly.semilinear_type(ctx, linpoly.scalar(ctx, ctx.generator), degree) == 0
        )

    yield "conjugate_of_composition", conjugate_of_composition
    yield "conjugate_of_inverse", conjugate_of_inverse
    yield "conjugate_involution_and_additivity", conjugate_involution_and_additivity
    yield "composition_associative", composition_associative
    yield "composition_pointwise", composition_pointwise
    yield "matrix_of_composition", matrix_of_composition
    yield "inversion", inversion
    yield "semilinear_types", semilinear_types


# presemifield


def presemifield_suite(ctx: FieldCtx, rng: np.random.Generator, settings: Settings) -> Iterator[Check]:
    P, B = _both_families(ctx)
    field = field_presemifield(ctx)

    def field_multiplication() -> bool:
        scalars = np.zeros((ctx.order, ctx.n), dtype=np.int64)
        scalars[:, 0] = ctx.elements()
        T = spread_set(field)
        doubled = spread_set(from_planar_do(do_monomial(ctx, 0, 0)))
        return is_presemifield(field) and T == SpreadSet(ctx, scalars) and T == doubled

    def bilinearity() -> bool:
        x, y, z = (ctx.random(rng, settings.random_pairs) for _ in range(3))
        return all(
            np.array_equal(multiply(S, x, ctx.add(y, z)), ctx.add(multiply(S, x, y), multiply(S, x, z)))
            and not np.any(np.asarray(multiply(S, 0, y)))
            for S in (P, B)
        )

    def knuth_involutions() -> bool:
        return all(
            dual(dual(S)) == S and transpose(transpose(S)) == S and dual(S) == S for S in (P, B, field)
        ) and all(is_presemifield(T) for T in (transpose(B), ts(B), ts(P)))

    def spread_sets() -> bool:
        T = spread_set(P)
        return (
            len(T) == ctx.order
            and T.is_additive()
            and spread_set(B).is_additive()
            and T == spread_set_dual(P)
            and spread_set(dual(B)) == spread_set_dual(B)
        )

    def planar_round_trip() -> bool:
        square = do_monomial(ctx, 0, 0)
        return (
            from_planar_do(to_planar_do(P)) == P
            and from_planar_do(to_planar_do(B)) == B
            and is_planar(square)
            and is_planar(to_planar_do(P))
        )

    yield "field_multiplication", field_multiplication
    yield "bilinearity", bilinearity
    yield "knuth_involutions", knuth_involutions
    yield "spread_sets", spread_sets
    yield "planar_round_trip", planar_round_trip


# families


def families_suite(ctx: FieldCtx, rng: np.random.Generator, settings: Settings) -> Iterator[Check]:
    params = LMPTBParams.build(ctx)

    def family_validity() -> bool:
        P, B = _both_families(ctx)
        default = bhb(ctx, BHBParams.build(ctx, d=2))
        return all(is_presemifield(S) and is_commutative(S) for S in (P, B, default))

    def kernel_parity() -> bool:
        # kernels_intersect_trivially raises when the scan disagrees with the parity rule
        coprime = [d for d in range(1, 2 * ctx.ell) if math.gcd(ctx.ell, d) == 1]
        verdicts = {d: kernels_intersect_trivially(ctx, ctx.ell, d) for d in coprime}
        return verdicts == {d: (ctx.ell + d) % 2 == 1 for d in coprime}

    def even_sum_is_rejected() -> bool:
        S = bhb(ctx, BHBParams.build(ctx, d=1), check=False)
        return not is_presemifield(S)

    def beta_power() -> bool:
        betas = _exhaustive_scope(ctx, rng, settings)
        return all(
            beta_power_condition(ctx, int(beta), ctx.ell, 2) == (not is_square(ctx, int(beta)))
            for beta in betas
        )

    def lmptb_decomposition() -> bool:
        ys = ctx.elements()
        A, Bv = decompose_lmptb(ctx, params, ys)
        rebuilt = ctx.add(A, ctx.mul(ctx.add(ctx.qpow(Bv, 2), Bv), params.eta))
        return (
            np.array_equal(rebuilt, ys)
            and np.array_equal(b_explicit(ctx, params, ys), Bv)
            and np.array_equal(f_of_y(ctx, ys), ctx.mul(ctx.qpow(Bv, 2), params.eta))
        )

    def phi_small_inverse() -> bool:
        zs = ctx.subfield_elements(ctx.h * ctx.ell)
        return np.array_equal(phi_small(ctx, phi_small_inv(ctx, zs)), zs)

    def symplectic_gates() -> bool:
        # each constructor raises VerificationFailed when it differs from the transpose-dual
        lmptb_symplectic(ctx, params)
        lmptb_symplectic(ctx, params, via="trace-sums")
        bhb_symplectic(ctx, BHBParams.build(ctx, d=2))
        bhb_transpose_formula(ctx, BHBParams.build(ctx, d=2))
        return True

    def g_bounds() -> bool:
        report = reconcile_g_bounds(ctx, params)
        chosen = GBounds.BOTH_FROM_ZERO.value
        return report.passing[chosen] and report.chosen == chosen

    yield "family_validity", family_validity
    yield "kernel_parity", kernel_parity
    yield "even_sum_is_rejected", even_sum_is_rejected
    yield "beta_power_condition", beta_power
    yield "lmptb_decomposition", lmptb_decomposition
    yield "phi_small_inverse", phi_small_inverse
    yield "symplectic_gates", symplectic_gates
    yield "g_bounds", g_bounds


# isotopy and constructions


def isotopy_suite(ctx: FieldCtx, rng: np.random.Generator, settings: Settings) -> Iterator[Check]:
    params = BHBParams.build(ctx, d=2)

    def xi_normalization() -> bool:
        solution = solve_xi(ctx, params.beta, ctx.ell, 2)
        xi_normalized_symplectic(ctx, params, solution.xi)
        return solution.solution_count == ctx.q - 1 and xi_identities(ctx, params, solution.xi).all()

    def family_isotopisms() -> bool:
        symplectic = symplectic_isotopism(ctx)
        commutative = commutative_isotopism(ctx)
        return (
            symplectic.triple.status == "verified"
            and commutative.triple.status == "verified"
            and not commutative.triple.is_strong
        )

    def transforms() -> bool:
        S1, S2, triple = commutative_isotopism(ctx)
        moved = [
            verify_isotopism(dual(S1), dual(S2), dual_transform(triple)),
            verify_isotopism(transpose(S1), transpose(S2), transpose_transform(ctx, triple)),
            verify_isotopism(ts(S1), ts(S2), ts_transform(ctx, triple)),
        ]
        back = ts_inverse_transform(ctx, ts_transform(ctx, triple))
        return all(t.status == "verified" for t in moved) and (back.M, back.N, back.L) == (
            triple.M,
            triple.N,
            triple.L,
        )

    def semilinearity() -> bool:
        S1, S2, triple = commutative_isotopism(ctx)
        return semilinearity_constraint(S1, S2, triple).degree == ctx.h

    def twisted_semilinearity() -> bool:
        T = ts(lmptb(ctx, LMPTBParams.build(ctx)))
        twisted, triple = frobenius_twist(T)
        report = semilinearity_constraint(T, twisted, triple)
        return report.degree == 2 * ctx.h and report.exponent == 1

    def nuclei_invariance() -> bool:
        P, B = _both_families(ctx)
        nP, nB = nuclei(P), nuclei(B)
        return nP == nB and nP.middle >= ctx.q**2 and nuclei(ts(P)).left >= ctx.q**2

    def strong_isotopy() -> bool:
        certificate = decide_strong(ctx)
        expected = "exists" if ctx.q % 4 == 1 else "not-exists"
        return certificate.verdict == expected and all(certificate.flags.values())

    def strong_map_semilinearity() -> bool:
        if ctx.q % 4 != 1:
            return True
        strong = strong_isotopism_map(ctx)
        phi = xi_maps(ctx, strong.xi, strong.params.omega).phi
        G = linpoly.compose(ctx, linpoly.conjugate(ctx, phi), strong.H)
        return linpoly.semilinear_type(ctx, G, 2 * ctx.h) is not None

    yield "xi_normalization", xi_normalization
    yield "family_isotopisms", family_isotopisms
    yield "transforms", transforms
    yield "semilinearity", semilinearity
    yield "twisted_semilinearity", twisted_semilinearity
    yield "nuclei_invariance", nuclei_invariance
    yield "strong_isotopy", strong_isotopy
    yield "strong_map_semilinearity", strong_map_semilinearity


def slow_oracle_suite(ctx: FieldCtx, rng: np.random.Generator, settings: Settings) -> Iterator[Check]:
    """Definitional p^(2n) checks and the brute-force semilinear search."""

    def pairs_oracle() -> bool:
        S1, S2, triple = commutative_isotopism(ctx)
        return verify_isotopism(S1, S2, triple, method="pairs").status == "verified"

    def exhaustive_commutativity() -> bool:
        P, B = _both_families(ctx)
        return is_commutative(P, exhaustive=True) and is_commutative(B, exhaustive=True)

    def planarity_routes() -> bool:
        P, _ = _both_families(ctx)
        return is_planar(to_planar_do(P), method="both")

    def semilinear_search() -> bool:
        report = search_semilinear_g(ctx)
        return bool(report.solutions) == (ctx.q % 4 == 1)

    yield "pairs_oracle", pairs_oracle
    yield "exhaustive_commutativity", exhaustive_commutativity
    yield "planarity_routes", planarity_routes
    yield "semilinear_search", semilinear_search


SUITES: dict[str, Suite] = {
    "field_tower": field_tower_suite,
    "linpoly": linpoly_suite,
    "presemifield": presemifield_suite,
    "families": families_suite,
    "isotopy": isotopy_suite,
}


def _run_check(prefix: str, name: str, check: Callable[[], bool]) -> CheckResult:
    full = f"{prefix}/{name}"
    try:
        passed = check()
    except SizeBoundExceeded as exc:
        return CheckResult(name=full, status="skipped", detail=str(exc))
    except SemifieldError as exc:
        logger.error("%s: %s: %s", full, type(exc).__name__, exc)
        return CheckResult(name=full, status="failed", detail=f"{type(exc).__name__}: {exc}")
    if not passed:
        logger.error("%s failed", full)
    return CheckResult(name=full, status="passed" if passed else "failed")


def run_suite(
    suite_name: str, suite: Suite, q: int, ell: int, seed: int, settings: Settings, stream: int = 0
) -> tuple[list[CheckResult], float]:
    prefix = f"{q},{ell}/{suite_name}"
    start = time.perf_counter()
    try:
        ctx = make_ctx(TowerParams.from_q(q, ell), size_bound=settings.size_bound)
        rng = np.random.default_rng([seed, q, ell, stream])
        checks = [_run_check(prefix, name, check) for name, check in suite(ctx, rng, settings)]
    except SizeBoundExceeded as exc:
        logger.warning("%s skipped: %s", prefix, exc)
        checks = [CheckResult(name=prefix, status="skipped", detail=str(exc))]
    except SemifieldError as exc:
        logger.error("%s could not be set up: %s", prefix, exc)
        checks = [CheckResult(name=prefix, status="failed", detail=f"{type(exc).__name__}: {exc}")]
    elapsed = time.perf_counter() - start
    logger.info("%s: %d checks in %.2fs", prefix, len(checks), elapsed)
    return checks, elapsed


def run_selftest(
    seed: int = 0,
    jobs: int = 1,
    settings: Settings | None = None,
    slow_oracles: bool = False,
    fields: Sequence[tuple[int, int]] = SUITE_FIELDS,
    slow_fields: Sequence[tuple[int, int]] = SLOW_FIELDS,
) -> SelftestResult:
    """
    Every suite over every field in `fields`. `slow_oracles` adds the oracle suite there and runs the
    regular suites over `slow_fields` as well.
    """
    settings = settings or get_settings()
    suites = dict(SUITES)
    if slow_oracles:
        suites["slow_oracles"] = slow_oracle_suite
    tasks = [(name, suite, q, ell) for q, ell in fields for name, suite in suites.items()]
    if slow_oracles:
        tasks += [(name, suite, q, ell) for q, ell in slow_fields for name, suite in SUITES.items()]
    streams = {name: i for i, name in enumerate(suites)}
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        futures = [
            pool.submit(run_suite, name, suite, q, ell, seed, settings, streams[name])
            for name, suite, q, ell in tasks
        ]
        outcomes = [future.result() for future in futures]
    checks: list[CheckResult] = []
    timing: dict[str, float] = {}
    for (name, _, q, ell), (results, elapsed) in zip(tasks, outcomes):
        checks.extend(results)
        timing[f"{q},{ell}/{name}"] = round(elapsed, 3)
    return SelftestResult(checks, timing)
