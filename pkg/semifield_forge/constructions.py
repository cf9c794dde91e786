"""
Explicit isotopisms between the LMPTB and twisted-trace families, and the strong-isotopy decision.

Everything built here is re-verified before it is returned: a construction that fails its own check
raises `VerificationFailed` instead of handing back an unchecked object.
"""
from __future__ import annotations

import itertools
import logging
from typing import Literal, NamedTuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from . import linpoly
from .errors import (
    InvalidParams,
    NoSolution,
    NoSquareRoot,
    NoSuchElement,
    PreconditionFailed,
    VerificationFailed,
    ZeroInput,
)
from .families import (
    BHBParams,
    LMPTBParams,
    bhb,
    bhb_symplectic,
    lmptb,
    lmptb_symplectic,
    omega_split_maps,
)
from .field_tower import FieldCtx, check_degree_pair, find_omega, is_square, solve_power_eq
from .isotopy import (
    IsotopismTriple,
    StrongCheck,
    strong_check,
    ts_inverse_transform,
    verify_isotopism,
)
from .linpoly import LinearizedMap
from .presemifield import Presemifield, SpreadSet, from_spread_form, precompose, spread_set

__all__ = (
    "XiSolution",
    "XiMaps",
    "XiIdentities",
    "ConstructedIsotopism",
    "StrongIsotopismMap",
    "EquationRecord",
    "StrongIsoCertificate",
    "SemilinearG",
    "SemilinearSearchReport",
    "solve_xi",
    "xi_maps",
    "xi_identities",
    "xi_normalized_symplectic",
    "choose_beta_bar",
    "h_map",
    "symplectic_isotopism",
    "commutative_isotopism",
    "strong_isotopism_map",
    "no_strong_isotopism_certificate",
    "decide_strong",
    "search_semilinear_g",
)

logger = logging.getLogger(__name__)

_CHUNK = 4096


class XiSolution(BaseModel):
    model_config = ConfigDict(frozen=True)

    xi: int
    beta: int
    d: int
    norm: int
    solution_count: int
    norms: tuple[int, ...]


class XiMaps(NamedTuple):
    phi: LinearizedMap
    psi: LinearizedMap
    psi_inv: LinearizedMap


class XiIdentities(BaseModel):
    model_config = ConfigDict(frozen=True)

    inverse: bool
    first_coefficient_vanishes: bool
    second_coefficient: bool
    q_d_monomial: bool

    def all(self) -> bool:
        return (
            self.inverse
            and self.first_coefficient_vanishes
            and self.second_coefficient
            and self.q_d_monomial
        )


class ConstructedIsotopism(NamedTuple):
    source: Presemifield
    target: Presemifield
    triple: IsotopismTriple


class StrongIsotopismMap(BaseModel):
    model_config = ConfigDict(frozen=True)

    params: BHBParams
    xi: int
    rho: int
    b: int
    H: LinearizedMap
    check: StrongCheck
    rho_identity: bool


class EquationRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    exponent: int
    rhs: list[int]
    solutions: int


class StrongIsoCertificate(BaseModel):
    model_config = ConfigDict(frozen=True)

    q: int
    ell: int
    verdict: Literal["exists", "not-exists"]
    H: list[list[int]] | None = None
    b: list[int] | None = None
    equation: EquationRecord | None = None
    flags: dict[str, bool]
    beta_bar: list[int]
    omega: list[int]
    xi: list[int]


class SemilinearG(BaseModel):
    """G = sum(coeffs[i] * x^(p^exponent q^(2 support[i])))."""

    model_config = ConfigDict(frozen=True)

    exponent: int
    support: list[int]
    coeffs: list[list[int]]


class SemilinearSearchReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    max_terms: int
    candidates: int
    solutions: list[SemilinearG]


# xi and the normalizing maps


def _check_xi(ctx: FieldCtx, beta: int, d: int, xi: int) -> bool:
    Q = ctx.q**ctx.ell
    return ctx.pow(xi, ctx.q ** (ctx.ell + d) - 1) == ctx.pow(beta, 1 - Q)


def solve_xi(ctx: FieldCtx, beta: int, ell: int, d: int) -> XiSolution:
    """
    Solve xi^(q^(ell+d) - 1) = beta^(1 - q^ell) and pick the solution with xi^(q^ell + 1) = omega^2.

    The q - 1 solutions differ by F_q* factors and their norms xi^(q^ell + 1) run over the nonsquares
    of F_q; the least solution with norm sigma is returned.
    """
    if ell != ctx.ell:
        raise InvalidParams(f"`ell`={ell} does not match the field (ell={ctx.ell})")
    check_degree_pair(ell, d)
    if beta == 0:
        raise ZeroInput("`beta` must be nonzero")
    if is_square(ctx, beta):
        raise InvalidParams(f"`beta`={ctx.elem_coeffs(beta)} is a square")
    q, Q = ctx.q, ctx.q**ell
    omega = find_omega(ctx)
    sigma = int(ctx.mul(omega, omega))
    solutions = solve_power_eq(ctx, q ** (ell + d) - 1, int(ctx.pow(beta, 1 - Q)))
    if len(solutions) != q - 1:
        raise NoSolution(f"expected {q - 1} solutions for xi, found {len(solutions)}")
    base = solutions[0]
    for other in solutions[1:]:
        if not ctx.in_subfield(ctx.div(other, base), ctx.h):
            raise VerificationFailed("two solutions for xi differ by a factor outside F_q")
    norms = np.asarray(ctx.pow(np.array(solutions, dtype=np.int64), Q + 1))
    base_field = ctx.subfield_elements(ctx.h)[1:]
    nonsquares = {int(v) for v in base_field if not ctx.is_square_in(int(v), ctx.h)}
    if set(int(v) for v in norms) != nonsquares:
        raise VerificationFailed("norms of the xi solutions are not the nonsquares of F_q")
    matching = [x for x, nv in zip(solutions, norms) if nv == sigma]
    if not matching:
        raise NoSolution(f"no xi with norm sigma={sigma}")
    logger.debug(
        "xi for beta=%d, d=%d: %d of %d solutions have norm sigma", beta, d, len(matching), q - 1
    )
    return XiSolution(
        xi=matching[0],
        beta=beta,
        d=d,
        norm=sigma,
        solution_count=len(solutions),
        norms=tuple(sorted(int(v) for v in norms)),
    )


def xi_maps(ctx: FieldCtx, xi: int, omega: int) -> XiMaps:
    """
    psi = (omega/xi) x + x^(q^l), phi = x - (omega/xi^(q^l)) x^(q^l)
    and psi^-1 = ((omega/xi^(q^l)) x + x^(q^l)) / 2.
    """
    L = ctx.h * ctx.ell
    w_xi = int(ctx.div(omega, xi))
    w_xiQ = int(ctx.div(omega, ctx.frob(xi, L)))
    psi = linpoly.add(ctx, linpoly.scalar(ctx, w_xi), linpoly.frobenius(ctx, L))
    phi = linpoly.sub(ctx, linpoly.identity(ctx), linpoly.monomial(ctx, w_xiQ, L))
    psi_inv = linpoly.scale(
        ctx, ctx.half, linpoly.add(ctx, linpoly.scalar(ctx, w_xiQ), linpoly.frobenius(ctx, L))
    )
    if linpoly.compose(ctx, psi_inv, psi) != linpoly.identity(ctx):
        raise VerificationFailed("psi^-1 o psi is not the identity")
    # raises Singular when phi is not invertible
    linpoly.invert(ctx, phi)
    return XiMaps(phi=phi, psi=psi, psi_inv=psi_inv)


def xi_identities(ctx: FieldCtx, params: BHBParams, xi: int) -> XiIdentities:
    """Coefficientwise checks behind the normalized multiplication."""
    L, D = ctx.h * ctx.ell, ctx.h * params.d
    beta, omega = params.beta, params.omega
    maps = xi_maps(ctx, xi, omega)
    xiQ = int(ctx.frob(xi, L))
    t_beta = linpoly.scalar(ctx, beta)

    # psi^-1 ((beta phi(x))^(q^-d)) = c1/2 x^(q^(l-d)) + c2/2 x^(q^-d)
    twisted = linpoly.compose(ctx, maps.psi_inv, linpoly.frobenius(ctx, -D), t_beta, maps.phi)
    beta_m = int(ctx.frob(beta, -D))
    c1 = ctx.sub(
        ctx.frob(beta, L - D),
        ctx.div(ctx.mul(ctx.mul(omega, omega), beta_m), ctx.mul(xiQ, ctx.frob(xi, L - D))),
    )
    c2 = ctx.add(
        ctx.div(ctx.mul(omega, beta_m), xiQ),
        ctx.div(ctx.mul(omega, ctx.frob(beta, L - D)), ctx.frob(xi, -D)),
    )
    expected_c2 = ctx.div(ctx.mul(ctx.mul(2, omega), beta_m), xiQ)

    # psi^-1 (beta phi(x)^(q^d)) = omega beta / xi^(q^l) x^(q^d)
    straight = linpoly.compose(ctx, maps.psi_inv, t_beta, linpoly.frobenius(ctx, D), maps.phi)
    monomial = linpoly.monomial(ctx, ctx.div(ctx.mul(omega, beta), xiQ), D)

    return XiIdentities(
        inverse=linpoly.compose(ctx, maps.psi_inv, maps.psi) == linpoly.identity(ctx),
        first_coefficient_vanishes=c1 == 0 and twisted.coeffs[(L - D) % ctx.n] == 0,
        second_coefficient=c2 == expected_c2 and twisted.coeffs[-D % ctx.n] == ctx.mul(ctx.half, c2),
        q_d_monomial=straight == monomial,
    )


def xi_normalized_symplectic(
    ctx: FieldCtx, params: BHBParams, xi: int, verify: bool = True
) -> Presemifield:
    """
    x *'' y = 2 (A x + sigma B omega beta / xi^(q^l) x^(q^d)
                 + sigma (B beta)^(q^-d) omega / xi^(q^l) x^(q^-d)),
    with y = A + B omega; (phi, id, psi) is checked as an isotopism onto the symplectic twisted-trace
    presemifield.
    """
    L, D = ctx.h * ctx.ell, ctx.h * params.d
    A, B = omega_split_maps(ctx, params.omega)
    coeff = ctx.div(ctx.mul(ctx.mul(2, params.sigma), params.omega), ctx.frob(xi, L))
    rows = {
        0: linpoly.scale(ctx, 2, A),
        D: linpoly.compose(ctx, linpoly.scalar(ctx, ctx.mul(coeff, params.beta)), B),
        -D: linpoly.compose(
            ctx,
            linpoly.scalar(ctx, ctx.mul(coeff, ctx.frob(params.beta, -D))),
            linpoly.frobenius(ctx, -D),
            B,
        ),
    }
    S = from_spread_form(ctx, rows, f"BHB({ctx.q},{ctx.ell},{params.d})''")
    if verify:
        maps = xi_maps(ctx, xi, params.omega)
        triple = IsotopismTriple(M=maps.phi, N=linpoly.identity(ctx), L=maps.psi)
        result = verify_isotopism(S, bhb_symplectic(ctx, params, verify=False), triple)
        if result.status != "verified":
            raise VerificationFailed(f"(phi, id, psi) refuted at {result.witness}")
    return S


# the isotopisms between the two families


def choose_beta_bar(ctx: FieldCtx) -> int:
    """Least generator power in F_{q^2} that is a nonsquare of the full field with norm 1/sigma."""
    omega = find_omega(ctx)
    target = ctx.inv(ctx.mul(omega, omega))
    m = ctx.order - 1
    stride = m // (ctx.q**2 - 1)
    candidates = np.asarray(ctx.exp(stride * np.arange(ctx.q**2 - 1, dtype=np.int64)))
    norms = np.asarray(ctx.pow(candidates, ctx.q + 1))
    ok = (norms == target) & ~np.asarray(is_square(ctx, candidates))
    if not ok.any():
        raise NoSuchElement("no nonsquare of F_{q^2} with norm 1/sigma")
    beta_bar = int(candidates[np.flatnonzero(ok)[0]])
    logger.debug("beta_bar = %s", ctx.elem_coeffs(beta_bar))
    return beta_bar


def h_map(ctx: FieldCtx, omega: int) -> LinearizedMap:
    """y = A + B omega -> 2A + 2 (B^(q^-2) + B) omega."""
    A, B = omega_split_maps(ctx, omega)
    twist = linpoly.add(ctx, linpoly.frobenius(ctx, -2 * ctx.h), linpoly.identity(ctx))
    return linpoly.add(
        ctx,
        linpoly.scale(ctx, 2, A),
        linpoly.compose(ctx, linpoly.scalar(ctx, ctx.mul(2, omega)), twist, B),
    )


def _bhb_bar(ctx: FieldCtx) -> tuple[BHBParams, int]:
    beta_bar = choose_beta_bar(ctx)
    params = BHBParams.build(ctx, d=2, beta=beta_bar)
    xi = int(ctx.inv(beta_bar))
    if not _check_xi(ctx, beta_bar, 2, xi) or ctx.pow(xi, ctx.q**ctx.ell + 1) != params.sigma:
        raise VerificationFailed("beta_bar^-1 does not solve the xi equations")
    return params, xi


def symplectic_isotopism(ctx: FieldCtx, eta: int | None = None) -> ConstructedIsotopism:
    """(phi, h^-1, psi) from symplectic LMPTB to the symplectic twisted-trace presemifield, d = 2."""
    lparams = LMPTBParams.build(ctx, eta)
    bparams, xi = _bhb_bar(ctx)
    maps = xi_maps(ctx, xi, bparams.omega)
    h = h_map(ctx, bparams.omega)
    source = lmptb_symplectic(ctx, lparams)
    target = bhb_symplectic(ctx, bparams)
    if eta is None:
        if precompose(source, N=h) != xi_normalized_symplectic(ctx, bparams, xi, verify=False):
            raise VerificationFailed("x . h(y) differs from the normalized multiplication")
    candidate = IsotopismTriple(M=maps.phi, N=linpoly.invert(ctx, h), L=maps.psi)
    triple = verify_isotopism(source, target, candidate)
    if triple.status != "verified":
        raise VerificationFailed(f"symplectic isotopism refuted at {triple.witness}")
    return ConstructedIsotopism(source, target, triple)


def commutative_isotopism(ctx: FieldCtx) -> ConstructedIsotopism:
    """(conj(psi)^-1, phi, conj(h)) from the LMPTB semifield to the twisted-trace one, d = 2."""
    symplectic = symplectic_isotopism(ctx)
    source = lmptb(ctx, LMPTBParams.build(ctx))
    bparams, _ = _bhb_bar(ctx)
    target = bhb(ctx, bparams)
    triple = verify_isotopism(source, target, ts_inverse_transform(ctx, symplectic.triple))
    if triple.status != "verified":
        raise VerificationFailed(f"commutative isotopism refuted at {triple.witness}")
    if triple.is_strong:
        raise VerificationFailed("commutative isotopism unexpectedly has M = N")
    return ConstructedIsotopism(source, target, triple)


# strong isotopy


def _require_q_mod4(ctx: FieldCtx, residue: int) -> None:
    if ctx.ell % 2 == 0 or ctx.ell < 3:
        raise InvalidParams(f"`ell`={ctx.ell} must be odd and greater than 1")
    if ctx.q % 4 != residue:
        raise PreconditionFailed(f"`q`={ctx.q} is not {residue} mod 4")


def _least_index_root(ctx: FieldCtx, rho: int, degree: int) -> int:
    roots = [r for r in solve_power_eq(ctx, 2, rho) if ctx.in_subfield(r, degree)]
    if not roots:
        raise NoSquareRoot(
            f"`rho`={ctx.elem_coeffs(rho)} has no square root in the subfield of degree {degree}"
        )
    return min(roots, key=lambda r: int(ctx.log(r)))


def strong_isotopism_map(ctx: FieldCtx) -> StrongIsotopismMap:
    """H = conj(phi)^-1 o t_b with b^2 = rho = 2 omega beta_bar, for q = 1 mod 4."""
    _require_q_mod4(ctx, 1)
    bparams, xi = _bhb_bar(ctx)
    maps = xi_maps(ctx, xi, bparams.omega)
    rho = int(ctx.mul(ctx.mul(2, bparams.omega), bparams.beta))
    b = _least_index_root(ctx, rho, 2 * ctx.h)
    if ctx.mul(b, b) != rho:  # pragma: no cover
        raise NoSquareRoot("square root check failed")
    phi_bar_inv = linpoly.invert(ctx, linpoly.conjugate(ctx, maps.phi))
    rho_identity = linpoly.compose(ctx, phi_bar_inv, linpoly.scalar(ctx, rho)) == maps.psi
    H = linpoly.compose(ctx, phi_bar_inv, linpoly.scalar(ctx, b))
    check = strong_check(lmptb(ctx, LMPTBParams.build(ctx)), bhb(ctx, bparams), H)
    if check.status != "verified":
        raise VerificationFailed(f"H fails the strong isotopism check at y={check.witness}")
    return StrongIsotopismMap(
        params=bparams, xi=xi, rho=rho, b=b, H=H, check=check, rho_identity=rho_identity
    )


def no_strong_isotopism_certificate(ctx: FieldCtx) -> StrongIsoCertificate:
    """Exhaustive emptiness of x^(2q^l - 2) = -beta_bar^(q-1), for q = 3 mod 4."""
    _require_q_mod4(ctx, 3)
    bparams, xi = _bhb_bar(ctx)
    beta_bar, omega = bparams.beta, bparams.omega
    Q = ctx.q**ctx.ell
    exponent = 2 * Q - 2
    rhs = int(ctx.neg(ctx.pow(beta_bar, ctx.q - 1)))
    xs = ctx.nonzero()
    scanned = int(np.count_nonzero(np.asarray(ctx.pow(xs, exponent)) == rhs))
    if scanned != len(solve_power_eq(ctx, exponent, rhs)):
        raise VerificationFailed("discrete-log and exhaustive counts disagree")

    per_coefficient = ctx.add(
        ctx.mul(ctx.qpow(beta_bar, 1), ctx.pow(xs, 2)), ctx.mul(beta_bar, ctx.pow(xs, 2 * Q))
    )
    maps = xi_maps(ctx, xi, omega)
    delta = int(ctx.mul(ctx.half, ctx.mul(omega, ctx.qpow(beta_bar, 1))))
    flags = {
        "no_solution": scanned == 0,
        "per_coefficient": bool(np.all(np.asarray(per_coefficient) != 0)),
        "delta_in_subfield": bool(ctx.in_subfield(delta, 2 * ctx.h)),
        "psi_inverse": maps.psi_inv
        == linpoly.compose(ctx, linpoly.scalar(ctx, delta), linpoly.conjugate(ctx, maps.phi)),
    }
    if not all(flags.values()):
        raise VerificationFailed(f"no-strong-isotopism certificate failed: {flags}")
    logger.info("no strong isotopism at (q, ell) = (%d, %d): %s", ctx.q, ctx.ell, flags)
    return StrongIsoCertificate(
        q=ctx.q,
        ell=ctx.ell,
        verdict="not-exists",
        equation=EquationRecord(exponent=exponent, rhs=ctx.elem_coeffs(rhs), solutions=scanned),
        flags=flags,
        beta_bar=ctx.elem_coeffs(beta_bar),
        omega=ctx.elem_coeffs(omega),
        xi=ctx.elem_coeffs(xi),
    )


def decide_strong(ctx: FieldCtx) -> StrongIsoCertificate:
    """Strong isotopy of the LMPTB semifield and the d = 2 twisted-trace presemifield, by q mod 4."""
    if ctx.q % 4 == 3:
        return no_strong_isotopism_certificate(ctx)
    strong = strong_isotopism_map(ctx)
    flags = {"strong_check": strong.check.status == "verified", "rho_identity": strong.rho_identity}
    if not all(flags.values()):
        raise VerificationFailed(f"strong isotopism certificate failed: {flags}")
    return StrongIsoCertificate(
        q=ctx.q,
        ell=ctx.ell,
        verdict="exists",
        H=strong.H.to_json(ctx)["coeffs"],
        b=ctx.elem_coeffs(strong.b),
        flags=flags,
        beta_bar=ctx.elem_coeffs(strong.params.beta),
        omega=ctx.elem_coeffs(strong.params.omega),
        xi=ctx.elem_coeffs(strong.xi),
    )


def search_semilinear_g(ctx: FieldCtx, max_terms: int = 1) -> SemilinearSearchReport:
    """
    Brute-force the F_{q^2}-semilinear G = sum a_i x^(p^e q^(2i)) with at most `max_terms` nonzero
    coefficients such that delta G S1 conj(G) = S1, S1 the spread set of the symplectic LMPTB
    presemifield.
    """
    if max_terms < 1:
        raise InvalidParams(f"`max_terms`={max_terms} must be positive")
    bparams, _ = _bhb_bar(ctx)
    delta = int(ctx.mul(ctx.half, ctx.mul(bparams.omega, ctx.qpow(bparams.beta, 1))))
    T = spread_set(lmptb_symplectic(ctx, LMPTBParams.build(ctx), verify=False))
    basis_maps = T.maps[ctx.basis()]
    values = ctx.nonzero()
    candidates = 0
    solutions: list[SemilinearG] = []
    for e in range(2 * ctx.h):
        for size in range(1, max_terms + 1):
            for support in itertools.combinations(range(ctx.ell), size):
                slots = [(e + 2 * ctx.h * i) % ctx.n for i in support]
                for head in itertools.product(values, repeat=size - 1):
                    for start in range(0, values.size, _CHUNK):
                        tail = values[start : start + _CHUNK]
                        G = np.zeros((tail.size, ctx.n), dtype=np.int64)
                        for slot, a in zip(slots[:-1], head):
                            G[:, slot] = a
                        G[:, slots[-1]] = tail
                        candidates += tail.size
                        for row in _stabilizing(ctx, G, basis_maps, T, delta):
                            solutions.append(
                                SemilinearG(
                                    exponent=e,
                                    support=list(support),
                                    coeffs=[ctx.elem_coeffs(int(row[s])) for s in slots],
                                )
                            )
    logger.info(
        "semilinear G search (max_terms=%d): %d of %d candidates", max_terms, len(solutions), candidates
    )
    return SemilinearSearchReport(max_terms=max_terms, candidates=candidates, solutions=solutions)


def _stabilizing(
    ctx: FieldCtx, G: np.ndarray, basis_maps: np.ndarray, T: SpreadSet, delta: int
) -> list[np.ndarray]:
    G_bar = linpoly.conjugate_many(ctx, G)
    inner = linpoly.compose_many(ctx, basis_maps[None, :, :], G_bar[:, None, :])
    images = np.asarray(ctx.mul(delta, linpoly.compose_many(ctx, G[:, None, :], inner)))
    hits = (T.lookup(images.reshape(-1, ctx.n)).reshape(len(G), ctx.n) >= 0).all(axis=1)
    rows = G[hits]
    if rows.size:
        rows = rows[linpoly.nonsingular_mask(linpoly.as_matrices(ctx, rows), ctx.p)]
    return list(rows)
