"""
The two commutative families and their symplectic versions.

Exponent indices are powers of p reduced mod n, so x^(q^k) sits at index h*k. Both families live
over F_{q^(2 ell)} with ell odd; omega in F_{q^2} with omega^q = -omega is the canonical element
returned by `find_omega`, and eta defaults to the same element.
"""
from __future__ import annotations

import enum
import logging
import math
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict

from . import linpoly
from .errors import InvalidParams, NotInSubfield, VerificationFailed, ZeroInput
from .field_tower import Elem, FieldCtx, check_degree_pair, find_omega, is_square
from .linpoly import LinearizedMap
from .presemifield import (
    Presemifield,
    form_add,
    form_apply,
    form_frob,
    form_scale,
    form_term,
    from_form,
    from_spread_form,
    is_presemifield,
    transpose,
    ts,
)

__all__ = (
    "FamilyDescriptor",
    "BHBParams",
    "LMPTBParams",
    "GBounds",
    "kernel_witness",
    "kernels_intersect_trivially",
    "beta_power_condition",
    "bhb",
    "bhb_transpose_formula",
    "bhb_symplectic",
    "decompose_omega",
    "omega_split_maps",
    "eta_split_maps",
    "f_map",
    "GBoundsReport",
    "lmptb",
    "g_map",
    "reconcile_g_bounds",
    "lmptb_symplectic",
    "decompose_lmptb",
    "b_explicit",
    "phi_small",
    "phi_small_inv",
    "phi_small_inv_map",
    "f_of_y",
    "g_of_y",
)

logger = logging.getLogger(__name__)


def _qi(ctx: FieldCtx, k: int) -> int:
    """Index of x^(q^k)."""
    return (ctx.h * k) % ctx.n


def _sign(ctx: FieldCtx, e: int) -> int:
    return 1 if e % 2 == 0 else ctx.const(-1)


def _qmap(ctx: FieldCtx, terms: dict[int, int]) -> LinearizedMap:
    """sum(c * y^(q^k)) for {k: c}; repeated exponents accumulate."""
    coeffs: list[Elem] = [0] * ctx.n
    for k, c in terms.items():
        i = _qi(ctx, k)
        coeffs[i] = ctx.add(coeffs[i], c)
    return LinearizedMap.from_array(np.array(coeffs, dtype=np.int64))


def _trace_half(ctx: FieldCtx) -> LinearizedMap:
    """y -> (y + y^(q^ell)) / 2."""
    both = linpoly.add(ctx, linpoly.identity(ctx), linpoly.frobenius(ctx, ctx.h * ctx.ell))
    return linpoly.scale(ctx, ctx.half, both)


def _antitrace(ctx: FieldCtx) -> LinearizedMap:
    """y -> y - y^(q^ell)."""
    return linpoly.sub(ctx, linpoly.identity(ctx), linpoly.frobenius(ctx, ctx.h * ctx.ell))


# parameters


class FamilyDescriptor(BaseModel):
    model_config = ConfigDict(frozen=True)

    family: Literal["BHB", "LMPTB"]
    q: int
    ell: int
    d: int | None = None
    beta: list[int] | None = None
    beta_index: int | None = None


class BHBParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    d: int
    beta: int
    omega: int
    sigma: int
    beta_index: int | None = None

    @classmethod
    def build(
        cls, ctx: FieldCtx, d: int, beta: int | None = None, beta_index: int | None = None
    ) -> BHBParams:
        """beta = g^beta_index; without either argument, g itself, the least nonsquare power of g."""
        if beta is not None and beta_index is not None:
            raise InvalidParams("give either `beta` or `beta_index`, not both")
        if beta is None:
            beta_index = 1 if beta_index is None else beta_index
            beta = int(ctx.exp(beta_index))
        omega = find_omega(ctx)
        sigma = int(ctx.mul(omega, omega))
        return cls(d=d, beta=int(beta), omega=omega, sigma=sigma, beta_index=beta_index)

    def check(self, ctx: FieldCtx) -> None:
        check_degree_pair(ctx.ell, self.d)
        if self.beta == 0:
            raise ZeroInput("`beta` must be nonzero")
        if is_square(ctx, self.beta):
            raise InvalidParams(f"`beta`={ctx.elem_coeffs(self.beta)} is a square of F_{{q^(2 ell)}}")

    def descriptor(self, ctx: FieldCtx) -> FamilyDescriptor:
        return FamilyDescriptor(
            family="BHB",
            q=ctx.q,
            ell=ctx.ell,
            d=self.d,
            beta=ctx.elem_coeffs(self.beta),
            beta_index=self.beta_index,
        )


class LMPTBParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    k: int
    eta: int

    @classmethod
    def build(cls, ctx: FieldCtx, eta: int | None = None) -> LMPTBParams:
        if ctx.ell % 2 == 0:
            raise InvalidParams(f"`ell`={ctx.ell} must be odd")
        if eta is None:
            eta = find_omega(ctx)
        elif eta == 0 or ctx.qpow(eta, 1) != ctx.neg(eta):
            raise InvalidParams(f"`eta`={ctx.elem_coeffs(eta)} must satisfy eta^q = -eta, eta != 0")
        return cls(k=(ctx.ell - 1) // 2, eta=int(eta))

    def descriptor(self, ctx: FieldCtx) -> FamilyDescriptor:
        return FamilyDescriptor(family="LMPTB", q=ctx.q, ell=ctx.ell)


# validity conditions


def kernel_witness(ctx: FieldCtx, ell: int, d: int) -> int | None:
    """Least nonzero a with a + a^(q^ell) = a + a^(q^d) = 0, if any."""
    if ell != ctx.ell:
        raise InvalidParams(f"`ell`={ell} does not match the field (ell={ctx.ell})")
    if not 0 < d < 2 * ell:
        raise InvalidParams(f"`d`={d} must satisfy 0 < d < 2*ell = {2 * ell}")
    xs = ctx.nonzero()
    neg = np.asarray(ctx.neg(xs))
    hits = xs[(np.asarray(ctx.qpow(xs, ell)) == neg) & (np.asarray(ctx.qpow(xs, d)) == neg)]
    return int(hits[0]) if hits.size else None


def kernels_intersect_trivially(ctx: FieldCtx, ell: int, d: int) -> bool:
    """Exhaustive scan for a common nonzero kernel element, cross-checked against the parity rule."""
    witness = kernel_witness(ctx, ell, d)
    trivial = witness is None
    if math.gcd(ell, d) == 1 and trivial != ((ell + d) % 2 == 1):
        raise VerificationFailed(
            f"kernel scan ({trivial}) disagrees with parity of ell + d for ({ell}, {d})"
        )
    logger.debug("kernels for (ell, d) = (%d, %d): trivial=%s witness=%s", ell, d, trivial, witness)
    return trivial


def beta_power_condition(ctx: FieldCtx, beta: int, ell: int, d: int) -> bool:
    """beta^((q^(2 ell) - 1) / gcd(q^ell + 1, q^d + 1)) != 1."""
    if beta == 0:
        raise ZeroInput("`beta` must be nonzero")
    q = ctx.q
    exponent = (q ** (2 * ell) - 1) // math.gcd(q**ell + 1, q**d + 1)
    holds = ctx.pow(beta, exponent) != 1
    admissible = ell == ctx.ell and math.gcd(ell, d) == 1 and (ell + d) % 2 == 1
    if admissible and holds == is_square(ctx, beta):
        raise VerificationFailed(f"power condition on `beta`={beta} disagrees with the nonsquare test")
    return bool(holds)


# the twisted-trace family


def bhb(ctx: FieldCtx, params: BHBParams, check: bool = True, verify: bool = True) -> Presemifield:
    """x*y = x y^(q^l) + x^(q^l) y + [beta (x y^(q^d) + x^(q^d) y) + (the same)^(q^l)] omega."""
    if check:
        params.check(ctx)
    L, D = _qi(ctx, ctx.ell), _qi(ctx, params.d)
    twisted = form_add(ctx, form_term(ctx, 1, 0, D), form_term(ctx, 1, D, 0))
    inner = form_scale(ctx, params.beta, twisted)
    bracket = form_add(ctx, inner, form_frob(ctx, inner, L))
    form = form_add(
        ctx, form_term(ctx, 1, 0, L), form_term(ctx, 1, L, 0), form_scale(ctx, params.omega, bracket)
    )
    S = from_form(ctx, form, f"BHB({ctx.q},{ctx.ell},{params.d})")
    if verify and check and not is_presemifield(S):
        raise VerificationFailed(f"{S.label} with admissible parameters is not a presemifield")
    return S


def bhb_transpose_formula(ctx: FieldCtx, params: BHBParams, verify: bool = True) -> Presemifield:
    """
    The transpose of `bhb` written out:
    (x + x^(q^l)) y^(q^l) + (beta omega)^(q^-d) (x^(q^-d) - x^(q^(l-d))) y^(q^-d)
    + beta omega (x - x^(q^l)) y^(q^d).
    """
    L, D = _qi(ctx, ctx.ell), _qi(ctx, params.d)
    bw = int(ctx.mul(params.beta, params.omega))
    c = int(ctx.frob(bw, -D))
    form = form_add(
        ctx,
        form_term(ctx, 1, 0, L),
        form_term(ctx, 1, L, L),
        form_term(ctx, c, -D % ctx.n, -D % ctx.n),
        form_term(ctx, ctx.neg(c), (L - D) % ctx.n, -D % ctx.n),
        form_term(ctx, bw, 0, D),
        form_term(ctx, ctx.neg(bw), L, D),
    )
    S = from_form(ctx, form, f"BHB({ctx.q},{ctx.ell},{params.d})^t")
    if verify and S != transpose(bhb(ctx, params)):
        raise VerificationFailed(f"{S.label} does not match the transpose of the family")
    return S


def decompose_omega(ctx: FieldCtx, y: Elem, omega: int | None = None) -> tuple[Elem, Elem]:
    """y = A + B omega with A, B in F_{q^ell}."""
    omega = find_omega(ctx) if omega is None else omega
    A = linpoly.evaluate(ctx, _trace_half(ctx), y)
    B = ctx.div(linpoly.evaluate(ctx, _antitrace(ctx), y), ctx.mul(2, omega))
    return A, B


def omega_split_maps(ctx: FieldCtx, omega: int) -> tuple[LinearizedMap, LinearizedMap]:
    """The maps y -> A and y -> B of `decompose_omega`."""
    B = linpoly.compose(ctx, linpoly.scalar(ctx, ctx.inv(ctx.mul(2, omega))), _antitrace(ctx))
    return _trace_half(ctx), B


def bhb_symplectic(ctx: FieldCtx, params: BHBParams, verify: bool = True) -> Presemifield:
    """
    x *' y = 2A x^(q^l) + 2 sigma (beta B)^(q^-d) x^(q^-d) + 2 sigma beta B x^(q^d), y = A + B omega.
    """
    L, D = _qi(ctx, ctx.ell), _qi(ctx, params.d)
    A, B = omega_split_maps(ctx, params.omega)
    two_sigma = int(ctx.mul(2, params.sigma))
    rows = {
        L: linpoly.scale(ctx, 2, A),
        -D: linpoly.compose(
            ctx,
            linpoly.scalar(ctx, ctx.mul(two_sigma, ctx.frob(params.beta, -D))),
            linpoly.frobenius(ctx, -D),
            B,
        ),
        D: linpoly.compose(ctx, linpoly.scalar(ctx, ctx.mul(two_sigma, params.beta)), B),
    }
    S = from_spread_form(ctx, rows, f"BHB({ctx.q},{ctx.ell},{params.d})^t*")
    if verify and S != ts(bhb(ctx, params)):
        raise VerificationFailed(f"{S.label} does not match the transpose-dual of the family")
    return S


# the LMPTB family


class GBounds(str, enum.Enum):
    """Lower bounds of the two sums in G."""

    VERBATIM = "verbatim"
    SECOND_FROM_ZERO = "second-from-zero"
    BOTH_FROM_ZERO = "both-from-zero"

    @property
    def starts(self) -> tuple[int, int]:
        return {
            GBounds.VERBATIM: (1, 1),
            GBounds.SECOND_FROM_ZERO: (1, 0),
            GBounds.BOTH_FROM_ZERO: (0, 0),
        }[self]


def g_map(ctx: FieldCtx, bounds: GBounds = GBounds.BOTH_FROM_ZERO) -> LinearizedMap:
    """G(w) = sum_i (-1)^i u^(q^(2i)) + sum_j (-1)^(k+j) u^(q^(2j+1)), u = w - w^(q^ell)."""
    k = (ctx.ell - 1) // 2
    i0, j0 = bounds.starts
    terms: dict[int, int] = {}
    for i in range(i0, k + 1):
        terms[2 * i] = _sign(ctx, i)
    for j in range(j0, k):
        terms[2 * j + 1] = _sign(ctx, k + j)
    return linpoly.compose(ctx, _qmap(ctx, terms), _antitrace(ctx))


def lmptb(
    ctx: FieldCtx,
    params: LMPTBParams,
    bounds: GBounds = GBounds.BOTH_FROM_ZERO,
    verify: bool = True,
) -> Presemifield:
    """x*y = (xy + x^(q^l) y^(q^l)) / 2 + G(x y^(q^2) + x^(q^2) y) / 4."""
    L, two = _qi(ctx, ctx.ell), _qi(ctx, 2)
    w = form_add(ctx, form_term(ctx, 1, 0, two), form_term(ctx, 1, two, 0))
    form = form_add(
        ctx,
        form_scale(ctx, ctx.half, form_add(ctx, form_term(ctx, 1, 0, 0), form_term(ctx, 1, L, L))),
        form_scale(ctx, ctx.quarter, form_apply(ctx, g_map(ctx, bounds), w)),
    )
    S = from_form(ctx, form, f"LMPTB({ctx.q},{ctx.ell})")
    if verify and not is_presemifield(S):
        raise VerificationFailed(f"{S.label} with G bounds `{bounds.value}` is not a presemifield")
    return S


def _check_subfield(ctx: FieldCtx, z: Elem, what: str) -> None:
    if not np.all(ctx.in_subfield(z, ctx.h * ctx.ell)):
        raise NotInSubfield(f"`{what}` is not in F_{{q^ell}}")


def phi_small(ctx: FieldCtx, gamma: Elem) -> Elem:
    """gamma -> gamma + gamma^(q^2) on F_{q^ell}."""
    _check_subfield(ctx, gamma, "gamma")
    return ctx.add(gamma, ctx.qpow(gamma, 2))


def phi_small_inv_map(ctx: FieldCtx) -> LinearizedMap:
    k = (ctx.ell - 1) // 2
    terms = {2 * i: _sign(ctx, i) for i in range(k + 1)}
    terms.update({2 * j + 1: _sign(ctx, k + j + 1) for j in range(k)})
    return linpoly.scale(ctx, ctx.half, _qmap(ctx, terms))


def phi_small_inv(ctx: FieldCtx, z: Elem) -> Elem:
    """(sum_i (-1)^i z^(q^(2i)) + sum_j (-1)^(k+j+1) z^(q^(2j+1))) / 2 on F_{q^ell}."""
    _check_subfield(ctx, z, "z")
    return linpoly.evaluate(ctx, phi_small_inv_map(ctx), z)


def eta_split_maps(ctx: FieldCtx, eta: int) -> tuple[LinearizedMap, LinearizedMap]:
    """The maps y -> A and y -> B with y = A + (B^(q^2) + B) eta."""
    scaled = linpoly.compose(ctx, linpoly.scalar(ctx, ctx.inv(ctx.mul(2, eta))), _antitrace(ctx))
    return _trace_half(ctx), linpoly.compose(ctx, phi_small_inv_map(ctx), scaled)


def decompose_lmptb(ctx: FieldCtx, params: LMPTBParams, y: Elem) -> tuple[Elem, Elem]:
    A = linpoly.evaluate(ctx, _trace_half(ctx), y)
    z = ctx.div(linpoly.evaluate(ctx, _antitrace(ctx), y), ctx.mul(2, params.eta))
    return A, phi_small_inv(ctx, z)


def _g_terms(ctx: FieldCtx) -> LinearizedMap:
    # g(y) = a_y + b_y + c_y, three alternating sums over odd and even q-powers
    k = (ctx.ell - 1) // 2
    terms: dict[int, int] = {}
    for i in range(1, ctx.ell):
        terms[2 * i] = ctx.add(terms.get(2 * i, 0), _sign(ctx, i + 1))
    for j in range(k):
        terms[2 * j + 1] = ctx.add(terms.get(2 * j + 1, 0), _sign(ctx, k + j + 1))
    for t in range(k + 1, ctx.ell):
        terms[2 * t + 1] = ctx.add(terms.get(2 * t + 1, 0), _sign(ctx, k + t))
    return _qmap(ctx, terms)


def f_map(ctx: FieldCtx) -> LinearizedMap:
    """y -> (y - y^(q^ell) + g(y)) / 4."""
    return linpoly.scale(ctx, ctx.quarter, linpoly.add(ctx, _antitrace(ctx), _g_terms(ctx)))


def g_of_y(ctx: FieldCtx, y: Elem) -> Elem:
    return linpoly.evaluate(ctx, _g_terms(ctx), y)


def f_of_y(ctx: FieldCtx, y: Elem) -> Elem:
    return linpoly.evaluate(ctx, f_map(ctx), y)


def b_explicit(ctx: FieldCtx, params: LMPTBParams, y: Elem) -> Elem:
    """B = (y - y^(q^ell) - g(y)) / (4 eta)."""
    num = ctx.sub(linpoly.evaluate(ctx, _antitrace(ctx), y), g_of_y(ctx, y))
    return ctx.div(num, ctx.mul(ctx.const(4), params.eta))


def lmptb_symplectic(
    ctx: FieldCtx,
    params: LMPTBParams,
    via: Literal["decomposition", "trace-sums"] = "decomposition",
    verify: bool = True,
) -> Presemifield:
    """
    x.y = A x + B^(q^2) eta x^(q^2) + B eta x^(q^-2), y = A + (B^(q^2) + B) eta.

    With via="trace-sums" the same multiplication is assembled from f(y) x^(q^2) + f(y)^(q^-2) x^(q^-2)
    instead of the decomposition.
    """
    two = _qi(ctx, 2)
    if via == "decomposition":
        A, B = eta_split_maps(ctx, params.eta)
        eta = linpoly.scalar(ctx, params.eta)
        rows = {
            0: A,
            two: linpoly.compose(ctx, eta, linpoly.frobenius(ctx, two), B),
            -two: linpoly.compose(ctx, eta, B),
        }
    else:
        f = f_map(ctx)
        f_back = linpoly.compose(ctx, linpoly.frobenius(ctx, -two), f)
        rows = {0: _trace_half(ctx), two: f, -two: f_back}
    S = from_spread_form(ctx, rows, f"LMPTB({ctx.q},{ctx.ell})^t*")
    if verify and S != ts(lmptb(ctx, params)):
        raise VerificationFailed(f"{S.label} does not match the transpose-dual of the family")
    return S


class GBoundsReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    q: int
    ell: int
    passing: dict[str, bool]
    chosen: str


def reconcile_g_bounds(ctx: FieldCtx, params: LMPTBParams | None = None) -> GBoundsReport:
    """Run the transpose-dual gate for every bound choice of G and report which ones pass."""
    params = params or LMPTBParams.build(ctx)
    target = lmptb_symplectic(ctx, params, verify=False)
    passing = {}
    for bounds in GBounds:
        S = lmptb(ctx, params, bounds, verify=False)
        passing[bounds.value] = is_presemifield(S) and ts(S, check=False) == target
        logger.info("G bounds %s at (%d, %d): %s", bounds.value, ctx.q, ctx.ell, passing[bounds.value])
    if not passing[GBounds.BOTH_FROM_ZERO.value]:
        raise VerificationFailed("default G bounds fail the transpose-dual gate")
    return GBoundsReport(q=ctx.q, ell=ctx.ell, passing=passing, chosen=GBounds.BOTH_FROM_ZERO.value)
