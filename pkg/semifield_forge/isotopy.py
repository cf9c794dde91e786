from __future__ import annotations

import logging
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict

from . import linpoly
from .errors import NotPresemifield, Singular, VerificationFailed
from .field_tower import ElemArray, FieldCtx
from .linpoly import LinearizedMap
from .presemifield import (
    Presemifield,
    SpreadSet,
    dual,
    is_presemifield,
    linearity_degree,
    multiplication_table,
    postcompose,
    precompose,
    spread_coeffs,
    spread_set,
    transpose,
    ts,
)

__all__ = (
    "Status",
    "IsotopismTriple",
    "StrongCheck",
    "NucleiReport",
    "SemilinearityReport",
    "KnuthOrbitEntry",
    "verify_isotopism",
    "induce_n",
    "dual_transform",
    "transpose_transform",
    "ts_transform",
    "ts_inverse_transform",
    "compose_triples",
    "frobenius_twist",
    "strong_check",
    "nuclei",
    "semilinearity_constraint",
    "knuth_orbit",
)

logger = logging.getLogger(__name__)

Status = Literal["unverified", "verified", "refuted"]

_CHUNK = 2048


class IsotopismTriple(BaseModel):
    """(M, N, L) with M(x) * N(y) = L(x . y), S1 = (F, +, .) and S2 = (F, +, *)."""

    model_config = ConfigDict(frozen=True)

    M: LinearizedMap
    N: LinearizedMap
    L: LinearizedMap
    source: str = ""
    target: str = ""
    status: Status = "unverified"
    witness: tuple[int, int] | None = None

    @property
    def is_strong(self) -> bool:
        return self.M == self.N

    def between(self, source: Presemifield, target: Presemifield) -> IsotopismTriple:
        return self.model_copy(
            update={
                "source": source.label,
                "target": target.label,
                "status": "unverified",
                "witness": None,
            }
        )

    def to_json(self, ctx: FieldCtx) -> dict[str, Any]:
        return {
            "M": self.M.to_json(ctx),
            "N": self.N.to_json(ctx),
            "L": self.L.to_json(ctx),
            "source": self.source,
            "target": self.target,
            "status": self.status,
            "strong": self.is_strong,
            "witness": list(self.witness) if self.witness is not None else None,
        }


class StrongCheck(BaseModel):
    model_config = ConfigDict(frozen=True)

    H: LinearizedMap
    status: Status
    witness: int | None = None


class NucleiReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    left: int
    middle: int
    right: int


class SemilinearityReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    degree: int
    exponent: int


class KnuthOrbitEntry(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    label: str
    linearity_degree: int
    nuclei: NucleiReport


def _require_invertible(ctx: FieldCtx, name: str, phi: LinearizedMap) -> None:
    if linpoly.rank(ctx, phi) < ctx.n:
        raise Singular(f"`{name}` with support {phi.support()} is not invertible")


def _conjugated_rows(
    ctx: FieldCtx, maps: ElemArray, left: LinearizedMap, right: LinearizedMap
) -> ElemArray:
    """left o phi o right for every row phi."""
    inner = linpoly.compose_many(ctx, maps, right.array[None, :])
    return linpoly.compose_many(ctx, left.array[None, :], inner)


def _first_in_power_order(ctx: FieldCtx, failing: np.ndarray) -> int | None:
    order = ctx.power_order()
    hits = order[failing[order]]
    return int(hits[0]) if hits.size else None


def _witness_x(S1: Presemifield, S2: Presemifield, triple: IsotopismTriple, y: int) -> int:
    ctx = S1.ctx
    xs = ctx.power_order()
    lhs = linpoly.evaluate(ctx, triple.L, _products(S1, xs, y))
    rhs = _products(S2, linpoly.evaluate(ctx, triple.M, xs), linpoly.evaluate(ctx, triple.N, y))
    bad = np.flatnonzero(np.asarray(lhs) != np.asarray(rhs))
    if not bad.size:  # pragma: no cover
        raise VerificationFailed(f"no x witnesses the failure at y={y}")
    return int(xs[bad[0]])


def _products(S: Presemifield, xs: ElemArray, y: int) -> ElemArray:
    """x . y for every x in xs."""
    row = spread_coeffs(S, int(y))
    return linpoly.evaluate_many(S.ctx, row[None, :], xs)[0]


def verify_isotopism(
    S1: Presemifield,
    S2: Presemifield,
    triple: IsotopismTriple,
    method: Literal["spread", "pairs"] = "spread",
) -> IsotopismTriple:
    """
    Decide whether `triple` is an isotopism from S1 to S2.

    The spread route checks L o phi_y o M^-1 = phi'_N(y) for every y; the pairs route checks
    M(x) * N(y) = L(x . y) on the full grid and needs the field within the table bound. A refuted
    triple carries the first failing (x, y) in generator-power order.
    """
    ctx = S1.ctx
    for name in ("M", "N", "L"):
        _require_invertible(ctx, name, getattr(triple, name))
    ys = ctx.elements()
    if method == "spread":
        M_inv = linpoly.invert(ctx, triple.M)
        mapped = _conjugated_rows(ctx, spread_coeffs(S1, ys), triple.L, M_inv)
        expected = spread_coeffs(S2, linpoly.evaluate(ctx, triple.N, ys))
        failing = np.any(mapped != expected, axis=1)
        y = _first_in_power_order(ctx, failing)
        witness = None if y is None else (_witness_x(S1, S2, triple, y), y)
    else:
        t1 = multiplication_table(S1)
        t2 = multiplication_table(S2)
        Mx = np.asarray(linpoly.evaluate(ctx, triple.M, ys))
        Ny = np.asarray(linpoly.evaluate(ctx, triple.N, ys))
        lhs = t2[Mx][:, Ny]
        rhs = np.asarray(linpoly.evaluate(ctx, triple.L, t1))
        order = ctx.power_order()
        diff = (lhs != rhs)[order][:, order]
        # first failing y, then first failing x for it
        cols = np.flatnonzero(diff.any(axis=0))
        if cols.size:
            y_pos = int(cols[0])
            x_pos = int(np.flatnonzero(diff[:, y_pos])[0])
            witness = (int(order[x_pos]), int(order[y_pos]))
        else:
            witness = None
    status: Status = "verified" if witness is None else "refuted"
    logger.info("isotopism %s -> %s (%s): %s", S1.label, S2.label, method, status)
    return triple.model_copy(
        update={"source": S1.label, "target": S2.label, "status": status, "witness": witness}
    )


def induce_n(
    S1: Presemifield, S2: Presemifield, M: LinearizedMap, L: LinearizedMap
) -> LinearizedMap | None:
    """The N with phi'_N(y) = L o phi_y o M^-1, when every such map lies in the spread set of S2."""
    ctx = S1.ctx
    _require_invertible(ctx, "L", L)
    M_inv = linpoly.invert(ctx, M)
    ys = ctx.elements()
    mapped = _conjugated_rows(ctx, spread_coeffs(S1, ys), L, M_inv)
    images = spread_set(S2).lookup(mapped)
    if np.any(images < 0):
        return None
    N = linpoly.interpolate(ctx, images[ctx.basis()])
    if not np.array_equal(np.asarray(linpoly.evaluate(ctx, N, ys)), images):
        raise VerificationFailed("induced correspondence y -> N(y) is not additive")
    if np.unique(images).size != ctx.order:
        raise VerificationFailed("induced correspondence y -> N(y) is not a bijection")
    return N


# transforms of isotopisms under the Knuth-type operations


def dual_transform(triple: IsotopismTriple) -> IsotopismTriple:
    """(N, M, L) between the duals."""
    return IsotopismTriple(
        M=triple.N,
        N=triple.M,
        L=triple.L,
        source=_mark(triple.source, "*"),
        target=_mark(triple.target, "*"),
    )


def transpose_transform(ctx: FieldCtx, triple: IsotopismTriple) -> IsotopismTriple:
    """(conj(L)^-1, N, conj(M)^-1) between the transposes."""
    return IsotopismTriple(
        M=linpoly.invert(ctx, linpoly.conjugate(ctx, triple.L)),
        N=triple.N,
        L=linpoly.invert(ctx, linpoly.conjugate(ctx, triple.M)),
        source=_mark(triple.source, "^t"),
        target=_mark(triple.target, "^t"),
    )


def ts_transform(ctx: FieldCtx, triple: IsotopismTriple) -> IsotopismTriple:
    """(N, conj(L)^-1, conj(M)^-1) between the transpose-duals."""
    return dual_transform(transpose_transform(ctx, triple))


def ts_inverse_transform(ctx: FieldCtx, triple: IsotopismTriple) -> IsotopismTriple:
    """Undo `ts_transform`: from (M', N', L') between S1^t*, S2^t* to (conj(L')^-1, M', conj(N')^-1)."""
    return IsotopismTriple(
        M=linpoly.invert(ctx, linpoly.conjugate(ctx, triple.L)),
        N=triple.M,
        L=linpoly.invert(ctx, linpoly.conjugate(ctx, triple.N)),
        source=_unmark(triple.source, "^t*"),
        target=_unmark(triple.target, "^t*"),
    )


def compose_triples(ctx: FieldCtx, first: IsotopismTriple, second: IsotopismTriple) -> IsotopismTriple:
    """S1 -> S2 followed by S2 -> S3."""
    return IsotopismTriple(
        M=linpoly.compose(ctx, second.M, first.M),
        N=linpoly.compose(ctx, second.N, first.N),
        L=linpoly.compose(ctx, second.L, first.L),
        source=first.source,
        target=second.target,
    )


def frobenius_twist(S: Presemifield, k: int = 1) -> tuple[Presemifield, IsotopismTriple]:
    """
    F(S(F^-1 x, F^-1 y)) with F = x^(p^k), and the verified triple (F, F, F) onto it.

    The twist has the same coefficient support as S, so both share a linearity degree and the
    triple is p^k-semilinear over every subfield.
    """
    ctx = S.ctx
    F = linpoly.frobenius(ctx, k)
    F_inv = linpoly.frobenius(ctx, -k)
    twisted = postcompose(precompose(S, M=F_inv, N=F_inv), F).relabel(_mark(S.label, f"^(p^{k})"))
    triple = verify_isotopism(S, twisted, IsotopismTriple(M=F, N=F, L=F))
    if triple.status != "verified":
        raise VerificationFailed(f"Frobenius twist refuted at {triple.witness}")
    return twisted, triple


def _mark(label: str, mark: str) -> str:
    return f"{label}{mark}" if label else ""


def _unmark(label: str, mark: str) -> str:
    return label[: -len(mark)] if label.endswith(mark) else label


# strong isotopy, nuclei, semilinearity


def strong_check(S1: Presemifield, S2: Presemifield, H: LinearizedMap) -> StrongCheck:
    """H T1 conj(H) = T2 for the spread sets T of the transpose-duals."""
    ctx = S1.ctx
    _require_invertible(ctx, "H", H)
    T1 = spread_set(ts(S1))
    T2 = spread_set(ts(S2))
    mapped = _conjugated_rows(ctx, T1.maps, H, linpoly.conjugate(ctx, H))
    missing = T2.lookup(mapped) < 0
    y = _first_in_power_order(ctx, missing)
    if y is None and SpreadSet(ctx, mapped) != T2:  # pragma: no cover
        raise VerificationFailed("conjugated spread set is contained in but not equal to the target")
    status: Status = "verified" if y is None else "refuted"
    logger.info("strong check %s -> %s: %s", S1.label, S2.label, status)
    return StrongCheck(H=H, status=status, witness=y)


def _nucleus_order(T: SpreadSet, side: Literal["middle", "right"]) -> int:
    ctx = T.ctx
    basis_maps = T.maps[ctx.basis()]
    psi0_inv = linpoly.invert(ctx, T.map_for(1)).array
    count = 0
    for start in range(0, len(T.maps), _CHUNK):
        block = T.maps[start : start + _CHUNK]
        if side == "middle":
            # S o phi in S, phi = psi0^-1 o psi
            cands = linpoly.compose_many(ctx, psi0_inv[None, :], block)
            products = linpoly.compose_many(ctx, basis_maps[None, :, :], cands[:, None, :])
        else:
            # phi o S in S, phi = psi o psi0^-1
            cands = linpoly.compose_many(ctx, block, psi0_inv[None, :])
            products = linpoly.compose_many(ctx, cands[:, None, :], basis_maps[None, :, :])
        found = T.lookup(products.reshape(-1, ctx.n)).reshape(len(block), ctx.n) >= 0
        count += int(found.all(axis=1).sum())
    if not _is_power_of(count, ctx.p):
        raise VerificationFailed(f"{side} nucleus has {count} elements, not a power of p")
    return count


def _is_power_of(count: int, p: int) -> bool:
    while count > 1 and count % p == 0:
        count //= p
    return count == 1


def nuclei(S: Presemifield) -> NucleiReport:
    """Orders of the left, middle and right nuclei."""
    if not is_presemifield(S):
        raise NotPresemifield(f"nuclei of `{S.label or 'S'}`, which is not a presemifield")
    T = spread_set(S)
    report = NucleiReport(
        left=_nucleus_order(spread_set(dual(S)), "right"),
        middle=_nucleus_order(T, "middle"),
        right=_nucleus_order(T, "right"),
    )
    logger.info("nuclei of %s: %s", S.label, report)
    return report


def semilinearity_constraint(
    S1: Presemifield, S2: Presemifield, triple: IsotopismTriple
) -> SemilinearityReport:
    """Shared companion exponent of M and L over the finest subfield both spread sets are linear on."""
    if triple.status != "verified":
        raise VerificationFailed("semilinearity constraint needs a verified isotopism")
    ctx = S1.ctx
    degree = int(np.gcd(linearity_degree(S1), linearity_degree(S2)))
    e_M = linpoly.semilinear_type(ctx, triple.M, degree)
    e_L = linpoly.semilinear_type(ctx, triple.L, degree)
    if e_M is None or e_M != e_L:
        raise VerificationFailed(
            f"M and L are not semilinear with a common companion (e_M={e_M}, e_L={e_L})"
        )
    return SemilinearityReport(degree=degree, exponent=e_M)


def knuth_orbit(S: Presemifield) -> list[KnuthOrbitEntry]:
    """The six presemifields S, S*, S^t, S^t*, S^*t, S^t*t with their nuclei."""
    St = transpose(S)
    members = {
        "S": S,
        "S*": dual(S),
        "S^t": St,
        "S^t*": dual(St),
        "S^*t": transpose(dual(S)),
        "S^t*t": transpose(dual(St)),
    }
    return [
        KnuthOrbitEntry(
            name=name, label=T.label, linearity_degree=linearity_degree(T), nuclei=nuclei(T)
        )
        for name, T in members.items()
    ]
