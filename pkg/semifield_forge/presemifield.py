from __future__ import annotations

import logging
from collections.abc import Mapping
from typing import Any, Literal

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, PrivateAttr

from . import linpoly
from .config import get_settings
from .errors import (
    InvalidParams,
    NotCommutative,
    NotPlanar,
    NotPresemifield,
    SizeBoundExceeded,
    VerificationFailed,
)
from .field_tower import Elem, ElemArray, FieldCtx
from .linpoly import LinearizedMap

__all__ = (
    "Presemifield",
    "SpreadSet",
    "DOPolynomial",
    "form_term",
    "form_add",
    "form_scale",
    "form_frob",
    "form_apply",
    "from_form",
    "from_spread_form",
    "field_presemifield",
    "multiply",
    "spread_coeffs",
    "spread_set",
    "spread_set_dual",
    "is_presemifield",
    "is_commutative",
    "linearity_degree",
    "dual",
    "transpose",
    "ts",
    "precompose",
    "postcompose",
    "multiplication_table",
    "do_monomial",
    "evaluate_do",
    "from_planar_do",
    "to_planar_do",
    "is_planar",
)

logger = logging.getLogger(__name__)

_CHUNK = 8192

Form = npt.NDArray[np.int64]


class Presemifield(BaseModel):
    """x * y = sum(coeff[i][j] * x^(p^i) * y^(p^j)), with a cached validity flag."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    ctx: FieldCtx
    coeff: tuple[tuple[int, ...], ...]
    label: str = ""

    _valid: bool | None = PrivateAttr(default=None)

    @property
    def matrix(self) -> Form:
        return np.array(self.coeff, dtype=np.int64)

    @classmethod
    def from_matrix(cls, ctx: FieldCtx, matrix: npt.ArrayLike, label: str = "") -> Presemifield:
        matrix = np.asarray(matrix, dtype=np.int64)
        if matrix.shape != (ctx.n, ctx.n):
            raise InvalidParams(
                f"coefficient matrix has shape {matrix.shape}, expected {(ctx.n, ctx.n)}"
            )
        return cls(ctx=ctx, coeff=tuple(tuple(int(v) for v in row) for row in matrix), label=label)

    def relabel(self, label: str) -> Presemifield:
        return self.model_copy(update={"label": label})

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Presemifield):
            return NotImplemented
        return self.ctx == other.ctx and self.coeff == other.coeff

    def __hash__(self) -> int:
        return hash((self.ctx, self.coeff))

    def to_json(self) -> dict[str, Any]:
        return {
            "field": self.ctx.describe().model_dump(),
            "coeff": [[self.ctx.elem_coeffs(v) for v in row] for row in self.coeff],
            "label": self.label,
        }


class SpreadSet:
    """The maps phi_y, row y of `maps` holding the coefficients of phi_y."""

    def __init__(self, ctx: FieldCtx, maps: ElemArray, label: str = "") -> None:
        self.ctx = ctx
        self.maps = np.ascontiguousarray(maps, dtype=np.int64)
        self.label = label
        self._canonical: ElemArray | None = None
        self._index: dict[bytes, int] | None = None

    @property
    def canonical(self) -> ElemArray:
        if self._canonical is None:
            self._canonical = np.unique(self.maps, axis=0)
        return self._canonical

    def __len__(self) -> int:
        return int(self.canonical.shape[0])

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SpreadSet):
            return NotImplemented
        return self.ctx == other.ctx and np.array_equal(self.canonical, other.canonical)

    __hash__ = None  # type: ignore[assignment]

    def map_for(self, y: int) -> LinearizedMap:
        return LinearizedMap.from_array(self.maps[int(y)])

    def lookup(self, rows: npt.ArrayLike) -> ElemArray:
        """For each coefficient row, the y with phi_y equal to it, or -1."""
        if self._index is None:
            self._index = {row.tobytes(): y for y, row in enumerate(self.maps)}
        rows = np.ascontiguousarray(np.atleast_2d(rows), dtype=np.int64)
        index = self._index
        return np.array([index.get(row.tobytes(), -1) for row in rows], dtype=np.int64)

    def contains(self, rows: npt.ArrayLike) -> npt.NDArray[np.bool_]:
        return self.lookup(rows) >= 0

    def is_additive(self) -> bool:
        """phi_y + phi_z = phi_(y+z), checked on y against a basis of z."""
        ctx = self.ctx
        ys = ctx.elements()
        for e in ctx.basis():
            lhs = ctx.add(self.maps[ys], self.maps[e][None, :])
            if not np.array_equal(lhs, self.maps[np.asarray(ctx.add(ys, e))]):
                return False
        return True

    def to_json(self) -> list[dict[str, Any]]:
        return [LinearizedMap.from_array(row).to_json(self.ctx) for row in self.canonical]


# bilinear forms as n x n element arrays


def form_term(ctx: FieldCtx, c: int, i: int, j: int) -> Form:
    """c * x^(p^i) * y^(p^j)."""
    form = np.zeros((ctx.n, ctx.n), dtype=np.int64)
    form[i % ctx.n, j % ctx.n] = c
    return form


def form_add(ctx: FieldCtx, *forms: Form) -> Form:
    return np.asarray(ctx.sum(list(forms)))


def form_scale(ctx: FieldCtx, c: int, form: Form) -> Form:
    return np.asarray(ctx.mul(c, form))


def form_frob(ctx: FieldCtx, form: Form, k: int) -> Form:
    """The form raised to the p^k-th power."""
    twisted = np.asarray(ctx.frob(form, k))
    return np.roll(np.roll(twisted, k, axis=0), k, axis=1)


def form_apply(ctx: FieldCtx, G: LinearizedMap, form: Form) -> Form:
    """G(F(x, y)) for a linearized G."""
    terms = [form_scale(ctx, c, form_frob(ctx, form, i)) for i, c in enumerate(G.coeffs) if c]
    return form_add(ctx, *terms) if terms else np.zeros_like(form)


def from_form(ctx: FieldCtx, form: Form, label: str = "") -> Presemifield:
    return Presemifield.from_matrix(ctx, form, label)


def from_spread_form(ctx: FieldCtx, maps: Mapping[int, LinearizedMap], label: str = "") -> Presemifield:
    """The presemifield x * y = sum_i x^(p^i) * maps[i](y)."""
    rows: dict[int, list[Elem]] = {}
    for i, L in maps.items():
        rows.setdefault(i % ctx.n, []).append(L.array)
    form = np.zeros((ctx.n, ctx.n), dtype=np.int64)
    for i, parts in rows.items():
        form[i] = ctx.sum(parts)
    return Presemifield.from_matrix(ctx, form, label)


def field_presemifield(ctx: FieldCtx) -> Presemifield:
    return Presemifield.from_matrix(ctx, form_term(ctx, 1, 0, 0), "field")


# evaluation


def spread_coeffs(S: Presemifield, y: Elem) -> ElemArray:
    """Coefficients c_i(y) of phi_y(x) = sum_i c_i(y) x^(p^i); shape y.shape + (n,)."""
    ctx = S.ctx
    a = S.matrix
    y_powers = [ctx.frob(y, j) for j in range(ctx.n)]
    columns = []
    for i in range(ctx.n):
        terms = [ctx.mul(int(a[i, j]), y_powers[j]) for j in range(ctx.n) if a[i, j]]
        columns.append(ctx.sum(terms) if terms else np.zeros_like(np.asarray(y, dtype=np.int64)))
    return np.stack([np.asarray(c) for c in columns], axis=-1)


def multiply(S: Presemifield, x: Elem, y: Elem) -> Elem:
    ctx = S.ctx
    cy = spread_coeffs(S, y)
    return ctx.sum([ctx.mul(cy[..., i], ctx.frob(x, i)) for i in range(ctx.n)])


def spread_set(S: Presemifield) -> SpreadSet:
    return SpreadSet(S.ctx, spread_coeffs(S, S.ctx.elements()), S.label)


def spread_set_dual(S: Presemifield) -> SpreadSet:
    return spread_set(dual(S))


def multiplication_table(S: Presemifield, bound: int | None = None) -> ElemArray:
    """table[x, y] = x * y; only for fields within the table bound."""
    ctx = S.ctx
    bound = bound if bound is not None else get_settings().table_bound
    if ctx.order > bound:
        raise SizeBoundExceeded(f"multiplication table of order {ctx.order} exceeds bound {bound}")
    by_y = linpoly.evaluate_many(ctx, spread_coeffs(S, ctx.elements()), ctx.elements())
    return np.ascontiguousarray(by_y.T)


# validity


def _all_nonzero_invertible(S: Presemifield) -> bool:
    # phi_y is F_p-linear in y, so its matrix is sum_k digit_k(y) * matrix(phi_(e_k))
    ctx = S.ctx
    basis_mats = linpoly.as_matrices(ctx, spread_coeffs(S, ctx.basis()))
    ys = ctx.nonzero()
    for start in range(0, ys.size, _CHUNK):
        chunk = ys[start : start + _CHUNK]
        digits = ctx.digits(chunk).astype(np.int64)
        mats = np.einsum("yk,kab->yab", digits, basis_mats) % ctx.p
        bad = ~linpoly.nonsingular_mask(mats, ctx.p)
        if bad.any():
            logger.debug("%s: phi_y singular at y=%d", S.label or "presemifield", int(chunk[bad][0]))
            return False
    return True


def is_commutative(S: Presemifield, exhaustive: bool = False) -> bool:
    symmetric = bool(np.array_equal(S.matrix, S.matrix.T))
    if not exhaustive:
        return symmetric
    table = multiplication_table(S)
    return bool(np.array_equal(table, table.T))


def is_presemifield(S: Presemifield) -> bool:
    """Every nonzero phi_y and every nonzero phi^x is invertible."""
    if S._valid is None:
        valid = _all_nonzero_invertible(S)
        if valid and not is_commutative(S):
            valid = _all_nonzero_invertible(dual(S))
        # single idempotent write
        S._valid = valid
        logger.debug("%s: presemifield check %s", S.label or "presemifield", valid)
    return S._valid


def linearity_degree(S: Presemifield) -> int:
    """Largest m such that every spread map is F_{p^m}-linear."""
    rows = [i for i in range(S.ctx.n) if any(S.coeff[i])]
    return int(np.gcd.reduce(np.array([S.ctx.n] + rows, dtype=np.int64)))


# Knuth-type operations


def _suffix(label: str, mark: str) -> str:
    return f"{label}{mark}" if label else ""


def dual(S: Presemifield) -> Presemifield:
    """x *' y = y * x."""
    return Presemifield.from_matrix(S.ctx, S.matrix.T, _suffix(S.label, "*"))


def transpose(S: Presemifield, check: bool = True) -> Presemifield:
    """The presemifield with spread maps conjugate(phi_y)."""
    if check and not is_presemifield(S):
        raise NotPresemifield(f"transpose of `{S.label or 'S'}`, which is not a presemifield")
    ctx = S.ctx
    a = S.matrix
    out = np.zeros_like(a)
    for i in range(ctx.n):
        k = (-i) % ctx.n
        # conj(a_ij x^(p^i) y^(p^j)) = a_ij^(p^-i) x^(p^-i) y^(p^(j-i))
        out[k] = np.roll(np.asarray(ctx.frob(a[i], k)), -i)
    return Presemifield.from_matrix(ctx, out, _suffix(S.label, "^t"))


def ts(S: Presemifield, check: bool = True) -> Presemifield:
    return dual(transpose(S, check=check))


def precompose(
    S: Presemifield, M: LinearizedMap | None = None, N: LinearizedMap | None = None
) -> Presemifield:
    """x *' y = M(x) * N(y)."""
    ctx = S.ctx
    a = S.matrix
    if N is not None:
        a = linpoly.compose_many(ctx, a, N.array[None, :])
    if M is not None:
        a = linpoly.compose_many(ctx, a.T, M.array[None, :]).T
    return Presemifield.from_matrix(ctx, a, S.label)


def postcompose(S: Presemifield, L: LinearizedMap) -> Presemifield:
    """x *' y = L(x * y)."""
    return Presemifield.from_matrix(S.ctx, form_apply(S.ctx, L, S.matrix), S.label)


# planar DO polynomials


class DOPolynomial(BaseModel):
    """f(x) = sum(coeff[i][j] * x^(p^i + p^j)) over all ordered pairs, coeff symmetric."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    ctx: FieldCtx
    coeff: tuple[tuple[int, ...], ...]
    label: str = ""

    @property
    def matrix(self) -> Form:
        return np.array(self.coeff, dtype=np.int64)

    @classmethod
    def from_matrix(cls, ctx: FieldCtx, matrix: npt.ArrayLike, label: str = "") -> DOPolynomial:
        matrix = np.asarray(matrix, dtype=np.int64)
        if matrix.shape != (ctx.n, ctx.n):
            raise InvalidParams(
                f"coefficient matrix has shape {matrix.shape}, expected {(ctx.n, ctx.n)}"
            )
        if not np.array_equal(matrix, matrix.T):
            raise InvalidParams("DO coefficient matrix must be symmetric")
        return cls(ctx=ctx, coeff=tuple(tuple(int(v) for v in row) for row in matrix), label=label)


def do_monomial(ctx: FieldCtx, i: int, j: int, c: int = 1) -> DOPolynomial:
    """c * x^(p^i + p^j)."""
    form = np.zeros((ctx.n, ctx.n), dtype=np.int64)
    i, j = i % ctx.n, j % ctx.n
    if i == j:
        form[i, i] = c
    else:
        half = ctx.mul(c, ctx.half)
        form[i, j] = form[j, i] = half
    return DOPolynomial.from_matrix(ctx, form, f"x^(p^{i}+p^{j})")


def evaluate_do(f: DOPolynomial, x: Elem) -> Elem:
    return multiply(Presemifield(ctx=f.ctx, coeff=f.coeff), x, x)


def from_planar_do(f: DOPolynomial, check: bool = False) -> Presemifield:
    """x * y = f(x + y) - f(x) - f(y), i.e. coefficients 2 a_ij."""
    ctx = f.ctx
    S = Presemifield.from_matrix(ctx, ctx.mul(2, f.matrix), f.label)
    if check and not is_planar(f):
        raise NotPlanar(f"`{f.label or 'f'}` is not planar")
    return S


def to_planar_do(S: Presemifield) -> DOPolynomial:
    """f(x) = (x * x) / 2."""
    if not is_commutative(S):
        raise NotCommutative(f"`{S.label or 'S'}` is not commutative")
    ctx = S.ctx
    return DOPolynomial.from_matrix(ctx, ctx.mul(ctx.half, S.matrix), S.label)


def _planar_by_scan(f: DOPolynomial) -> bool:
    ctx = f.ctx
    bound = get_settings().table_bound
    if ctx.order > bound:
        raise SizeBoundExceeded(f"difference-map scan of order {ctx.order} exceeds bound {bound}")
    xs = ctx.elements()
    values = np.asarray(evaluate_do(f, xs))
    for a in ctx.nonzero():
        diff = ctx.sub(ctx.sub(values[np.asarray(ctx.add(xs, a))], values), values[a])
        if np.unique(diff).size != ctx.order:
            return False
    return True


def is_planar(f: DOPolynomial, method: Literal["spread", "scan", "both"] = "spread") -> bool:
    """Every difference map x -> f(x + a) - f(x) - f(a), a != 0, is a bijection."""
    if method == "scan":
        return _planar_by_scan(f)
    by_spread = is_presemifield(from_planar_do(f))
    if method == "both":
        by_scan = _planar_by_scan(f)
        if by_scan != by_spread:
            raise VerificationFailed(
                f"planarity routes disagree on `{f.label}`: {by_scan} vs {by_spread}"
            )
    return by_spread
