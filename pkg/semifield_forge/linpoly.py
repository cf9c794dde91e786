from __future__ import annotations

import functools
import logging
from collections.abc import Sequence
from typing import Any

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict

from .errors import InvalidParams, Singular
from .field_tower import Elem, ElemArray, FieldCtx, gf_inverse, gf_rank

__all__ = (
    "LinearizedMap",
    "identity",
    "zero",
    "scalar",
    "monomial",
    "frobenius",
    "add",
    "sub",
    "neg",
    "scale",
    "evaluate",
    "evaluate_many",
    "compose",
    "compose_many",
    "conjugate",
    "conjugate_many",
    "invert",
    "interpolate",
    "interpolate_many",
    "as_matrix",
    "as_matrices",
    "rank",
    "nonsingular_mask",
    "semilinear_type",
)

logger = logging.getLogger(__name__)


class LinearizedMap(BaseModel):
    """phi(x) = sum(coeffs[i] * x^(p^i)), reduced mod x^(p^n) - x."""

    model_config = ConfigDict(frozen=True)

    coeffs: tuple[int, ...]

    @property
    def n(self) -> int:
        return len(self.coeffs)

    @property
    def array(self) -> ElemArray:
        return np.array(self.coeffs, dtype=np.int64)

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def support(self) -> list[int]:
        return [i for i, c in enumerate(self.coeffs) if c]

    @classmethod
    def from_array(cls, coeffs: npt.ArrayLike) -> LinearizedMap:
        return cls(coeffs=tuple(int(c) for c in np.asarray(coeffs).ravel()))

    def to_json(self, ctx: FieldCtx) -> dict[str, Any]:
        return {"coeffs": [ctx.elem_coeffs(c) for c in self.coeffs]}

    @classmethod
    def from_json(cls, ctx: FieldCtx, data: dict[str, Any]) -> LinearizedMap:
        coeffs = data["coeffs"]
        if len(coeffs) != ctx.n:
            raise InvalidParams(f"map has {len(coeffs)} coefficients, field degree is {ctx.n}")
        return cls(coeffs=tuple(ctx.elem_from_coeffs(c) for c in coeffs))


def _check(ctx: FieldCtx, *maps: LinearizedMap) -> None:
    for phi in maps:
        if phi.n != ctx.n:
            raise InvalidParams(f"map of length {phi.n} used over a field of degree {ctx.n}")


def zero(ctx: FieldCtx) -> LinearizedMap:
    return LinearizedMap(coeffs=(0,) * ctx.n)


def monomial(ctx: FieldCtx, coeff: int, k: int) -> LinearizedMap:
    """x -> coeff * x^(p^k)."""
    coeffs = [0] * ctx.n
    coeffs[k % ctx.n] = int(coeff)
    return LinearizedMap(coeffs=tuple(coeffs))


def scalar(ctx: FieldCtx, lam: int) -> LinearizedMap:
    return monomial(ctx, lam, 0)


def identity(ctx: FieldCtx) -> LinearizedMap:
    return scalar(ctx, 1)


def frobenius(ctx: FieldCtx, k: int) -> LinearizedMap:
    return monomial(ctx, 1, k)


def add(ctx: FieldCtx, phi: LinearizedMap, *others: LinearizedMap) -> LinearizedMap:
    _check(ctx, phi, *others)
    return LinearizedMap.from_array(ctx.sum([phi.array] + [o.array for o in others]))


def sub(ctx: FieldCtx, phi: LinearizedMap, psi: LinearizedMap) -> LinearizedMap:
    _check(ctx, phi, psi)
    return LinearizedMap.from_array(ctx.sub(phi.array, psi.array))


def neg(ctx: FieldCtx, phi: LinearizedMap) -> LinearizedMap:
    return LinearizedMap.from_array(ctx.neg(phi.array))


def scale(ctx: FieldCtx, lam: int, phi: LinearizedMap) -> LinearizedMap:
    """x -> lam * phi(x)."""
    _check(ctx, phi)
    return LinearizedMap.from_array(ctx.mul(lam, phi.array))


def evaluate(ctx: FieldCtx, phi: LinearizedMap, x: Elem) -> Elem:
    _check(ctx, phi)
    terms = [ctx.mul(c, ctx.frob(x, i)) for i, c in enumerate(phi.coeffs) if c]
    return ctx.sum(terms or [np.zeros_like(np.asarray(x, dtype=np.int64))])


def evaluate_many(ctx: FieldCtx, coeffs: npt.ArrayLike, x: Elem) -> ElemArray:
    """Evaluate every map of a (B, n) coefficient array at every point of x; result (B, len(x))."""
    coeffs = np.asarray(coeffs, dtype=np.int64)
    xs = np.atleast_1d(np.asarray(x, dtype=np.int64))
    terms = [ctx.mul(coeffs[:, i, None], ctx.frob(xs, i)[None, :]) for i in range(ctx.n)]
    return np.asarray(ctx.sum(terms))


def compose_many(ctx: FieldCtx, left: npt.ArrayLike, right: npt.ArrayLike) -> ElemArray:
    """Coefficients of left o right for broadcastable (..., n) coefficient arrays."""
    # (sum_i a_i x^(p^i)) o (sum_j b_j x^(p^j)) = sum_(i,j) a_i b_j^(p^i) x^(p^(i+j))
    left = np.asarray(left, dtype=np.int64)
    right = np.asarray(right, dtype=np.int64)
    shape = np.broadcast_shapes(left.shape, right.shape)
    acc = np.zeros(shape + (ctx.n,), dtype=np.int64)
    for i in range(ctx.n):
        column = left[..., i : i + 1]
        if not np.any(column):
            continue
        term = np.roll(ctx.mul(column, ctx.frob(right, i)), i, axis=-1)
        acc += ctx.digits(np.broadcast_to(term, shape))
    return np.asarray(ctx.encode(acc))


def compose(ctx: FieldCtx, phi: LinearizedMap, *others: LinearizedMap) -> LinearizedMap:
    """phi o others[0] o others[1] o ..., read right to left."""
    _check(ctx, phi, *others)
    result = phi.array
    for psi in others:
        result = compose_many(ctx, result, psi.array)
    return LinearizedMap.from_array(result)


def conjugate_many(ctx: FieldCtx, coeffs: npt.ArrayLike) -> ElemArray:
    coeffs = np.asarray(coeffs, dtype=np.int64)
    out = np.zeros_like(coeffs)
    for i in range(ctx.n):
        j = (-i) % ctx.n
        out[..., j] = ctx.frob(coeffs[..., i], j)
    return out


def conjugate(ctx: FieldCtx, phi: LinearizedMap) -> LinearizedMap:
    """The adjoint of phi with respect to the trace form Tr(xy)."""
    _check(ctx, phi)
    return LinearizedMap.from_array(conjugate_many(ctx, phi.array))


def as_matrices(ctx: FieldCtx, coeffs: npt.ArrayLike) -> npt.NDArray[np.int64]:
    """F_p matrices of a (B, n) batch of maps; column j holds the digits of phi(e_j)."""
    values = evaluate_many(ctx, coeffs, ctx.basis())
    return np.swapaxes(ctx.digits(values).astype(np.int64), -1, -2)


def as_matrix(ctx: FieldCtx, phi: LinearizedMap) -> npt.NDArray[np.int64]:
    _check(ctx, phi)
    return as_matrices(ctx, phi.array[None, :])[0]


def rank(ctx: FieldCtx, phi: LinearizedMap) -> int:
    return gf_rank(as_matrix(ctx, phi), ctx.p)


@functools.lru_cache(maxsize=16)
def _dual_basis(ctx: FieldCtx) -> ElemArray:
    # trace-dual of the polynomial basis: Tr(e_j * dual_k) = [j == k]
    basis = ctx.basis()
    form = np.asarray(ctx.trace(ctx.mul(basis[:, None], basis[None, :])))
    return np.asarray(ctx.encode(gf_inverse(form, ctx.p).T))


def interpolate_many(ctx: FieldCtx, values: npt.ArrayLike) -> ElemArray:
    """Coefficients of the maps taking the values (B, n) on the polynomial basis."""
    # phi(x) = sum_j Tr(dual_j x) phi(e_j), so beta_i = sum_j phi(e_j) dual_j^(p^i)
    values = np.asarray(values, dtype=np.int64)
    dual = _dual_basis(ctx)
    twisted = np.stack([np.asarray(ctx.frob(dual, i)) for i in range(ctx.n)])
    return np.asarray(ctx.reduce_sum(ctx.mul(values[..., None, :], twisted), axis=-1))


def interpolate(ctx: FieldCtx, values: Sequence[int] | ElemArray) -> LinearizedMap:
    values = np.asarray(values, dtype=np.int64)
    if values.shape != (ctx.n,):
        raise InvalidParams(f"need {ctx.n} basis values, got shape {values.shape}")
    return LinearizedMap.from_array(interpolate_many(ctx, values))


def invert(ctx: FieldCtx, phi: LinearizedMap) -> LinearizedMap:
    try:
        inverse = gf_inverse(as_matrix(ctx, phi), ctx.p)
    except Singular:
        raise Singular(f"linearized map with support {phi.support()} is not invertible") from None
    return interpolate(ctx, ctx.encode(inverse.T))


def nonsingular_mask(mats: npt.ArrayLike, p: int) -> npt.NDArray[np.bool_]:
    """Batched Gaussian elimination over F_p: which (B, n, n) matrices are invertible."""
    a = np.array(mats, dtype=np.int64) % p
    count, n, _ = a.shape
    ok = np.ones(count, dtype=bool)
    inverses = np.array([0] + [pow(v, -1, p) for v in range(1, p)], dtype=np.int64)
    rows = np.arange(count)
    for c in range(n):
        nonzero = a[:, c:, c] != 0
        ok &= nonzero.any(axis=1)
        pivot = nonzero.argmax(axis=1) + c
        top = a[rows, pivot].copy()
        a[rows, pivot] = a[:, c].copy()
        a[:, c] = top
        a[:, c] = a[:, c] * inverses[a[:, c, c]][:, None] % p
        below = a[:, c + 1 :, c]
        a[:, c + 1 :] = (a[:, c + 1 :] - below[:, :, None] * a[:, None, c]) % p
    return ok


def semilinear_type(ctx: FieldCtx, L: LinearizedMap, degree: int) -> int | None:
    """
    Companion exponent e of L over the subfield F_{p^degree}: L(lam x) = lam^(p^e) L(x).

    Only a generator lam of the subfield is tested; the lam satisfying the identity for a fixed e
    are closed under products, so the generator decides it for the whole subfield.
    """
    _check(ctx, L)
    if rank(ctx, L) < ctx.n:
        raise Singular(f"semilinear type of a singular map with support {L.support()}")
    lam = ctx.subfield_generator(degree)
    left = compose(ctx, L, scalar(ctx, lam))
    for e in range(degree):
        if left == compose(ctx, scalar(ctx, ctx.frob(lam, e)), L):
            return e
    return None
