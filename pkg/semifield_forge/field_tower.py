from __future__ import annotations

import functools
import logging
import math
from collections.abc import Sequence
from typing import Any, NamedTuple, Union

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict
from sympy import GF, factorint, isprime, perfect_power
from sympy.polys.domains import ZZ
from sympy.polys.galoistools import gf_irreducible_p
from sympy.polys.matrices import DomainMatrix
from sympy.polys.matrices.exceptions import DMNonInvertibleMatrixError

from .config import get_settings
from .errors import (
    InvalidParams,
    NotPrime,
    PreconditionFailed,
    ReducibleModulus,
    Singular,
    SizeBoundExceeded,
    VerificationFailed,
    ZeroInput,
)

__all__ = (
    "TowerParams",
    "FieldCtx",
    "FieldDescriptor",
    "ElemArray",
    "Elem",
    "make_ctx",
    "frob",
    "is_square",
    "solve_power_eq",
    "find_omega",
    "gcd_identities",
    "check_degree_pair",
    "gf_rank",
    "gf_inverse",
)

logger = logging.getLogger(__name__)

ElemArray = npt.NDArray[np.int64]
Elem = Union[int, ElemArray]

_EXP_BLOCK = 1024


class TowerParams(BaseModel):
    model_config = ConfigDict(frozen=True)

    p: int
    h: int = 1
    ell: int
    d: int | None = None

    @property
    def q(self) -> int:
        return self.p**self.h

    @property
    def n(self) -> int:
        return 2 * self.h * self.ell

    @property
    def order(self) -> int:
        return self.p**self.n

    @classmethod
    def from_q(cls, q: int, ell: int, d: int | None = None) -> TowerParams:
        if q < 2:
            raise InvalidParams(f"`q`={q} is not a prime power")
        if isprime(q):
            p, h = q, 1
        else:
            power = perfect_power(q)
            if not power or not isprime(power[0]):
                raise InvalidParams(f"`q`={q} is not a prime power")
            p, h = int(power[0]), int(power[1])
        return cls(p=p, h=h, ell=ell, d=d)

    def check(self) -> None:
        if self.p == 2 or not isprime(self.p):
            raise NotPrime(f"`p`={self.p} must be an odd prime")
        if self.h < 1:
            raise InvalidParams(f"`h`={self.h} must be positive")
        if self.ell < 2:
            raise InvalidParams(f"`ell`={self.ell} must be greater than 1")
        if self.d is not None:
            check_degree_pair(self.ell, self.d)


def check_degree_pair(ell: int, d: int) -> None:
    """Gate for the pair (ell, d) of the twisted-trace family."""
    if not 0 < d < 2 * ell:
        raise InvalidParams(f"`d`={d} must satisfy 0 < d < 2*ell = {2 * ell}")
    if math.gcd(ell, d) != 1:
        raise InvalidParams(f"`d`={d} violates the coprimality condition gcd(ell, d) = 1 (ell={ell})")
    if (ell + d) % 2 == 0:
        raise InvalidParams(
            f"`d`={d} violates the parity condition: ell + d must be odd (ell={ell}), "
            "otherwise the two kernels share a nonzero element"
        )


class FieldDescriptor(BaseModel):
    model_config = ConfigDict(frozen=True)

    p: int
    h: int
    ell: int
    d: int | None = None
    modulus: list[int]
    generator: list[int]


class _Tables(NamedTuple):
    modulus: tuple[int, ...]
    generator: int
    exp: ElemArray
    log: ElemArray
    digits: npt.NDArray[np.int16]
    powers: ElemArray


class FieldCtx:
    """
    Arithmetic of F_{p^n}, n = 2*h*ell, with the tower F_p < F_q < F_{q^2}, F_{q^ell} < F_{q^(2 ell)}.

    An element c_0 + c_1 x + ... + c_{n-1} x^{n-1} of F_p[x]/(m) is encoded as the integer
    sum(c_i p^i). All operations accept ints or integer numpy arrays and broadcast; a scalar input
    gives an int back.
    """

    def __init__(self, params: TowerParams, tables: _Tables) -> None:
        self.params = params
        self.p = params.p
        self.h = params.h
        self.ell = params.ell
        self.n = params.n
        self.q = params.q
        self.order = params.order
        self.modulus = tables.modulus
        self.generator = tables.generator
        self._m = self.order - 1
        self._exp = tables.exp
        self._log = tables.log
        self._digits = tables.digits
        self._powers = tables.powers

    def __repr__(self) -> str:
        return f"FieldCtx(p={self.p}, h={self.h}, ell={self.ell}, modulus={list(self.modulus)})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FieldCtx):
            return NotImplemented
        return (self.p, self.n, self.modulus, self.h) == (other.p, other.n, other.modulus, other.h)

    def __hash__(self) -> int:
        return hash((self.p, self.n, self.h, self.modulus))

    # encoding

    def digits(self, a: Elem) -> npt.NDArray[np.int16]:
        return self._digits[np.asarray(a, dtype=np.int64)]

    def encode(self, digits: npt.ArrayLike) -> Elem:
        return _unbox(np.asarray(digits, dtype=np.int64) % self.p @ self._powers)

    def elem_coeffs(self, a: int) -> list[int]:
        return [int(c) for c in self._digits[int(a)]]

    def elem_from_coeffs(self, coeffs: Sequence[int]) -> int:
        if len(coeffs) > self.n:
            raise InvalidParams(f"element has {len(coeffs)} coefficients, field degree is {self.n}")
        padded = list(coeffs) + [0] * (self.n - len(coeffs))
        return int(self.encode(padded))

    def basis(self) -> ElemArray:
        return self._powers.copy()

    def elements(self) -> ElemArray:
        return np.arange(self.order, dtype=np.int64)

    def nonzero(self) -> ElemArray:
        return np.arange(1, self.order, dtype=np.int64)

    def power_order(self) -> ElemArray:
        """All elements, 0 first and then g^0, g^1, ... for reproducible scans."""
        return np.concatenate([np.zeros(1, dtype=np.int64), self._exp])

    def random(self, rng: np.random.Generator, size: int, nonzero: bool = False) -> ElemArray:
        low = 1 if nonzero else 0
        return rng.integers(low, self.order, size=size, dtype=np.int64)

    def const(self, c: int) -> int:
        return c % self.p

    @functools.cached_property
    def half(self) -> int:
        return pow(2, -1, self.p)

    @functools.cached_property
    def quarter(self) -> int:
        return pow(4, -1, self.p)

    # arithmetic

    def add(self, a: Elem, b: Elem) -> Elem:
        return self.encode(self.digits(a) + self.digits(b))

    def sub(self, a: Elem, b: Elem) -> Elem:
        return self.encode(self.digits(a) - self.digits(b))

    def neg(self, a: Elem) -> Elem:
        return self.encode(-self.digits(a))

    def sum(self, terms: Sequence[Elem]) -> Elem:
        acc = np.zeros(np.broadcast_shapes(*(np.shape(t) for t in terms)) + (self.n,), dtype=np.int64)
        for t in terms:
            acc = acc + self.digits(t)
        return self.encode(acc)

    def reduce_sum(self, a: Elem, axis: int) -> Elem:
        """Field sum of an element array along `axis`."""
        a_ = np.asarray(a, dtype=np.int64)
        axis = axis if axis >= 0 else a_.ndim + axis
        return self.encode(self.digits(a_).astype(np.int64).sum(axis=axis))

    def mul(self, a: Elem, b: Elem) -> Elem:
        a_, b_ = np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)
        r = self._exp[(self._log[a_] + self._log[b_]) % self._m]
        return _unbox(np.where((a_ == 0) | (b_ == 0), 0, r))

    def inv(self, a: Elem) -> Elem:
        a_ = np.asarray(a, dtype=np.int64)
        if np.any(a_ == 0):
            raise ZeroInput("`0` has no multiplicative inverse")
        return _unbox(self._exp[(-self._log[a_]) % self._m])

    def div(self, a: Elem, b: Elem) -> Elem:
        return self.mul(a, self.inv(b))

    def pow(self, a: Elem, e: int) -> Elem:
        a_ = np.asarray(a, dtype=np.int64)
        if e < 0 and np.any(a_ == 0):
            raise ZeroInput("`0` raised to a negative power")
        r = self._exp[(self._log[a_] * (e % self._m)) % self._m]
        zero = 1 if e == 0 else 0
        return _unbox(np.where(a_ == 0, zero, r))

    def frob(self, a: Elem, k: int) -> Elem:
        """a^(p^k), k taken mod n."""
        return self.pow(a, pow(self.p, k % self.n, self._m))

    def qpow(self, a: Elem, k: int) -> Elem:
        """a^(q^k)."""
        return self.frob(a, self.h * k)

    def trace(self, a: Elem) -> Elem:
        """Absolute trace to F_p; the result is the F_p element's code."""
        return self.sum([self.frob(a, i) for i in range(self.n)])

    def log(self, a: Elem) -> Elem:
        a_ = np.asarray(a, dtype=np.int64)
        if np.any(a_ == 0):
            raise ZeroInput("`0` has no discrete logarithm")
        return _unbox(self._log[a_])

    def exp(self, k: Elem) -> Elem:
        return _unbox(self._exp[np.asarray(k, dtype=np.int64) % self._m])

    # subfields

    def in_subfield(self, a: Elem, degree: int) -> bool | npt.NDArray[np.bool_]:
        """Membership in F_{p^degree}; degree must divide n."""
        self._check_subfield_degree(degree)
        r = np.asarray(self.frob(a, degree)) == np.asarray(a)
        return bool(r) if r.ndim == 0 else r

    def subfield_elements(self, degree: int) -> ElemArray:
        self._check_subfield_degree(degree)
        stride = self._m // (self.p**degree - 1)
        return np.sort(np.concatenate([np.zeros(1, dtype=np.int64), self._exp[::stride]]))

    def subfield_generator(self, degree: int) -> int:
        self._check_subfield_degree(degree)
        return int(self._exp[self._m // (self.p**degree - 1)])

    def is_square_in(self, a: int, degree: int) -> bool:
        """Quadratic character inside the subfield F_{p^degree} that contains `a`."""
        if a == 0:
            raise ZeroInput("`0` has no quadratic character")
        if not self.in_subfield(a, degree):
            raise PreconditionFailed(f"element {a} is not in the subfield of degree {degree}")
        stride = self._m // (self.p**degree - 1)
        return (int(self._log[a]) // stride) % 2 == 0

    def _check_subfield_degree(self, degree: int) -> None:
        if degree <= 0 or self.n % degree:
            raise InvalidParams(f"`degree`={degree} does not divide n={self.n}")

    # serialization

    def describe(self) -> FieldDescriptor:
        return FieldDescriptor(
            p=self.p,
            h=self.h,
            ell=self.ell,
            d=self.params.d,
            modulus=list(self.modulus),
            generator=self.elem_coeffs(self.generator),
        )


def _unbox(r: Any) -> Any:
    r = np.asarray(r)
    return int(r) if r.ndim == 0 else r


# F_p linear algebra


def _domain_matrix(matrix: npt.ArrayLike, p: int) -> DomainMatrix:
    rows = np.asarray(matrix, dtype=np.int64) % p
    domain = GF(p)
    return DomainMatrix([[domain(int(v)) for v in row] for row in rows], rows.shape, domain)


def gf_rank(matrix: npt.ArrayLike, p: int) -> int:
    return int(_domain_matrix(matrix, p).rank())


def gf_inverse(matrix: npt.ArrayLike, p: int) -> npt.NDArray[np.int64]:
    try:
        inverse = _domain_matrix(matrix, p).inv()
    except (DMNonInvertibleMatrixError, ZeroDivisionError) as exc:
        raise Singular("matrix over F_p is not invertible") from exc
    return np.array([[int(v) % p for v in row] for row in inverse.to_Matrix().tolist()], dtype=np.int64)


# construction


def _companion(modulus: Sequence[int], p: int) -> npt.NDArray[np.int64]:
    n = len(modulus) - 1
    c = np.zeros((n, n), dtype=np.int64)
    c[np.arange(1, n), np.arange(n - 1)] = 1
    c[:, n - 1] = [(-v) % p for v in modulus[:n]]
    return c


def _mat_pow(mat: npt.NDArray[np.int64], e: int, p: int) -> npt.NDArray[np.int64]:
    result = np.eye(mat.shape[0], dtype=np.int64)
    base = mat % p
    while e:
        if e & 1:
            result = result @ base % p
        base = base @ base % p
        e >>= 1
    return result


def _is_irreducible(modulus: Sequence[int], p: int) -> bool:
    return bool(gf_irreducible_p([int(c) for c in reversed(modulus)], p, ZZ))


def _default_modulus(p: int, n: int) -> tuple[int, ...]:
    # least monic irreducible in the order of the little-endian code c_0 + c_1 p + ...
    for code in range(1, p**n):
        coeffs = [(code // p**i) % p for i in range(n)]
        if coeffs[0] == 0:
            continue
        if _is_irreducible(coeffs + [1], p):
            return tuple(coeffs + [1])
    raise VerificationFailed(f"no irreducible polynomial of degree {n} over F_{p}")  # pragma: no cover


def _normalize_modulus(coeffs: Sequence[int], p: int, n: int) -> tuple[int, ...]:
    coeffs = [int(c) % p for c in coeffs]
    while coeffs and coeffs[-1] == 0:
        coeffs.pop()
    if len(coeffs) != n + 1:
        raise InvalidParams(f"modulus must have degree {n}, got degree {len(coeffs) - 1}")
    lead = pow(coeffs[-1], -1, p)
    return tuple(c * lead % p for c in coeffs)


@functools.lru_cache(maxsize=16)
def _build_tables(p: int, n: int, modulus: tuple[int, ...]) -> _Tables:
    order = p**n
    m = order - 1
    powers = np.array([p**i for i in range(n)], dtype=np.int64)
    companion = _companion(modulus, p)
    x_powers = [np.eye(n, dtype=np.int64)]
    for _ in range(n - 1):
        x_powers.append(companion @ x_powers[-1] % p)

    primes = list(factorint(m))
    for candidate in range(2, order):
        coeffs = [(candidate // p**i) % p for i in range(n)]
        mat = sum(c * xp for c, xp in zip(coeffs, x_powers)) % p
        if all(not np.array_equal(_mat_pow(mat, m // r, p), x_powers[0]) for r in primes):
            generator, gen_mat = candidate, mat
            break
    else:  # pragma: no cover
        raise VerificationFailed("multiplicative group has no generator")

    width = min(_EXP_BLOCK, m)
    block = np.zeros((n, width), dtype=np.int64)
    v = np.zeros(n, dtype=np.int64)
    v[0] = 1
    for j in range(width):
        block[:, j] = v
        v = gen_mat @ v % p
    step = _mat_pow(gen_mat, width, p)
    exp = np.empty(m, dtype=np.int64)
    for start in range(0, m, width):
        count = min(width, m - start)
        exp[start : start + count] = powers @ block[:, :count]
        block = step @ block % p

    log = np.zeros(order, dtype=np.int64)
    log[exp] = np.arange(m, dtype=np.int64)
    if np.unique(exp).size != m:
        raise VerificationFailed(f"generator {generator} does not have order {m}")

    digits = ((np.arange(order, dtype=np.int64)[:, None] // powers) % p).astype(np.int16)
    logger.debug("built tables for F_%d^%d, modulus %s, generator %d", p, n, modulus, generator)
    return _Tables(modulus, generator, exp, log, digits, powers)


def make_ctx(
    params: TowerParams,
    modulus_override: Sequence[int] | None = None,
    size_bound: int | None = None,
) -> FieldCtx:
    params.check()
    bound = size_bound if size_bound is not None else get_settings().size_bound
    if params.order > bound:
        raise SizeBoundExceeded(
            f"field order {params.p}^{params.n} = {params.order} exceeds bound {bound}"
        )
    if modulus_override is not None:
        modulus = _normalize_modulus(modulus_override, params.p, params.n)
        if not _is_irreducible(modulus, params.p):
            raise ReducibleModulus(f"`modulus`={list(modulus)} is reducible over F_{params.p}")
    else:
        modulus = _default_modulus(params.p, params.n)
    ctx = FieldCtx(params, _build_tables(params.p, params.n, modulus))
    logger.info("field F_%d^%d ready (%d elements)", params.p, params.n, params.order)
    return ctx


# field-level operations


def frob(ctx: FieldCtx, x: Elem, k: int) -> Elem:
    return ctx.frob(x, k)


def is_square(ctx: FieldCtx, x: Elem) -> bool | npt.NDArray[np.bool_]:
    logs = np.asarray(ctx.log(x))
    r = logs % 2 == 0
    return bool(r) if r.ndim == 0 else r


def solve_power_eq(ctx: FieldCtx, k: int, a: int) -> tuple[int, ...]:
    """All x with x^k = a, by discrete log to the fixed generator."""
    if k < 1:
        raise InvalidParams(f"`k`={k} must be positive")
    if a == 0:
        raise ZeroInput("power equation with right-hand side `0`")
    m = ctx.order - 1
    target = int(ctx.log(a))
    g = math.gcd(k, m)
    if target % g:
        return ()
    mg = m // g
    t0 = (target // g) * pow((k // g) % mg, -1, mg) % mg if mg > 1 else 0
    logs = t0 + mg * np.arange(g, dtype=np.int64)
    return tuple(sorted(int(v) for v in ctx.exp(logs)))


def find_omega(ctx: FieldCtx) -> int:
    """Least element of F_{q^2} with omega^q = -omega; its square is a nonsquare of F_q."""
    if ctx.ell % 2 == 0:
        raise PreconditionFailed(f"`ell`={ctx.ell} must be odd")
    candidates = ctx.subfield_elements(2 * ctx.h)[1:]
    hits = candidates[np.asarray(ctx.qpow(candidates, 1)) == np.asarray(ctx.neg(candidates))]
    if hits.size == 0:  # pragma: no cover
        raise VerificationFailed("no omega in F_{q^2} with omega^q = -omega")
    omega = int(hits[0])
    sigma = int(ctx.mul(omega, omega))
    if not ctx.in_subfield(sigma, ctx.h) or ctx.is_square_in(sigma, ctx.h):
        raise VerificationFailed(f"omega^2 = {sigma} is not a nonsquare of F_q")
    return omega


def gcd_identities(q: int, ell: int, d: int) -> tuple[int, int]:
    if (ell + d) % 2 == 0 or math.gcd(ell, d) != 1:
        raise PreconditionFailed(f"(ell, d) = ({ell}, {d}) needs ell + d odd and gcd(ell, d) = 1")
    g1 = math.gcd(q ** (2 * ell) - 1, q ** (ell + d) - 1)
    g2 = math.gcd(q**ell + 1, q**d + 1)
    if g1 != q - 1 or g2 != 2:
        raise VerificationFailed(f"gcd identities failed for q={q}, ell={ell}, d={d}: ({g1}, {g2})")
    return g1, g2
