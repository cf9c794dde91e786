import numpy as np
import pytest

from semifield_forge import linpoly
from semifield_forge.errors import InvalidParams, Singular
from semifield_forge.linpoly import LinearizedMap


def random_invertible(ctx, rng, count):
    out = []
    while len(out) < count:
        coeffs = ctx.random(rng, ctx.n)
        phi = LinearizedMap.from_array(coeffs)
        if linpoly.rank(ctx, phi) == ctx.n:
            out.append(phi)
    return out


def test_identity_and_zero(ctx33, rng):
    xs = ctx33.random(rng, 50)
    assert np.array_equal(linpoly.evaluate(ctx33, linpoly.identity(ctx33), xs), xs)
    assert not np.any(linpoly.evaluate(ctx33, linpoly.zero(ctx33), xs))
    assert linpoly.identity(ctx33).coeffs == (1, 0, 0, 0, 0, 0)


def test_evaluate_is_additive(ctx33, rng):
    phi = LinearizedMap.from_array(ctx33.random(rng, ctx33.n))
    x, y = ctx33.random(rng, 100), ctx33.random(rng, 100)
    lhs = linpoly.evaluate(ctx33, phi, ctx33.add(x, y))
    rhs = ctx33.add(linpoly.evaluate(ctx33, phi, x), linpoly.evaluate(ctx33, phi, y))
    assert np.array_equal(lhs, rhs)


def test_compose(ctx33):
    frob = linpoly.frobenius(ctx33, 1)
    assert linpoly.compose(ctx33, frob, frob) == linpoly.frobenius(ctx33, 2)
    assert linpoly.compose(ctx33, linpoly.frobenius(ctx33, 4), linpoly.frobenius(ctx33, 5)) == frob
    assert linpoly.compose(ctx33, linpoly.identity(ctx33), frob) == frob


def test_compose_pointwise(ctx33, rng):
    xs = ctx33.elements()
    for _ in range(5):
        phi = LinearizedMap.from_array(ctx33.random(rng, ctx33.n))
        psi = LinearizedMap.from_array(ctx33.random(rng, ctx33.n))
        composed = linpoly.evaluate(ctx33, linpoly.compose(ctx33, phi, psi), xs)
        assert np.array_equal(composed, linpoly.evaluate(ctx33, phi, linpoly.evaluate(ctx33, psi, xs)))


def test_compose_is_associative(ctx33, rng):
    maps = [LinearizedMap.from_array(ctx33.random(rng, ctx33.n)) for _ in range(30)]
    for a, b, c in zip(maps[::3], maps[1::3], maps[2::3]):
        left = linpoly.compose(ctx33, linpoly.compose(ctx33, a, b), c)
        assert left == linpoly.compose(ctx33, a, linpoly.compose(ctx33, b, c))
        assert left == linpoly.compose(ctx33, a, b, c)


def test_conjugate(ctx33, rng):
    beta = int(ctx33.random(rng, 1, nonzero=True)[0])
    for i in range(ctx33.n):
        expected = linpoly.monomial(ctx33, ctx33.frob(beta, -i), -i)
        assert linpoly.conjugate(ctx33, linpoly.monomial(ctx33, beta, i)) == expected
    scalar = linpoly.scalar(ctx33, beta)
    assert linpoly.conjugate(ctx33, scalar) == scalar


def test_conjugate_involution_and_additivity(ctx33, rng):
    for _ in range(100):
        phi = LinearizedMap.from_array(ctx33.random(rng, ctx33.n))
        psi = LinearizedMap.from_array(ctx33.random(rng, ctx33.n))
        assert linpoly.conjugate(ctx33, linpoly.conjugate(ctx33, phi)) == phi
        lhs = linpoly.conjugate(ctx33, linpoly.add(ctx33, phi, psi))
        assert lhs == linpoly.add(ctx33, linpoly.conjugate(ctx33, phi), linpoly.conjugate(ctx33, psi))


def test_conjugate_is_trace_adjoint(ctx33, rng):
    phi = LinearizedMap.from_array(ctx33.random(rng, ctx33.n))
    x, y = ctx33.random(rng, 200), ctx33.random(rng, 200)
    lhs = ctx33.trace(ctx33.mul(linpoly.evaluate(ctx33, phi, x), y))
    rhs = ctx33.trace(ctx33.mul(x, linpoly.evaluate(ctx33, linpoly.conjugate(ctx33, phi), y)))
    assert np.array_equal(lhs, rhs)


def test_conjugation_identities(ctx33, rng):
    maps = random_invertible(ctx33, rng, 200)
    for phi, psi in zip(maps[::2], maps[1::2]):
        conj = linpoly.conjugate
        assert conj(ctx33, linpoly.compose(ctx33, phi, psi)) == linpoly.compose(
            ctx33, conj(ctx33, psi), conj(ctx33, phi)
        )
        assert conj(ctx33, linpoly.invert(ctx33, phi)) == linpoly.invert(ctx33, conj(ctx33, phi))


def test_invert(ctx33, rng):
    identity = linpoly.identity(ctx33)
    assert linpoly.invert(ctx33, identity) == identity
    assert linpoly.invert(ctx33, linpoly.frobenius(ctx33, 1)) == linpoly.frobenius(ctx33, ctx33.n - 1)
    for phi in random_invertible(ctx33, rng, 20):
        inverse = linpoly.invert(ctx33, phi)
        assert linpoly.compose(ctx33, phi, inverse) == identity
        assert linpoly.compose(ctx33, inverse, phi) == identity


def test_invert_singular(ctx33):
    # x + x^(q^ell) kills every a with a^(q^ell) = -a
    trace_like = linpoly.add(ctx33, linpoly.identity(ctx33), linpoly.frobenius(ctx33, 3))
    with pytest.raises(Singular):
        linpoly.invert(ctx33, trace_like)
    with pytest.raises(Singular):
        linpoly.invert(ctx33, linpoly.zero(ctx33))


def test_as_matrix(ctx33, rng):
    assert np.array_equal(linpoly.as_matrix(ctx33, linpoly.identity(ctx33)), np.eye(6, dtype=np.int64))
    assert linpoly.rank(ctx33, linpoly.zero(ctx33)) == 0
    for _ in range(20):
        phi = LinearizedMap.from_array(ctx33.random(rng, ctx33.n))
        psi = LinearizedMap.from_array(ctx33.random(rng, ctx33.n))
        product = linpoly.as_matrix(ctx33, phi) @ linpoly.as_matrix(ctx33, psi) % 3
        assert np.array_equal(linpoly.as_matrix(ctx33, linpoly.compose(ctx33, phi, psi)), product)


def test_nonsingular_mask_matches_rank(ctx33, rng):
    coeffs = ctx33.random(rng, 300 * ctx33.n).reshape(300, ctx33.n)
    mask = linpoly.nonsingular_mask(linpoly.as_matrices(ctx33, coeffs), 3)
    ranks = [linpoly.rank(ctx33, LinearizedMap.from_array(row)) == 6 for row in coeffs]
    assert mask.tolist() == ranks


def test_interpolate(ctx33, rng):
    phi = LinearizedMap.from_array(ctx33.random(rng, ctx33.n))
    values = linpoly.evaluate(ctx33, phi, ctx33.basis())
    assert linpoly.interpolate(ctx33, values) == phi
    with pytest.raises(InvalidParams):
        linpoly.interpolate(ctx33, [1, 2])


def test_semilinear_type(ctx33, rng):
    assert linpoly.semilinear_type(ctx33, linpoly.frobenius(ctx33, 1), 2) == 1
    assert linpoly.semilinear_type(ctx33, linpoly.frobenius(ctx33, 2), 2) == 0
    assert linpoly.semilinear_type(ctx33, linpoly.frobenius(ctx33, 1), 6) == 1
    phi = linpoly.monomial(ctx33, ctx33.generator, 2)
    assert linpoly.semilinear_type(ctx33, phi, 2) == 0
    with pytest.raises(Singular):
        linpoly.semilinear_type(ctx33, linpoly.zero(ctx33), 2)


def test_mixed_map_is_not_semilinear(ctx33):
    # x^p - g x has no kernel since g is a nonsquare
    phi = linpoly.sub(ctx33, linpoly.frobenius(ctx33, 1), linpoly.scalar(ctx33, ctx33.generator))
    assert linpoly.rank(ctx33, phi) == 6
    assert linpoly.semilinear_type(ctx33, phi, 6) is None


def test_json_round_trip(ctx33, rng):
    phi = LinearizedMap.from_array(ctx33.random(rng, ctx33.n))
    assert LinearizedMap.from_json(ctx33, phi.to_json(ctx33)) == phi
    with pytest.raises(InvalidParams):
        LinearizedMap.from_json(ctx33, {"coeffs": [[1]]})


def test_length_mismatch(ctx33):
    with pytest.raises(InvalidParams):
        linpoly.compose(ctx33, linpoly.identity(ctx33), LinearizedMap(coeffs=(1, 0, 0)))
