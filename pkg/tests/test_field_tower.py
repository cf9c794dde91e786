import numpy as np
import pytest

from semifield_forge.constructions import choose_beta_bar
from semifield_forge.errors import (
    InvalidParams,
    NotPrime,
    PreconditionFailed,
    ReducibleModulus,
    SizeBoundExceeded,
    ZeroInput,
)
from semifield_forge.field_tower import (
    TowerParams,
    find_omega,
    frob,
    gcd_identities,
    is_square,
    make_ctx,
    solve_power_eq,
)


def test_field_size(ctx33):
    assert ctx33.order == 729
    assert ctx33.n == 6
    assert ctx33.q == 3
    assert len(ctx33.modulus) == 7


def test_default_modulus_is_deterministic(ctx33):
    again = make_ctx(TowerParams(p=3, ell=3))
    assert again == ctx33
    assert again.generator == ctx33.generator
    assert again.describe() == ctx33.describe()


def test_explicit_modulus(ctx33):
    ctx = make_ctx(TowerParams(p=3, ell=3), modulus_override=list(ctx33.modulus))
    assert ctx == ctx33


def test_reducible_modulus():
    # x^6 - 1
    with pytest.raises(ReducibleModulus, match="reducible"):
        make_ctx(TowerParams(p=3, ell=3), modulus_override=[2, 0, 0, 0, 0, 0, 1])


def test_modulus_of_wrong_degree():
    with pytest.raises(InvalidParams, match="degree"):
        make_ctx(TowerParams(p=3, ell=3), modulus_override=[1, 0, 1])


def test_even_characteristic():
    with pytest.raises(NotPrime, match="`p`=2"):
        make_ctx(TowerParams(p=2, ell=3))
    with pytest.raises(NotPrime):
        make_ctx(TowerParams.from_q(4, 3))


def test_not_a_prime_power():
    with pytest.raises(InvalidParams, match="prime power"):
        TowerParams.from_q(6, 3)


def test_from_q():
    params = TowerParams.from_q(9, 3)
    assert (params.p, params.h, params.ell, params.n, params.q) == (3, 2, 3, 12, 9)


def test_size_bound():
    with pytest.raises(SizeBoundExceeded, match="exceeds bound"):
        make_ctx(TowerParams(p=3, ell=3), size_bound=2**8)


def test_size_bound_from_env(monkeypatch):
    monkeypatch.setenv("SEMIFIELD_FORGE_BOUND", "2**9")
    with pytest.raises(SizeBoundExceeded):
        make_ctx(TowerParams(p=3, ell=3))


def test_degree_pair_gate():
    with pytest.raises(InvalidParams, match="parity"):
        TowerParams(p=3, ell=3, d=1).check()
    with pytest.raises(InvalidParams, match="coprimality"):
        TowerParams(p=3, ell=3, d=3).check()
    with pytest.raises(InvalidParams, match="0 < d"):
        TowerParams(p=3, ell=3, d=6).check()
    TowerParams(p=3, ell=3, d=2).check()


def test_frob(ctx33, rng):
    xs = ctx33.random(rng, 100)
    assert np.array_equal(frob(ctx33, xs, 0), xs)
    for a, b in rng.integers(0, 12, size=(20, 2)):
        assert np.array_equal(frob(ctx33, frob(ctx33, xs, int(a)), int(b)), frob(ctx33, xs, int(a + b)))
    ys = ctx33.random(rng, 100)
    for k in range(ctx33.n):
        fx, fy = frob(ctx33, xs, k), frob(ctx33, ys, k)
        assert np.array_equal(frob(ctx33, ctx33.mul(xs, ys), k), ctx33.mul(fx, fy))
        assert np.array_equal(frob(ctx33, ctx33.add(xs, ys), k), ctx33.add(fx, fy))


def test_frob_fixes_subfield(ctx33):
    base = ctx33.subfield_elements(ctx33.h)
    assert np.array_equal(frob(ctx33, base, ctx33.h), base)


def test_subfield_sizes(ctx33, ctx53):
    for ctx in (ctx33, ctx53):
        xs = ctx.elements()
        for k in (1, 2, ctx.ell):
            assert np.count_nonzero(ctx.in_subfield(xs, ctx.h * k)) == ctx.q**k
            assert len(ctx.subfield_elements(ctx.h * k)) == ctx.q**k


def test_is_square(ctx33, rng):
    g = ctx33.generator
    assert not is_square(ctx33, g)
    assert is_square(ctx33, ctx33.mul(g, g))
    assert np.count_nonzero(~is_square(ctx33, ctx33.nonzero())) == 364
    x, y = ctx33.random(rng, 1000, nonzero=True), ctx33.random(rng, 1000, nonzero=True)
    assert np.array_equal(is_square(ctx33, ctx33.mul(x, y)), is_square(ctx33, x) == is_square(ctx33, y))


def test_is_square_of_zero(ctx33):
    with pytest.raises(ZeroInput):
        is_square(ctx33, 0)


def test_solve_power_eq_against_scan(ctx33, rng):
    xs = ctx33.nonzero()
    for k in (1, 2, 4, 26, 28, 242):
        for a in ctx33.random(rng, 10, nonzero=True):
            solutions = solve_power_eq(ctx33, k, int(a))
            expected = xs[np.asarray(ctx33.pow(xs, k)) == a]
            assert solutions == tuple(sorted(int(v) for v in expected))


def test_solve_power_eq_trivial(ctx33):
    assert solve_power_eq(ctx33, 1, 5) == (5,)
    with pytest.raises(ZeroInput):
        solve_power_eq(ctx33, 2, 0)
    with pytest.raises(InvalidParams):
        solve_power_eq(ctx33, 0, 1)


def test_xi_equation_has_q_minus_one_solutions(ctx33, ctx53):
    for ctx in (ctx33, ctx53):
        beta = ctx.generator
        Q = ctx.q**ctx.ell
        solutions = solve_power_eq(ctx, ctx.q ** (ctx.ell + 2) - 1, int(ctx.pow(beta, 1 - Q)))
        assert len(solutions) == ctx.q - 1


def test_no_strong_equation_is_empty(ctx33):
    beta_bar = choose_beta_bar(ctx33)
    rhs = int(ctx33.neg(ctx33.pow(beta_bar, ctx33.q - 1)))
    assert solve_power_eq(ctx33, 2 * 27 - 2, rhs) == ()


def test_find_omega(ctx33, ctx53):
    for ctx in (ctx33, ctx53):
        omega = find_omega(ctx)
        sigma = ctx.mul(omega, omega)
        assert ctx.add(ctx.qpow(omega, 1), omega) == 0
        assert ctx.add(ctx.qpow(omega, ctx.ell), omega) == 0
        assert not ctx.in_subfield(omega, ctx.h)
        assert ctx.in_subfield(omega, 2 * ctx.h)
        assert ctx.in_subfield(sigma, ctx.h)
        assert not ctx.is_square_in(sigma, ctx.h)
        assert find_omega(ctx) == omega


def test_find_omega_needs_odd_ell():
    ctx = make_ctx(TowerParams(p=3, ell=2))
    with pytest.raises(PreconditionFailed):
        find_omega(ctx)


def test_gcd_identities():
    assert gcd_identities(3, 3, 2) == (2, 2)
    assert gcd_identities(5, 3, 2) == (4, 2)
    assert gcd_identities(3, 5, 2) == (2, 2)
    with pytest.raises(PreconditionFailed):
        gcd_identities(3, 3, 1)


def test_elem_json(ctx33):
    coeffs = ctx33.elem_coeffs(ctx33.generator)
    assert len(coeffs) == 6
    assert all(0 <= c < 3 for c in coeffs)
    assert ctx33.elem_from_coeffs(coeffs) == ctx33.generator
    desc = ctx33.describe()
    assert desc.p == 3 and desc.ell == 3 and desc.modulus == list(ctx33.modulus)
