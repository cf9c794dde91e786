import pytest

from semifield_forge import linpoly
from semifield_forge.constructions import (
    commutative_isotopism,
    strong_isotopism_map,
    symplectic_isotopism,
)
from semifield_forge.errors import NotPresemifield, Singular, VerificationFailed
from semifield_forge.families import LMPTBParams, lmptb
from semifield_forge.isotopy import (
    IsotopismTriple,
    compose_triples,
    dual_transform,
    frobenius_twist,
    induce_n,
    knuth_orbit,
    nuclei,
    semilinearity_constraint,
    strong_check,
    transpose_transform,
    ts_inverse_transform,
    ts_transform,
    verify_isotopism,
)
from semifield_forge.presemifield import (
    dual,
    field_presemifield,
    from_form,
    form_add,
    form_term,
    linearity_degree,
    multiply,
    transpose,
    ts,
)


@pytest.fixture(scope="module")
def commutative33(ctx33):
    return commutative_isotopism(ctx33)


def test_spread_and_pairs_routes_agree(commutative33):
    P, B, triple = commutative33
    assert triple.status == "verified"
    assert triple.source == P.label and triple.target == B.label
    assert verify_isotopism(P, B, triple, method="pairs").status == "verified"


def test_refuted_triple_carries_witness(ctx33, commutative33):
    P, B, triple = commutative33
    bad = IsotopismTriple(M=linpoly.scale(ctx33, 2, triple.M), N=triple.N, L=triple.L)
    spread = verify_isotopism(P, B, bad)
    pairs = verify_isotopism(P, B, bad, method="pairs")
    assert spread.status == pairs.status == "refuted"
    assert spread.witness == pairs.witness
    x, y = spread.witness
    lhs = multiply(B, linpoly.evaluate(ctx33, bad.M, x), linpoly.evaluate(ctx33, bad.N, y))
    assert lhs != linpoly.evaluate(ctx33, bad.L, multiply(P, x, y))


def test_singular_component_is_rejected(ctx33, commutative33):
    P, B, triple = commutative33
    singular = linpoly.sub(ctx33, linpoly.identity(ctx33), linpoly.frobenius(ctx33, 1))
    with pytest.raises(Singular, match="`N`"):
        verify_isotopism(P, B, triple.model_copy(update={"N": singular}))


def test_induce_n(ctx33, commutative33, lmptb33):
    P, B, triple = commutative33
    assert induce_n(P, B, triple.M, triple.L) == triple.N
    doubled = induce_n(P, B, triple.M, linpoly.scale(ctx33, 2, triple.L))
    assert doubled == linpoly.scale(ctx33, 2, triple.N)
    identity = linpoly.identity(ctx33)
    assert induce_n(lmptb33, field_presemifield(ctx33), identity, identity) is None


def test_knuth_transforms(ctx33, commutative33):
    P, B, triple = commutative33
    assert verify_isotopism(dual(P), dual(B), dual_transform(triple)).status == "verified"
    transposed = transpose_transform(ctx33, triple)
    assert verify_isotopism(transpose(P), transpose(B), transposed).status == "verified"
    moved = ts_transform(ctx33, triple)
    assert moved.target == B.label + "^t*"
    assert verify_isotopism(ts(P), ts(B), moved).status == "verified"
    back = ts_inverse_transform(ctx33, moved)
    assert (back.M, back.N, back.L) == (triple.M, triple.N, triple.L)
    assert back.source == P.label


def test_symplectic_triple_maps_back(ctx33, commutative33):
    P, B, triple = commutative33
    symplectic = symplectic_isotopism(ctx33)
    back = ts_inverse_transform(ctx33, symplectic.triple)
    assert (back.M, back.N, back.L) == (triple.M, triple.N, triple.L)


def test_compose_triples(ctx33, commutative33):
    P, B, triple = commutative33
    two = linpoly.scalar(ctx33, 2)
    rescale = verify_isotopism(B, B, IsotopismTriple(M=two, N=linpoly.identity(ctx33), L=two))
    assert rescale.status == "verified"
    composed = compose_triples(ctx33, triple, rescale)
    assert (composed.source, composed.target) == (P.label, B.label)
    assert verify_isotopism(P, B, composed).status == "verified"


def test_strong_check(ctx33, ctx53, lmptb33, bhb33):
    refuted = strong_check(lmptb33, bhb33, linpoly.identity(ctx33))
    assert refuted.status == "refuted"
    assert refuted.witness is not None
    assert strong_isotopism_map(ctx53).check.status == "verified"
    assert strong_check(lmptb33, lmptb33, linpoly.identity(ctx33)).status == "verified"


def test_nuclei(ctx33, lmptb33, bhb33):
    report = nuclei(lmptb33)
    assert report == nuclei(bhb33)
    assert report.middle >= 9
    assert nuclei(ts(lmptb33)).left >= 9
    assert nuclei(field_presemifield(ctx33)).model_dump() == {"left": 729, "middle": 729, "right": 729}


def test_nuclei_needs_presemifield(ctx33):
    L = 3
    form = form_add(ctx33, form_term(ctx33, 1, 0, 0), form_term(ctx33, 1, L, L))
    with pytest.raises(NotPresemifield):
        nuclei(from_form(ctx33, form, "degenerate"))


def test_semilinearity_constraint(ctx33, commutative33):
    P, B, triple = commutative33
    report = semilinearity_constraint(P, B, triple)
    assert report.degree == ctx33.h
    assert 0 <= report.exponent < report.degree
    with pytest.raises(VerificationFailed, match="verified"):
        semilinearity_constraint(P, B, triple.model_copy(update={"status": "unverified"}))


def test_frobenius_twist_is_semilinear_over_q2(ctx33, lmptb33):
    T = ts(lmptb33)
    twisted, triple = frobenius_twist(T)
    assert triple.status == "verified"
    assert linearity_degree(T) == linearity_degree(twisted) == 2 * ctx33.h
    report = semilinearity_constraint(T, twisted, triple)
    assert (report.degree, report.exponent) == (2, 1)

    squared, triple = frobenius_twist(T, k=2)
    assert semilinearity_constraint(T, squared, triple).exponent == 0


def test_frobenius_twist_of_field_is_itself(ctx33):
    field = field_presemifield(ctx33)
    twisted, triple = frobenius_twist(field)
    assert twisted == field
    assert triple.is_strong


@pytest.mark.slow
def test_frobenius_twist_over_9_3(ctx93):
    T = ts(lmptb(ctx93, LMPTBParams.build(ctx93)))
    degree = 2 * ctx93.h
    assert linearity_degree(T) == degree
    for k in (1, ctx93.h + 1):
        twisted, triple = frobenius_twist(T, k)
        report = semilinearity_constraint(T, twisted, triple)
        assert (report.degree, report.exponent) == (degree, k)


def test_knuth_orbit(lmptb33):
    orbit = knuth_orbit(lmptb33)
    assert [entry.name for entry in orbit] == ["S", "S*", "S^t", "S^t*", "S^*t", "S^t*t"]
    degrees = {entry.name: entry.linearity_degree for entry in orbit}
    assert degrees["S"] == 1
    assert degrees["S^t*"] == 2
    assert orbit[0].nuclei == nuclei(lmptb33)


def test_triple_json(ctx33, commutative33):
    _, _, triple = commutative33
    data = triple.to_json(ctx33)
    assert data["status"] == "verified"
    assert data["strong"] is False
    assert data["witness"] is None
