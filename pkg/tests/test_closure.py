import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from numeraire_lab.closure import (
    INFINITY,
    Bounded,
    ClosureConfig,
    Fixed,
    Inconclusive,
    Point,
    Ray,
    Step,
    Unbounded,
    cs3_extend,
    cs_closure,
    delta_max,
    extend,
    extension_fixed_point,
    verify_chain,
    verify_theorem,
)
from numeraire_lab.core import ConvexBody, contains, dominates, is_nonnegative, ones, rv
from numeraire_lab.fuzz import generate_instance
from numeraire_lab.numeraire import NotInBody, NotNumeraire, in_superset_K
from numeraire_lab.prooflab import reduce_to_one

F = Fraction
SEGMENT = ConvexBody.of([[1, 1], [2, 0]])
DOMINATED = ConvexBody.of([[1, 1], [2, 1]])


def test_delta_max_examples():
    assert delta_max(rv(2, 0), rv(1, 1)) == 0
    assert delta_max(rv("3/2", "1/2"), rv(1, 1)) == 1
    assert delta_max(rv(2, 1), rv(1, 1)) == INFINITY == math.inf


def test_cs3_extend_examples():
    assert cs3_extend(rv(2, 0), rv(1, 1)) == Fixed()
    assert cs3_extend(rv("3/2", "1/2"), rv(1, 1)) == Point(rv(2, 0), F(1))
    assert cs3_extend(rv(2, 1), rv(1, 1)) == Ray(rv(1, 0))
    assert cs3_extend(rv(1, 1), rv(1, 1)) == Fixed()


@given(st.lists(st.fractions(min_value=0, max_value=5, max_denominator=6), min_size=1, max_size=4).flatmap(
    lambda f: st.tuples(st.just(f), st.lists(st.fractions(min_value=0, max_value=5, max_denominator=6), min_size=len(f), max_size=len(f)))
))
def test_extension_point_is_extreme(data):
    f, g = map(tuple, data)
    ext = cs3_extend(f, g)
    if isinstance(ext, Point):
        p = ext.point
        assert p == extend(f, g, ext.delta) and is_nonnegative(p)
        # one coordinate hits zero at delta_max; going further leaves the orthant
        assert any(a == 0 < b for a, b in zip(p, g))
        assert not is_nonnegative(extend(f, g, ext.delta + F(1, 1000)))
    elif isinstance(ext, Ray):
        assert dominates(f, g) and any(ext.ray) and is_nonnegative(ext.ray)


def test_closure_examples():
    res = cs_closure(rv(1, 1), SEGMENT)
    assert isinstance(res, Bounded) and res.body == SEGMENT
    assert res.certificate.q == (F(1, 2), F(1, 2))

    res = cs_closure(rv(1, 1), DOMINATED)
    assert isinstance(res, Unbounded)
    assert [s.kind for s in res.chain] == ["generator", "ray"]
    assert res.chain[0].value == rv(2, 1) and res.ray == rv(1, 0)
    assert verify_chain(res.chain, rv(1, 1), DOMINATED)

    single = ConvexBody.of([[3, 2]])
    res = cs_closure(rv(3, 2), single)
    assert isinstance(res, Bounded) and res.body == single


def test_closure_with_body_ray():
    C = ConvexBody.of([[1, 1]], [[0, 1]])
    res = cs_closure(rv(1, 1), C)
    assert isinstance(res, Unbounded) and res.ray == rv(0, 1)
    assert verify_chain(res.chain, rv(1, 1), C)


def test_closure_preconditions():
    with pytest.raises(NotInBody):
        cs_closure(rv(5, 5), SEGMENT)
    with pytest.raises(ValueError):
        cs_closure(rv(2, 0), ConvexBody.of([[2, 0], [1, 1]]))


def test_theorem_examples():
    rep = verify_theorem(rv(1, 1), SEGMENT)
    assert rep.consistent and rep.containment_verified and rep.certificate_verified
    rep = verify_theorem(rv(1, 1), DOMINATED)
    assert rep.consistent and rep.chain_verified and rep.lp_verdict == "infeasible"


def test_segment_extension_returns_to_endpoint():
    # interior points of the segment extend back onto (2, 0)
    iterates, rays = extension_fixed_point(rv(1, 1), ConvexBody.of([[1, 1], [2, 0], ["3/2", "1/2"]]))
    assert not rays and iterates[-1] == SEGMENT


def test_tampered_chains_fail():
    res = cs_closure(rv(1, 1), DOMINATED)
    chain = list(res.chain)
    assert not verify_chain([], rv(1, 1), DOMINATED)
    assert not verify_chain(chain[:1], rv(1, 1), DOMINATED)
    wrong_value = [chain[0], Step("ray", rv(2, 0), (0,))]
    assert not verify_chain(wrong_value, rv(1, 1), DOMINATED)
    fake_generator = [Step("generator", rv(3, 3), index=0), Step("ray", rv(2, 2), (0,))]
    assert not verify_chain(fake_generator, rv(1, 1), DOMINATED)
    bad_weights = [
        Step("generator", rv(1, 1), index=0),
        Step("generator", rv(2, 1), index=1),
        Step("combination", rv(2, 1), (0, 1), (F(1, 2), F(1, 2))),
        Step("ray", rv(1, 0), (2,)),
    ]
    assert not verify_chain(bad_weights, rv(1, 1), DOMINATED)
    overshoot = [Step("generator", rv(2, 0), index=1), Step("extend", rv(3, -1), (0,), (F(2),))]
    assert not verify_chain(overshoot, rv(1, 1), SEGMENT)


def test_result_json_round_trip():
    res = cs_closure(rv(1, 1), DOMINATED)
    data = res.to_json()
    assert data["verdict"] == "unbounded" and data["ray"] == ["1", "0"]
    chain = tuple(Step.from_json(s) for s in data["chain"])
    assert chain == res.chain
    bounded = cs_closure(rv(1, 1), SEGMENT).to_json()
    assert bounded["certificate"]["q"] == ["1/2", "1/2"]


def test_inconclusive_serialises():
    res = Inconclusive(3, F(7, 2), True, NotNumeraire((F(1),)), 4)
    assert res.to_json()["max_norm"] == "7/2"
    assert res.to_json()["verdict"] == "inconclusive"


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 100_000))
def test_closure_invariants_on_random_instances(index):
    inst = generate_instance(17, index)
    g, C = inst.g, inst.body
    rep = verify_theorem(g, C)
    assert rep.status == "consistent"
    res = rep.closure
    if isinstance(res, Bounded):
        # monotone: every iterate contains C; sound: generators stay in K
        for body in res.iterates:
            assert not body.rays
            assert all(contains(body, p) for p in C.points)
            if res.certificate is not None:
                assert all(in_superset_K(res.certificate.q, g, f) for f in body.points)
        # a generator strictly above g would have forced a ray
        assert not any(dominates(f, g) and f != g for f in res.body.points)
    else:
        assert isinstance(res, Unbounded)
        assert verify_chain(res.chain, g, C)
    if any(g):
        reduced = verify_theorem(ones(len(g)), reduce_to_one(g, C))
        assert reduced.lp_verdict == rep.lp_verdict


def test_config_is_respected():
    res = cs_closure(rv(1, 1), DOMINATED, ClosureConfig(max_rounds=1, midpoints=False))
    assert isinstance(res, Unbounded) and res.rounds == 1
