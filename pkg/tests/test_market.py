from fractions import Fraction

import pytest

from numeraire_lab.closure import Unbounded, verify_chain, verify_theorem
from numeraire_lab.core import ConvexBody, FiniteProbSpace, contains, is_bounded, ones, rv
from numeraire_lab.market import (
    DEFAULT_XI,
    GRID_A,
    GRID_B,
    ConstraintGrid,
    ConstraintViolation,
    MarketModel,
    build_scenario,
    curve_wealth,
    divergent_sequence,
    exact_sqrt,
    expected_cmax,
    in_constraint_set,
    model_from_json,
    scenario_report,
    short_sale_enlargement,
    threshold_gamma,
    threshold_table,
    wealth,
    witness_matches,
)
from numeraire_lab.numeraire import NotNumeraire, NumeraireCertificate, is_numeraire, verify_certificate

F = Fraction
XI = DEFAULT_XI
MODEL = MarketModel.default()


def test_wealth_examples():
    assert wealth(0, 0, XI) == ones(3)
    assert wealth(1, 1, XI) == rv("1/5", 2, 20)
    assert wealth(F(1, 4), F(1, 2), XI) == rv("33/40", "3/2", "33/4")


def test_wealth_rejects_infeasible_positions():
    for t1, t2 in [(F(1, 4), F(3, 4)), (F(2), F(1)), (F(1, 2), F(-1, 10))]:
        assert not in_constraint_set(t1, t2)
        with pytest.raises(ConstraintViolation):
            wealth(t1, t2, XI)


def test_build_scenario_examples():
    assert build_scenario(MODEL, ConstraintGrid.of([0])).body == ConvexBody((ones(3),))
    sc = build_scenario(MODEL, ConstraintGrid.of([0, 1]))
    assert sc.body.points == (ones(3), tuple(2 * x for x in XI))
    assert curve_wealth(F(1, 4), XI) == tuple(F(3, 4) + F(3, 4) * x for x in XI)
    assert contains(sc.body, sc.g)


def test_grid_validation():
    assert ConstraintGrid.of(["1/4", "1"]).gammas == (0, F(1, 4), 1)
    with pytest.raises(ValueError, match="rational square"):
        ConstraintGrid.of(["1/3"])
    with pytest.raises(ValueError):
        ConstraintGrid.of(["2"])
    with pytest.raises(ValueError):
        ConstraintGrid((F(1, 4),))
    assert exact_sqrt(F(9, 49)) == F(3, 7) and exact_sqrt(F(2)) is None


def test_model_validation_and_json():
    with pytest.raises(ValueError):
        MarketModel(FiniteProbSpace.uniform(2), rv(1, 0))
    with pytest.raises(ValueError):
        MarketModel(FiniteProbSpace.uniform(2), XI)
    model, grid = model_from_json({"p": ["1/2", "1/4", "1/4"], "xi": ["1/10", "1", "10"], "grid": ["0", "1/100", "1"]})
    assert model.xi_min == F(1, 10) and grid.gammas == (0, F(1, 100), 1)


def test_threshold_examples():
    assert threshold_gamma(F(1, 10)) == F(1, 81)
    assert threshold_gamma(F(1, 2)) == 1
    assert threshold_gamma(F(1, 100)) == F(1, 99) ** 2
    with pytest.raises(ValueError):
        threshold_gamma(1)


def test_divergent_sequence_examples():
    f0, s0 = divergent_sequence(0, XI)
    assert f0 == s0 == tuple(2 * x for x in XI)
    f3, s3 = divergent_sequence(3, XI)
    assert f3 == tuple(F(3, 4) + F(3, 4) * x for x in XI)
    assert s3 == tuple(3 * x for x in XI)
    assert divergent_sequence(8, XI)[1] == tuple(4 * x for x in XI)
    with pytest.raises(ValueError):
        divergent_sequence(2, XI)


def test_divergent_sequence_lies_on_curve():
    for n in (0, 3, 8, 15, 24, 99):
        f, _ = divergent_sequence(n, XI)
        assert f == curve_wealth(F(1, n + 1), XI)


def test_cmax_examples():
    sc = build_scenario(MODEL, ConstraintGrid.of([0, "1/4", 1]))
    classes = expected_cmax(sc, off_curve=[(F(1, 4), F(1, 4))])
    by_gamma = {c.gamma: c for c in classes if c.gamma is not None}
    assert by_gamma[F(0)].maximal and by_gamma[F(1)].maximal
    off = classes[-1]
    assert not off.on_curve and not off.maximal
    above = wealth(F(1, 4), F(1, 2), XI)
    assert all(a <= b for a, b in zip(wealth(F(1, 4), F(1, 4), XI), above))
    assert all(a <= b for a, b in zip(wealth(F(1, 4), F(1, 4), XI), off.dominator))


def test_grid_a_is_numeraire():
    sc = build_scenario(MODEL, ConstraintGrid(GRID_A))
    out = is_numeraire(sc.g, sc.body)
    assert isinstance(out, NumeraireCertificate)
    assert verify_certificate(out.q, sc.g, sc.body)
    assert verify_theorem(sc.g, sc.body).consistent


def test_grid_b_is_not_numeraire():
    sc = build_scenario(MODEL, ConstraintGrid(GRID_B))
    assert isinstance(is_numeraire(sc.g, sc.body), NotNumeraire)
    rep = verify_theorem(sc.g, sc.body)
    assert rep.consistent and isinstance(rep.closure, Unbounded)
    ray = rep.closure.ray
    assert witness_matches(ray, F(1, 100), XI)
    assert sub_ray(F(1, 100)) == tuple(F(-1, 100) + F(11, 100) * x for x in XI)
    assert verify_chain(rep.closure.chain, sc.g, sc.body)


def sub_ray(gamma):
    return tuple(a - 1 for a in curve_wealth(gamma, XI))


def test_threshold_sweep_flips_at_prediction():
    rows = threshold_table(MODEL)
    assert [r["numeraire"] for r in rows] == [r["predicted"] for r in rows]
    flips = [r["k"] for r in rows if not r["numeraire"]]
    assert flips == list(range(9, 13))


def test_short_sale_enlargement_matches_verdict():
    for grid in (GRID_A, GRID_B, (0, F(1, 64), 1), (0, F(1, 81), 1), (0, F(1, 49), 1)):
        sc = build_scenario(MODEL, ConstraintGrid(tuple(grid)))
        feasible = isinstance(is_numeraire(sc.g, sc.body), NumeraireCertificate)
        assert is_bounded(short_sale_enlargement(sc)) == feasible


def test_scenario_report_shape():
    rep = scenario_report(build_scenario(MODEL, ConstraintGrid(GRID_B)))
    assert rep["numeraire"] is False and rep["farkas_verified"]
    assert rep["witness_ray_primitive"] == ["1", "100", "1090"]
    assert rep["theorem"]["status"] == "consistent"
