"""One-period market with a square-root position constraint.

Two assets start at price 1 and end at ``xi`` and ``1 + xi``.  Holding
``(t1, t2)`` from unit capital pays ``1 - t1 + (t1 + t2) xi``.  Positions
are restricted to ``0 <= t2 <= sqrt(t1) <= 1``; the undominated payoffs lie
on the curve ``t = (gamma, sqrt(gamma))``, written ``f_gamma`` below.

Everything stays rational because grid values of gamma are required to be
squares of rationals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .closure import ClosureConfig, Unbounded, verify_theorem
from .core import (
    ConvexBody,
    FiniteProbSpace,
    Rv,
    decode_rv,
    dominates,
    encode_rv,
    format_rational,
    ones,
    parse_rational,
    primitive,
    sub,
)
from .numeraire import (
    NumeraireCertificate,
    is_maximal,
    is_numeraire,
    verify_certificate,
    verify_not_numeraire,
)

DEFAULT_XI = (Fraction(1, 10), Fraction(1), Fraction(10))
GRID_A = (Fraction(0), Fraction(1, 25), Fraction(1, 4), Fraction(1))
GRID_B = (Fraction(0), Fraction(1, 100), Fraction(1, 25), Fraction(1, 4), Fraction(1))


class ConstraintViolation(ValueError):
    pass


def exact_sqrt(x: Fraction) -> Fraction | None:
    x = Fraction(x)
    if x < 0:
        return None
    a, b = math.isqrt(x.numerator), math.isqrt(x.denominator)
    if a * a == x.numerator and b * b == x.denominator:
        return Fraction(a, b)
    return None


def nearest_squares(x: Fraction, max_den: int = 100) -> tuple[Fraction, Fraction]:
    """Closest rational squares below and above ``x`` with root denominator <= max_den."""
    x = Fraction(x)
    root = math.sqrt(x)
    lo = Fraction(root).limit_denominator(max_den)
    while lo * lo > x:
        lo -= Fraction(1, max_den)
    hi = lo
    while hi * hi < x:
        hi += Fraction(1, max_den)
    return max(lo, Fraction(0)) ** 2, hi ** 2


@dataclass(frozen=True)
class MarketModel:
    space: FiniteProbSpace
    xi: Rv

    def __post_init__(self):
        if len(self.xi) != self.space.n:
            raise ValueError("xi must have one value per atom")
        if any(v <= 0 for v in self.xi):
            raise ValueError("xi must be strictly positive on every atom")

    @property
    def xi_min(self) -> Fraction:
        return min(self.xi)

    @classmethod
    def default(cls) -> "MarketModel":
        return cls(FiniteProbSpace.uniform(len(DEFAULT_XI)), DEFAULT_XI)


@dataclass(frozen=True)
class ConstraintGrid:
    gammas: tuple[Fraction, ...]

    def __post_init__(self):
        if not self.gammas or self.gammas[0] != 0:
            raise ValueError("the grid must contain 0")
        if list(self.gammas) != sorted(set(self.gammas)):
            raise ValueError("grid values must be sorted and distinct")
        for g in self.gammas:
            if not 0 <= g <= 1:
                raise ValueError(f"grid value {format_rational(g)} outside [0, 1]")
            if exact_sqrt(g) is None:
                lo, hi = nearest_squares(g)
                raise ValueError(
                    f"grid value {format_rational(g)} is not a rational square; "
                    f"nearby admissible values: {format_rational(lo)}, {format_rational(hi)}"
                )

    @classmethod
    def of(cls, values) -> "ConstraintGrid":
        vals = {parse_rational(v) for v in values} | {Fraction(0)}
        return cls(tuple(sorted(vals)))

    @property
    def min_positive(self) -> Fraction | None:
        return next((g for g in self.gammas if g > 0), None)


def in_constraint_set(t1, t2) -> bool:
    t1, t2 = Fraction(t1), Fraction(t2)
    return 0 <= t2 and t2 * t2 <= t1 <= 1


def wealth(t1, t2, xi) -> Rv:
    """Terminal payoff ``1 - t1 + (t1 + t2) xi`` of an admissible position."""
    t1, t2 = Fraction(t1), Fraction(t2)
    if not in_constraint_set(t1, t2):
        raise ConstraintViolation(f"position ({format_rational(t1)}, {format_rational(t2)}) violates 0 <= t2 <= sqrt(t1) <= 1")
    return tuple(1 - t1 + (t1 + t2) * x for x in xi)


def curve_wealth(gamma, xi) -> Rv:
    s = exact_sqrt(gamma)
    if s is None:
        raise ValueError(f"{format_rational(gamma)} is not a rational square")
    return wealth(gamma, s, xi)


@dataclass(frozen=True)
class Scenario:
    model: MarketModel
    grid: ConstraintGrid
    body: ConvexBody

    @property
    def g(self) -> Rv:
        return ones(self.model.space.n)


def build_scenario(model: MarketModel, grid: ConstraintGrid) -> Scenario:
    pts = tuple(curve_wealth(gm, model.xi) for gm in grid.gammas)
    return Scenario(model, grid, ConvexBody(pts))


def threshold_gamma(xi_min) -> Fraction:
    """Smallest positive grid value still compatible with 1 being a numéraire.

    Solving ``s / (s + 1) = xi_min`` for ``s = sqrt(gamma)``.
    """
    xi_min = Fraction(xi_min)
    if xi_min <= 0:
        raise ValueError("xi_min must be positive")
    if xi_min >= 1:
        raise ValueError("xi_min >= 1: the unit payoff is dominated on the whole curve")
    return (xi_min / (1 - xi_min)) ** 2


def divergent_sequence(n: int, xi) -> tuple[Rv, Rv]:
    """``f_n`` on the curve at gamma = 1/(1+n) and its short-sale image ``(1+n) f_n - n``."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    root = math.isqrt(n + 1)
    if root * root != n + 1:
        raise ValueError("1 + n must be a perfect square")
    m = Fraction(n)
    f = tuple(m / (1 + m) + (1 / (1 + m) + Fraction(1, root)) * x for x in xi)
    f_short = tuple((1 + m) * a - m for a in f)
    assert f_short == tuple((1 + root) * x for x in xi)
    return f, f_short


# ---------------------------------------------------------------------------
# classification and reports


@dataclass(frozen=True)
class GeneratorClass:
    gamma: Fraction | None
    position: tuple[Fraction, Fraction]
    maximal: bool
    on_curve: bool
    dominator: Rv | None

    @property
    def matches_formula(self) -> bool:
        # the continuum formula calls exactly the curve points maximal
        return self.maximal == self.on_curve

    def to_json(self) -> dict:
        return {
            "gamma": format_rational(self.gamma) if self.gamma is not None else None,
            "position": [format_rational(t) for t in self.position],
            "on_curve": self.on_curve,
            "maximal": self.maximal,
            "matches_formula": self.matches_formula,
            "dominator": encode_rv(self.dominator) if self.dominator else None,
        }


def expected_cmax(scenario: Scenario, off_curve=()) -> list[GeneratorClass]:
    """Maximality of each curve generator and of the given off-curve positions.

    Curve points that turn out dominated are finite-grid deviations from the
    continuum description; they are reported, not treated as errors.
    """
    xi = scenario.model.xi
    out = []
    for gm, f in zip(scenario.grid.gammas, scenario.body.points):
        maximal, w = is_maximal(f, scenario.body)
        out.append(GeneratorClass(gm, (gm, exact_sqrt(gm)), maximal, True, w.dominator if w else None))
    for t1, t2 in off_curve:
        t1, t2 = Fraction(t1), Fraction(t2)
        w0 = wealth(t1, t2, xi)
        extra = [w0]
        s = exact_sqrt(t1)
        if s is not None:
            extra.append(wealth(t1, s, xi))
        body = ConvexBody(scenario.body.points + tuple(extra))
        maximal, w = is_maximal(w0, body)
        on_curve = s is not None and t2 == s
        out.append(GeneratorClass(None, (t1, t2), maximal, on_curve, w.dominator if w else None))
    return out


def short_sale_rays(scenario: Scenario) -> tuple[Rv, ...]:
    """Directions ``f_gamma - 1`` of the sequences ``(1+m) f_gamma - m`` that stay nonnegative."""
    one = scenario.g
    return tuple(sub(f, one) for f in scenario.body.points if f != one and dominates(f, one))


def short_sale_enlargement(scenario: Scenario) -> ConvexBody:
    """The scenario body plus every divergent short-sale direction."""
    pts = list(scenario.body.points)
    for gm in scenario.grid.gammas:
        if gm == 0:
            continue
        k = 1 / exact_sqrt(gm)
        if k.denominator == 1 and dominates(curve_wealth(gm, scenario.model.xi), scenario.g):
            pts.append(divergent_sequence(int(k * k) - 1, scenario.model.xi)[1])
    return ConvexBody(tuple(pts), short_sale_rays(scenario))


def scenario_report(scenario: Scenario, config: ClosureConfig = ClosureConfig()) -> dict:
    g = scenario.g
    body = scenario.body
    lp = is_numeraire(g, body)
    report = {
        "xi": encode_rv(scenario.model.xi),
        "p": encode_rv(scenario.model.space.p),
        "grid": [format_rational(x) for x in scenario.grid.gammas],
        "body": body.to_json(),
        "g": encode_rv(g),
        "threshold_gamma": format_rational(threshold_gamma(scenario.model.xi_min)) if scenario.model.xi_min < 1 else None,
        "numeraire": isinstance(lp, NumeraireCertificate),
    }
    if isinstance(lp, NumeraireCertificate):
        report["certificate"] = lp.to_json()
        report["certificate_verified"] = verify_certificate(lp.q, g, body)
    else:
        report["farkas"] = lp.to_json()["farkas"]
        report["farkas_verified"] = verify_not_numeraire(g, body, lp.farkas)
    consistency = verify_theorem(g, body, config)
    report["theorem"] = consistency.to_json()
    res = consistency.closure
    report["closure"] = res.to_json()
    if isinstance(res, Unbounded):
        report["witness_ray_primitive"] = encode_rv(primitive(res.ray))
    maximal, _ = is_maximal(g, body)
    report["g_maximal"] = maximal
    return report


def threshold_table(model: MarketModel, ks=range(2, 13)) -> list[dict]:
    """Verdicts for grids {0, 1/k^2, 1} against the predicted threshold."""
    gstar = threshold_gamma(model.xi_min)
    rows = []
    for k in ks:
        gm = Fraction(1, k * k)
        sc = build_scenario(model, ConstraintGrid.of([0, gm, 1]))
        lp = is_numeraire(sc.g, sc.body)
        feasible = isinstance(lp, NumeraireCertificate)
        rows.append({
            "k": k,
            "gamma_min": format_rational(gm),
            "numeraire": feasible,
            "predicted": gm > gstar,
            "epsilon": format_rational(lp.epsilon) if feasible else None,
            "body": sc.body.to_json(),
            "g": encode_rv(sc.g),
            **lp.to_json(),
        })
    return rows


def model_from_json(data) -> tuple[MarketModel, ConstraintGrid]:
    xi = decode_rv(data["xi"])
    p = decode_rv(data["p"]) if "p" in data else FiniteProbSpace.uniform(len(xi)).p
    grid = ConstraintGrid.of(data.get("grid", GRID_A))
    return MarketModel(FiniteProbSpace(p), xi), grid


def witness_matches(ray: Rv, gamma, xi) -> bool:
    """Is ``ray`` a positive multiple of ``f_gamma - 1``?"""
    target = sub(curve_wealth(gamma, xi), ones(len(xi)))
    return primitive(ray) == primitive(target)

