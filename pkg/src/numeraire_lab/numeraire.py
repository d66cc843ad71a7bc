"""Numéraire tests, maximality and the dual-measure constructions.

For ``g`` in a body ``C`` the numéraire condition asks for a strictly
positive probability ``q`` with

    sum_{g_i > 0} q_i f_i / g_i  <=  sum_{g_i > 0} q_i      for every f in C,

which is linear in ``q``.  It is enough to impose it on the generator points
(and ``<= 0`` on the rays), and strict positivity of ``q`` is handled by
:func:`numeraire_lab.ratlp.solve_strict`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from . import ratlp
from .core import (
    ONE,
    ZERO,
    ConvexBody,
    Measure,
    Rv,
    add,
    check_probability,
    contains,
    encode_rv,
    format_rational,
)


class NotInBody(ValueError):
    pass


@dataclass(frozen=True)
class NumeraireCertificate:
    q: tuple[Fraction, ...]
    epsilon: Fraction
    binding: tuple[int, ...]

    def to_json(self) -> dict:
        return {"q": encode_rv(self.q), "epsilon": format_rational(self.epsilon), "binding": list(self.binding)}


@dataclass(frozen=True)
class NotNumeraire:
    """The strict LP has no solution; ``farkas`` is on the rows of ``numeraire_problem``."""

    farkas: tuple[Fraction, ...]

    def to_json(self) -> dict:
        return {"farkas": encode_rv(self.farkas)}


@dataclass(frozen=True)
class NotStrictlyPositive:
    """Generators that charge an atom where g vanishes."""

    atoms: tuple[int, ...]

    def to_json(self) -> dict:
        return {"not_strictly_positive": list(self.atoms)}


@dataclass(frozen=True)
class TrivialCase:
    """g = 0 and C = {0}: nothing to certify."""

    def to_json(self) -> dict:
        return {"trivial": True}


NumeraireOutcome = Union[NumeraireCertificate, NotNumeraire, NotStrictlyPositive, TrivialCase]


@dataclass(frozen=True)
class MaximalityWitness:
    dominator: Rv


def _require_member(g, C: ConvexBody):
    if len(g) != C.n:
        raise NotInBody("dimension mismatch")
    if not contains(C, g):
        raise NotInBody(f"{encode_rv(g)} is not an element of the body")


def support(g) -> tuple[int, ...]:
    return tuple(i for i, a in enumerate(g) if a > 0)


def zero_set(g) -> tuple[int, ...]:
    return tuple(i for i, a in enumerate(g) if a == 0)


def violating_atoms(g, C: ConvexBody) -> tuple[int, ...]:
    zs = zero_set(g)
    return tuple(i for i in zs if any(v[i] > 0 for v in C.points + C.rays))


def is_strictly_positive_on(g, C: ConvexBody) -> bool:
    """Every element of C vanishes wherever g does."""
    _require_member(g, C)
    return not violating_atoms(g, C)


def is_maximal(f, C: ConvexBody) -> tuple[bool, MaximalityWitness | None]:
    """Is ``f`` undominated in ``C``?  Otherwise return an element above it."""
    f = tuple(f)
    _require_member(f, C)
    if C.rays:
        return False, MaximalityWitness(add(f, C.rays[0]))
    pts = C.points
    k, n = len(pts), C.n
    rows = [ratlp.Constraint(tuple([ONE] * k), ratlp.EQ, ONE)]
    for i in range(n):
        rows.append(ratlp.Constraint(tuple(p[i] for p in pts), ratlp.GE, f[i]))
    objective = tuple(sum(p, ZERO) for p in pts)
    out = ratlp.solve(ratlp.LinearProgram(k, tuple(rows), objective))
    assert isinstance(out, ratlp.Optimal), "f itself is feasible and the body is bounded"
    if out.value == sum(f, ZERO):
        return True, None
    h = tuple(sum((lam * p[i] for lam, p in zip(out.x, pts)), ZERO) for i in range(n))
    return False, MaximalityWitness(h)


def _ratio_row(g, f) -> tuple[Fraction, ...]:
    return tuple(f[i] / g[i] if g[i] > 0 else ZERO for i in range(len(g)))


def numeraire_problem(g, C: ConvexBody) -> ratlp.StrictFeasibilityProblem:
    """Rows: ``sum q = 1``, one row per generator point, one per ray."""
    n = len(g)
    on = [ONE if a > 0 else ZERO for a in g]
    rows = [ratlp.Constraint((ONE,) * n, ratlp.EQ, ONE)]
    for f in C.points:
        ratio = _ratio_row(g, f)
        rows.append(ratlp.Constraint(tuple(r - o for r, o in zip(ratio, on)), ratlp.LE, ZERO))
    for r in C.rays:
        rows.append(ratlp.Constraint(_ratio_row(g, r), ratlp.LE, ZERO))
    return ratlp.strict_problem(n, rows)


def conditional_ratio(q, g, f) -> Fraction:
    """E_q[f / g | g > 0]."""
    idx = support(g)
    mass = sum((q[i] for i in idx), ZERO)
    return sum((q[i] * f[i] / g[i] for i in idx), ZERO) / mass


def binding_points(q, g, C: ConvexBody) -> tuple[int, ...]:
    idx = support(g)
    mass = sum((q[i] for i in idx), ZERO)
    return tuple(k for k, f in enumerate(C.points) if sum((q[i] * f[i] / g[i] for i in idx), ZERO) == mass)


def is_numeraire(g, C: ConvexBody) -> NumeraireOutcome:
    g = tuple(g)
    _require_member(g, C)
    bad = violating_atoms(g, C)
    if bad:
        return NotStrictlyPositive(bad)
    if not any(g):
        return TrivialCase()
    out = ratlp.solve_strict(numeraire_problem(g, C))
    if isinstance(out, ratlp.Infeasible):
        return NotNumeraire(out.farkas)
    q = out.x
    return NumeraireCertificate(q, out.epsilon, binding_points(q, g, C))


def verify_certificate(q, g, C: ConvexBody) -> bool:
    """Exact re-check of the numéraire inequality on every generator."""
    if len(q) != len(g) or any(v <= 0 for v in q) or sum(q) != 1:
        return False
    if violating_atoms(g, C) or not any(g):
        return False
    idx = support(g)
    mass = sum((q[i] for i in idx), ZERO)
    for f in C.points:
        if sum((q[i] * f[i] / g[i] for i in idx), ZERO) > mass:
            return False
    for r in C.rays:
        if sum((q[i] * r[i] / g[i] for i in idx), ZERO) > 0:
            return False
    return True


def verify_not_numeraire(g, C: ConvexBody, farkas) -> bool:
    return ratlp.verify_strict(numeraire_problem(g, C), ratlp.Infeasible(tuple(farkas)))


# ---------------------------------------------------------------------------
# dual measures


def measure_from_certificate(q, g) -> Measure:
    """Weights q_i / g_i where g > 0 and q_i where g = 0."""
    check_probability(q)
    return Measure(tuple(qi / gi if gi > 0 else qi for qi, gi in zip(q, g)))


def certificate_from_measure(mu: Measure, g, weight: Fraction | None = None) -> tuple[Fraction, ...]:
    """Probability built from a supporting measure.

    The result mixes the density ``g dmu / int g dmu`` with the normalised
    restriction of ``mu`` to ``{g = 0}``; ``weight`` is the share of the
    first part.  The default share ``int g dmu / (int g dmu + mu[g = 0])``
    makes this the exact inverse of :func:`measure_from_certificate`; pass
    ``weight=Fraction(1, 2)`` for the even split.  When ``{g = 0}`` is empty
    the weight is irrelevant.
    """
    if not mu.is_equivalent:
        raise ValueError("the measure must charge every atom")
    if not any(g):
        raise ValueError("g vanishes identically")
    zs = [i for i, a in enumerate(g) if a == 0]
    total = mu.integrate(g)
    if not zs:
        return tuple(a * w / total for a, w in zip(g, mu.weights))
    zero_mass = mu.mass(zs)
    if weight is None:
        weight = total / (total + zero_mass)
    weight = Fraction(weight)
    if not 0 < weight < 1:
        raise ValueError("weight must lie strictly between 0 and 1")
    return tuple(
        weight * a * w / total if a > 0 else (1 - weight) * w / zero_mass
        for a, w in zip(g, mu.weights)
    )


def check_sup_identity(mu: Measure, g, C: ConvexBody) -> bool:
    """``int g dmu`` equals the supremum of ``int f dmu`` over C."""
    if not mu.is_equivalent:
        return False
    if any(mu.integrate(r) > 0 for r in C.rays):
        return False
    return max(mu.integrate(f) for f in C.points) == mu.integrate(g)


def supporting_measure(g, C: ConvexBody) -> Measure | None:
    """Search directly for an equivalent measure attaining its sup over C at g.

    Solved as its own strict LP (normalised by total mass 1), independent of
    :func:`is_numeraire`.
    """
    g = tuple(g)
    n = len(g)
    rows = [ratlp.Constraint((ONE,) * n, ratlp.EQ, ONE)]
    for f in C.points:
        rows.append(ratlp.Constraint(tuple(a - b for a, b in zip(f, g)), ratlp.LE, ZERO))
    for r in C.rays:
        rows.append(ratlp.Constraint(tuple(r), ratlp.LE, ZERO))
    out = ratlp.solve_strict(ratlp.strict_problem(n, rows))
    if isinstance(out, ratlp.Infeasible):
        return None
    return Measure(out.x)


def in_superset_K(q, g, h) -> bool:
    """h vanishes on {g = 0} and E_q[h / g | g > 0] <= 1."""
    if any(b > 0 and a == 0 for a, b in zip(g, h)):
        return False
    if not any(g):
        return not any(h)
    return conditional_ratio(q, g, h) <= 1


def classify(g, C: ConvexBody) -> tuple[str, NumeraireOutcome, MaximalityWitness | None]:
    """Verdict with a reason in {numeraire, trivial, not-strictly-positive, not-maximal, lp-infeasible}."""
    out = is_numeraire(g, C)
    if isinstance(out, NumeraireCertificate):
        return "numeraire", out, None
    if isinstance(out, TrivialCase):
        return "trivial", out, None
    if isinstance(out, NotStrictlyPositive):
        return "not-strictly-positive", out, None
    maximal, witness = is_maximal(g, C)
    return ("lp-infeasible" if maximal else "not-maximal"), out, witness
