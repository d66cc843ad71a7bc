"""Short-sale closure of a body relative to an element g.

The closure is the smallest closed convex superset of C that contains
``(1 + d) f - d g`` whenever that combination stays nonnegative.  There is
no finite recipe for it in general, so :func:`cs_closure` works in two
modes:

* g passes the numéraire LP -> iterate extensions of generator points to a
  fixed point (an inner approximation) and check that every generator met
  on the way satisfies the certificate's bound.  A ray showing up here is a
  bug, not a verdict.
* g fails the LP -> search for a derivation that ends in a recession ray.
  Each step of the derivation is either a generator of C, a convex
  combination of earlier steps, an admissible extension of an earlier step,
  or the ray ``f - g`` of an earlier step ``f >= g``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Union

from . import ratlp
from .core import (
    ONE,
    ZERO,
    ConvexBody,
    Rv,
    combine,
    contains,
    dominates,
    encode_rv,
    format_rational,
    decode_rv,
    is_nonnegative,
    parse_rational,
    prune,
    sub,
    sup_norm,
)
from .numeraire import (
    NotInBody,
    NumeraireCertificate,
    NumeraireOutcome,
    TrivialCase,
    in_superset_K,
    is_maximal,
    is_numeraire,
    verify_certificate,
    verify_not_numeraire,
    violating_atoms,
)

INFINITY = math.inf


class ClosureInvariantError(AssertionError):
    """Raised when the certified-bounded iteration produces something outside K."""


# ---------------------------------------------------------------------------
# single-step extension


def delta_max(f, g):
    """Largest d >= 0 with (1 + d) f - d g >= 0, or ``math.inf``."""
    best = None
    for a, b in zip(f, g):
        if b > a:
            d = a / (b - a)
            if best is None or d < best:
                best = d
    return INFINITY if best is None else best


@dataclass(frozen=True)
class Fixed:
    pass


@dataclass(frozen=True)
class Point:
    point: Rv
    delta: Fraction


@dataclass(frozen=True)
class Ray:
    ray: Rv


ExtensionResult = Union[Fixed, Point, Ray]


def extend(f, g, delta) -> Rv:
    delta = Fraction(delta)
    return tuple((1 + delta) * a - delta * b for a, b in zip(f, g))


def cs3_extend(f, g) -> ExtensionResult:
    f, g = tuple(f), tuple(g)
    if f == g:
        return Fixed()
    d = delta_max(f, g)
    if d == INFINITY:
        return Ray(sub(f, g))
    if d == 0:
        return Fixed()
    return Point(extend(f, g, d), d)


# ---------------------------------------------------------------------------
# derivation chains


@dataclass(frozen=True)
class Step:
    """One derivation step; ``sources`` index earlier steps of the same chain.

    kinds: ``generator`` (C.points[index]), ``body-ray`` (C.rays[index]),
    ``combination`` (convex weights ``coeffs`` over ``sources``),
    ``extend`` (``coeffs == (delta,)``), ``ray`` (value = source - g).
    """

    kind: str
    value: Rv
    sources: tuple[int, ...] = ()
    coeffs: tuple[Fraction, ...] = ()
    index: int | None = None

    def to_json(self) -> dict:
        out = {"kind": self.kind, "value": encode_rv(self.value)}
        if self.sources:
            out["sources"] = list(self.sources)
        if self.coeffs:
            out["coeffs"] = encode_rv(self.coeffs)
        if self.index is not None:
            out["index"] = self.index
        return out

    @classmethod
    def from_json(cls, data) -> "Step":
        return cls(
            data["kind"],
            decode_rv(data["value"]),
            tuple(data.get("sources", ())),
            tuple(parse_rational(c) for c in data.get("coeffs", ())),
            data.get("index"),
        )


TERMINAL = ("ray", "body-ray")


def verify_chain(chain, g, C: ConvexBody) -> bool:
    """Replay a derivation with exact arithmetic only."""
    g = tuple(g)
    if not chain:
        return False
    for k, step in enumerate(chain):
        srcs = step.sources
        if any(not 0 <= s < k or chain[s].kind in TERMINAL for s in srcs):
            return False
        v = step.value
        if step.kind == "generator":
            if step.index is None or not 0 <= step.index < len(C.points) or C.points[step.index] != v:
                return False
        elif step.kind == "body-ray":
            if step.index is None or not 0 <= step.index < len(C.rays) or C.rays[step.index] != v:
                return False
        elif step.kind == "combination":
            w = step.coeffs
            if len(w) != len(srcs) or not srcs or any(c < 0 for c in w) or sum(w) != 1:
                return False
            if combine(w, [chain[s].value for s in srcs]) != v:
                return False
        elif step.kind == "extend":
            if len(srcs) != 1 or len(step.coeffs) != 1 or step.coeffs[0] < 0:
                return False
            if extend(chain[srcs[0]].value, g, step.coeffs[0]) != v or not is_nonnegative(v):
                return False
        elif step.kind == "ray":
            if len(srcs) != 1:
                return False
            f = chain[srcs[0]].value
            if not dominates(f, g) or sub(f, g) != v:
                return False
        else:
            return False
    last = chain[-1]
    return last.kind in TERMINAL and is_nonnegative(last.value) and any(last.value)


def _extract_chain(steps: list[Step], terminal: int) -> tuple[Step, ...]:
    needed = set()
    stack = [terminal]
    while stack:
        k = stack.pop()
        if k not in needed:
            needed.add(k)
            stack.extend(steps[k].sources)
    order = sorted(needed)
    renumber = {old: new for new, old in enumerate(order)}
    return tuple(
        Step(s.kind, s.value, tuple(renumber[x] for x in s.sources), s.coeffs, s.index)
        for s in (steps[k] for k in order)
    )


# ---------------------------------------------------------------------------
# results


@dataclass(frozen=True)
class ClosureConfig:
    max_rounds: int = 50
    norm_cap: Fraction | None = None  # default 2**20 * largest generator norm
    midpoints: bool = True


@dataclass(frozen=True)
class Bounded:
    body: ConvexBody
    certificate: NumeraireCertificate | None
    iterates: tuple[ConvexBody, ...]
    rounds: int
    lp: NumeraireOutcome

    verdict = "bounded"

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "body": self.body.to_json(),
            "certificate": self.certificate.to_json() if self.certificate else None,
            "iterates": [b.to_json() for b in self.iterates],
            "rounds": self.rounds,
        }


@dataclass(frozen=True)
class Unbounded:
    chain: tuple[Step, ...]
    rounds: int
    lp: NumeraireOutcome

    verdict = "unbounded"

    @property
    def ray(self) -> Rv:
        return self.chain[-1].value

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "ray": encode_rv(self.ray),
            "chain": [s.to_json() for s in self.chain],
            "rounds": self.rounds,
            "lp": self.lp.to_json(),
        }


@dataclass(frozen=True)
class Inconclusive:
    rounds: int
    max_norm: Fraction
    unbounded_suspected: bool
    lp: NumeraireOutcome
    generators: int = 0

    verdict = "inconclusive"

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "rounds": self.rounds,
            "max_norm": format_rational(self.max_norm),
            "unbounded_suspected": self.unbounded_suspected,
            "generators": self.generators,
            "lp": self.lp.to_json(),
        }


ClosureResult = Union[Bounded, Unbounded, Inconclusive]


# ---------------------------------------------------------------------------
# the closure


def extension_fixed_point(g, C: ConvexBody, max_rounds: int = 50):
    """Iterate generator extensions until the pruned body stops changing.

    Returns ``(iterates, rays)``: the successive pruned bodies (first is
    ``prune(C)``) and every ray produced by a generator dominating g.
    Each point is pushed to the boundary of the orthant at most once, so in
    practice this settles within two rounds.
    """
    g = tuple(g)
    body = prune(C)
    iterates = [body]
    rays: list[Rv] = []
    for _ in range(max_rounds):
        new = []
        for f in body.points:
            ext = cs3_extend(f, g)
            if isinstance(ext, Point):
                new.append(ext.point)
            elif isinstance(ext, Ray):
                rays.append(ext.ray)
        nxt = prune(ConvexBody(body.points + tuple(new), body.rays))
        if nxt == body:
            return tuple(iterates), tuple(rays)
        body = nxt
        iterates.append(body)
    raise ClosureInvariantError("extension iteration did not settle")


def _check_preconditions(g, C: ConvexBody):
    if len(g) != C.n:
        raise NotInBody("dimension mismatch")
    if not contains(C, g):
        raise NotInBody(f"{encode_rv(g)} is not an element of the body")
    bad = violating_atoms(g, C)
    if bad:
        raise ValueError(f"g is not strictly positive on the body (atoms {list(bad)})")


def cs_closure(g, C: ConvexBody, config: ClosureConfig = ClosureConfig()) -> ClosureResult:
    g = tuple(g)
    _check_preconditions(g, C)
    lp = is_numeraire(g, C)
    if isinstance(lp, (NumeraireCertificate, TrivialCase)):
        return _bounded_branch(g, C, lp, config)
    return _witness_search(g, C, lp, config)


def _bounded_branch(g, C, lp, config) -> Bounded:
    if C.rays:
        raise ClosureInvariantError("certified body has rays")
    cert = lp if isinstance(lp, NumeraireCertificate) else None
    iterates, rays = extension_fixed_point(g, C, config.max_rounds)
    if rays:
        raise ClosureInvariantError(f"ray {encode_rv(rays[0])} emitted under a numeraire certificate")
    if cert is not None:
        for body in iterates:
            for f in body.points:
                if not in_superset_K(cert.q, g, f):
                    raise ClosureInvariantError(f"generator {encode_rv(f)} escapes K")
    return Bounded(iterates[-1], cert, iterates, len(iterates), lp)


def _dominating_combination(g, points):
    """Convex weights of a point above g with maximal total mass, or None if g is maximal."""
    k, n = len(points), len(g)
    rows = [ratlp.Constraint(tuple([ONE] * k), ratlp.EQ, ONE)]
    for i in range(n):
        rows.append(ratlp.Constraint(tuple(p[i] for p in points), ratlp.GE, g[i]))
    objective = tuple(sum(p, ZERO) for p in points)
    out = ratlp.solve(ratlp.LinearProgram(k, tuple(rows), objective))
    if not isinstance(out, ratlp.Optimal) or out.value == sum(g, ZERO):
        return None
    return out.x


def _witness_search(g, C: ConvexBody, lp, config: ClosureConfig) -> ClosureResult:
    steps: list[Step] = []
    origin: dict[Rv, int] = {}

    def record(step: Step) -> int:
        steps.append(step)
        return len(steps) - 1

    def done(terminal: int, rounds: int) -> Unbounded:
        return Unbounded(_extract_chain(steps, terminal), rounds, lp)

    if C.rays:
        return done(record(Step("body-ray", C.rays[0], index=0)), 0)
    for idx, p in enumerate(C.points):
        if p not in origin:
            origin[p] = record(Step("generator", p, index=idx))

    cap = config.norm_cap
    if cap is None:
        cap = Fraction(2**20) * max(max(sup_norm(p) for p in C.points), ONE)
    current = sorted(origin)
    max_norm = max(sup_norm(p) for p in current)

    for rnd in range(1, config.max_rounds + 1):
        # a generator above g gives the ray directly
        for f in current:
            ext = cs3_extend(f, g)
            if isinstance(ext, Ray):
                return done(record(Step("ray", ext.ray, (origin[f],))), rnd)
        # so does any element of the current body above g
        weights = _dominating_combination(g, current)
        if weights is not None:
            srcs = tuple(origin[p] for p, w in zip(current, weights) if w)
            coeffs = tuple(w for w in weights if w)
            h = combine(coeffs, [steps[s].value for s in srcs])
            hk = record(Step("combination", h, srcs, coeffs))
            return done(record(Step("ray", sub(h, g), (hk,))), rnd)

        candidates: dict[Rv, int] = {}
        for f in current:
            ext = cs3_extend(f, g)
            if isinstance(ext, Point) and ext.point not in origin:
                candidates.setdefault(ext.point, record(Step("extend", ext.point, (origin[f],), (ext.delta,))))
        if config.midpoints:
            half = Fraction(1, 2)
            for a, b in combinations(current, 2):
                m = combine((half, half), [a, b])
                ext = cs3_extend(m, g)
                if isinstance(ext, Fixed):
                    continue
                mk = record(Step("combination", m, (origin[a], origin[b]), (half, half)))
                if isinstance(ext, Ray):
                    return done(record(Step("ray", ext.ray, (mk,))), rnd)
                if ext.point not in origin:
                    candidates.setdefault(ext.point, record(Step("extend", ext.point, (mk,), (ext.delta,))))
        if not candidates:
            return Inconclusive(rnd, max_norm, False, lp, len(current))
        merged = prune(ConvexBody(tuple(current) + tuple(sorted(candidates))))
        for p in merged.points:
            if p not in origin:
                origin[p] = candidates[p]
        nxt = list(merged.points)
        max_norm = max(max_norm, max(sup_norm(p) for p in nxt))
        if max_norm > cap:
            return Inconclusive(rnd, max_norm, True, lp, len(nxt))
        if nxt == current:
            return Inconclusive(rnd, max_norm, False, lp, len(nxt))
        current = nxt
    return Inconclusive(config.max_rounds, max_norm, False, lp, len(current))


# ---------------------------------------------------------------------------
# cross-check


@dataclass(frozen=True)
class ConsistencyReport:
    lp_verdict: str  # feasible | infeasible | trivial
    closure_verdict: str
    status: str  # consistent | unresolved | inconsistent
    certificate_verified: bool
    chain_verified: bool | None = None
    containment_verified: bool | None = None
    g_maximal_in_fixed_point: bool | None = None
    closure: ClosureResult | None = field(default=None, compare=False)

    @property
    def consistent(self) -> bool:
        return self.status == "consistent"

    def to_json(self) -> dict:
        return {
            "lp_verdict": self.lp_verdict,
            "closure_verdict": self.closure_verdict,
            "status": self.status,
            "consistent": self.consistent,
            "certificate_verified": self.certificate_verified,
            "chain_verified": self.chain_verified,
            "containment_verified": self.containment_verified,
            "g_maximal_in_fixed_point": self.g_maximal_in_fixed_point,
        }


def verify_theorem(g, C: ConvexBody, config: ClosureConfig = ClosureConfig()) -> ConsistencyReport:
    """Run the LP and the closure and check that they tell the same story."""
    g = tuple(g)
    res = cs_closure(g, C, config)
    lp = res.lp
    if isinstance(lp, TrivialCase):
        return ConsistencyReport("trivial", res.verdict, "consistent" if isinstance(res, Bounded) else "inconsistent", True, closure=res)
    if isinstance(lp, NumeraireCertificate):
        cert_ok = verify_certificate(lp.q, g, C)
        if not isinstance(res, Bounded):
            return ConsistencyReport("feasible", res.verdict, "inconsistent", cert_ok, closure=res)
        contained = all(in_superset_K(lp.q, g, f) for body in res.iterates for f in body.points + body.rays)
        contained = contained and not any(body.rays for body in res.iterates)
        maximal, _ = is_maximal(g, res.body)
        status = "consistent" if cert_ok and contained and maximal else "inconsistent"
        return ConsistencyReport("feasible", "bounded", status, cert_ok, None, contained, maximal, closure=res)
    cert_ok = verify_not_numeraire(g, C, lp.farkas)
    if isinstance(res, Unbounded):
        chain_ok = verify_chain(res.chain, g, C)
        status = "consistent" if cert_ok and chain_ok else "inconsistent"
        return ConsistencyReport("infeasible", "unbounded", status, cert_ok, chain_ok, closure=res)
    if isinstance(res, Inconclusive):
        return ConsistencyReport("infeasible", "inconclusive", "unresolved" if cert_ok else "inconsistent", cert_ok, closure=res)
    return ConsistencyReport("infeasible", res.verdict, "inconsistent", cert_ok, closure=res)
