"""Finite probability spaces, random variables and polyhedral bodies.

Random variables are plain tuples of :class:`~fractions.Fraction`, one entry
per atom.  A :class:`ConvexBody` is ``conv(points) + cone(rays)`` inside the
nonnegative orthant.  Nothing here touches floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Iterable, Sequence

from . import ratlp

Rv = tuple  # tuple[Fraction, ...]

ZERO = Fraction(0)
ONE = Fraction(1)


class DimensionError(ValueError):
    pass


# ---------------------------------------------------------------------------
# rationals and JSON encodings


def parse_rational(value) -> Fraction:
    """Read an exact rational from an int, a Fraction or a string like ``"3/4"``.

    Floats are refused: they are not exact.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational: {value!r}") from exc
    if isinstance(value, float):
        raise TypeError(f"floats are not accepted, write {value!r} as a string fraction")
    raise TypeError(f"cannot read a rational from {type(value).__name__}")


def format_rational(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def rv(*values) -> Rv:
    """``rv(1, "1/2")`` -> ``(Fraction(1), Fraction(1, 2))``."""
    if len(values) == 1 and isinstance(values[0], (list, tuple)):
        values = values[0]
    return tuple(parse_rational(v) for v in values)


def encode_rv(f: Sequence[Fraction]) -> list[str]:
    return [format_rational(v) for v in f]


def decode_rv(data) -> Rv:
    if not isinstance(data, list):
        raise ValueError("a random variable is encoded as a JSON array")
    return tuple(parse_rational(v) for v in data)


def ones(n: int) -> Rv:
    return (ONE,) * n


def zeros(n: int) -> Rv:
    return (ZERO,) * n


def add(f, h) -> Rv:
    _same_length(f, h)
    return tuple(a + b for a, b in zip(f, h))


def sub(f, h) -> Rv:
    _same_length(f, h)
    return tuple(a - b for a, b in zip(f, h))


def scale(c, f) -> Rv:
    c = Fraction(c)
    return tuple(c * a for a in f)


def combine(weights: Sequence[Fraction], vectors: Sequence[Rv]) -> Rv:
    if not vectors:
        raise ValueError("empty combination")
    out = [ZERO] * len(vectors[0])
    for w, v in zip(weights, vectors):
        if w:
            for i, a in enumerate(v):
                out[i] += w * a
    return tuple(out)


def is_nonnegative(f) -> bool:
    return all(a >= 0 for a in f)


def dominates(h, f) -> bool:
    """h >= f on every atom."""
    return all(a >= b for a, b in zip(h, f))


def sup_norm(f) -> Fraction:
    return max((abs(a) for a in f), default=ZERO)


def primitive(f) -> Rv:
    """Positive rescaling of a nonzero vector to coprime integer entries."""
    den = reduce(math.lcm, (a.denominator for a in f), 1)
    ints = [a.numerator * (den // a.denominator) for a in f]
    g = reduce(math.gcd, (abs(a) for a in ints), 0)
    if g == 0:
        raise ValueError("zero vector has no primitive form")
    return tuple(Fraction(a // g) for a in ints)


def _same_length(f, h):
    if len(f) != len(h):
        raise DimensionError(f"dimension mismatch: {len(f)} vs {len(h)}")


# ---------------------------------------------------------------------------
# spaces and measures


@dataclass(frozen=True)
class FiniteProbSpace:
    p: tuple[Fraction, ...]

    def __post_init__(self):
        if not self.p:
            raise ValueError("a probability space needs at least one atom")
        if any(v <= 0 for v in self.p):
            raise ValueError("reference probabilities must be strictly positive")
        if sum(self.p) != 1:
            raise ValueError("reference probabilities must sum to 1")

    @property
    def n(self) -> int:
        return len(self.p)

    @classmethod
    def uniform(cls, n: int) -> "FiniteProbSpace":
        return cls((Fraction(1, n),) * n)

    def to_json(self) -> dict:
        return {"p": encode_rv(self.p)}

    @classmethod
    def from_json(cls, data) -> "FiniteProbSpace":
        return cls(decode_rv(data["p"]))


def check_probability(q) -> None:
    if any(v <= 0 for v in q) or sum(q) != 1:
        raise ValueError("expected a strictly positive probability vector")


@dataclass(frozen=True)
class Measure:
    weights: tuple[Fraction, ...]

    def __post_init__(self):
        if any(w < 0 for w in self.weights):
            raise ValueError("measure weights must be nonnegative")

    @property
    def is_equivalent(self) -> bool:
        return all(w > 0 for w in self.weights)

    def integrate(self, f) -> Fraction:
        _same_length(f, self.weights)
        return sum((a * w for a, w in zip(f, self.weights)), ZERO)

    def mass(self, atoms: Iterable[int]) -> Fraction:
        return sum((self.weights[i] for i in atoms), ZERO)


def dist_q(f, h, q) -> Fraction:
    """Expected truncated distance ``sum_i q_i * min(|f_i - h_i|, 1)``."""
    _same_length(f, h)
    _same_length(f, q)
    return sum((qi * min(abs(a - b), ONE) for a, b, qi in zip(f, h, q)), ZERO)


# ---------------------------------------------------------------------------
# convex bodies


@dataclass(frozen=True)
class ConvexBody:
    points: tuple[Rv, ...]
    rays: tuple[Rv, ...] = ()

    def __post_init__(self):
        if not self.points:
            raise ValueError("a convex body needs at least one point")
        n = len(self.points[0])
        if n == 0:
            raise ValueError("random variables need at least one atom")
        for v in self.points + self.rays:
            if len(v) != n:
                raise DimensionError("generators of different lengths")
            if not is_nonnegative(v):
                raise ValueError(f"generator {encode_rv(v)} leaves the nonnegative orthant")
        for r in self.rays:
            if not any(r):
                raise ValueError("rays must be nonzero")

    @property
    def n(self) -> int:
        return len(self.points[0])

    @classmethod
    def of(cls, points, rays=()) -> "ConvexBody":
        return cls(tuple(rv(p) for p in points), tuple(rv(r) for r in rays))

    def to_json(self) -> dict:
        return {"points": [encode_rv(p) for p in self.points], "rays": [encode_rv(r) for r in self.rays]}

    @classmethod
    def from_json(cls, data) -> "ConvexBody":
        if not isinstance(data, dict) or "points" not in data:
            raise ValueError('a convex body is encoded as {"points": [...], "rays": [...]}')
        return cls(tuple(decode_rv(p) for p in data["points"]), tuple(decode_rv(r) for r in data.get("rays", [])))


def _membership_lp(points: Sequence[Rv], rays: Sequence[Rv], f: Rv) -> ratlp.LinearProgram:
    k, r = len(points), len(rays)
    rows = [ratlp.Constraint(tuple([ONE] * k + [ZERO] * r), ratlp.EQ, ONE)]
    for i in range(len(f)):
        coeffs = tuple(p[i] for p in points) + tuple(d[i] for d in rays)
        rows.append(ratlp.Constraint(coeffs, ratlp.EQ, f[i]))
    return ratlp.LinearProgram(k + r, tuple(rows), tuple([ZERO] * (k + r)))


def _cone_lp(rays: Sequence[Rv], f: Rv) -> ratlp.LinearProgram:
    rows = [ratlp.Constraint(tuple(d[i] for d in rays), ratlp.EQ, f[i]) for i in range(len(f))]
    return ratlp.LinearProgram(len(rays), tuple(rows), tuple([ZERO] * len(rays)))


def representation(C: ConvexBody, f) -> tuple[tuple[Fraction, ...], tuple[Fraction, ...]] | None:
    """Weights ``(lam, mu)`` with ``f = lam @ points + mu @ rays``, or None."""
    _same_length(C.points[0], f)
    out = ratlp.solve(_membership_lp(C.points, C.rays, tuple(f)))
    if isinstance(out, ratlp.Infeasible):
        return None
    k = len(C.points)
    return out.x[:k], out.x[k:]


def contains(C: ConvexBody, f) -> bool:
    return representation(C, f) is not None


def is_bounded(C: ConvexBody) -> bool:
    # on finitely many atoms the body is bounded in probability iff it has no recession direction
    return not C.rays


def prune(C: ConvexBody) -> ConvexBody:
    """Irredundant generators of the same set, in lexicographic order."""
    rays = sorted({primitive(r) for r in C.rays})
    kept_rays: list[Rv] = list(rays)
    for r in rays:
        others = [d for d in kept_rays if d != r]
        if others and not isinstance(ratlp.solve(_cone_lp(others, r)), ratlp.Infeasible):
            kept_rays = others
    points = sorted(set(C.points))
    kept: list[Rv] = list(points)
    for p in points:
        others = [v for v in kept if v != p]
        if others and not isinstance(ratlp.solve(_membership_lp(others, kept_rays, p)), ratlp.Infeasible):
            kept = others
    return ConvexBody(tuple(kept), tuple(kept_rays))
