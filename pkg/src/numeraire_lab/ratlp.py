"""Exact rational linear programming with checkable certificates.

A dense two-phase tableau simplex over :class:`fractions.Fraction` using
Bland's rule throughout, so it cannot cycle.  Every outcome carries a
certificate that can be re-checked by plain matrix arithmetic:

* ``Optimal``    -- primal point plus dual multipliers with equal objective.
* ``Unbounded``  -- feasible point plus an improving recession direction.
* ``Infeasible`` -- Farkas multipliers combining the constraints into
  ``0 <= negative``.

Tableau arithmetic runs on ``gmpy2.mpq`` when available and on
``Fraction`` otherwise; inputs and outputs are always ``Fraction``.

All decision variables are nonnegative.  A free variable has to be split by
the caller.

Dual and Farkas multipliers ``y`` follow one sign convention: ``y_i >= 0`` on
``<=`` rows, ``y_i <= 0`` on ``>=`` rows, free on ``==`` rows, so that
``y @ (A x) <= y @ b`` for every feasible ``x``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

try:  # C rationals make the tableau several times faster; results are identical
    from gmpy2 import mpq as _Q
except ImportError:  # pragma: no cover
    _Q = Fraction

LE, EQ, GE = "<=", "==", ">="
RELATIONS = (LE, EQ, GE)

ZERO = Fraction(0)
ONE = Fraction(1)


class MalformedProblem(ValueError):
    pass


@dataclass(frozen=True)
class Constraint:
    coeffs: tuple[Fraction, ...]
    relation: str
    rhs: Fraction


def constraint(coeffs: Sequence, relation: str, rhs) -> Constraint:
    if relation not in RELATIONS:
        raise MalformedProblem(f"unknown relation {relation!r}")
    return Constraint(tuple(Fraction(c) for c in coeffs), relation, Fraction(rhs))


@dataclass(frozen=True)
class LinearProgram:
    """``sense`` c.x subject to the constraints and x >= 0."""

    num_vars: int
    constraints: tuple[Constraint, ...]
    objective: tuple[Fraction, ...]
    sense: str = "max"

    def __post_init__(self):
        if self.num_vars < 0:
            raise MalformedProblem("negative variable count")
        if self.sense not in ("max", "min"):
            raise MalformedProblem(f"unknown sense {self.sense!r}")
        if len(self.objective) != self.num_vars:
            raise MalformedProblem("objective length does not match variable count")
        for k, row in enumerate(self.constraints):
            if len(row.coeffs) != self.num_vars:
                raise MalformedProblem(f"constraint {k} has {len(row.coeffs)} coefficients, expected {self.num_vars}")
            if row.relation not in RELATIONS:
                raise MalformedProblem(f"constraint {k}: unknown relation {row.relation!r}")


def linear_program(num_vars: int, constraints: Sequence[Constraint], objective=None, sense="max") -> LinearProgram:
    if objective is None:
        objective = [0] * num_vars
    return LinearProgram(num_vars, tuple(constraints), tuple(Fraction(c) for c in objective), sense)


@dataclass(frozen=True)
class Optimal:
    x: tuple[Fraction, ...]
    value: Fraction
    # multipliers certifying optimality of the max-form problem (c negated for "min")
    duals: tuple[Fraction, ...]


@dataclass(frozen=True)
class Unbounded:
    x: tuple[Fraction, ...]
    ray: tuple[Fraction, ...]


@dataclass(frozen=True)
class Infeasible:
    farkas: tuple[Fraction, ...]


@dataclass(frozen=True)
class Feasible:
    x: tuple[Fraction, ...]
    epsilon: Fraction


SolveOutcome = Union[Optimal, Unbounded, Infeasible]
StrictOutcome = Union[Feasible, Infeasible]


@dataclass(frozen=True)
class StrictFeasibilityProblem:
    """Find x >= 0 meeting ``constraints`` with ``x_j > 0`` for j in ``strict_vars``."""

    num_vars: int
    constraints: tuple[Constraint, ...]
    strict_vars: tuple[int, ...]

    def __post_init__(self):
        if not self.strict_vars:
            raise MalformedProblem("strict_vars must be nonempty")
        for j in self.strict_vars:
            if not 0 <= j < self.num_vars:
                raise MalformedProblem(f"strict variable {j} out of range")
        for k, row in enumerate(self.constraints):
            if len(row.coeffs) != self.num_vars:
                raise MalformedProblem(f"constraint {k} has wrong length")


def strict_problem(num_vars: int, constraints: Sequence[Constraint], strict_vars=None) -> StrictFeasibilityProblem:
    if strict_vars is None:
        strict_vars = range(num_vars)
    return StrictFeasibilityProblem(num_vars, tuple(constraints), tuple(sorted(set(strict_vars))))


# ---------------------------------------------------------------------------
# tableau simplex


class _Tableau:
    """Standard form ``A x + s + a = b`` with b >= 0, one artificial per row.

    The artificial block starts as the identity, so its current columns are
    B^-1 and its reduced costs give the simplex multipliers directly.
    """

    def __init__(self, lp: LinearProgram):
        m = len(lp.constraints)
        n = lp.num_vars
        self.m, self.n = m, n
        zero, one = _Q(0), _Q(1)
        self.signs = []
        slack_rows = [i for i, row in enumerate(lp.constraints) if row.relation != EQ]
        self.slack_col = {}
        for k, i in enumerate(slack_rows):
            self.slack_col[i] = n + k
        self.art_start = n + len(slack_rows)
        self.ncols = self.art_start + m
        rows = []
        for i, row in enumerate(lp.constraints):
            sign = -1 if row.rhs < 0 else 1
            self.signs.append(sign)
            relation = row.relation
            if sign < 0 and relation != EQ:
                relation = GE if relation == LE else LE
            t = [zero] * (self.ncols + 1)
            for j, c in enumerate(row.coeffs):
                if c:
                    t[j] = _Q(c) * sign
            if relation == LE:
                t[self.slack_col[i]] = one
            elif relation == GE:
                t[self.slack_col[i]] = -one
            t[self.art_start + i] = one
            t[-1] = _Q(row.rhs) * sign
            rows.append(t)
        self.T = rows
        self.basis = [self.art_start + i for i in range(m)]
        self.costs = [zero] * self.ncols
        self.reduced = [zero] * self.ncols
        self.value = zero

    def set_costs(self, costs):
        self.costs = [_Q(c) for c in costs]
        cb = [self.costs[b] for b in self.basis]
        red = list(self.costs)
        value = _Q(0)
        for i, row in enumerate(self.T):
            c = cb[i]
            if c:
                for j in range(self.ncols):
                    if row[j]:
                        red[j] -= c * row[j]
                value += c * row[-1]
        self.reduced = red
        self.value = value

    def pivot(self, r: int, c: int):
        row = self.T[r]
        piv = row[c]
        if piv != 1:
            inv = 1 / piv
            self.T[r] = row = [v * inv if v else v for v in row]
        nz = [j for j, v in enumerate(row) if v]
        for i, other in enumerate(self.T):
            if i == r:
                continue
            f = other[c]
            if f:
                for j in nz:
                    other[j] -= f * row[j]
        f = self.reduced[c]
        if f:
            for j in nz:
                if j < self.ncols:
                    self.reduced[j] -= f * row[j]
            self.value += f * row[-1]
        self.basis[r] = c

    def run(self) -> int | None:
        """Bland's rule on the current costs.  Returns an unbounded column or None."""
        while True:
            entering = next((j for j in range(self.art_start) if self.reduced[j] > 0), None)
            if entering is None:
                return None
            best = None
            for i, row in enumerate(self.T):
                a = row[entering]
                if a > 0:
                    key = (row[-1] / a, self.basis[i])
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                return entering
            self.pivot(best[1], entering)

    def drive_out_artificials(self):
        for i in range(self.m):
            if self.basis[i] >= self.art_start:
                row = self.T[i]
                j = next((j for j in range(self.art_start) if row[j]), None)
                if j is not None:
                    self.pivot(i, j)

    def primal(self) -> list[Fraction]:
        x = [ZERO] * self.ncols
        for i, b in enumerate(self.basis):
            x[b] = _fraction(self.T[i][-1])
        return x

    def multipliers(self) -> tuple[Fraction, ...]:
        """Simplex multipliers mapped back to the caller's row orientation."""
        out = []
        for i in range(self.m):
            k = self.art_start + i
            y = self.costs[k] - self.reduced[k]
            out.append(_fraction(y * self.signs[i]))
        return tuple(out)


def _fraction(x) -> Fraction:
    return Fraction(int(x.numerator), int(x.denominator))


def solve(lp: LinearProgram) -> SolveOutcome:
    """Solve ``lp`` exactly.

    >>> lp = linear_program(1, [constraint([1], "<=", 1)], [1])
    >>> solve(lp)
    Optimal(x=(Fraction(1, 1),), value=Fraction(1, 1), duals=(Fraction(1, 1),))
    """
    if not isinstance(lp, LinearProgram):
        raise MalformedProblem("expected a LinearProgram")
    tab = _Tableau(lp)
    n = lp.num_vars

    phase1 = [ZERO] * tab.ncols
    for k in range(tab.art_start, tab.ncols):
        phase1[k] = -ONE
    tab.set_costs(phase1)
    tab.run()
    if tab.value < 0:
        return Infeasible(tab.multipliers())

    tab.drive_out_artificials()
    c = lp.objective if lp.sense == "max" else tuple(-v for v in lp.objective)
    tab.set_costs(list(c) + [ZERO] * (tab.ncols - n))
    col = tab.run()
    x = tab.primal()
    if col is not None:
        ray = [ZERO] * tab.ncols
        ray[col] = ONE
        for i, b in enumerate(tab.basis):
            ray[b] = -_fraction(tab.T[i][col])
        return Unbounded(tuple(x[:n]), tuple(ray[:n]))
    point = tuple(x[:n])
    value = sum((a * b for a, b in zip(lp.objective, point)), ZERO)
    return Optimal(point, value, tab.multipliers())


# ---------------------------------------------------------------------------
# strict feasibility


def strict_lp(p: StrictFeasibilityProblem) -> LinearProgram:
    """The slack-maximisation LP behind :func:`solve_strict`.

    Variables are ``x`` followed by ``eps``.  Rows: the base constraints,
    then ``x_j - eps >= 0`` for each strict variable, then ``eps <= 1``.
    """
    n = p.num_vars
    rows = [Constraint(row.coeffs + (ZERO,), row.relation, row.rhs) for row in p.constraints]
    for j in p.strict_vars:
        coeffs = [ZERO] * (n + 1)
        coeffs[j] = ONE
        coeffs[n] = -ONE
        rows.append(Constraint(tuple(coeffs), GE, ZERO))
    rows.append(Constraint(tuple([ZERO] * n + [ONE]), LE, ONE))
    return LinearProgram(n + 1, tuple(rows), tuple([ZERO] * n + [ONE]), "max")


def solve_strict(p: StrictFeasibilityProblem) -> StrictOutcome:
    """Find a solution with the strict variables bounded away from zero.

    Maximises the common lower bound ``eps`` (capped at 1).  A positive
    optimum yields ``Feasible``; otherwise the returned multipliers ``y`` on
    the rows of :func:`strict_lp` satisfy ``y @ A >= e_eps`` and
    ``y @ b <= 0``, which forces ``eps <= 0`` on every feasible point.
    """
    if not isinstance(p, StrictFeasibilityProblem):
        raise MalformedProblem("expected a StrictFeasibilityProblem")
    lp = strict_lp(p)
    out = solve(lp)
    if isinstance(out, Optimal):
        if out.value > 0:
            return Feasible(out.x[:-1], out.value)
        return Infeasible(out.duals)
    if isinstance(out, Infeasible):
        # base system empty: y @ A >= 0, y @ b < 0.  Rescale and add the eps <= 1 row.
        y = list(out.farkas)
        yb = _dot(y, [row.rhs for row in lp.constraints])
        scale = 1 / -yb
        y = [v * scale for v in y]
        y[-1] += ONE
        return Infeasible(tuple(y))
    raise AssertionError("eps is capped, the strict LP cannot be unbounded")


# ---------------------------------------------------------------------------
# certificate checks (pure arithmetic, no solving)


def _dot(a, b) -> Fraction:
    return sum((x * y for x, y in zip(a, b)), ZERO)


def _row_combination(lp: LinearProgram, y) -> list[Fraction]:
    out = [ZERO] * lp.num_vars
    for yi, row in zip(y, lp.constraints):
        if yi:
            for j, a in enumerate(row.coeffs):
                if a:
                    out[j] += yi * a
    return out


def _signs_ok(lp: LinearProgram, y) -> bool:
    if len(y) != len(lp.constraints):
        return False
    for yi, row in zip(y, lp.constraints):
        if row.relation == LE and yi < 0:
            return False
        if row.relation == GE and yi > 0:
            return False
    return True


def is_feasible_point(lp: LinearProgram, x) -> bool:
    if len(x) != lp.num_vars or any(v < 0 for v in x):
        return False
    for row in lp.constraints:
        lhs = _dot(row.coeffs, x)
        if row.relation == LE and not lhs <= row.rhs:
            return False
        if row.relation == GE and not lhs >= row.rhs:
            return False
        if row.relation == EQ and lhs != row.rhs:
            return False
    return True


def verify_farkas(lp: LinearProgram, y) -> bool:
    """True iff ``y`` proves the constraint system of ``lp`` empty."""
    if not _signs_ok(lp, y):
        return False
    combo = _row_combination(lp, y)
    return all(v >= 0 for v in combo) and _dot(y, [r.rhs for r in lp.constraints]) < 0


def verify_outcome(lp: LinearProgram, out: SolveOutcome) -> bool:
    if isinstance(out, Infeasible):
        return verify_farkas(lp, out.farkas)
    c = lp.objective if lp.sense == "max" else tuple(-v for v in lp.objective)
    if isinstance(out, Unbounded):
        if not is_feasible_point(lp, out.x) or any(v < 0 for v in out.ray):
            return False
        for row in lp.constraints:
            d = _dot(row.coeffs, out.ray)
            if (row.relation == LE and d > 0) or (row.relation == GE and d < 0) or (row.relation == EQ and d != 0):
                return False
        return _dot(c, out.ray) > 0
    if isinstance(out, Optimal):
        if not is_feasible_point(lp, out.x) or not _signs_ok(lp, out.duals):
            return False
        if out.value != _dot(lp.objective, out.x):
            return False
        combo = _row_combination(lp, out.duals)
        if any(a < cj for a, cj in zip(combo, c)):
            return False
        return _dot(out.duals, [r.rhs for r in lp.constraints]) == _dot(c, out.x)
    return False


def verify_strict(p: StrictFeasibilityProblem, out: StrictOutcome) -> bool:
    if isinstance(out, Feasible):
        base = LinearProgram(p.num_vars, p.constraints, tuple([ZERO] * p.num_vars))
        if not is_feasible_point(base, out.x) or not out.epsilon > 0:
            return False
        return all(out.x[j] >= out.epsilon for j in p.strict_vars)
    if isinstance(out, Infeasible):
        lp = strict_lp(p)
        y = out.farkas
        if not _signs_ok(lp, y):
            return False
        combo = _row_combination(lp, y)
        if any(v < 0 for v in combo[:-1]) or combo[-1] < 1:
            return False
        return _dot(y, [r.rhs for r in lp.constraints]) <= 0
    return False
