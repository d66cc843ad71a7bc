"""Random instances, the simplex-grid oracle and the cross-validation harness.

Instance ``i`` of a corpus is generated from its own SplitMix64 stream seeded
with ``splitmix64(seed + i * 0x9E3779B97F4A7C15)``; the k-th draw of a
stream is the standard SplitMix64 output.  Another implementation using the
same draws in the same order (see :func:`generate_instance`) reproduces the
corpus exactly.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce

from .closure import Bounded, ClosureConfig, verify_theorem
from .core import ZERO, ConvexBody, Rv, encode_rv
from .numeraire import NumeraireCertificate, in_superset_K, is_numeraire, numeraire_problem
from .prooflab import run_pipeline

log = logging.getLogger(__name__)

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK

    def next(self) -> int:
        self.state = (self.state + GOLDEN) & MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        return z ^ (z >> 31)

    def below(self, n: int) -> int:
        return self.next() % n

    def rational(self, max_den: int, max_value: int) -> Fraction:
        den = 1 + self.below(max_den)
        return Fraction(self.below(max_value * den + 1), den)


def instance_stream(seed: int, index: int) -> SplitMix64:
    return SplitMix64(SplitMix64((seed + index * GOLDEN) & MASK).next())


@dataclass(frozen=True)
class Instance:
    index: int
    g: Rv
    body: ConvexBody

    def to_json(self) -> dict:
        return {"index": self.index, "g": encode_rv(self.g), "body": self.body.to_json()}


def generate_instance(seed: int, index: int, max_atoms: int = 6, max_gens: int = 8, max_den: int = 16) -> Instance:
    """Draw order: n, k, entries row by row, g-mode, g-choice, ray flag, ray entries.

    Entries are zero with probability 1/5, otherwise ``a/d`` with
    ``d <= max_den`` and value at most 4.  Half of the instances take g as
    the maximiser of random positive weights (so g is maximal), the rest
    pick a generator uniformly.  Coordinates where g vanishes are zeroed in
    every generator so that g is strictly positive on the body.
    """
    rng = instance_stream(seed, index)
    n = 1 + rng.below(max_atoms)
    k = 1 + rng.below(max_gens)
    pts = []
    for _ in range(k):
        row = []
        for _ in range(n):
            row.append(ZERO if rng.below(5) == 0 else rng.rational(max_den, 4))
        pts.append(tuple(row))
    if rng.below(2) == 0:
        w = [1 + rng.below(8) for _ in range(n)]
        score = [sum(a * b for a, b in zip(w, p)) for p in pts]
        gi = score.index(max(score))
    else:
        gi = rng.below(k)
    g = pts[gi]
    zero = [i for i in range(n) if g[i] == 0]
    pts = [tuple(ZERO if i in zero else a for i, a in enumerate(p)) for p in pts]
    rays = []
    if rng.below(10) == 0:
        r = tuple(ZERO if i in zero else rng.rational(max_den, 2) for i in range(n))
        if any(r):
            rays.append(r)
    return Instance(index, pts[gi], ConvexBody(tuple(pts), tuple(rays)))


# ---------------------------------------------------------------------------
# grid oracle


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for a in range(1, total - parts + 2):
        for rest in _compositions(total - a, parts - 1):
            yield (a,) + rest


def grid_search(g, C: ConvexBody, mesh: int = 128) -> tuple[Fraction, ...] | None:
    """First q on the open simplex grid of step ``1/mesh`` meeting the numéraire rows.

    Independent of the LP engine: rows are turned into integer vectors and
    every interior grid point is tested.
    """
    prob = numeraire_problem(tuple(g), C)
    rows = []
    for row in prob.constraints[1:]:
        den = reduce(math.lcm, (c.denominator for c in row.coeffs), 1)
        rows.append(tuple(int(c * den) for c in row.coeffs))
    n = len(g)
    if n > 3:
        raise ValueError("the grid oracle is meant for at most 3 atoms")
    for a in _compositions(mesh, n):
        if all(sum(c * x for c, x in zip(row, a)) <= 0 for row in rows):
            return tuple(Fraction(x, mesh) for x in a)
    return None


@dataclass(frozen=True)
class OracleComparison:
    lp_feasible: bool
    epsilon: Fraction | None
    grid_point: tuple[Fraction, ...] | None
    margin: Fraction

    @property
    def inside_margin(self) -> bool:
        """Cases the oracle is expected to decide: LP infeasible, or eps* above the margin."""
        return not self.lp_feasible or self.epsilon > self.margin

    @property
    def agrees(self) -> bool:
        return self.lp_feasible == (self.grid_point is not None)

    def to_json(self) -> dict:
        return {
            "lp_feasible": self.lp_feasible,
            "epsilon": str(self.epsilon) if self.epsilon is not None else None,
            "grid_point": encode_rv(self.grid_point) if self.grid_point else None,
            "agrees": self.agrees,
            "inside_margin": self.inside_margin,
        }


def compare_with_oracle(g, C: ConvexBody, mesh: int = 128, margin: Fraction = Fraction(1, 64)) -> OracleComparison:
    out = is_numeraire(tuple(g), C)
    feasible = isinstance(out, NumeraireCertificate)
    return OracleComparison(feasible, out.epsilon if feasible else None, grid_search(g, C, mesh), margin)


# ---------------------------------------------------------------------------
# harness


def evaluate(inst: Instance, config: ClosureConfig = ClosureConfig(), pipeline: bool = False) -> dict:
    rep = verify_theorem(inst.g, inst.body, config)
    rec = {
        "index": inst.index,
        "atoms": inst.body.n,
        "generators": len(inst.body.points) + len(inst.body.rays),
        "lp": rep.lp_verdict,
        "closure": rep.closure_verdict,
        "status": rep.status,
    }
    res = rep.closure
    if rep.lp_verdict == "feasible" and isinstance(res, Bounded):
        q = res.certificate.q
        gens = [f for body in res.iterates for f in body.points + body.rays]
        rec["k_checked"] = len(gens)
        rec["k_failures"] = sum(not in_superset_K(q, inst.g, f) for f in gens)
        if pipeline:
            pr = run_pipeline(inst.g, inst.body)
            rec["pipeline"] = "passed" if pr.passed else (pr.first_failure or "no-certificate")
    if rep.status == "inconsistent":
        rec["instance"] = inst.to_json()
    return rec


def _evaluate_index(args):
    seed, index, atoms, gens, config, pipeline = args
    return evaluate(generate_instance(seed, index, atoms, gens), config, pipeline)


def jobs_from_env(default: int) -> int:
    value = os.environ.get("NUMERAIRE_LAB_JOBS")
    if value:
        return max(1, int(value))
    return max(1, default)


def run_fuzz(seed=1, count=100, atoms=6, gens=8, jobs=1, config=ClosureConfig(), pipeline=False) -> tuple[dict, list[dict]]:
    """Cross-validate ``count`` instances; returns ``(summary, records)`` sorted by index."""
    tasks = [(seed, i, atoms, gens, config, pipeline) for i in range(count)]
    if jobs > 1 and count > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_evaluate_index, tasks, chunksize=max(1, count // (4 * jobs))))
    else:
        records = [_evaluate_index(t) for t in tasks]
    records.sort(key=lambda r: r["index"])
    return summarize(seed, count, atoms, gens, records), records


def summarize(seed, count, atoms, gens, records) -> dict:
    status = {"consistent": 0, "unresolved": 0, "inconsistent": 0}
    lp = {"feasible": 0, "infeasible": 0, "trivial": 0}
    for r in records:
        status[r["status"]] += 1
        lp[r["lp"]] += 1
    infeasible = lp["infeasible"]
    summary = {
        "seed": seed,
        "count": count,
        "atoms": atoms,
        "generators": gens,
        "status": status,
        "lp": lp,
        "unresolved_share_of_infeasible": str(Fraction(status["unresolved"], infeasible)) if infeasible else "0",
        "k_checked": sum(r.get("k_checked", 0) for r in records),
        "k_failures": sum(r.get("k_failures", 0) for r in records),
        "inconsistent_instances": [r["instance"] for r in records if r["status"] == "inconsistent"],
    }
    piped = [r["pipeline"] for r in records if "pipeline" in r]
    if piped:
        summary["pipeline"] = {"run": len(piped), "passed": piped.count("passed")}
    return summary
