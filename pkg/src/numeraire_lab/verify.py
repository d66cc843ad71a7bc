"""Solver-free re-verification of emitted reports.

Only :mod:`numeraire_lab.core` and exact rational arithmetic are used here:
every claim a report makes is replayed from its JSON, never re-solved.
A report block is checked when it carries a body (``{"points", "rays"}``)
and a payoff ``g``; nested blocks inherit the nearest enclosing context.
"""

from __future__ import annotations

from fractions import Fraction

from .core import ZERO, ConvexBody, combine, decode_rv, dominates, is_nonnegative, parse_rational, sub


def _dot(a, b) -> Fraction:
    return sum((x * y for x, y in zip(a, b)), ZERO)


def _ratio(g, f):
    return tuple(f[i] / g[i] if g[i] > 0 else ZERO for i in range(len(g)))


def check_certificate(q, g, body: ConvexBody) -> bool:
    """q is a strictly positive probability with E_q[f/g | g>0] <= 1 on every generator."""
    n = len(g)
    if len(q) != n or any(v <= 0 for v in q) or sum(q) != 1 or not any(g):
        return False
    if any(f[i] > 0 for f in body.points + body.rays for i in range(n) if g[i] == 0):
        return False
    mass = sum((q[i] for i in range(n) if g[i] > 0), ZERO)
    return all(_dot(q, _ratio(g, f)) <= mass for f in body.points) and all(
        _dot(q, _ratio(g, r)) <= 0 for r in body.rays
    )


def check_farkas(g, body: ConvexBody, y) -> bool:
    """Multipliers proving that no strictly positive q satisfies the numéraire rows.

    Layout of ``y``: ``sum q = 1`` (free), one entry per point and per ray
    (``>= 0``), one ``q_j - eps >= 0`` row per atom (``<= 0``), and
    ``eps <= 1`` (``>= 0``).  The combination must be nonnegative on q, at
    least 1 on eps, and have nonpositive right-hand side.
    """
    n, k, r = len(g), len(body.points), len(body.rays)
    y = tuple(y)
    if len(y) != 1 + k + r + n + 1:
        return False
    y_pts, y_rays = y[1 : 1 + k], y[1 + k : 1 + k + r]
    y_strict, y_cap = y[1 + k + r : -1], y[-1]
    if any(v < 0 for v in y_pts + y_rays) or any(v > 0 for v in y_strict) or y_cap < 0:
        return False
    on = [1 if a > 0 else 0 for a in g]
    combo = [y[0] + y_strict[j] for j in range(n)]
    for w, f in zip(y_pts, body.points):
        rho = _ratio(g, f)
        for j in range(n):
            combo[j] += w * (rho[j] - on[j])
    for w, d in zip(y_rays, body.rays):
        rho = _ratio(g, d)
        for j in range(n):
            combo[j] += w * rho[j]
    eps = -sum(y_strict, ZERO) + y_cap
    return all(v >= 0 for v in combo) and eps >= 1 and y[0] + y_cap <= 0


def _extend(f, g, delta):
    return tuple((1 + delta) * a - delta * b for a, b in zip(f, g))


def check_chain(chain, g, body: ConvexBody) -> bool:
    """Replay a closure derivation ending in a nonzero nonnegative ray."""
    if not chain:
        return False
    terminal = ("ray", "body-ray")
    values = []
    for k, step in enumerate(chain):
        kind = step["kind"]
        v = decode_rv(step["value"])
        srcs = list(step.get("sources", []))
        coeffs = [parse_rational(c) for c in step.get("coeffs", [])]
        if any(not 0 <= s < k or chain[s]["kind"] in terminal for s in srcs):
            return False
        if kind in ("generator", "body-ray"):
            pool = body.points if kind == "generator" else body.rays
            i = step.get("index")
            if not isinstance(i, int) or not 0 <= i < len(pool) or pool[i] != v:
                return False
        elif kind == "combination":
            if not srcs or len(coeffs) != len(srcs) or any(c < 0 for c in coeffs) or sum(coeffs) != 1:
                return False
            if combine(coeffs, [values[s] for s in srcs]) != v:
                return False
        elif kind == "extend":
            if len(srcs) != 1 or len(coeffs) != 1 or coeffs[0] < 0:
                return False
            if _extend(values[srcs[0]], g, coeffs[0]) != v or not is_nonnegative(v):
                return False
        elif kind == "ray":
            if len(srcs) != 1 or not dominates(values[srcs[0]], g) or sub(values[srcs[0]], g) != v:
                return False
        else:
            return False
        values.append(v)
    return chain[-1]["kind"] in terminal and is_nonnegative(values[-1]) and any(values[-1])


def check_representation(f, body: ConvexBody, lam, mu) -> bool:
    """f = sum lam_i p_i + sum mu_j r_j with lam a probability vector and mu >= 0."""
    if len(lam) != len(body.points) or len(mu) != len(body.rays):
        return False
    if any(v < 0 for v in lam) or sum(lam) != 1 or any(v < 0 for v in mu):
        return False
    total = combine(list(lam) + list(mu), list(body.points) + list(body.rays))
    return total == tuple(f)


def check_dominator(g, body: ConvexBody, block) -> bool:
    h = decode_rv(block["value"])
    lam, mu = decode_rv(block["lambda"]), decode_rv(block.get("mu", []))
    return h != tuple(g) and dominates(h, g) and check_representation(h, body, lam, mu)


def check_not_strictly_positive(g, body: ConvexBody, atoms) -> bool:
    return bool(atoms) and all(
        g[i] == 0 and any(f[i] > 0 for f in body.points + body.rays) for i in atoms
    )


def verify_report(doc) -> list[dict]:
    """Every check found in ``doc``: ``{"path", "kind", "ok"}`` in document order."""
    out: list[dict] = []

    def walk(node, path, ctx):
        if isinstance(node, list):
            for i, item in enumerate(node):
                walk(item, f"{path}[{i}]", ctx)
            return
        if not isinstance(node, dict):
            return
        if isinstance(node.get("body"), dict) and "points" in node["body"] and "g" in node:
            ctx = (decode_rv(node["g"]), ConvexBody.from_json(node["body"]))
        if ctx is not None:
            g, body = ctx

            def record(kind, ok):
                out.append({"path": path or "$", "kind": kind, "ok": bool(ok)})

            if isinstance(node.get("q"), list):
                record("certificate", check_certificate(decode_rv(node["q"]), g, body))
            if isinstance(node.get("farkas"), list):
                record("farkas", check_farkas(g, body, decode_rv(node["farkas"])))
            if isinstance(node.get("chain"), list):
                record("chain", check_chain(node["chain"], g, body))
            if isinstance(node.get("dominator"), dict):
                record("dominator", check_dominator(g, body, node["dominator"]))
            if isinstance(node.get("not_strictly_positive"), list):
                record("not-strictly-positive", check_not_strictly_positive(g, body, node["not_strictly_positive"]))
        for key, value in node.items():
            if key in ("body", "chain", "g"):
                continue
            walk(value, f"{path}.{key}" if path else key, ctx)

    walk(doc, "", None)
    return out
