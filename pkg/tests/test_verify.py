import ast
from fractions import Fraction
from pathlib import Path

from numeraire_lab import verify
from numeraire_lab.closure import cs_closure
from numeraire_lab.core import ConvexBody, encode_rv, rv
from numeraire_lab.fuzz import generate_instance
from numeraire_lab.numeraire import NotNumeraire, NumeraireCertificate, is_numeraire, verify_not_numeraire

F = Fraction
SEGMENT = ConvexBody.of([[1, 1], [2, 0]])
DOMINATED = ConvexBody.of([[1, 1], [2, 1]])


def test_module_uses_core_only():
    tree = ast.parse(Path(verify.__file__).read_text())
    imported = {node.module for node in ast.walk(tree) if isinstance(node, ast.ImportFrom)}
    imported |= {alias.name for node in ast.walk(tree) if isinstance(node, ast.Import) for alias in node.names}
    assert imported <= {"__future__", "fractions", "core"}


def test_certificate_checks():
    assert verify.check_certificate(rv("1/2", "1/2"), rv(1, 1), SEGMENT)
    assert not verify.check_certificate(rv("3/4", "1/4"), rv(1, 1), SEGMENT)
    assert not verify.check_certificate(rv(1, 0), rv(1, 1), SEGMENT)


def test_farkas_agrees_with_solver_side_check():
    seen = 0
    for i in range(150):
        inst = generate_instance(41, i)
        out = is_numeraire(inst.g, inst.body)
        if isinstance(out, NotNumeraire):
            seen += 1
            assert verify.check_farkas(inst.g, inst.body, out.farkas)
            assert verify_not_numeraire(inst.g, inst.body, out.farkas)
            broken = (out.farkas[0] + 1,) + out.farkas[1:]
            assert verify.check_farkas(inst.g, inst.body, broken) == verify_not_numeraire(inst.g, inst.body, broken)
        elif isinstance(out, NumeraireCertificate):
            assert verify.check_certificate(out.q, inst.g, inst.body)
    assert seen > 20


def test_chain_replay_matches_closure():
    res = cs_closure(rv(1, 1), DOMINATED)
    chain = res.to_json()["chain"]
    assert verify.check_chain(chain, rv(1, 1), DOMINATED)
    chain[-1] = {**chain[-1], "value": ["1", "1"]}
    assert not verify.check_chain(chain, rv(1, 1), DOMINATED)


def test_report_walk():
    doc = {
        "result": {
            "g": ["1", "1"],
            "body": SEGMENT.to_json(),
            "certificate": {"q": ["1/2", "1/2"]},
            "nested": {"lp": {"q": ["9/10", "1/10"]}},
        }
    }
    checks = verify.verify_report(doc)
    assert [c["ok"] for c in checks] == [True, False]
    assert checks[1]["path"] == "result.nested.lp"


def test_dominator_block():
    block = {"value": ["2", "1"], "lambda": ["0", "1"], "mu": []}
    assert verify.check_dominator(rv(1, 1), DOMINATED, block)
    assert not verify.check_dominator(rv(1, 1), DOMINATED, {**block, "lambda": ["1/2", "1/2"]})


def test_not_strictly_positive_claim():
    C = ConvexBody.of([[2, 0], [1, 1]])
    assert verify.check_not_strictly_positive(rv(2, 0), C, [1])
    assert not verify.check_not_strictly_positive(rv(2, 0), C, [0])
    assert encode_rv(rv(2, 0)) == ["2", "0"]
