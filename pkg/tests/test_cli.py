import json
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bihamo.cli import (
    BinOp,
    ExprSyntaxError,
    LambdaDenominator,
    Neg,
    Num,
    Pow,
    UnknownVariable,
    Var,
    format_expr,
    main,
    parse_expr,
    parse_pencil_text,
)

HERE = Path(__file__).parent
GOLDEN = HERE / "golden"
DATA = HERE / "data"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# -- expressions --------------------------------------------------------------------------

def test_parse_examples():
    assert parse_expr("u1 - lambda", 2) == BinOp("-", Var(1), Var(0))
    node = parse_expr("(u1-u2)^2/ (u1*u2)", 2)
    assert node == BinOp("/", Pow(BinOp("-", Var(1), Var(2)), 2), BinOp("*", Var(1), Var(2)))
    assert parse_expr("u1**-2", 1) == Pow(Var(1), -2)


def test_parse_errors():
    with pytest.raises(UnknownVariable):
        parse_expr("u3", 2)
    with pytest.raises(LambdaDenominator):
        parse_expr("1/lambda", 2)
    with pytest.raises(LambdaDenominator):
        parse_expr("(u1 - lambda)^-1", 2)
    with pytest.raises(ExprSyntaxError) as e:
        parse_expr("u1 +* 2", 2)
    assert e.value.pos == 4


_leaf = st.one_of(st.integers(0, 20).map(Num), st.integers(1, 3).map(Var))
_tree = st.recursive(
    _leaf,
    lambda kids: st.one_of(
        kids.map(Neg),
        st.builds(Pow, kids, st.integers(0, 3)),
        st.builds(BinOp, st.sampled_from("+-*"), kids, kids),
    ),
    max_leaves=8,
)


@settings(max_examples=200)
@given(_tree)
def test_format_parse_round_trip(node):
    assert parse_expr(format_expr(node), 3) == node


def test_pencil_file_parse():
    pf = parse_pencil_text((DATA / "crafted.txt").read_text())
    assert pf.N == 2 and pf.mode == "concrete"
    assert set(pf.f) == {1, 2} and set(pf.h) == {1, 2}
    kdv = parse_pencil_text((DATA / "kdv.txt").read_text())
    assert list(kdv.A) == [(2, 3, 2, 1, 1)]


# -- exit codes ----------------------------------------------------------------------------

def test_exit_codes(capsys, tmp_path):
    assert run(capsys, "kdv-demo")[0] == 0
    assert run(capsys, "validate", str(DATA / "crafted.txt"))[0] == 1
    assert run(capsys, "central-invariants", str(DATA / "dependent.txt"))[0] == 1
    assert run(capsys, "nosuchcommand")[0] == 2
    bad = tmp_path / "bad.txt"
    bad.write_text("N = 1\nmode = concrete\nf1 = 1/(u1 - lambda)\n")
    code, _, err = run(capsys, "validate", str(bad))
    assert code == 2 and "lambda" in err
    mism = tmp_path / "mism.txt"
    mism.write_text("N = 1\nmode = concrete\nf1 = 4\nh1 = 3\n")
    assert run(capsys, "validate", str(mism))[0] == 2
    assert run(capsys, "validate", str(tmp_path / "missing.txt"))[0] == 2


def test_formal_nilpotency_command(capsys):
    code, out, _ = run(capsys, "nilpotency", str(DATA / "formal2.txt"), "--p", "1", "--d", "1", "--formal")
    assert code == 0
    assert "# failed\t0" in out


# -- golden outputs -----------------------------------------------------------------------

@pytest.mark.parametrize("argv,name", [
    (["kdv-demo"], "kdv_demo.tsv"),
    (["--format", "structured", "kdv-demo"], "kdv_demo.json"),
    (["basis", "--p", "3", "--d", "3", "--N", "1"], "basis_3_3_1.tsv"),
    (["validate", str(DATA / "crafted.txt")], "validate_crafted.tsv"),
])
def test_golden(capsys, argv, name):
    _, out, _ = run(capsys, *argv)
    assert out == (GOLDEN / name).read_text()


def test_structured_report_shape(capsys):
    _, out, _ = run(capsys, "--format", "structured", "kdv-demo")
    doc = json.loads(out)
    assert doc["status"] == "pass"
    assert doc["rows"] == [["c1", "1/24"]]


def test_kdv_file_matches_demo(capsys):
    _, a, _ = run(capsys, "central-invariants", str(DATA / "kdv.txt"))
    _, b, _ = run(capsys, "kdv-demo")
    assert a.splitlines()[-1] == b.splitlines()[-1] == "c1\t1/24"
