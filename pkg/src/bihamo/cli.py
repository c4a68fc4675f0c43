"""Command-line front-end: expressions, pencil files, commands and reports."""

from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import dataclass
from fractions import Fraction

from .coeff import coeff_ring, format_coeff
from .cohomology import SliceSpec, UnsupportedCoefficient, cohomology_dim
from .functionals import DeformationCoeffs, central_invariants, kdv_deformation
from .jet import Element, slice_basis
from .operators import OperatorId, make_operator, parse_operator
from .pencil import PencilData, WitnessMismatch, validate_ferapontov

SCHEMA = "bihamo-report/1"


# -- expressions -----------------------------------------------------------------------

class ExprSyntaxError(SyntaxError):
    def __init__(self, msg: str, pos: int):
        super().__init__(f"{msg} at position {pos}")
        self.pos = pos


class UnknownVariable(ValueError):
    pass


class LambdaDenominator(ValueError):
    pass


@dataclass(frozen=True)
class Num:
    value: int


@dataclass(frozen=True)
class Var:
    index: int  # 0 stands for lambda


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: object
    right: object


@dataclass(frozen=True)
class Pow:
    base: object
    exp: int


def Add(a, b):
    return BinOp("+", a, b)


def Sub(a, b):
    return BinOp("-", a, b)


def Mul(a, b):
    return BinOp("*", a, b)


def Div(a, b):
    return BinOp("/", a, b)


_TOKEN = re.compile(r"\s*(?:(\d+)|(lambda|u\d+)|(\*\*|[-+*/^()]))")


def _tokenize(src: str):
    pos = 0
    out = []
    while pos < len(src):
        if src[pos:].strip() == "":
            break
        m = _TOKEN.match(src, pos)
        if not m:
            start = pos + len(src[pos:]) - len(src[pos:].lstrip())
            raise ExprSyntaxError(f"unexpected character {src[start]!r}", start)
        start = m.start(m.lastindex)
        if m.group(1):
            out.append(("num", int(m.group(1)), start))
        elif m.group(2):
            out.append(("var", m.group(2), start))
        else:
            tok = "^" if m.group(3) == "**" else m.group(3)
            out.append(("op", tok, start))
        pos = m.end()
    out.append(("end", None, len(src)))
    return out


class _Parser:
    def __init__(self, src: str, N: int):
        self.toks = _tokenize(src)
        self.i = 0
        self.N = N

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        self.i += 1
        return t

    def accept(self, op):
        t = self.peek()
        if t[0] == "op" and t[1] == op:
            self.i += 1
            return True
        return False

    def expect(self, op):
        if not self.accept(op):
            t = self.peek()
            raise ExprSyntaxError(f"expected {op!r}", t[2])

    def expr(self):
        node = self.term()
        while True:
            t = self.peek()
            if t[0] == "op" and t[1] in "+-":
                self.take()
                node = BinOp(t[1], node, self.term())
            else:
                return node

    def term(self):
        node = self.unary()
        while True:
            t = self.peek()
            if t[0] == "op" and t[1] in "*/":
                self.take()
                node = BinOp(t[1], node, self.unary())
            else:
                return node

    def unary(self):
        if self.accept("-"):
            return Neg(self.unary())
        if self.accept("+"):
            return self.unary()
        return self.power()

    def power(self):
        node = self.atom()
        while self.accept("^"):
            sign = -1 if self.accept("-") else 1
            t = self.take()
            if t[0] != "num":
                raise ExprSyntaxError("integer exponent expected", t[2])
            node = Pow(node, sign * t[1])
        return node

    def atom(self):
        t = self.take()
        if t[0] == "num":
            return Num(t[1])
        if t[0] == "var":
            if t[1] == "lambda":
                return Var(0)
            k = int(t[1][1:])
            if not 1 <= k <= self.N:
                raise UnknownVariable(f"{t[1]} at position {t[2]} (N = {self.N})")
            return Var(k)
        if t[0] == "op" and t[1] == "(":
            node = self.expr()
            self.expect(")")
            return node
        if t[0] == "end":
            raise ExprSyntaxError("unexpected end of input", t[2])
        raise ExprSyntaxError(f"unexpected {t[1]!r}", t[2])


def _has_lambda(node) -> bool:
    if isinstance(node, Var):
        return node.index == 0
    if isinstance(node, Num):
        return False
    if isinstance(node, Neg):
        return _has_lambda(node.arg)
    if isinstance(node, Pow):
        return _has_lambda(node.base)
    return _has_lambda(node.left) or _has_lambda(node.right)


def _check_lambda(node):
    if isinstance(node, BinOp):
        if node.op == "/" and _has_lambda(node.right):
            raise LambdaDenominator("lambda appears in a denominator")
        _check_lambda(node.left)
        _check_lambda(node.right)
    elif isinstance(node, Neg):
        _check_lambda(node.arg)
    elif isinstance(node, Pow):
        if node.exp < 0 and _has_lambda(node.base):
            raise LambdaDenominator("negative power of an expression with lambda")
        _check_lambda(node.base)


def parse_expr(src: str, N: int):
    p = _Parser(src, N)
    node = p.expr()
    t = p.peek()
    if t[0] != "end":
        raise ExprSyntaxError(f"unexpected {t[1]!r}", t[2])
    _check_lambda(node)
    return node


def format_expr(node) -> str:
    """Fully parenthesized text that parses back to the same tree."""
    if isinstance(node, Num):
        return str(node.value)
    if isinstance(node, Var):
        return "lambda" if node.index == 0 else f"u{node.index}"
    if isinstance(node, Neg):
        return f"(-{format_expr(node.arg)})"
    if isinstance(node, Pow):
        return f"({format_expr(node.base)})^{node.exp}"
    return f"({format_expr(node.left)} {node.op} {format_expr(node.right)})"


def eval_expr(node, ring):
    if isinstance(node, Num):
        return ring.convert(node.value)
    if isinstance(node, Var):
        return ring.lam if node.index == 0 else ring.u(node.index)
    if isinstance(node, Neg):
        return -eval_expr(node.arg, ring)
    if isinstance(node, Pow):
        b = eval_expr(node.base, ring)
        return b**node.exp if node.exp >= 0 else (b**-node.exp).inverse()
    a = eval_expr(node.left, ring)
    b = eval_expr(node.right, ring)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    return a / b


# -- pencil files ------------------------------------------------------------------------

class PencilFileError(ValueError):
    pass


@dataclass
class PencilFile:
    N: int
    mode: str
    f: dict
    h: dict
    A: dict

    def pencil(self) -> PencilData:
        if self.mode == "formal":
            return PencilData.formal(self.N)
        ring = coeff_ring(self.N)
        fs = [eval_expr(self.f[i], ring) for i in range(1, self.N + 1)]
        hs = None
        if self.h:
            if set(self.h) != set(range(1, self.N + 1)):
                raise PencilFileError("give either all witnesses h1..hN or none")
            hs = [eval_expr(self.h[i], ring) for i in range(1, self.N + 1)]
        return PencilData.concrete(self.N, fs, hs)

    def deformation(self) -> DeformationCoeffs:
        ring = coeff_ring(self.N)
        return DeformationCoeffs(self.N, {k: eval_expr(v, ring) for k, v in self.A.items()})


_A_KEY = re.compile(r"A\[(\d+)\]\[(\d+)\]\[(\d+)\]\[(\d+)\]\[(\d+)\]")


def parse_pencil_text(text: str) -> PencilFile:
    entries = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise PencilFileError(f"line {lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        entries.append((lineno, key, val))
    N = None
    mode = "concrete"
    for lineno, key, val in entries:
        if key == "N":
            if not val.isdigit() or int(val) < 1:
                raise PencilFileError(f"line {lineno}: N must be a positive integer")
            N = int(val)
        elif key == "mode":
            if val not in ("concrete", "formal"):
                raise PencilFileError(f"line {lineno}: mode must be concrete or formal")
            mode = val
    if N is None:
        raise PencilFileError("missing 'N = ...'")
    f, h, A = {}, {}, {}
    for lineno, key, val in entries:
        if key in ("N", "mode"):
            continue
        try:
            m = re.fullmatch(r"([fh])(\d+)", key)
            if m:
                i = int(m.group(2))
                if not 1 <= i <= N:
                    raise PencilFileError(f"line {lineno}: index {i} out of range")
                (f if m.group(1) == "f" else h)[i] = parse_expr(val, N)
                continue
            m = _A_KEY.fullmatch(key)
            if m:
                k, l, a, i, j = (int(x) for x in m.groups())
                if not (1 <= i <= N and 1 <= j <= N):
                    raise PencilFileError(f"line {lineno}: index out of range in {key}")
                A[(k, l, a, i, j)] = parse_expr(val, N)
                continue
        except (ExprSyntaxError, UnknownVariable, LambdaDenominator) as e:
            raise PencilFileError(f"line {lineno}: {e}") from e
        raise PencilFileError(f"line {lineno}: unknown key {key!r}")
    if mode == "concrete" and set(f) != set(range(1, N + 1)):
        raise PencilFileError("a concrete pencil needs f1..fN")
    return PencilFile(N, mode, f, h, A)


def load_pencil_file(path: str) -> PencilFile:
    with open(path, encoding="utf-8") as fh:
        return parse_pencil_text(fh.read())


# -- reports -----------------------------------------------------------------------------

@dataclass
class Report:
    command: str
    status: str  # pass | fail | ok
    columns: list
    rows: list
    fields: dict

    def tsv(self) -> str:
        lines = [f"# {k}\t{v}" for k, v in self.fields.items()]
        if self.columns:
            lines.append("# " + "\t".join(self.columns))
        lines += ["\t".join(str(x) for x in r) for r in self.rows]
        return "\n".join(lines) + "\n"

    def structured(self) -> str:
        doc = {
            "schema": SCHEMA,
            "command": self.command,
            "status": self.status,
            "fields": {k: str(v) for k, v in self.fields.items()},
            "columns": self.columns,
            "rows": [[str(x) for x in r] for r in self.rows],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _fmt(c) -> str:
    if isinstance(c, Fraction):
        return str(c)
    return format_coeff(c)


def cmd_validate(args) -> Report:
    p = load_pencil_file(args.file).pencil()
    if p.mode == "formal":
        return Report("validate", "pass", ["equation", "indices", "residual"], [],
                      {"note": "formal pencils satisfy the equations by construction"})
    rep = validate_ferapontov(p)
    rows = [(eq, ",".join(map(str, idx)), _fmt(v)) for eq, idx, v in rep.residuals if v or args.all]
    return Report("validate", "pass" if rep.passed else "fail", ["equation", "indices", "residual"], rows,
                  {"N": p.N, "checked": len(rep.residuals), "failed": len(rep.failures())})


def cmd_nilpotency(args) -> Report:
    pf = load_pencil_file(args.file)
    p = PencilData.formal(pf.N) if args.formal else pf.pencil()
    D = make_operator(OperatorId("D_lambda"), p)
    rows = []
    n = 0
    for m in slice_basis(args.p, args.d, p.N):
        n += 1
        r = D(D(Element(p.ring, {m: p.ring.one})))
        if r:
            rows.append((str(m), str(r)))
    return Report("nilpotency", "fail" if rows else "pass", ["basis_element", "D_lambda^2"], rows,
                  {"N": p.N, "p": args.p, "d": args.d, "mode": p.mode, "checked": n, "failed": len(rows)})


def _space(args):
    s = args.space
    m = re.fullmatch(r"dC(\d*|i)", s)
    if s == "A":
        return "A_full", None
    if s == "F":
        return "F_hat", None
    if s == "C":
        return "C_hat", None
    if m:
        idx = args.index if m.group(1) in ("", "i") else int(m.group(1))
        if idx is None:
            raise PencilFileError("--space dCi needs --index")
        return "dC_i", idx
    raise PencilFileError(f"unknown space {s!r}")


def cmd_cohomology(args) -> Report:
    p = load_pencil_file(args.file).pencil()
    space, idx = _space(args)
    diff = parse_operator(args.diff)
    spec = SliceSpec(args.p, args.d, args.K, args.L, space, diff, idx)
    rep = cohomology_dim(spec, None, p, box=not args.no_box)
    rows = [(r.K, r.L, r.box_ker, r.box_im, r.box, r.interior) for r in rep.rows]
    fields = {"N": p.N, "p": args.p, "d": args.d, "space": space, "differential": args.diff,
              "exact": rep.exact, "stabilized": rep.stabilized, "interior_dim": rep.interior(),
              "boundary_classes": len(rep.boundary)}
    return Report("cohomology", "ok", ["K", "L", "box_ker", "box_im", "box_dim", "interior_dim"], rows, fields)


def _invariants_report(p, A, command) -> Report:
    ci = central_invariants(p, A)
    rows = [(f"c{i}", _fmt(c)) for i, c in enumerate(ci.c, start=1)]
    fields = {"N": p.N, "depends_only_on_own": ci.depends_only_on_own}
    if ci.violations:
        fields["violations"] = " ".join(f"d{j}c{i}" for i, j in ci.violations)
    return Report(command, "pass" if ci.depends_only_on_own else "fail", ["invariant", "value"], rows, fields)


def cmd_central(args) -> Report:
    pf = load_pencil_file(args.file)
    return _invariants_report(pf.pencil(), pf.deformation(), "central-invariants")


def cmd_basis(args) -> Report:
    rows = [(str(m),) for m in slice_basis(args.p, args.d, args.N)]
    return Report("basis", "ok", [], rows, {})


def cmd_kdv(args) -> Report:
    return _invariants_report(PencilData.constant(1), kdv_deformation(), "kdv-demo")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bihamo", description="Exact computations for Poisson pencils of hydrodynamic type.")
    ap.add_argument("--format", choices=("tsv", "structured"), default="tsv")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="check the Ferapontov equations")
    s.add_argument("file")
    s.add_argument("--all", action="store_true", help="list zero residuals too")
    s.set_defaults(fn=cmd_validate)

    s = sub.add_parser("nilpotency", help="check D_lambda^2 = 0 on a slice basis")
    s.add_argument("file")
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--formal", action="store_true")
    s.set_defaults(fn=cmd_nilpotency)

    s = sub.add_parser("cohomology", help="truncated slice cohomology")
    s.add_argument("file")
    s.add_argument("--space", default="A")
    s.add_argument("--index", type=int)
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--K", type=int, required=True)
    s.add_argument("--L", type=int, required=True)
    s.add_argument("--diff", default="D_lambda")
    s.add_argument("--no-box", action="store_true", help="skip the raw box-window numbers")
    s.set_defaults(fn=cmd_cohomology)

    s = sub.add_parser("central-invariants", help="central invariants of a deformation")
    s.add_argument("file")
    s.set_defaults(fn=cmd_central)

    s = sub.add_parser("basis", help="list a slice basis")
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--N", type=int, required=True)
    s.set_defaults(fn=cmd_basis)

    s = sub.add_parser("kdv-demo", help="central invariant of the KdV pencil")
    s.set_defaults(fn=cmd_kdv)
    return ap


USAGE_ERRORS = (PencilFileError, ExprSyntaxError, UnknownVariable, LambdaDenominator, WitnessMismatch,
                UnsupportedCoefficient, OSError, ValueError, IndexError)


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code else 0
    try:
        rep = args.fn(args)
    except USAGE_ERRORS as e:
        print(f"bihamo: error: {e}", file=sys.stderr)
        return 2
    out = rep.structured() if args.format == "structured" else rep.tsv()
    sys.stdout.write(out)
    return 1 if rep.status == "fail" else 0


def entry() -> None:
    sys.exit(main())
