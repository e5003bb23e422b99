"""Textual PRA front end.

Grammar (``#`` starts a comment)::

    program := header item*
    header  := "params" ident* ";" "space" "(" ident ("," ident)* ")" ":" bounds ";"
    bounds  := cmp ("," cmp)*                   # must be the box 0 <= i_l < N_l
    item    := ("input" | "output") ident ("," ident)* ";" | stmt
    stmt    := label ":" ref "=" expr ("if" cond)? ";"
    ref     := ident "[" affine ("," affine)* "]"   # each index is i_l - d
    expr    := term (("+" | "-") term)*
    term    := factor ("*" factor)*
    factor  := int | ref | "(" expr ")"
    cond    := cmp ("&&" cmp)*
    cmp     := affine (relop affine)+             # chains allowed: 0 <= i < N

Example::

    S7: sA_star[i0,i1] = sA[i0,i1-1] if i1 >= 1;
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache

from .constraints import Constraint, ConstraintSystem
from .polynomial import Polynomial
from .pra import (
    INPUT,
    INTERNAL,
    OUTPUT,
    BinOp,
    Const,
    Copy,
    Parameter,
    Program,
    Statement,
    VariableRef,
)


class DSLError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0, expected: str | None = None):
        self.message = message
        self.line = line
        self.col = col
        self.expected = expected
        where = f"line {line}, column {col}: " if line else ""
        tail = f" (expected {expected})" if expected else ""
        super().__init__(f"{where}{message}{tail}")


_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<int>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>&&|==|<=|>=|<|>|=|\+|-|\*|\^|\(|\)|\[|\]|,|;|:)
    """,
    re.VERBOSE,
)

_KEYWORDS = {"params", "space", "input", "output", "if"}
_RELOPS = {"==", "<", "<=", ">", ">="}


@dataclass
class Token:
    kind: str  # int | ident | op | kw | eof
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise DSLError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        s = m.group()
        if kind != "ws":
            if kind == "ident" and s in _KEYWORDS:
                kind = "kw"
            tokens.append(Token(kind, s, line, pos - line_start + 1))
        for k, ch in enumerate(s):
            if ch == "\n":
                line += 1
                line_start = pos + k + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        # identifier scope for affine expressions; None means anything goes
        self.scope: set | None = None
        self.affine_only = True

    # token helpers ------------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("op", "kw")

    def advance(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"unexpected {self.describe(self.tok)}", f"'{text}'")
        return self.advance()

    def expect_kind(self, kind: str, what: str) -> Token:
        if self.tok.kind != kind:
            self.error(f"unexpected {self.describe(self.tok)}", what)
        return self.advance()

    def error(self, message: str, expected: str | None = None, tok: Token | None = None):
        tok = tok or self.tok
        raise DSLError(message, tok.line, tok.col, expected)

    @staticmethod
    def describe(t: Token) -> str:
        return "end of input" if t.kind == "eof" else f"'{t.text}'"

    # polynomial / affine expressions -----------------------------------
    def poly_expr(self) -> Polynomial:
        acc = self.poly_term()
        while self.at("+") or self.at("-"):
            op = self.advance().text
            rhs = self.poly_term()
            acc = acc + rhs if op == "+" else acc - rhs
        return acc

    def poly_term(self) -> Polynomial:
        acc = self.poly_unary()
        while self.at("*"):
            self.advance()
            acc = acc * self.poly_unary()
        return acc

    def poly_unary(self) -> Polynomial:
        if self.at("-"):
            self.advance()
            return -self.poly_unary()
        base = self.poly_atom()
        if self.at("^"):
            self.advance()
            e = int(self.expect_kind("int", "integer exponent").text)
            out = Polynomial.const(1)
            for _ in range(e):
                out = out * base
            return out
        return base

    def poly_atom(self) -> Polynomial:
        t = self.tok
        if t.kind == "int":
            self.advance()
            return Polynomial.const(int(t.text))
        if t.kind == "ident":
            self.advance()
            if self.scope is not None and t.text not in self.scope:
                self.error(f"unknown identifier '{t.text}'", tok=t)
            return Polynomial.var(t.text)
        if self.at("("):
            self.advance()
            e = self.poly_expr()
            self.expect(")")
            return e
        self.error(f"unexpected {self.describe(t)}", "integer, identifier or '('")

    def comparison(self) -> list[Constraint]:
        start = self.tok
        items = [self.poly_expr()]
        ops = []
        while self.tok.kind == "op" and self.tok.text in _RELOPS:
            ops.append(self.advance().text)
            items.append(self.poly_expr())
        if not ops:
            self.error(f"unexpected {self.describe(self.tok)}", "comparison operator", )
        out = []
        for op, a, b in zip(ops, items, items[1:]):
            out.append(_relation(op, a, b))
        for c in out:
            if self.affine_only and not c.expr.is_affine():
                self.error("non-affine constraint", tok=start)
        return out

    def condition(self) -> list[Constraint]:
        cs = self.comparison()
        while self.at("&&"):
            self.advance()
            cs += self.comparison()
        return cs


def _relation(op: str, a: Polynomial, b: Polynomial) -> Constraint:
    return {
        "==": Constraint.eq,
        "<": Constraint.lt,
        "<=": Constraint.le,
        ">": Constraint.gt,
        ">=": Constraint.ge,
    }[op](a, b)


# public entry points ---------------------------------------------------------


@lru_cache(maxsize=65536)
def parse_polynomial(text: str) -> Polynomial:
    p = _Parser(text)
    e = p.poly_expr()
    if p.tok.kind != "eof":
        p.error(f"unexpected {p.describe(p.tok)}", "end of expression")
    return e


@lru_cache(maxsize=65536)
def parse_constraint_text(text: str) -> Constraint:
    """Parse one comparison (polynomial sides allowed, as in tiled
    condition spaces); chains must yield one constraint."""
    p = _Parser(text)
    p.affine_only = False
    cs = p.condition()
    if p.tok.kind != "eof" or len(cs) != 1:
        p.error("expected a single comparison")
    return cs[0]


@dataclass
class _RawRef:
    name: str
    indices: list
    tok: Token


def parse_pra(text: str) -> Program:
    p = _Parser(text)

    # header
    p.expect("params")
    params = []
    while p.tok.kind == "ident":
        params.append(p.advance().text)
    p.expect(";")
    if len(set(params)) != len(params):
        p.error("duplicate parameter name")
    p.expect("space")
    p.expect("(")
    iter_vars = [p.expect_kind("ident", "iteration variable").text]
    while p.at(","):
        p.advance()
        iter_vars.append(p.expect_kind("ident", "iteration variable").text)
    p.expect(")")
    p.expect(":")
    if set(iter_vars) & set(params) or len(set(iter_vars)) != len(iter_vars):
        p.error("iteration variable names must be distinct from each other and from parameters")
    p.scope = set(iter_vars) | set(params)
    bounds_tok = p.tok
    bound_cs = p.comparison()
    while p.at(","):
        p.advance()
        bound_cs += p.comparison()
    p.expect(";")
    upper = _box_bounds(bound_cs, iter_vars, p, bounds_tok)

    inputs, outputs = [], []
    raw_statements = []
    while p.tok.kind != "eof":
        if p.at("input") or p.at("output"):
            target = inputs if p.advance().text == "input" else outputs
            target.append(p.expect_kind("ident", "variable name").text)
            while p.at(","):
                p.advance()
                target.append(p.expect_kind("ident", "variable name").text)
            p.expect(";")
            continue
        label_tok = p.expect_kind("ident", "statement label, 'input' or 'output'")
        p.expect(":")
        lhs = _raw_ref(p)
        p.expect("=")
        rhs = _rhs_expr(p)
        cond = []
        if p.at("if"):
            p.advance()
            cond = p.condition()
        p.expect(";")
        raw_statements.append((label_tok, lhs, rhs, cond))

    if not raw_statements:
        raise DSLError("empty statement list")
    inputs_set, outputs_set = frozenset(inputs), frozenset(outputs)
    n = len(iter_vars)

    def resolve(raw: _RawRef) -> VariableRef:
        role = INPUT if raw.name in inputs_set else OUTPUT if raw.name in outputs_set else INTERNAL
        dims, dep = [], [0] * n
        for idx in raw.indices:
            lin = idx.linear_part()
            ivars = [v for v in lin if v in iter_vars]
            others = [v for v in lin if v not in iter_vars]
            if others:
                p.error(f"non-constant dependence vector in {raw.name}", tok=raw.tok)
            if len(ivars) != 1 or lin[ivars[0]] != 1 or not idx.is_affine():
                p.error(f"index of {raw.name} must have the form i - d", tok=raw.tok)
            dim = iter_vars.index(ivars[0])
            if dim in dims:
                p.error(f"dimension {ivars[0]} indexed twice in {raw.name}", tok=raw.tok)
            dims.append(dim)
            dep[dim] = -idx.constant
        if role == INTERNAL and dims != list(range(n)):
            p.error(f"dimension mismatch: {raw.name} must be indexed by ({', '.join(iter_vars)})", tok=raw.tok)
        return VariableRef(raw.name, tuple(dep), role, tuple(dims))

    def build(e):
        if isinstance(e, _RawRef):
            return resolve(e)
        if isinstance(e, BinOp):
            return BinOp(e.op, build(e.left), build(e.right))
        if isinstance(e, Copy):
            return Copy(build(e.arg))
        return e

    statements = []
    for label_tok, lhs, rhs, cond in raw_statements:
        statements.append(
            Statement(label_tok.text, resolve(lhs), build(rhs), ConstraintSystem(tuple(iter_vars), tuple(cond)))
        )
    return Program(
        tuple(iter_vars),
        tuple(upper),
        tuple(Parameter(x) for x in params),
        tuple(statements),
        inputs_set,
        outputs_set,
    )


def _box_bounds(cs: list, iter_vars: list, p: _Parser, tok: Token) -> list:
    lower: dict = {}
    upper: dict = {}
    for c in cs:
        for part in c.split_eq():
            lin = part.expr.linear_part()
            ivars = [v for v in lin if v in iter_vars]
            if len(ivars) != 1 or abs(lin[ivars[0]]) != 1:
                p.error("iteration space must be a box 0 <= i_l < N_l", tok=tok)
            v = ivars[0]
            rest = part.expr - Polynomial.var(v, lin[v])
            if lin[v] == 1:
                if not (rest.is_constant() and rest.constant == 0) or v in lower:
                    p.error("iteration space must be a box 0 <= i_l < N_l", tok=tok)
                lower[v] = 0
            else:
                if v in upper:
                    p.error("iteration space must be a box 0 <= i_l < N_l", tok=tok)
                if rest.variables() & set(iter_vars):
                    p.error("iteration space must be a box 0 <= i_l < N_l", tok=tok)
                upper[v] = rest + 1
    for v in iter_vars:
        if v not in lower or v not in upper:
            p.error(f"missing bound for {v}: iteration space must be a box 0 <= i_l < N_l", tok=tok)
    return [upper[v] for v in iter_vars]


def _raw_ref(p: _Parser) -> _RawRef:
    t = p.expect_kind("ident", "variable reference")
    if not p.at("["):
        p.error(f"expected index list after '{t.text}'", "'['")
    p.advance()
    idx = [p.poly_expr()]
    while p.at(","):
        p.advance()
        idx.append(p.poly_expr())
    p.expect("]")
    return _RawRef(t.text, idx, t)


def _rhs_expr(p: _Parser):
    e = _expr(p)
    return Copy(e) if isinstance(e, _RawRef) else e


def _expr(p: _Parser):
    acc = _term(p)
    while p.at("+") or p.at("-"):
        op = "add" if p.advance().text == "+" else "sub"
        acc = BinOp(op, acc, _term(p))
    return acc


def _term(p: _Parser):
    acc = _factor(p)
    while p.at("*"):
        p.advance()
        acc = BinOp("mul", acc, _factor(p))
    return acc


def _factor(p: _Parser):
    t = p.tok
    if t.kind == "int":
        p.advance()
        return Const(int(t.text))
    if t.kind == "ident":
        return _raw_ref(p)
    if p.at("("):
        p.advance()
        e = _expr(p)
        p.expect(")")
        return e
    p.error(f"unexpected {p.describe(t)}", "integer, variable reference or '('")


# printing ---------------------------------------------------------------------


def format_ref(ref: VariableRef, iter_vars) -> str:
    parts = []
    for dim in ref.dims:
        d = ref.dependence[dim]
        v = iter_vars[dim]
        parts.append(v if d == 0 else f"{v} - {d}" if d > 0 else f"{v} + {-d}")
    return f"{ref.variable}[{', '.join(parts)}]"


def format_expr(e, iter_vars, parent: str | None = None, right: bool = False) -> str:
    if isinstance(e, Const):
        return str(e.value)
    if isinstance(e, VariableRef):
        return format_ref(e, iter_vars)
    if isinstance(e, Copy):
        return format_expr(e.arg, iter_vars)
    sym = {"add": "+", "sub": "-", "mul": "*"}[e.op]
    s = f"{format_expr(e.left, iter_vars, e.op)} {sym} {format_expr(e.right, iter_vars, e.op, True)}"
    additive = e.op in ("add", "sub")
    if parent == "mul" and additive or right and additive and parent in ("add", "sub") or right and parent == "mul":
        s = f"({s})"
    return s


def format_pra(program: Program) -> str:
    iv = program.iter_vars
    lines = [f"params {' '.join(program.param_names)};"]
    bounds = ", ".join(f"0 <= {v} < {ub}" for v, ub in zip(iv, program.upper_bounds))
    lines.append(f"space ({', '.join(iv)}): {bounds};")
    if program.inputs:
        lines.append(f"input {', '.join(sorted(program.inputs))};")
    if program.outputs:
        lines.append(f"output {', '.join(sorted(program.outputs))};")
    for s in program.statements:
        line = f"{s.label}: {format_ref(s.lhs, iv)} = {format_expr(s.rhs, iv)}"
        if s.condition.constraints:
            line += " if " + " && ".join(str(c) for c in s.condition.constraints)
        lines.append(line + ";")
    return "\n".join(lines) + "\n"
