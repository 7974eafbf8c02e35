"""Surface syntax: deterministic pretty-printing and parsing.

The grammar (EBNF, whitespace separates tokens; newlines are whitespace):

    program   := if_expr | or_expr
    if_expr   := "if" or_expr ":" or_expr
                 { "elif" or_expr ":" or_expr }
                 "else" ":" or_expr
    or_expr   := and_expr { "or" and_expr }
    and_expr  := not_expr { "and" not_expr }
    not_expr  := "not" not_expr | cmp_expr
    cmp_expr  := sum_expr [ ("<=" | ">") sum_expr ]      -- must be atom vs number
    sum_expr  := term { ("+" | "-") term }
    term      := factor { "*" factor }
    factor    := NUMBER | "-" NUMBER | "True" | "False" | NAME
               | "(" program ")"

Comparisons are atomic: the left side must name a feature and the right
side must be a numeric literal. NAME tokens may embed ``:`` and ``=``
(e.g. ``Diag:Other``, ``Insurance=None``) as long as the character after
them continues the name; a structural ``:`` is therefore always printed
with a trailing space. Binary operators associate left, so printing emits
parentheses only around right-nested operands of equal precedence and
around any operand of lower precedence. ``if`` expressions nested in an
operand or in a then-branch print parenthesized inline; chains nested in
the else-branch print as ``elif``.
"""

from __future__ import annotations

from .exprs import (
    Add,
    And,
    BoolAtom,
    BoolConst,
    Expr,
    ExprTypeError,
    IfThenElse,
    Mul,
    Not,
    Or,
    Predicate,
    RealAtom,
    RealConst,
    Sub,
    type_of,
)
from .schema import BOOLEAN, CATEGORICAL, NUMERIC, RESERVED, FeatureSchema


class ExprSyntaxError(Exception):
    """Malformed program text; carries the 0-based character position."""

    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.position = position


# -- printing --------------------------------------------------------------

_LVL_IF = 0
_LVL_OR = 1
_LVL_AND = 2
_LVL_NOT = 3
_LVL_SUM = 4
_LVL_MUL = 5
_LVL_ATOM = 6

_BIN = {
    Or: (" or ", _LVL_OR),
    And: (" and ", _LVL_AND),
    Add: (" + ", _LVL_SUM),
    Sub: (" - ", _LVL_SUM),
    Mul: ("*", _LVL_MUL),
}


def format_real(v: float) -> str:
    """Shortest decimal text that parses back to the same float."""
    v = float(v)
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def _level(e: Expr) -> int:
    t = type(e)
    if t in _BIN:
        return _BIN[t][1]
    if t is Not:
        return _LVL_NOT
    if t is IfThenElse:
        return _LVL_IF
    return _LVL_ATOM


def _child(e: Expr, minimum: int) -> str:
    text = pretty_print(e)
    return f"({text})" if _level(e) < minimum else text


def pretty_print(e: Expr) -> str:
    """Canonical single-line rendering; parse() inverts it exactly."""
    t = type(e)
    if t is BoolConst:
        return "True" if e.value else "False"
    if t in (BoolAtom, RealAtom):
        return e.feature
    if t is RealConst:
        return format_real(e.value)
    if t is Predicate:
        return f"{e.feature}{e.comparator}{format_real(e.threshold)}"
    if t is Not:
        return f"not {_child(e.operand, _LVL_NOT)}"
    if t in _BIN:
        sep, lvl = _BIN[t]
        return f"{_child(e.left, lvl)}{sep}{_child(e.right, lvl + 1)}"
    if t is IfThenElse:
        parts = []
        cur = e
        while isinstance(cur, IfThenElse):
            kw = "if" if not parts else "elif"
            cond = _child(cur.cond, _LVL_OR)
            then = _child(cur.then, _LVL_OR)
            parts.append(f"{kw} {cond}: {then}")
            cur = cur.other
        parts.append(f"else: {pretty_print(cur)}")
        return " ".join(parts)
    raise TypeError(f"not an expression node: {e!r}")


def render_block(e: Expr) -> str:
    """Display rendering: one line per if/elif/else clause."""
    if not isinstance(e, IfThenElse):
        return pretty_print(e)
    lines = []
    cur = e
    while isinstance(cur, IfThenElse):
        kw = "if" if not lines else "elif"
        lines.append(f"{kw} {_child(cur.cond, _LVL_OR)}: {_child(cur.then, _LVL_OR)}")
        cur = cur.other
    lines.append(f"else: {pretty_print(cur)}")
    return "\n".join(lines)


# -- tokenizer ---------------------------------------------------------------

_KEYWORDS = RESERVED  # if elif else and or not True False return

_OPS = ("<=", ">", "+", "-", "*", "(", ")", ":")


def _is_name_start(c: str) -> bool:
    return c.isalpha() or c == "_"


def _is_name_char(c: str) -> bool:
    return c.isalnum() or c == "_"


def _tokenize(text: str):
    """Yield (kind, text, pos) triples; kinds: NAME KW NUM OP EOF."""
    i, n = 0, len(text)
    out = []
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        start = i
        if _is_name_start(c):
            i += 1
            while i < n:
                c = text[i]
                if _is_name_char(c):
                    i += 1
                elif c in ":=" and i + 1 < n and _is_name_char(text[i + 1]):
                    # ':' or '=' embedded in a name, as in Diag:Other
                    i += 2
                else:
                    break
            word = text[start:i]
            out.append(("KW" if word in _KEYWORDS else "NAME", word, start))
        elif c.isdigit():
            i += 1
            while i < n and text[i].isdigit():
                i += 1
            if i < n and text[i] == "." and i + 1 < n and text[i + 1].isdigit():
                i += 1
                while i < n and text[i].isdigit():
                    i += 1
            if i < n and text[i] in "eE":
                j = i + 1
                if j < n and text[j] in "+-":
                    j += 1
                if j < n and text[j].isdigit():
                    i = j + 1
                    while i < n and text[i].isdigit():
                        i += 1
            out.append(("NUM", text[start:i], start))
        elif text.startswith("<=", i):
            out.append(("OP", "<=", start))
            i += 2
        elif c in ">+-*():":
            out.append(("OP", c, start))
            i += 1
        else:
            raise ExprSyntaxError(f"unexpected character {c!r}", i)
    out.append(("EOF", "", n))
    return out


# -- parser ------------------------------------------------------------------


class _Parser:
    def __init__(self, text: str, schema: FeatureSchema):
        self.toks = _tokenize(text)
        self.pos = 0
        self.schema = schema

    def peek(self):
        return self.toks[self.pos]

    def next(self):
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op):
        kind, text, pos = self.peek()
        if kind != "OP" or text != op:
            raise ExprSyntaxError(f"expected {op!r}, found {text or 'end of input'!r}", pos)
        return self.next()

    def expect_kw(self, word):
        kind, text, pos = self.peek()
        if kind != "KW" or text != word:
            raise ExprSyntaxError(
                f"expected {word!r}, found {text or 'end of input'!r}", pos
            )
        return self.next()

    def at_kw(self, *words):
        kind, text, _ = self.peek()
        return kind == "KW" and text in words

    def at_op(self, *ops):
        kind, text, _ = self.peek()
        return kind == "OP" and text in ops

    # grammar rules

    def program(self):
        e = self.expr()
        kind, text, pos = self.peek()
        if kind != "EOF":
            raise ExprSyntaxError(f"unexpected trailing {text!r}", pos)
        return e

    def expr(self):
        if self.at_kw("if"):
            return self.if_expr()
        return self.or_expr()

    def if_expr(self):
        clauses = []
        self.expect_kw("if")
        while True:
            cond = self.or_expr()
            self.expect_op(":")
            then = self.or_expr()
            clauses.append((cond, then))
            if self.at_kw("elif"):
                self.next()
                continue
            break
        self.expect_kw("else")
        self.expect_op(":")
        out = self.or_expr()
        for cond, then in reversed(clauses):
            out = IfThenElse(cond, then, out)
        return out

    def or_expr(self):
        e = self.and_expr()
        while self.at_kw("or"):
            self.next()
            e = Or(e, self.and_expr())
        return e

    def and_expr(self):
        e = self.not_expr()
        while self.at_kw("and"):
            self.next()
            e = And(e, self.not_expr())
        return e

    def not_expr(self):
        if self.at_kw("not"):
            self.next()
            return Not(self.not_expr())
        return self.cmp_expr()

    def cmp_expr(self):
        left = self.sum_expr()
        if self.at_op("<=", ">"):
            _, op, pos = self.next()
            right = self.sum_expr()
            if not isinstance(left, (RealAtom, BoolAtom)) or not isinstance(
                right, RealConst
            ):
                raise ExprSyntaxError(
                    "a comparison must be <feature> <= <number> or <feature> > <number>",
                    pos,
                )
            return Predicate(left.feature, op, float(right.value))
        return left

    def sum_expr(self):
        e = self.term()
        while self.at_op("+", "-"):
            _, op, _ = self.next()
            rhs = self.term()
            e = Add(e, rhs) if op == "+" else Sub(e, rhs)
        return e

    def term(self):
        e = self.factor()
        while self.at_op("*"):
            self.next()
            e = Mul(e, self.factor())
        return e

    def factor(self):
        kind, text, pos = self.peek()
        if kind == "NUM":
            self.next()
            return RealConst(float(text))
        if kind == "OP" and text == "-":
            self.next()
            kind2, text2, pos2 = self.peek()
            if kind2 != "NUM":
                raise ExprSyntaxError("'-' here must precede a numeric literal", pos2)
            self.next()
            return RealConst(-float(text2))
        if kind == "KW" and text in ("True", "False"):
            self.next()
            return BoolConst(text == "True")
        if kind == "NAME":
            self.next()
            return self.atom(text, pos)
        if kind == "OP" and text == "(":
            self.next()
            e = self.expr()
            self.expect_op(")")
            return e
        raise ExprSyntaxError(
            f"expected a value, found {text or 'end of input'!r}", pos
        )

    def atom(self, name, pos):
        if self.schema.has_atom(name):
            return BoolAtom(name)
        try:
            kind = self.schema.feature(name).kind
        except Exception:
            raise ExprTypeError(f"unknown feature name {name!r}") from None
        if kind == NUMERIC:
            return RealAtom(name)
        if kind == CATEGORICAL:
            raise ExprTypeError(
                f"{name!r} is categorical; reference one level, e.g. "
                f"{name}={self.schema.feature(name).levels[0] if self.schema.feature(name).levels else '<level>'}"
            )
        raise ExprTypeError(f"unknown feature name {name!r}")


def parse(text: str, schema: FeatureSchema) -> Expr:
    """Parse surface text into a well-typed tree.

    Raises ExprSyntaxError (with position) on malformed input and
    ExprTypeError on unknown features or typing violations.
    """
    e = _Parser(text, schema).program()
    type_of(e, schema)
    return e
