"""Symbolic exp-log germ expressions over the variable x at +infinity.

Grammar (canonical printer emits the fully parenthesized form):

    expr   := ["-"] term (("+"|"-") term)*
    term   := factor (("*"|"/") factor)*
    factor := atom ("^" "(" rational ")")?
    atom   := rational | "x" | ("exp"|"log") "(" expr ")"
            | ("exp_"|"log_") nat "(" expr ")" | "(" expr ")"

Expressions are immutable and structurally comparable.  Construction runs a
conservative eventual-definedness analysis: log and fractional-power
arguments must be certifiably positive from some point on, and division
needs an eventually nonzero denominator.  Certification combines structural
sign rules with interval evaluation at doubling sample points; every later
evaluation still guards domains at runtime, so an optimistic threshold can
only surface as a domain error, never as a wrong value.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .numeric import TV, TowerValue

__all__ = [
    "GermExpr", "Const", "Var", "Add", "Sub", "Mul", "Div", "Neg",
    "Pow", "Exp", "Log", "IterExp", "IterLog",
    "ParseError", "DomainError", "parse_expr", "to_text",
    "diff", "substitute", "X",
]


class ParseError(ValueError):
    def __init__(self, message, position):
        super().__init__("%s (at position %d)" % (message, position))
        self.position = position


class DomainError(ValueError):
    """Expression is not eventually defined and real-valued."""


class GermExpr:
    """Base node. Subclasses define `args` and a structural `key`."""

    __slots__ = ("_key", "_hash")

    def key(self):
        return self._key

    def __eq__(self, other):
        return isinstance(other, GermExpr) and self._key == other._key

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return to_text(self)

    # arithmetic sugar used throughout the package
    def __add__(self, other):
        return Add(self, _coerce(other))

    def __sub__(self, other):
        return Sub(self, _coerce(other))

    def __mul__(self, other):
        return Mul(self, _coerce(other))

    def __truediv__(self, other):
        return Div(self, _coerce(other))

    def __neg__(self):
        return Neg(self)


def _coerce(v):
    if isinstance(v, GermExpr):
        return v
    return Const(Fraction(v))


def _node(cls, key, *fields):
    self = object.__new__(cls)
    object.__setattr__(self, "_key", key)
    object.__setattr__(self, "_hash", hash(key))
    for name, value in fields:
        object.__setattr__(self, name, value)
    return self


class Const(GermExpr):
    __slots__ = ("value",)

    def __new__(cls, value):
        value = Fraction(value)
        return _node(cls, ("const", value), ("value", value))


class _Var(GermExpr):
    __slots__ = ()

    def __new__(cls):
        return _node(cls, ("var",))


def Var():
    return X


X = _Var()


class _Binary(GermExpr):
    __slots__ = ("left", "right")
    _tag = None

    def __new__(cls, left, right):
        left = _coerce(left)
        right = _coerce(right)
        folded = cls._fold(left, right)
        if folded is not None:
            return folded
        return _node(cls, (cls._tag, left.key(), right.key()),
                     ("left", left), ("right", right))

    @classmethod
    def _fold(cls, left, right):
        return None


class Add(_Binary):
    __slots__ = ()
    _tag = "add"


class Sub(_Binary):
    __slots__ = ()
    _tag = "sub"


class Mul(_Binary):
    __slots__ = ()
    _tag = "mul"


class Div(_Binary):
    __slots__ = ()
    _tag = "div"

    @classmethod
    def _fold(cls, left, right):
        # constant quotients collapse so that printed rationals round-trip
        if isinstance(left, Const) and isinstance(right, Const):
            if right.value == 0:
                raise DomainError("division by the zero constant")
            return Const(left.value / right.value)
        return None


class Neg(GermExpr):
    __slots__ = ("arg",)

    def __new__(cls, arg):
        arg = _coerce(arg)
        if isinstance(arg, Const):
            return Const(-arg.value)
        return _node(cls, ("neg", arg.key()), ("arg", arg))


class Pow(GermExpr):
    __slots__ = ("base", "exponent")

    def __new__(cls, base, exponent):
        base = _coerce(base)
        exponent = Fraction(exponent)
        return _node(cls, ("pow", base.key(), exponent),
                     ("base", base), ("exponent", exponent))


class _Unary(GermExpr):
    __slots__ = ("arg",)
    _tag = None

    def __new__(cls, arg):
        arg = _coerce(arg)
        return _node(cls, (cls._tag, arg.key()), ("arg", arg))


class Exp(_Unary):
    __slots__ = ()
    _tag = "exp"


class Log(_Unary):
    __slots__ = ()
    _tag = "log"


class IterExp(GermExpr):
    __slots__ = ("depth", "arg")

    def __new__(cls, depth, arg):
        depth = int(depth)
        if depth < 0:
            raise ValueError("iterated exp depth must be >= 0")
        arg = _coerce(arg)
        if depth == 0:
            return arg
        return _node(cls, ("iterexp", depth, arg.key()),
                     ("depth", depth), ("arg", arg))


class IterLog(GermExpr):
    __slots__ = ("depth", "arg")

    def __new__(cls, depth, arg):
        depth = int(depth)
        if depth < 0:
            raise ValueError("iterated log depth must be >= 0")
        arg = _coerce(arg)
        if depth == 0:
            return arg
        return _node(cls, ("iterlog", depth, arg.key()),
                     ("depth", depth), ("arg", arg))


# -- canonical printer -------------------------------------------------------


def _print_fraction(q):
    if q.denominator == 1:
        return str(q.numerator)
    return "%d/%d" % (q.numerator, q.denominator)


def to_text(e):
    """Fully parenthesized canonical form; parse(to_text(e)) == e."""
    if isinstance(e, Const):
        q = e.value
        if q < 0:
            return "(-%s)" % _print_positive_fraction(-q)
        return _print_positive_fraction(q)
    if isinstance(e, _Var):
        return "x"
    if isinstance(e, Add):
        return "(%s + %s)" % (to_text(e.left), to_text(e.right))
    if isinstance(e, Sub):
        return "(%s - %s)" % (to_text(e.left), to_text(e.right))
    if isinstance(e, Mul):
        return "(%s * %s)" % (to_text(e.left), to_text(e.right))
    if isinstance(e, Div):
        return "(%s / %s)" % (to_text(e.left), to_text(e.right))
    if isinstance(e, Neg):
        return "(-%s)" % to_text(e.arg)
    if isinstance(e, Pow):
        return "%s^(%s)" % (_pow_base_text(e.base), _print_fraction(e.exponent))
    if isinstance(e, Exp):
        return "exp(%s)" % to_text(e.arg)
    if isinstance(e, Log):
        return "log(%s)" % to_text(e.arg)
    if isinstance(e, IterExp):
        return "exp_%d(%s)" % (e.depth, to_text(e.arg))
    if isinstance(e, IterLog):
        return "log_%d(%s)" % (e.depth, to_text(e.arg))
    raise TypeError("not a germ expression: %r" % (e,))


def _print_positive_fraction(q):
    # a bare p/q literal reparses as a constant quotient, which folds back
    return _print_fraction(q)


def _pow_base_text(base):
    txt = to_text(base)
    if isinstance(base, (Const, _Var, Exp, Log, IterExp, IterLog)) and not txt.startswith("("):
        if isinstance(base, Const) and (base.value < 0 or base.value.denominator != 1):
            return "(%s)" % txt
        return txt
    if txt.startswith("("):
        return txt
    return "(%s)" % txt


# -- parser ------------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<num>\d+(\.\d+)?)
  | (?P<name>exp_|log_|exp|log|x)
  | (?P<op>[()+\-*/^])
  | (?P<ws>\s+)
""", re.VERBOSE)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError("unexpected character %r" % text[pos], pos)
        if m.lastgroup != "ws":
            tokens.append((m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.next()
        if text != value:
            raise ParseError("expected %r, found %r" % (value, text or "end of input"), pos)

    def parse(self):
        e = self.expr()
        kind, text, pos = self.peek()
        if kind != "eof":
            raise ParseError("trailing input %r" % text, pos)
        return e

    def expr(self):
        negate = False
        if self.peek()[1] == "-":
            self.next()
            negate = True
        e = self.term()
        if negate:
            e = Neg(e)
        while self.peek()[1] in ("+", "-"):
            op = self.next()[1]
            rhs = self.term()
            e = Add(e, rhs) if op == "+" else Sub(e, rhs)
        return e

    def term(self):
        e = self.factor()
        while self.peek()[1] in ("*", "/"):
            op = self.next()[1]
            rhs = self.factor()
            e = Mul(e, rhs) if op == "*" else Div(e, rhs)
        return e

    def factor(self):
        e = self.atom()
        if self.peek()[1] == "^":
            self.next()
            self.expect("(")
            q = self.rational()
            self.expect(")")
            e = Pow(e, q)
        return e

    def rational(self):
        sign = 1
        if self.peek()[1] == "-":
            self.next()
            sign = -1
        kind, text, pos = self.next()
        if kind != "num":
            raise ParseError("expected a rational, found %r" % text, pos)
        num = _number_value(text)
        if self.peek()[1] == "/":
            self.next()
            kind, dtext, dpos = self.next()
            if kind != "num":
                raise ParseError("expected a denominator, found %r" % dtext, dpos)
            den = _number_value(dtext)
            if den == 0:
                raise ParseError("zero denominator", dpos)
            num = num / den
        return sign * num

    def atom(self):
        kind, text, pos = self.next()
        if kind == "num":
            return Const(_number_value(text))
        if text == "x":
            return X
        if text in ("exp", "log"):
            self.expect("(")
            inner = self.expr()
            self.expect(")")
            return Exp(inner) if text == "exp" else Log(inner)
        if text in ("exp_", "log_"):
            nkind, ntext, npos = self.next()
            if nkind != "num" or "." in ntext:
                raise ParseError("expected a depth after %r" % text, npos)
            depth = int(ntext)
            self.expect("(")
            inner = self.expr()
            self.expect(")")
            return IterExp(depth, inner) if text == "exp_" else IterLog(depth, inner)
        if text == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        raise ParseError("unexpected token %r" % (text or "end of input"), pos)


def _number_value(text):
    if "." in text:
        whole, frac = text.split(".")
        den = 10 ** len(frac)
        return Fraction(int(whole) * den + int(frac), den)
    return Fraction(int(text))


def parse_expr(text, check_domain=True):
    """Parse the canonical grammar; optionally certify eventual definedness."""
    e = _Parser(text).parse()
    if check_domain:
        from .evaluate import analyze
        analyze(e)
    return e


# -- symbolic derivative -----------------------------------------------------


_ZERO = Const(0)
_ONE = Const(1)


def _is_const(e, q):
    return isinstance(e, Const) and e.value == q


def _mul_s(a, b):
    # keeps derivative trees compact; parsing never folds products
    if _is_const(a, 0) or _is_const(b, 0):
        return _ZERO
    if _is_const(a, 1):
        return b
    if _is_const(b, 1):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    return Mul(a, b)


def _add_s(a, b):
    if _is_const(a, 0):
        return b
    if _is_const(b, 0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    return Add(a, b)


def _sub_s(a, b):
    if _is_const(b, 0):
        return a
    if _is_const(a, 0):
        return Neg(b)
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    return Sub(a, b)


def diff(e):
    """d/dx of the expression (domain analysis is the caller's concern)."""
    if isinstance(e, Const):
        return _ZERO
    if isinstance(e, _Var):
        return _ONE
    if isinstance(e, Add):
        return _add_s(diff(e.left), diff(e.right))
    if isinstance(e, Sub):
        return _sub_s(diff(e.left), diff(e.right))
    if isinstance(e, Neg):
        d = diff(e.arg)
        return _ZERO if _is_const(d, 0) else Neg(d)
    if isinstance(e, Mul):
        return _add_s(_mul_s(diff(e.left), e.right), _mul_s(e.left, diff(e.right)))
    if isinstance(e, Div):
        num = _sub_s(_mul_s(diff(e.left), e.right), _mul_s(e.left, diff(e.right)))
        if _is_const(num, 0):
            return _ZERO
        return Div(num, Mul(e.right, e.right))
    if isinstance(e, Pow):
        if e.exponent == 0:
            return _ZERO
        lead = _mul_s(Const(e.exponent),
                      e.base if e.exponent == 2 else Pow(e.base, e.exponent - 1))
        return _mul_s(lead, diff(e.base))
    if isinstance(e, Exp):
        return _mul_s(e, diff(e.arg))
    if isinstance(e, Log):
        d = diff(e.arg)
        return _ZERO if _is_const(d, 0) else Div(d, e.arg)
    if isinstance(e, IterExp):
        prod = diff(e.arg)
        for j in range(1, e.depth + 1):
            prod = _mul_s(IterExp(j, e.arg), prod)
        return prod
    if isinstance(e, IterLog):
        den = e.arg
        for j in range(1, e.depth):
            den = Mul(den, IterLog(j, e.arg))
        d = diff(e.arg)
        return _ZERO if _is_const(d, 0) else Div(d, den)
    raise TypeError("not a germ expression: %r" % (e,))


def substitute(e, replacement):
    """Composition: replace the variable x by `replacement`."""
    if isinstance(e, Const):
        return e
    if isinstance(e, _Var):
        return replacement
    if isinstance(e, Add):
        return Add(substitute(e.left, replacement), substitute(e.right, replacement))
    if isinstance(e, Sub):
        return Sub(substitute(e.left, replacement), substitute(e.right, replacement))
    if isinstance(e, Mul):
        return Mul(substitute(e.left, replacement), substitute(e.right, replacement))
    if isinstance(e, Div):
        return Div(substitute(e.left, replacement), substitute(e.right, replacement))
    if isinstance(e, Neg):
        return Neg(substitute(e.arg, replacement))
    if isinstance(e, Pow):
        return Pow(substitute(e.base, replacement), e.exponent)
    if isinstance(e, Exp):
        return Exp(substitute(e.arg, replacement))
    if isinstance(e, Log):
        return Log(substitute(e.arg, replacement))
    if isinstance(e, IterExp):
        return IterExp(e.depth, substitute(e.arg, replacement))
    if isinstance(e, IterLog):
        return IterLog(e.depth, substitute(e.arg, replacement))
    raise TypeError("not a germ expression: %r" % (e,))
