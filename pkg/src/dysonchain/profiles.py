"""Width profiles sigma(t) and their Taylor jets.

Derivatives are propagated with truncated Taylor arithmetic (forward-mode
automatic differentiation), so every profile, builtin or parsed, gives exact
derivatives up to rounding.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .errors import ProfileDomainError, ProfileSyntaxError

DEFAULT_ORDER = 4


class Jet:
    """Truncated Taylor series ``sum c[k] h^k`` around a point.

    ``c[k]`` is the k-th derivative divided by k!.
    """

    __slots__ = ("c",)

    def __init__(self, coeffs: Sequence[float]):
        self.c = list(coeffs)

    @classmethod
    def constant(cls, value, order):
        return cls([value] + [0.0] * order)

    @classmethod
    def variable(cls, value, order):
        c = [0.0] * (order + 1)
        c[0] = value
        if order >= 1:
            c[1] = 1.0
        return cls(c)

    @classmethod
    def from_derivatives(cls, derivs):
        return cls([d / math.factorial(k) for k, d in enumerate(derivs)])

    @property
    def order(self):
        return len(self.c) - 1

    @property
    def value(self):
        return self.c[0]

    def derivatives(self):
        return [ck * math.factorial(k) for k, ck in enumerate(self.c)]

    def derivative(self) -> "Jet":
        """Jet of the first derivative (one order lower)."""
        return Jet([k * self.c[k] for k in range(1, len(self.c))] or [0.0])

    def _lift(self, other):
        if isinstance(other, Jet):
            return other
        return Jet.constant(other, self.order)

    def _trim(self, other):
        n = min(len(self.c), len(other.c))
        return self.c[:n], other.c[:n]

    def __add__(self, other):
        a, b = self._trim(self._lift(other))
        return Jet([x + y for x, y in zip(a, b)])

    __radd__ = __add__

    def __sub__(self, other):
        a, b = self._trim(self._lift(other))
        return Jet([x - y for x, y in zip(a, b)])

    def __rsub__(self, other):
        return self._lift(other) - self

    def __neg__(self):
        return Jet([-x for x in self.c])

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet([x * other for x in self.c])
        a, b = self._trim(other)
        return Jet([sum(a[j] * b[k - j] for j in range(k + 1)) for k in range(len(a))])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet([x / other for x in self.c])
        a, b = self._trim(other)
        if b[0] == 0:
            raise ZeroDivisionError("division by a jet with zero value")
        q = []
        for k in range(len(a)):
            q.append((a[k] - sum(b[j] * q[k - j] for j in range(1, k + 1))) / b[0])
        return Jet(q)

    def __rtruediv__(self, other):
        return self._lift(other) / self

    def __pow__(self, other):
        if isinstance(other, Jet):
            if other.order > 0 and any(other.c[1:]):
                return exp(other * log(self))
            other = other.c[0]
        if float(other).is_integer() and abs(other) <= 64:
            n = int(other)
            out = Jet.constant(1.0, self.order)
            for _ in range(abs(n)):
                out = out * self
            return out if n >= 0 else 1.0 / out
        return exp(other * log(self))

    def __rpow__(self, other):
        return exp(self * log(self._lift(other)))

    def __repr__(self):
        return f"Jet({self.c!r})"


def exp(a: Jet) -> Jet:
    e = [math.exp(a.c[0])]
    for k in range(1, len(a.c)):
        e.append(sum(j * a.c[j] * e[k - j] for j in range(1, k + 1)) / k)
    return Jet(e)


def log(a: Jet) -> Jet:
    if a.c[0] <= 0:
        raise ProfileDomainError(f"ln of non-positive value {a.c[0]!r}")
    out = [math.log(a.c[0])]
    for k in range(1, len(a.c)):
        s = sum(j * out[j] * a.c[k - j] for j in range(1, k))
        out.append((a.c[k] - s / k) / a.c[0])
    return Jet(out)


def sqrt(a: Jet) -> Jet:
    if a.c[0] <= 0:
        raise ProfileDomainError(f"sqrt of non-positive value {a.c[0]!r}")
    r = [math.sqrt(a.c[0])]
    for k in range(1, len(a.c)):
        r.append((a.c[k] - sum(r[j] * r[k - j] for j in range(1, k))) / (2 * r[0]))
    return Jet(r)


def _paired(a, f0, g0, sign):
    # s' = a' c, c' = sign * a' s  (sin/cos with sign=-1, sinh/cosh with sign=+1)
    s, c = [f0], [g0]
    for k in range(1, len(a.c)):
        s.append(sum(j * a.c[j] * c[k - j] for j in range(1, k + 1)) / k)
        c.append(sign * sum(j * a.c[j] * s[k - j] for j in range(1, k + 1)) / k)
    return Jet(s), Jet(c)


def sin(a):
    return _paired(a, math.sin(a.c[0]), math.cos(a.c[0]), -1.0)[0]


def cos(a):
    return _paired(a, math.sin(a.c[0]), math.cos(a.c[0]), -1.0)[1]


def sinh(a):
    return _paired(a, math.sinh(a.c[0]), math.cosh(a.c[0]), 1.0)[0]


def cosh(a):
    return _paired(a, math.sinh(a.c[0]), math.cosh(a.c[0]), 1.0)[1]


def tanh(a):
    s, c = _paired(a, math.sinh(a.c[0]), math.cosh(a.c[0]), 1.0)
    return s / c


FUNCTIONS: dict[str, Callable[[Jet], Jet]] = {
    "cosh": cosh, "sinh": sinh, "tanh": tanh, "exp": exp,
    "ln": log, "sin": sin, "cos": cos, "sqrt": sqrt,
}


# --- expression trees -------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Neg:
    arg: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    name: str
    arg: object


def _eval_tree(node, x: Jet) -> Jet:
    if isinstance(node, Num):
        return Jet.constant(node.value, x.order)
    if isinstance(node, Var):
        return x
    if isinstance(node, Neg):
        return -_eval_tree(node.arg, x)
    if isinstance(node, Call):
        return FUNCTIONS[node.name](_eval_tree(node.arg, x))
    a, b = _eval_tree(node.left, x), _eval_tree(node.right, x)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if node.op == "/":
        if b.c[0] == 0:
            raise ProfileDomainError("division by zero")
        return a / b
    if node.op == "^":
        return a ** b
    raise AssertionError(node.op)


_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|([A-Za-z_]\w*)|(\S))")


def _tokenize(text):
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:  # only trailing whitespace left
            break
        if m.group(1):
            toks.append(("num", m.group(1), m.start(1)))
        elif m.group(2):
            toks.append(("id", m.group(2), m.start(2)))
        elif m.group(3):
            ch = m.group(3)
            if ch not in "+-*/^()":
                raise ProfileSyntaxError(f"unexpected character {ch!r}", m.start(3))
            toks.append(("op", ch, m.start(3)))
        pos = m.end()
    toks.append(("end", "", len(text)))
    return toks


class _Parser:
    # expr  := term (('+'|'-') term)*
    # term  := unary (('*'|'/') unary)*
    # unary := ('-'|'+') unary | power
    # power := atom ('^' unary)?      so -t^2 == -(t^2) and 2^-t is allowed
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        tok = self.take()
        if tok[1] != value or tok[0] != "op":
            found = "end of input" if tok[0] == "end" else repr(tok[1])
            raise ProfileSyntaxError(f"expected {value!r}, found {found}", tok[2])

    def parse(self):
        if self.peek()[0] == "end":
            raise ProfileSyntaxError("empty expression", 0)
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ProfileSyntaxError(f"unexpected {tok[1]!r}", tok[2])
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] in "+-":
            self.take()
            arg = self.unary()
            return Neg(arg) if tok[1] == "-" else arg
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        kind, text, pos = self.take()
        if kind == "num":
            return Num(float(text))
        if kind == "id":
            if text == "t":
                return Var()
            if text in FUNCTIONS and self.peek()[1] == "(":
                self.take()
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            raise ProfileSyntaxError(f"unknown identifier {text}", pos)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(text)
        raise ProfileSyntaxError(f"unexpected {found}", pos)


def _polynomial_coeffs(node):
    """Coefficient list if ``node`` is a polynomial in t, else None."""
    if isinstance(node, Num):
        return [node.value]
    if isinstance(node, Var):
        return [0.0, 1.0]
    if isinstance(node, Call):
        return None
    if isinstance(node, Neg):
        p = _polynomial_coeffs(node.arg)
        return None if p is None else [-x for x in p]
    a, b = _polynomial_coeffs(node.left), _polynomial_coeffs(node.right)
    if a is None or b is None:
        return None
    if node.op in "+-":
        s = 1.0 if node.op == "+" else -1.0
        n = max(len(a), len(b))
        a = a + [0.0] * (n - len(a))
        b = b + [0.0] * (n - len(b))
        return [x + s * y for x, y in zip(a, b)]
    if node.op == "*":
        out = [0.0] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            for j, y in enumerate(b):
                out[i + j] += x * y
        return out
    if node.op == "/":
        if len(b) == 1 and b[0] != 0:
            return [x / b[0] for x in a]
        return None
    if node.op == "^":
        if len(b) == 1 and float(b[0]).is_integer() and 0 <= b[0] <= 16:
            out = [1.0]
            for _ in range(int(b[0])):
                out = [sum(out[i] * a[k - i] for i in range(len(out)) if 0 <= k - i < len(a))
                       for k in range(len(out) + len(a) - 1)]
            return out
        return None
    return None


# --- profiles ---------------------------------------------------------------

@dataclass(frozen=True)
class DerivativeJet:
    """sigma and its derivatives at one time point."""

    t: float
    values: tuple

    @property
    def order(self):
        return len(self.values) - 1

    def __getitem__(self, k):
        return self.values[k]

    def as_jet(self) -> Jet:
        return Jet.from_derivatives(self.values)


@dataclass(frozen=True)
class TimeProfile:
    """A width profile sigma(t).

    ``kind`` is ``"cosh"``, ``"polynomial"`` or ``"expression"``; ``payload`` is
    the coefficient tuple or expression tree.
    """

    kind: str
    payload: object = None
    domain: tuple = (-math.inf, math.inf)
    source: str = field(default="", compare=False)

    def jet(self, t: float, order: int = DEFAULT_ORDER) -> Jet:
        lo, hi = self.domain
        if not lo <= t <= hi:
            raise ProfileDomainError(f"t={t!r} outside profile domain [{lo}, {hi}]")
        x = Jet.variable(float(t), order)
        if self.kind == "cosh":
            return cosh(x)
        if self.kind == "polynomial":
            out = Jet.constant(0.0, order)
            for c in reversed(self.payload):
                out = out * x + c
            return out
        return _eval_tree(self.payload, x)

    def __call__(self, t: float) -> float:
        return self.jet(t, 0).value

    def describe(self):
        if self.source:
            return self.source
        if self.kind == "cosh":
            return "cosh(t)"
        if self.kind == "polynomial":
            return "poly(" + ",".join(repr(c) for c in self.payload) + ")"
        return self.kind


def cosh_profile() -> TimeProfile:
    return TimeProfile("cosh", source="cosh(t)")


def polynomial_profile(k0: float, k1: float, k2: float, domain=(-math.inf, math.inf)) -> TimeProfile:
    """sigma(t) = k0 + k1 t + k2 t^2."""
    return TimeProfile("polynomial", (float(k0), float(k1), float(k2)), domain)


def parse_profile(text: str, domain=(-math.inf, math.inf)) -> TimeProfile:
    """Parse an expression in ``t``.

    ``cosh(t)`` maps to the builtin profile and polynomials of degree at most
    two map to :func:`polynomial_profile`.
    """
    tree = _Parser(text).parse()
    if tree == Call("cosh", Var()):
        return TimeProfile("cosh", domain=domain, source=text.strip())
    coeffs = _polynomial_coeffs(tree)
    if coeffs is not None and len(coeffs) <= 3:
        coeffs = coeffs + [0.0] * (3 - len(coeffs))
        return TimeProfile("polynomial", tuple(coeffs), domain, source=text.strip())
    return TimeProfile("expression", tree, domain, source=text.strip())


def eval_jet(profile: TimeProfile, t: float, order: int = DEFAULT_ORDER) -> DerivativeJet:
    """sigma and its first ``order`` derivatives at ``t``."""
    jet = profile.jet(t, order)
    return DerivativeJet(float(t), tuple(jet.derivatives()))
