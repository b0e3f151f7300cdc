"""Expression trees for entire functions and weights over ``z1..zn``.

Grammar (whitespace-insensitive, case-sensitive)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | '+' unary | power
    power   := primary ('^' unary)?          # exponent must fold to an integer
    primary := number | number 'i' | 'i' | variable
             | func '(' expr ')' | '(' expr ')'
    func    := exp | sin | cos | abs | re | im
    variable:= 'z' digit+                    # 'z' alone is accepted when n = 1

Constant subtrees are folded at parse time, except divisions by a zero
constant, which are left for evaluation to report.
"""
from __future__ import annotations

import cmath
import re
from dataclasses import dataclass
from functools import cached_property

import numpy as np

UNARY_OPS = ("neg", "exp", "sin", "cos", "abs", "re", "im")
FUNCTIONS = ("exp", "sin", "cos", "abs", "re", "im")
NON_HOLOMORPHIC = frozenset({"abs", "re", "im"})
BINARY_OPS = ("+", "-", "*", "/")


class ExpressionError(ValueError):
    def __init__(self, message: str, position: int | None = None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class EvaluationError(ArithmeticError):
    pass


class Node:
    __slots__ = ()

    @cached_property
    def holomorphic(self) -> bool:
        return all(child.holomorphic for child in self.children()) and not (
            isinstance(self, Unary) and self.op in NON_HOLOMORPHIC
        )

    @cached_property
    def max_variable(self) -> int:
        return max((c.max_variable for c in self.children()), default=0)

    def children(self) -> tuple[Node, ...]:
        return ()

    def __str__(self) -> str:
        return unparse(self)


@dataclass(frozen=True, eq=True)
class Const(Node):
    value: complex

    def __post_init__(self):
        object.__setattr__(self, "value", complex(self.value))


@dataclass(frozen=True, eq=True)
class Var(Node):
    index: int  # 1-based

    @cached_property
    def max_variable(self) -> int:
        return self.index


@dataclass(frozen=True, eq=True)
class Unary(Node):
    op: str
    arg: Node

    def children(self):
        return (self.arg,)


@dataclass(frozen=True, eq=True)
class Binary(Node):
    op: str
    left: Node
    right: Node

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True, eq=True)
class Pow(Node):
    base: Node
    exponent: int

    def children(self):
        return (self.base,)


ZERO = Const(0)
ONE = Const(1)


# ---------------------------------------------------------------- folding


def _const_unary(op: str, v: complex) -> complex:
    if op == "neg":
        return -v
    if op == "exp":
        return cmath.exp(v)
    if op == "sin":
        return cmath.sin(v)
    if op == "cos":
        return cmath.cos(v)
    if op == "abs":
        return complex(abs(v))
    if op == "re":
        return complex(v.real)
    return complex(v.imag)


def make_unary(op: str, arg: Node) -> Node:
    if isinstance(arg, Const):
        try:
            return Const(_const_unary(op, arg.value))
        except OverflowError:
            pass
    if op == "neg" and isinstance(arg, Unary) and arg.op == "neg":
        return arg.arg
    return Unary(op, arg)


def make_binary(op: str, left: Node, right: Node) -> Node:
    if isinstance(left, Const) and isinstance(right, Const):
        a, b = left.value, right.value
        if op == "+":
            return Const(a + b)
        if op == "-":
            return Const(a - b)
        if op == "*":
            return Const(a * b)
        if b != 0:
            return Const(a / b)
        return Binary(op, left, right)
    if op == "+":
        if left == ZERO:
            return right
        if right == ZERO:
            return left
    elif op == "-":
        if right == ZERO:
            return left
        if left == ZERO:
            return make_unary("neg", right)
    elif op == "*":
        if left == ZERO or right == ZERO:
            return ZERO
        if left == ONE:
            return right
        if right == ONE:
            return left
    elif op == "/":
        if right == ONE:
            return left
        if left == ZERO and right != ZERO:
            return ZERO
    return Binary(op, left, right)


def make_pow(base: Node, exponent: int) -> Node:
    if exponent == 0:
        return ONE
    if exponent == 1:
        return base
    if isinstance(base, Const) and (base.value != 0 or exponent > 0):
        return Const(base.value**exponent)
    return Pow(base, exponent)


# ----------------------------------------------------------------- parser

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)(?P<imag>i(?![A-Za-z0-9_]))?"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str):
    tokens = []
    pos = 0
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ExpressionError(f"unexpected character {text[pos]!r}", pos)
        start = pos
        if m.group("num") is not None:
            value = float(m.group("num"))
            tokens.append(("num", complex(0, value) if m.group("imag") else complex(value), start))
        elif m.group("name") is not None:
            tokens.append(("name", m.group("name"), start))
        else:
            tokens.append(("op", m.group("op"), start))
        pos = m.end()
    tokens.append(("end", None, len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, arity: int):
        self.text = text
        self.arity = arity
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, op: str):
        kind, value, pos = self.take()
        if kind != "op" or value != op:
            found = "end of input" if kind == "end" else repr(value)
            raise ExpressionError(f"expected {op!r}, found {found}", pos)

    def parse(self) -> Node:
        node = self.expr()
        kind, value, pos = self.peek()
        if kind != "end":
            raise ExpressionError(f"unexpected token {value!r}", pos)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = make_binary(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = make_binary(op, node, self.unary())
        return node

    def unary(self) -> Node:
        kind, value, _ = self.peek()
        if kind == "op" and value == "-":
            self.take()
            return make_unary("neg", self.unary())
        if kind == "op" and value == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.primary()
        kind, value, pos = self.peek()
        if kind == "op" and value == "^":
            self.take()
            exp_pos = self.peek()[2]
            exponent = self.unary()
            if not isinstance(exponent, Const):
                raise ExpressionError("exponent must be an integer constant", exp_pos)
            v = exponent.value
            if v.imag != 0 or v.real != int(v.real):
                raise ExpressionError(f"non-integer exponent {v}", exp_pos)
            return make_pow(base, int(v.real))
        return base

    def primary(self) -> Node:
        kind, value, pos = self.take()
        if kind == "num":
            return Const(value)
        if kind == "op" and value == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "name":
            if value == "i":
                return Const(1j)
            if value in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return make_unary(value, arg)
            var = re.fullmatch(r"z(\d*)", value)
            if var:
                index = int(var.group(1)) if var.group(1) else (1 if self.arity == 1 else 0)
                if index == 0 and not var.group(1):
                    raise ExpressionError("bare 'z' is only allowed when arity is 1", pos)
                if not 1 <= index <= self.arity:
                    raise ExpressionError(
                        f"variable {value} out of range for arity {self.arity}", pos
                    )
                return Var(index)
            raise ExpressionError(f"unknown name {value!r}", pos)
        found = "end of input" if kind == "end" else repr(value)
        raise ExpressionError(f"unexpected {found}", pos)


def parse_expression(text: str, arity: int) -> Node:
    if not isinstance(text, str) or not text.strip():
        raise ExpressionError("expression text is empty", 0)
    if arity < 1:
        raise ValueError("arity must be >= 1")
    return _Parser(text, arity).parse()


# --------------------------------------------------------------- unparse


def _fmt_real(x: float) -> str:
    if x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def _fmt_const(v: complex) -> str:
    a, b = v.real, v.imag
    if b == 0:
        return _fmt_real(a) if a >= 0 else f"(-{_fmt_real(-a)})"
    imag = f"{_fmt_real(abs(b))}i"
    if a == 0:
        return imag if b > 0 else f"(-{imag})"
    sign = "+" if b > 0 else "-"
    return f"({_fmt_real(a)}{sign}{imag})" if a > 0 else f"(-{_fmt_real(-a)}{sign}{imag})"


def unparse(node: Node) -> str:
    """Fully parenthesised text that parses back to an identical tree."""
    if isinstance(node, Const):
        return _fmt_const(node.value)
    if isinstance(node, Var):
        return f"z{node.index}"
    if isinstance(node, Unary):
        if node.op == "neg":
            return f"(-{unparse(node.arg)})"
        return f"{node.op}({unparse(node.arg)})"
    if isinstance(node, Binary):
        return f"({unparse(node.left)}{node.op}{unparse(node.right)})"
    if isinstance(node, Pow):
        e = str(node.exponent) if node.exponent >= 0 else f"(-{-node.exponent})"
        return f"({unparse(node.base)})^{e}"
    raise TypeError(f"not an expression node: {node!r}")


# ------------------------------------------------------------- evaluation


def _points(node: Node, z) -> np.ndarray:
    Z = np.asarray(z, dtype=complex)
    if Z.ndim == 0:
        Z = Z.reshape(1)
    if node.max_variable > Z.shape[-1]:
        raise ValueError(
            f"points have {Z.shape[-1]} coordinates, expression uses z{node.max_variable}"
        )
    return Z


def evaluate(node: Node, z) -> np.ndarray:
    """Evaluate at one point ``(n,)`` or a batch ``(..., n)``.

    Division by zero anywhere in the batch raises :class:`EvaluationError`.
    """
    Z = _points(node, z)
    shape = Z.shape[:-1]
    memo: dict[int, np.ndarray] = {}

    def ev(nd: Node) -> np.ndarray:
        key = id(nd)
        if key in memo:
            return memo[key]
        if isinstance(nd, Const):
            out = np.full(shape, nd.value, dtype=complex)
        elif isinstance(nd, Var):
            out = Z[..., nd.index - 1]
        elif isinstance(nd, Unary):
            a = ev(nd.arg)
            op = nd.op
            if op == "neg":
                out = -a
            elif op == "exp":
                out = np.exp(a)
            elif op == "sin":
                out = np.sin(a)
            elif op == "cos":
                out = np.cos(a)
            elif op == "abs":
                out = np.abs(a).astype(complex)
            elif op == "re":
                out = a.real.astype(complex)
            else:
                out = a.imag.astype(complex)
        elif isinstance(nd, Binary):
            a, b = ev(nd.left), ev(nd.right)
            if nd.op == "+":
                out = a + b
            elif nd.op == "-":
                out = a - b
            elif nd.op == "*":
                out = a * b
            else:
                if np.any(b == 0):
                    bad = np.argwhere(np.atleast_1d(b == 0))[0]
                    raise EvaluationError(
                        f"division by zero in {unparse(nd)} at sample {tuple(bad)}"
                    )
                out = a / b
        elif isinstance(nd, Pow):
            a = ev(nd.base)
            if nd.exponent < 0 and np.any(a == 0):
                raise EvaluationError(f"zero raised to a negative power in {unparse(nd)}")
            out = a ** nd.exponent
        else:
            raise TypeError(f"not an expression node: {nd!r}")
        memo[key] = out
        return out

    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        out = ev(node)
    return np.asarray(out)


def _normalize(m: np.ndarray, s: np.ndarray):
    mag = np.abs(m)
    nz = mag > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(nz, s + np.log(np.where(nz, mag, 1.0)), -np.inf)
        safe = np.where(nz, mag, 1.0)
        # componentwise: complex division by a subnormal modulus overflows
        m = np.where(nz, m.real / safe + 1j * (m.imag / safe), 0.0)
    return m, s


def _scaled_add(m1, s1, m2, s2, sign=1.0):
    s = np.maximum(s1, s2)
    finite = np.isfinite(s)
    with np.errstate(invalid="ignore", over="ignore"):
        w1 = np.where(finite, np.exp(np.where(finite, s1 - s, 0.0)), 0.0)
        w2 = np.where(finite, np.exp(np.where(finite, s2 - s, 0.0)), 0.0)
    m = m1 * w1 + sign * m2 * w2
    return _normalize(m, np.where(finite, s, -np.inf))


def scaled_evaluate(node: Node, z):
    """Overflow-free evaluation as ``(phase, log_modulus)`` with value = phase * e^log.

    ``phase`` has unit modulus (or is 0 where the value vanishes, with
    ``log_modulus = -inf``).
    """
    Z = _points(node, z)
    shape = Z.shape[:-1]
    memo: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def plain(nd):
        m, s = ev(nd)
        with np.errstate(over="ignore", invalid="ignore"):
            return np.where(np.isfinite(s), m * np.exp(np.where(np.isfinite(s), s, 0.0)), 0.0)

    def exp_of(v):
        # e^v as (phase, log)
        return np.exp(1j * v.imag), v.real.astype(float)

    def ev(nd: Node):
        key = id(nd)
        if key in memo:
            return memo[key]
        if isinstance(nd, Const):
            out = _normalize(np.full(shape, nd.value, dtype=complex), np.zeros(shape))
        elif isinstance(nd, Var):
            out = _normalize(Z[..., nd.index - 1].astype(complex), np.zeros(shape))
        elif isinstance(nd, Unary):
            op = nd.op
            if op == "neg":
                m, s = ev(nd.arg)
                out = (-m, s)
            elif op == "abs":
                m, s = ev(nd.arg)
                out = (np.abs(m).astype(complex), s)
            elif op == "exp":
                out = exp_of(plain(nd.arg))
            elif op in ("sin", "cos"):
                v = plain(nd.arg)
                m1, s1 = exp_of(1j * v)
                m2, s2 = exp_of(-1j * v)
                if op == "sin":
                    m, s = _scaled_add(m1, s1, m2, s2, sign=-1.0)
                    out = _normalize(m / 2j, s)
                else:
                    m, s = _scaled_add(m1, s1, m2, s2)
                    out = _normalize(m / 2, s)
            else:
                m, s = ev(nd.arg)
                part = m.real if op == "re" else m.imag
                out = _normalize(part.astype(complex), s)
        elif isinstance(nd, Binary):
            m1, s1 = ev(nd.left)
            m2, s2 = ev(nd.right)
            if nd.op == "+":
                out = _scaled_add(m1, s1, m2, s2)
            elif nd.op == "-":
                out = _scaled_add(m1, s1, m2, s2, sign=-1.0)
            elif nd.op == "*":
                out = _normalize(m1 * m2, s1 + s2)
            else:
                if np.any(m2 == 0):
                    raise EvaluationError(f"division by zero in {unparse(nd)}")
                out = _normalize(m1 / m2, s1 - s2)
        elif isinstance(nd, Pow):
            m, s = ev(nd.base)
            if nd.exponent < 0 and np.any(m == 0):
                raise EvaluationError(f"zero raised to a negative power in {unparse(nd)}")
            with np.errstate(invalid="ignore"):
                out = _normalize(m ** nd.exponent, np.where(np.isfinite(s), s * nd.exponent, -np.inf))
        else:
            raise TypeError(f"not an expression node: {nd!r}")
        memo[key] = out
        return out

    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        m, s = ev(node)
    return np.asarray(m), np.asarray(s, dtype=float)


def log_abs(node: Node, z) -> np.ndarray:
    """``ln|f(z)|`` without overflow; ``-inf`` where ``f`` vanishes."""
    return scaled_evaluate(node, z)[1]


# -------------------------------------------------------- differentiation


def symbolic_partial(node: Node, j: int) -> Node:
    """Exact ``d/dz_j`` of a holomorphic tree (1-based ``j``).

    Unchanged subtrees are shared with the input, so repeated application
    produces a DAG whose evaluation cost stays moderate.
    """
    if not node.holomorphic:
        raise ExpressionError("symbolic differentiation requires a holomorphic expression")
    memo: dict[int, Node] = {}

    def d(nd: Node) -> Node:
        key = id(nd)
        if key in memo:
            return memo[key]
        if isinstance(nd, Const):
            out = ZERO
        elif isinstance(nd, Var):
            out = ONE if nd.index == j else ZERO
        elif isinstance(nd, Unary):
            da = d(nd.arg)
            if da == ZERO:
                out = ZERO
            elif nd.op == "neg":
                out = make_unary("neg", da)
            elif nd.op == "exp":
                out = make_binary("*", da, nd)
            elif nd.op == "sin":
                out = make_binary("*", da, make_unary("cos", nd.arg))
            elif nd.op == "cos":
                out = make_unary("neg", make_binary("*", da, make_unary("sin", nd.arg)))
            else:
                raise ExpressionError(f"{nd.op} is not holomorphic")
        elif isinstance(nd, Binary):
            a, b = nd.left, nd.right
            da, db = d(a), d(b)
            if nd.op in "+-":
                out = make_binary(nd.op, da, db)
            elif nd.op == "*":
                out = make_binary("+", make_binary("*", da, b), make_binary("*", a, db))
            else:
                num = make_binary("-", make_binary("*", da, b), make_binary("*", a, db))
                out = make_binary("/", num, make_pow(b, 2)) if num != ZERO else ZERO
        elif isinstance(nd, Pow):
            da = d(nd.base)
            k = nd.exponent
            out = make_binary("*", make_binary("*", Const(k), make_pow(nd.base, k - 1)), da)
        else:
            raise TypeError(f"not an expression node: {nd!r}")
        memo[key] = out
        return out

    return d(node)


def is_zero(node: Node) -> bool:
    return isinstance(node, Const) and node.value == 0


def count_nodes(node: Node) -> int:
    """Number of distinct node objects (DAG size)."""
    seen = set()
    stack = [node]
    while stack:
        nd = stack.pop()
        if id(nd) in seen:
            continue
        seen.add(id(nd))
        stack.extend(nd.children())
    return len(seen)


__all__ = [
    "Binary",
    "Const",
    "EvaluationError",
    "ExpressionError",
    "Node",
    "Pow",
    "Unary",
    "Var",
    "count_nodes",
    "evaluate",
    "is_zero",
    "log_abs",
    "make_binary",
    "make_pow",
    "make_unary",
    "parse_expression",
    "scaled_evaluate",
    "symbolic_partial",
    "unparse",
]
