"""Entire functions, weight vectors and the shipped expression catalog."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .expr import (
    Binary,
    Const,
    ExpressionError,
    Node,
    Unary,
    evaluate,
    log_abs,
    parse_expression,
    scaled_evaluate,
    unparse,
)


class PositivityError(ArithmeticError):
    """A weight component is not a positive real number at some point."""

    def __init__(self, message: str, witness=None, component: int | None = None):
        super().__init__(message)
        self.witness = None if witness is None else np.asarray(witness)
        self.component = component


@dataclass(frozen=True)
class EntireFunction:
    ast: Node
    arity: int
    text: str = ""

    def __post_init__(self):
        if not self.ast.holomorphic:
            raise ExpressionError("an entire function must not use abs, re or im")
        if self.ast.max_variable > self.arity:
            raise ExpressionError("expression uses more variables than its arity")
        if not self.text:
            object.__setattr__(self, "text", unparse(self.ast))

    @classmethod
    def parse(cls, text: str, arity: int) -> EntireFunction:
        return cls(parse_expression(text, arity), arity, text)

    def __call__(self, z) -> np.ndarray:
        return evaluate(self.ast, z)

    def log_abs(self, z) -> np.ndarray:
        return log_abs(self.ast, z)

    @property
    def is_zero(self) -> bool:
        return isinstance(self.ast, Const) and self.ast.value == 0


@dataclass(frozen=True)
class WeightVector:
    """``L = (l_1, ..., l_n)``: n real-valued component expressions."""

    components: tuple[Node, ...]
    label: str = ""
    texts: tuple[str, ...] = field(default=())

    def __post_init__(self):
        comps = tuple(self.components)
        n = len(comps)
        if n == 0:
            raise ValueError("a weight vector needs at least one component")
        for c in comps:
            if c.max_variable > n:
                raise ExpressionError("weight component uses a variable beyond the arity")
        object.__setattr__(self, "components", comps)
        if not self.texts:
            object.__setattr__(self, "texts", tuple(unparse(c) for c in comps))
        if not self.label:
            object.__setattr__(self, "label", "(" + ", ".join(self.texts) + ")")

    @classmethod
    def parse(cls, texts, label: str = "") -> WeightVector:
        texts = [texts] if isinstance(texts, str) else list(texts)
        n = len(texts)
        return cls(tuple(parse_expression(t, n) for t in texts), label, tuple(texts))

    @classmethod
    def constant(cls, n: int, value: float = 1.0) -> WeightVector:
        return cls(tuple(Const(value) for _ in range(n)), label=f"{value:g}")

    @property
    def arity(self) -> int:
        return len(self.components)

    def log_values(self, z) -> np.ndarray:
        """``ln l_j(z)`` with shape ``(..., n)``; checks positivity."""
        Z = np.asarray(z, dtype=complex)
        flat = Z.reshape(-1, Z.shape[-1])
        out = np.empty((flat.shape[0], self.arity))
        for j, comp in enumerate(self.components):
            m, s = scaled_evaluate(comp, flat)
            m = np.broadcast_to(m, flat.shape[:1])
            s = np.broadcast_to(s, flat.shape[:1])
            bad = ~((m.real > 0) & (np.abs(m.imag) <= 1e-9) & np.isfinite(s))
            if np.any(bad):
                witness = flat[int(np.argmax(bad))]
                raise PositivityError(
                    f"weight component l_{j + 1} = {self.texts[j]} is not positive at {witness}",
                    witness,
                    j + 1,
                )
            out[:, j] = s
        return out.reshape(Z.shape[:-1] + (self.arity,))

    def values(self, z) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_values(z))

    def scaled(self, factor: float) -> WeightVector:
        comps = tuple(Binary("*", Const(factor), c) for c in self.components)
        return WeightVector(comps, label=f"{factor:g}*{self.label}")

    def starred(self, c: float) -> WeightVector:
        """``L* = (c + |l_1|, ..., c + |l_n|)``."""
        comps = tuple(Binary("+", Const(c), Unary("abs", comp)) for comp in self.components)
        return WeightVector(comps, label=f"{c:g}+|{self.label}|")


# Catalog: every acceptance test refers only to these entries.
FUNCTION_CATALOG: dict[str, tuple[str, int]] = {
    "exp_z1z2": ("exp(z1*z2)", 2),
    "exp": ("exp(z1)", 1),
    "sin": ("sin(z1)", 1),
    "cos": ("cos(z1)", 1),
    "cubic": ("z1^3 - 2*z1 + 1", 1),
    "square": ("z1^2", 1),
    "poly2": ("z1^2*z2 - 3*z2^3 + z1 - 2", 2),
    "exp_sq": ("exp(z1^2)", 1),
    "const": ("3", 1),
}

WEIGHT_CATALOG: dict[str, tuple[str, ...]] = {
    "one_1": ("1",),
    "one_2": ("1", "1"),
    "cross_L": ("abs(z2)+1", "abs(z1)+1"),
    "abs_exp_plus_one": ("abs(exp(z1))+1",),
    "exp_exp_abs": ("exp(exp(abs(z1)))",),
    "one_plus_abs": ("1+abs(z1)",),
    "one_plus_abs_2": ("1+abs(z1)", "1+abs(z2)"),
    "inverse_square": ("1/(1+abs(z1)^2)",),
    "decaying": ("1+1/(1+abs(z1))",),
}


def catalog_function(name: str) -> EntireFunction:
    text, arity = FUNCTION_CATALOG[name]
    return EntireFunction.parse(text, arity)


def catalog_weight(name: str) -> WeightVector:
    return WeightVector.parse(WEIGHT_CATALOG[name], label=name)
