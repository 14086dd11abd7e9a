"""Formulas over the unit interval: constants, variables, negation,
truncated sum, and a scalar modality.

The five node kinds below are the primitive syntax.  Everything else
(strong conjunction, truncated difference, lattice join/meet, implication,
distance) is provided as smart constructors that expand into primitives,
so the evaluator and the rewriter only ever see the core.

A fixed text grammar round-trips formulas losslessly:

    formula := oplus
    oplus   := "(" oplus "(+)" oplus ")" | unary
    unary   := "!" unary | "<" NUM ">" unary | atom
    atom    := "c" NUM | "x" NAT | "(" oplus ")"

NUM is a decimal in [0, 1] with at most 9 fractional digits; whitespace
between tokens is insignificant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

from . import mv
from .network import NetworkState


@dataclass(frozen=True)
class Const:
    value: float

    def __post_init__(self):
        if not math.isfinite(self.value) or not 0.0 <= self.value <= 1.0:
            raise ValueError(f"constant {self.value!r} outside [0, 1]")


@dataclass(frozen=True)
class Var:
    index: int

    def __post_init__(self):
        if self.index < 0:
            raise ValueError("variable index must be >= 0")


@dataclass(frozen=True)
class Neg:
    child: "Formula"


@dataclass(frozen=True)
class Oplus:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Scale:
    coeff: float
    child: "Formula"

    def __post_init__(self):
        if not math.isfinite(self.coeff) or not 0.0 <= self.coeff <= 1.0:
            raise ValueError(f"coefficient {self.coeff!r} outside [0, 1]")


Formula = Union[Const, Var, Neg, Oplus, Scale]


# Derived connectives, expanded per the usual definitions.

def f_otimes(a: Formula, b: Formula) -> Formula:
    return Neg(Oplus(Neg(a), Neg(b)))


def f_ominus(a: Formula, b: Formula) -> Formula:
    return f_otimes(a, Neg(b))


def f_join(a: Formula, b: Formula) -> Formula:
    return Oplus(f_otimes(a, Neg(b)), b)


def f_meet(a: Formula, b: Formula) -> Formula:
    return f_otimes(Oplus(a, Neg(b)), b)


def f_implies(a: Formula, b: Formula) -> Formula:
    return Oplus(Neg(a), b)


def f_dist(a: Formula, b: Formula) -> Formula:
    return Oplus(f_otimes(a, Neg(b)), f_otimes(b, Neg(a)))


class UnboundVariable(KeyError):
    pass


def evaluate(phi: Formula, env: Union[Mapping[int, float], Sequence[float]]) -> float:
    """Standard-model evaluation; env binds variable indices to values."""
    if isinstance(phi, Const):
        return phi.value
    if isinstance(phi, Var):
        try:
            return env[phi.index]
        except (KeyError, IndexError):
            raise UnboundVariable(f"unbound variable x{phi.index}") from None
    if isinstance(phi, Neg):
        return mv.neg(evaluate(phi.child, env))
    if isinstance(phi, Oplus):
        return mv.oplus(evaluate(phi.left, env), evaluate(phi.right, env))
    if isinstance(phi, Scale):
        return mv.scale(phi.coeff, evaluate(phi.child, env))
    raise TypeError(f"not a formula: {phi!r}")


def node_count(phi: Formula) -> int:
    if isinstance(phi, (Const, Var)):
        return 1
    if isinstance(phi, (Neg, Scale)):
        return 1 + node_count(phi.child)
    return 1 + node_count(phi.left) + node_count(phi.right)


# --- printing --------------------------------------------------------------

def format_num(x: float) -> str:
    """Up to 9 fractional digits, trailing zeros stripped, 0/1 bare."""
    s = "%.9f" % x
    s = s.rstrip("0").rstrip(".")
    return s if s else "0"


def to_text(phi: Formula) -> str:
    if isinstance(phi, Const):
        return "c" + format_num(phi.value)
    if isinstance(phi, Var):
        return "x%d" % phi.index
    if isinstance(phi, Neg):
        return "!" + to_text(phi.child)
    if isinstance(phi, Scale):
        return "<" + format_num(phi.coeff) + ">" + to_text(phi.child)
    if isinstance(phi, Oplus):
        return "(" + to_text(phi.left) + " (+) " + to_text(phi.right) + ")"
    raise TypeError(f"not a formula: {phi!r}")


# --- parsing ---------------------------------------------------------------

class ParseError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"offset {offset}: {message}")
        self.offset = offset


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def at_oplus_token(self) -> bool:
        self.skip_ws()
        return self.text[self.pos : self.pos + 3] == "(+)"

    def expect(self, ch: str):
        self.skip_ws()
        if self.pos >= len(self.text) or self.text[self.pos] != ch:
            raise ParseError(f"expected {ch!r}", self.pos)
        self.pos += 1

    def parse_formula(self) -> Formula:
        phi = self.parse_oplus()
        self.skip_ws()
        if self.pos != len(self.text):
            raise ParseError("trailing input", self.pos)
        return phi

    def parse_oplus(self) -> Formula:
        if self.peek() == "(" and not self.at_oplus_token():
            return self.parse_paren()
        return self.parse_unary()

    def parse_paren(self) -> Formula:
        """A "(": either the binary "(a (+) b)" form or plain grouping."""
        self.expect("(")
        left = self.parse_oplus()
        if self.at_oplus_token():
            self.pos += 3
            right = self.parse_oplus()
            self.expect(")")
            return Oplus(left, right)
        self.skip_ws()
        if self.pos >= len(self.text) or self.text[self.pos] != ")":
            raise ParseError("expected '(+)' or ')'", self.pos)
        self.pos += 1
        return left

    def parse_unary(self) -> Formula:
        c = self.peek()
        if c == "!":
            self.pos += 1
            return Neg(self.parse_unary())
        if c == "<":
            self.pos += 1
            r = self.parse_num()
            self.expect(">")
            return Scale(r, self.parse_unary())
        return self.parse_atom()

    def parse_atom(self) -> Formula:
        c = self.peek()
        if c == "c":
            self.pos += 1
            return Const(self.parse_num())
        if c == "x":
            self.pos += 1
            return Var(self.parse_nat())
        if c == "(":
            return self.parse_paren()
        raise ParseError("expected 'c', 'x', '!', '<', or '('", self.pos)

    def parse_num(self) -> float:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if self.pos == start:
            raise ParseError("expected number", start)
        if self.pos < len(self.text) and self.text[self.pos] == ".":
            self.pos += 1
            frac_start = self.pos
            while self.pos < len(self.text) and self.text[self.pos].isdigit():
                self.pos += 1
            if self.pos == frac_start:
                raise ParseError("expected digits after '.'", frac_start)
            if self.pos - frac_start > 9:
                raise ParseError("more than 9 fractional digits", frac_start)
        value = float(self.text[start : self.pos])
        if value > 1.0:
            raise ParseError("coefficient out of range", start)
        return value

    def parse_nat(self) -> int:
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if self.pos == start:
            raise ParseError("expected variable index", start)
        return int(self.text[start : self.pos])


def parse(text: str) -> Formula:
    return _Parser(text).parse_formula()


# --- simplification --------------------------------------------------------

def _root_rules(phi: Formula) -> Formula | None:
    """One constant-folding or identity step at the root, or None."""
    if isinstance(phi, Neg):
        c = phi.child
        if isinstance(c, Const):
            return Const(mv.neg(c.value))
        if isinstance(c, Neg):
            return c.child
    elif isinstance(phi, Oplus):
        l, r = phi.left, phi.right
        if isinstance(l, Const) and isinstance(r, Const):
            return Const(mv.oplus(l.value, r.value))
        if isinstance(r, Const) and r.value == 0.0:
            return l
        if isinstance(l, Const) and l.value == 0.0:
            return r
    elif isinstance(phi, Scale):
        c = phi.child
        if isinstance(c, Const):
            return Const(mv.scale(phi.coeff, c.value))
        if phi.coeff == 1.0:
            return c
        if isinstance(c, Scale):
            return Scale(phi.coeff * c.coeff, c.child)
    return None


def simplify(phi: Formula) -> Formula:
    """Innermost rewriting to fixpoint; never increases node count.

    Rules: fold negation/sum/scaling of constants, drop double negation,
    drop zero summands, drop unit scalings, and fuse nested scalings.
    Each preserves the evaluation of the formula on every environment.
    """
    if isinstance(phi, (Const, Var)):
        return phi
    if isinstance(phi, Neg):
        phi = Neg(simplify(phi.child))
    elif isinstance(phi, Scale):
        phi = Scale(phi.coeff, simplify(phi.child))
    else:
        phi = Oplus(simplify(phi.left), simplify(phi.right))
    while True:
        step = _root_rules(phi)
        if step is None:
            return phi
        phi = step


# --- network extraction -----------------------------------------------------

def extract(net: NetworkState, output_index: int) -> Formula:
    """Formula computing one forward output of the network.

    Layer by layer, neuron i becomes  b_i (+) <w_i0>f_0 (+) <w_i1>f_1 ...
    over the previous layer's formulas (inputs become variables).  Because
    all parameters are in [0, 1], the truncated sums coincide with ReLU1
    of the plain sum, so evaluation reproduces the forward pass float for
    float.
    """
    if not 0 <= output_index < net.output_width:
        raise ValueError(f"output index {output_index} out of range")
    for layer in net.layers:
        w, b = layer.weights, layer.bias
        if (w.size and (w.min() < 0.0 or w.max() > 1.0)) or (
            b.size and (b.min() < 0.0 or b.max() > 1.0)
        ):
            raise ValueError("extraction requires unit-interval parameters")
    current: list[Formula] = [Var(i) for i in range(net.input_width)]
    for layer in net.layers:
        nxt: list[Formula] = []
        for i in range(layer.width):
            acc: Formula | None = None
            for j in range(layer.fan_in):
                term: Formula = Scale(float(layer.weights[i, j]), current[j])
                acc = term if acc is None else Oplus(acc, term)
            assert acc is not None
            nxt.append(Oplus(Const(float(layer.bias[i])), acc))
        current = nxt
    return current[output_index]


def extract_aggregate(net: NetworkState) -> Formula:
    """Single formula for the max-aggregated output, via the derived join."""
    phi = extract(net, 0)
    for j in range(1, net.output_width):
        phi = f_join(phi, extract(net, j))
    return phi
