"""Small arithmetic grammar with analytic differentiation.

Grammar (command-line drift/warping/perturbation expressions):

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" unary | power
    power  := atom ("^" unary)?          # right-associative, numeric exponent
    atom   := NUMBER | "t" | "theta" | FUNC "(" expr ")" | "(" expr ")"
    FUNC   := sin | cos | sinh | cosh | exp

Expressions evaluate on numpy arrays and differentiate symbolically in
either variable, so the solvers receive exact derivatives.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

_FUNCS = {"sin": np.sin, "cos": np.cos, "sinh": np.sinh, "cosh": np.cosh,
          "exp": np.exp}
_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
                    r"|([A-Za-z_]+)|(\*\*)|([()+\-*/^]))")


class ExpressionError(ValueError):
    pass


@dataclass(frozen=True)
class Node:
    op: str
    args: tuple = ()
    value: float = 0.0

    # -- evaluation -------------------------------------------------------

    def __call__(self, t, theta=0.0):
        t = np.asarray(t, dtype=float)
        theta = np.asarray(theta, dtype=float)
        return self._eval(t, theta)

    def _eval(self, t, theta):
        op = self.op
        if op == "const":
            return np.broadcast_to(np.float64(self.value), np.broadcast_shapes(t.shape, theta.shape)).copy() \
                if (t.shape or theta.shape) else np.float64(self.value)
        if op == "t":
            return t * np.ones(np.broadcast_shapes(t.shape, theta.shape)) if theta.shape else t
        if op == "theta":
            return theta * np.ones(np.broadcast_shapes(t.shape, theta.shape)) if t.shape else theta
        if op == "+":
            return self.args[0]._eval(t, theta) + self.args[1]._eval(t, theta)
        if op == "-":
            return self.args[0]._eval(t, theta) - self.args[1]._eval(t, theta)
        if op == "*":
            return self.args[0]._eval(t, theta) * self.args[1]._eval(t, theta)
        if op == "/":
            return self.args[0]._eval(t, theta) / self.args[1]._eval(t, theta)
        if op == "neg":
            return -self.args[0]._eval(t, theta)
        if op == "pow":
            return self.args[0]._eval(t, theta) ** self.value
        return _FUNCS[op](self.args[0]._eval(t, theta))

    # -- symbolic derivative ------------------------------------------------

    def diff(self, var: str = "t") -> "Node":
        op = self.op
        if op == "const" or (op in ("t", "theta") and op != var):
            return Node("const", value=0.0)
        if op == var:
            return Node("const", value=1.0)
        if op in "+-":
            return _simplify(Node(op, (self.args[0].diff(var), self.args[1].diff(var))))
        if op == "*":
            f, g = self.args
            return _simplify(Node("+", (
                _simplify(Node("*", (f.diff(var), g))),
                _simplify(Node("*", (f, g.diff(var)))),
            )))
        if op == "/":
            f, g = self.args
            num = Node("-", (
                _simplify(Node("*", (f.diff(var), g))),
                _simplify(Node("*", (f, g.diff(var)))),
            ))
            return _simplify(Node("/", (_simplify(num), _simplify(Node("pow", (g,), 2.0)))))
        if op == "neg":
            return _simplify(Node("neg", (self.args[0].diff(var),)))
        if op == "pow":
            base = self.args[0]
            inner = _simplify(Node("pow", (base,), self.value - 1.0))
            outer = _simplify(Node("*", (Node("const", value=self.value), inner)))
            return _simplify(Node("*", (outer, base.diff(var))))
        chain = self.args[0].diff(var)
        if op == "sin":
            outer = Node("cos", self.args)
        elif op == "cos":
            outer = Node("neg", (Node("sin", self.args),))
        elif op == "sinh":
            outer = Node("cosh", self.args)
        elif op == "cosh":
            outer = Node("sinh", self.args)
        elif op == "exp":
            outer = self
        else:
            raise ExpressionError(f"cannot differentiate {op}")
        return _simplify(Node("*", (outer, chain)))

    def depends_on(self, var: str) -> bool:
        if self.op == var:
            return True
        return any(a.depends_on(var) for a in self.args)


def _is_const(n: Node, v=None) -> bool:
    return n.op == "const" and (v is None or n.value == v)


def _simplify(n: Node) -> Node:
    if n.op in ("const", "t", "theta"):
        return n
    a = n.args
    if n.op == "+":
        if _is_const(a[0], 0.0):
            return a[1]
        if _is_const(a[1], 0.0):
            return a[0]
        if _is_const(a[0]) and _is_const(a[1]):
            return Node("const", value=a[0].value + a[1].value)
    elif n.op == "-":
        if _is_const(a[1], 0.0):
            return a[0]
        if _is_const(a[0]) and _is_const(a[1]):
            return Node("const", value=a[0].value - a[1].value)
    elif n.op == "*":
        if _is_const(a[0], 0.0) or _is_const(a[1], 0.0):
            return Node("const", value=0.0)
        if _is_const(a[0], 1.0):
            return a[1]
        if _is_const(a[1], 1.0):
            return a[0]
        if _is_const(a[0]) and _is_const(a[1]):
            return Node("const", value=a[0].value * a[1].value)
    elif n.op == "/":
        if _is_const(a[0], 0.0):
            return Node("const", value=0.0)
        if _is_const(a[1], 1.0):
            return a[0]
    elif n.op == "neg":
        if _is_const(a[0]):
            return Node("const", value=-a[0].value)
    elif n.op == "pow":
        if n.value == 0.0:
            return Node("const", value=1.0)
        if n.value == 1.0:
            return a[0]
        if _is_const(a[0]):
            return Node("const", value=a[0].value ** n.value)
    return n


class _Parser:
    def __init__(self, text: str):
        self.tokens = []
        pos = 0
        while pos < len(text):
            mobj = _TOKEN.match(text, pos)
            if mobj is None:
                if text[pos:].strip() == "":
                    break
                raise ExpressionError(f"bad token at {text[pos:]!r}")
            num, name, dstar, sym = mobj.groups()
            if num is not None:
                self.tokens.append(("num", float(num)))
            elif name is not None:
                self.tokens.append(("name", name))
            elif dstar is not None:
                self.tokens.append(("sym", "^"))
            else:
                self.tokens.append(("sym", sym))
            pos = mobj.end()
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else (None, None)

    def take(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def expect(self, sym):
        kind, val = self.take()
        if kind != "sym" or val != sym:
            raise ExpressionError(f"expected {sym!r}, got {val!r}")

    def parse(self) -> Node:
        node = self.expr()
        if self.pos != len(self.tokens):
            raise ExpressionError(f"unexpected trailing input near {self.peek()[1]!r}")
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek() == ("sym", "+") or self.peek() == ("sym", "-"):
            _, op = self.take()
            node = _simplify(Node(op, (node, self.term())))
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek() == ("sym", "*") or self.peek() == ("sym", "/"):
            _, op = self.take()
            node = _simplify(Node(op, (node, self.unary())))
        return node

    def unary(self) -> Node:
        if self.peek() == ("sym", "-"):
            self.take()
            return _simplify(Node("neg", (self.unary(),)))
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek() == ("sym", "^"):
            self.take()
            exponent = self.unary()
            if not _is_const(exponent):
                raise ExpressionError("exponents must be numeric constants")
            return _simplify(Node("pow", (base,), exponent.value))
        return base

    def atom(self) -> Node:
        kind, val = self.take()
        if kind == "num":
            return Node("const", value=val)
        if kind == "name":
            if val == "t":
                return Node("t")
            if val == "theta":
                return Node("theta")
            if val in _FUNCS:
                self.expect("(")
                inner = self.expr()
                self.expect(")")
                return Node(val, (inner,))
            if val == "pi":
                return Node("const", value=float(np.pi))
            raise ExpressionError(f"unknown name {val!r}")
        if kind == "sym" and val == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        raise ExpressionError(f"unexpected token {val!r}")


def parse_expression(text: str) -> Node:
    """Parse an expression in t (and theta) into a differentiable node."""
    if not text or not text.strip():
        raise ExpressionError("empty expression")
    return _Parser(text).parse()
