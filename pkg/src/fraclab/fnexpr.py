"""Tiny function-literal language for CLI inputs.

Grammar (recursive descent):

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right-associative
    atom   := NUMBER | IDENT | FUNC '(' expr ')' | '(' expr ')'

FUNC is one of sin, cos, exp; IDENT must belong to the variable set the
caller allows (t for time grids, y for right-hand sides, x/K for map kicks).
Evaluation works on floats and numpy arrays alike.
"""

from __future__ import annotations

import re
from typing import Iterable

import numpy as np

from .errors import ValidationError

__all__ = ["parse_expression"]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)

_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}


class _Parser:
    def __init__(self, text: str, variables: Iterable[str]):
        self.text = text
        self.variables = set(variables)
        self.tokens = []
        pos = 0
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if m is None or m.end() == pos:
                raise ValidationError(
                    f"cannot tokenize expression at: {text[pos:pos+12]!r}"
                )
            pos = m.end()
            if m.group("num") is not None:
                self.tokens.append(("num", float(m.group("num"))))
            elif m.group("ident") is not None:
                self.tokens.append(("ident", m.group("ident")))
            else:
                self.tokens.append(("op", m.group("op")))
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None)

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect_op(self, op):
        kind, val = self.take()
        if kind != "op" or val != op:
            raise ValidationError(f"expected {op!r} in expression, got {val!r}")

    def parse(self):
        node = self.expr()
        if self.i != len(self.tokens):
            raise ValidationError(
                f"unexpected trailing input in expression: {self.tokens[self.i:]}"
            )
        return node

    def expr(self):
        node = self.term()
        while self.peek() == ("op", "+") or self.peek() == ("op", "-"):
            _, op = self.take()
            rhs = self.term()
            node = (
                (lambda a, b: lambda env: a(env) + b(env))
                if op == "+"
                else (lambda a, b: lambda env: a(env) - b(env))
            )(node, rhs)
        return node

    def term(self):
        node = self.unary()
        while self.peek() == ("op", "*") or self.peek() == ("op", "/"):
            _, op = self.take()
            rhs = self.unary()
            node = (
                (lambda a, b: lambda env: a(env) * b(env))
                if op == "*"
                else (lambda a, b: lambda env: a(env) / b(env))
            )(node, rhs)
        return node

    def unary(self):
        if self.peek() == ("op", "-"):
            self.take()
            inner = self.unary()
            return lambda env: -inner(env)
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            exponent = self.unary()
            return lambda env: base(env) ** exponent(env)
        return base

    def atom(self):
        kind, val = self.take()
        if kind == "num":
            return lambda env, v=val: v
        if kind == "ident":
            if val in _FUNCS:
                fn = _FUNCS[val]
                self.expect_op("(")
                inner = self.expr()
                self.expect_op(")")
                return lambda env: fn(inner(env))
            if val not in self.variables:
                raise ValidationError(
                    f"unknown identifier {val!r}; allowed: "
                    f"{sorted(self.variables)} and functions {sorted(_FUNCS)}"
                )
            return lambda env, v=val: env[v]
        if (kind, val) == ("op", "("):
            inner = self.expr()
            self.expect_op(")")
            return inner
        raise ValidationError(f"unexpected token {val!r} in expression")


def parse_expression(text: str, variables: Iterable[str]):
    """Compile an expression into fn(**variables); raises ValidationError."""
    if not text or not text.strip():
        raise ValidationError("empty expression")
    node = _Parser(text, variables).parse()
    names = tuple(variables)

    def fn(*args, **kwargs):
        env = dict(zip(names, args))
        env.update(kwargs)
        return node(env)

    return fn
