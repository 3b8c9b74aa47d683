"""Recursive-descent parser for constraint inequality expressions.

Grammar (whitespace insignificant):

    comparison : sum ('<=' | '>=' | '<' | '>') sum
    sum        : term (('+' | '-') term)*
    term       : factor (('*' | '/') factor)*
    factor     : '-' factor | power
    power      : atom (('^' | '**') factor)?
    atom       : NUMBER | VARIABLE | FUNCTION '(' sum ')' | '(' sum ')'

Variables are ``x``, ``y``, ``z``; functions are sin, cos, sqrt, abs, exp
and log. ``^`` and ``**`` both denote exponentiation and bind tighter than
unary minus, associating to the right.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidInput, ParseError, UnknownVariable

FUNCTIONS = {
    "sin": math.sin,
    "cos": math.cos,
    "sqrt": math.sqrt,
    "abs": abs,
    "exp": math.exp,
    "log": math.log,
}

VARIABLES = ("x", "y", "z")

COMPARISON_OPS = ("<=", ">=", "<", ">")


# --- abstract syntax tree ---------------------------------------------------

@dataclass(frozen=True)
class Number:
    value: float

    def evaluate(self, env) -> float:
        return self.value

    def text(self) -> str:
        return format(self.value, "g")


@dataclass(frozen=True)
class Variable:
    name: str

    def evaluate(self, env) -> float:
        return env[self.name]

    def text(self) -> str:
        return self.name


@dataclass(frozen=True)
class Negate:
    operand: object

    def evaluate(self, env) -> float:
        return -self.operand.evaluate(env)

    def text(self) -> str:
        return f"(-{self.operand.text()})"


@dataclass(frozen=True)
class BinaryOp:
    op: str
    left: object
    right: object

    def evaluate(self, env) -> float:
        a = self.left.evaluate(env)
        b = self.right.evaluate(env)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if self.op == "/":
            return a / b
        return a**b

    def text(self) -> str:
        return f"({self.left.text()} {self.op} {self.right.text()})"


@dataclass(frozen=True)
class FunctionCall:
    name: str
    argument: object

    def evaluate(self, env) -> float:
        return FUNCTIONS[self.name](self.argument.evaluate(env))

    def text(self) -> str:
        return f"{self.name}({self.argument.text()})"


@dataclass(frozen=True)
class Comparison:
    op: str
    left: object
    right: object

    def evaluate(self, env) -> bool:
        try:
            a = self.left.evaluate(env)
            b = self.right.evaluate(env)
        except (ValueError, ZeroDivisionError, OverflowError) as exc:
            raise InvalidInput(f"expression evaluation failed at {env}: {exc}") from exc
        if self.op == "<=":
            return a <= b
        if self.op == ">=":
            return a >= b
        if self.op == "<":
            return a < b
        return a > b

    def text(self) -> str:
        return f"{self.left.text()} {self.op} {self.right.text()}"


def variables_used(node) -> set[str]:
    if isinstance(node, Variable):
        return {node.name}
    if isinstance(node, Number):
        return set()
    if isinstance(node, Negate):
        return variables_used(node.operand)
    if isinstance(node, FunctionCall):
        return variables_used(node.argument)
    return variables_used(node.left) | variables_used(node.right)


# --- tokenizer ---------------------------------------------------------------

@dataclass(frozen=True)
class Token:
    kind: str     # number | identifier | operator | comparison | lparen | rparen | end
    text: str
    offset: int


def _tokenize(source: str) -> list[Token]:
    tokens = []
    i = 0
    n = len(source)
    while i < n:
        c = source[i]
        if c.isspace():
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < n and source[i + 1].isdigit()):
            j = i
            while j < n and (source[j].isdigit() or source[j] == "."):
                j += 1
            if j < n and source[j] in "eE":
                k = j + 1
                if k < n and source[k] in "+-":
                    k += 1
                if k < n and source[k].isdigit():
                    j = k
                    while j < n and source[j].isdigit():
                        j += 1
            text = source[i:j]
            try:
                float(text)
            except ValueError:
                raise ParseError(f"bad number literal {text!r}", i, ("number",))
            tokens.append(Token("number", text, i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            tokens.append(Token("identifier", source[i:j], i))
            i = j
            continue
        if source.startswith("**", i):
            tokens.append(Token("operator", "^", i))
            i += 2
            continue
        if source.startswith("<=", i) or source.startswith(">=", i):
            tokens.append(Token("comparison", source[i : i + 2], i))
            i += 2
            continue
        if c in "<>":
            tokens.append(Token("comparison", c, i))
            i += 1
            continue
        if c in "+-*/^":
            tokens.append(Token("operator", c, i))
            i += 1
            continue
        if c == "(":
            tokens.append(Token("lparen", c, i))
            i += 1
            continue
        if c == ")":
            tokens.append(Token("rparen", c, i))
            i += 1
            continue
        raise ParseError(
            f"unexpected character {c!r}",
            i,
            ("number", "identifier", "operator", "comparison", "(", ")"),
        )
    tokens.append(Token("end", "", n))
    return tokens


# --- parser ------------------------------------------------------------------

_ATOM_EXPECTED = ("number", "identifier", "(", "-")


class _Parser:
    def __init__(self, source: str):
        self.tokens = _tokenize(source)
        self.pos = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.pos]

    def _advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def _fail(self, expected: tuple[str, ...]):
        tok = self.current
        shown = tok.text if tok.kind != "end" else "end of input"
        raise ParseError(f"unexpected {shown!r}", tok.offset, expected)

    def parse_comparison(self) -> Comparison:
        left = self.parse_sum()
        if self.current.kind != "comparison":
            self._fail(COMPARISON_OPS)
        op = self._advance().text
        right = self.parse_sum()
        if self.current.kind != "end":
            self._fail(("end of input",))
        return Comparison(op, left, right)

    def parse_sum(self):
        node = self.parse_term()
        while self.current.kind == "operator" and self.current.text in "+-":
            op = self._advance().text
            node = BinaryOp(op, node, self.parse_term())
        return node

    def parse_term(self):
        node = self.parse_factor()
        while self.current.kind == "operator" and self.current.text in "*/":
            op = self._advance().text
            node = BinaryOp(op, node, self.parse_factor())
        return node

    def parse_factor(self):
        if self.current.kind == "operator" and self.current.text == "-":
            self._advance()
            return Negate(self.parse_factor())
        return self.parse_power()

    def parse_power(self):
        node = self.parse_atom()
        if self.current.kind == "operator" and self.current.text == "^":
            self._advance()
            return BinaryOp("^", node, self.parse_factor())
        return node

    def parse_atom(self):
        tok = self.current
        if tok.kind == "number":
            self._advance()
            return Number(float(tok.text))
        if tok.kind == "identifier":
            self._advance()
            if self.current.kind == "lparen":
                if tok.text not in FUNCTIONS:
                    raise UnknownVariable(
                        f"unknown function {tok.text!r}", tok.offset, tuple(FUNCTIONS)
                    )
                self._advance()
                arg = self.parse_sum()
                if self.current.kind != "rparen":
                    self._fail((")",))
                self._advance()
                return FunctionCall(tok.text, arg)
            if tok.text not in VARIABLES:
                raise UnknownVariable(
                    f"unknown variable {tok.text!r}", tok.offset, VARIABLES
                )
            return Variable(tok.text)
        if tok.kind == "lparen":
            self._advance()
            node = self.parse_sum()
            if self.current.kind != "rparen":
                self._fail((")",))
            self._advance()
            return node
        self._fail(_ATOM_EXPECTED)


def parse_comparison(source: str) -> Comparison:
    """Parse an inequality like ``"x^2 + y^2 <= 25"`` into an AST."""
    return _Parser(source).parse_comparison()
