"""
Expression parser for boundary signals and source terms
Recursive descent over constants, x, t, pi, e, sin/cos/exp/sqrt/abs, + - * / ^ and parentheses
"""

import operator
import re
from dataclasses import dataclass
from typing import Callable, FrozenSet, List, Optional

import numpy as np

from core.errors import ParseError

FUNCTIONS = {
    'sin': np.sin,
    'cos': np.cos,
    'exp': np.exp,
    'sqrt': np.sqrt,
    'abs': np.abs,
}

CONSTANTS = {
    'pi': np.pi,
    'e': np.e,
}

BINARY_OPERATORS = {
    '+': operator.add,
    '-': operator.sub,
    '*': operator.mul,
    '/': operator.truediv,
}

TOKEN_PATTERN = re.compile(r"""
    (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>\*\*|[-+*/^()])
  | (?P<space>\s+)
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    column: int


def tokenize(text: str, line: Optional[int] = None, column_offset: int = 0) -> List[Token]:
    tokens = []
    position = 0
    while position < len(text):
        match = TOKEN_PATTERN.match(text, position)
        if match is None:
            raise ParseError(f"Unexpected character '{text[position]}'", line, column_offset + position + 1)
        if match.lastgroup != 'space':
            tokens.append(Token(match.lastgroup, match.group(), column_offset + position + 1))
        position = match.end()
    tokens.append(Token('end', '', column_offset + len(text) + 1))
    return tokens


class Expression:
    """Compiled expression; call with numpy arrays or scalars for x and t"""

    def __init__(self, source: str, evaluator: Callable, variables: FrozenSet[str]):
        self.source = source
        self._evaluator = evaluator
        self.variables = variables

    def __repr__(self) -> str:
        return f"Expression({self.source!r})"

    def __call__(self, x=0.0, t=0.0):
        value = self._evaluator(np.asarray(x, dtype=float), float(t) if np.ndim(t) == 0 else np.asarray(t))
        return np.broadcast_to(value, np.shape(x)).astype(float) if np.ndim(x) else float(value)

    @property
    def is_constant(self) -> bool:
        return not self.variables

    def as_signal(self) -> Callable[[float], float]:
        """Function of t only, for boundary pressures"""
        return lambda t: float(self._evaluator(np.asarray(0.0), float(t)))

    def as_source(self) -> Callable[[np.ndarray, float], np.ndarray]:
        """Function of (x, t), for the right-hand sides f and g"""
        return lambda x, t: self(x, t)

    def as_field(self) -> Callable[[np.ndarray], np.ndarray]:
        """Function of x at t = 0, for initial values and friction coefficients"""
        return lambda x: self(x, 0.0)


def _binary(function, left, right):
    return lambda x, t: function(left(x, t), right(x, t))


class _Parser:
    def __init__(self, text: str, line: Optional[int], column_offset: int):
        self.text = text
        self.line = line
        self.tokens = tokenize(text, line, column_offset)
        self.position = 0
        self.variables = set()

    @property
    def current(self) -> Token:
        return self.tokens[self.position]

    def advance(self) -> Token:
        token = self.tokens[self.position]
        self.position += 1
        return token

    def error(self, message: str, token: Optional[Token] = None):
        token = token or self.current
        return ParseError(message, self.line, token.column)

    def expect(self, text: str, opening: Optional[Token] = None) -> Token:
        if self.current.text != text:
            if opening is not None:
                raise self.error(f"Unclosed parenthesis, expected '{text}'", opening)
            raise self.error(f"Expected '{text}'")
        return self.advance()

    def parse(self):
        if self.current.kind == 'end':
            raise self.error("Empty expression")
        node = self.expression()
        if self.current.kind != 'end':
            raise self.error(f"Unexpected '{self.current.text}'")
        return node

    def expression(self):
        node = self.term()
        while self.current.text in ('+', '-'):
            op = self.advance().text
            node = _binary(BINARY_OPERATORS[op], node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.current.text in ('*', '/'):
            op = self.advance().text
            node = _binary(BINARY_OPERATORS[op], node, self.unary())
        return node

    def unary(self):
        if self.current.text == '-':
            self.advance()
            operand = self.unary()
            return lambda x, t: -operand(x, t)
        if self.current.text == '+':
            self.advance()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.current.text in ('^', '**'):
            self.advance()
            exponent = self.unary()
            return lambda x, t: base(x, t) ** exponent(x, t)
        return base

    def atom(self):
        token = self.current
        if token.kind == 'number':
            self.advance()
            value = float(token.text)
            return lambda x, t: value
        if token.kind == 'name':
            self.advance()
            if token.text in FUNCTIONS:
                function = FUNCTIONS[token.text]
                opening = self.current
                if opening.text != '(':
                    raise self.error(f"Function '{token.text}' needs an argument in parentheses")
                self.advance()
                if self.current.kind == 'end':
                    raise self.error("Unclosed parenthesis", opening)
                argument = self.expression()
                self.expect(')', opening)
                return lambda x, t: function(argument(x, t))
            if token.text in CONSTANTS:
                value = CONSTANTS[token.text]
                return lambda x, t: value
            if token.text == 'x':
                self.variables.add('x')
                return lambda x, t: x
            if token.text == 't':
                self.variables.add('t')
                return lambda x, t: t
            raise self.error(f"Unknown name '{token.text}'", token)
        if token.text == '(':
            self.advance()
            if self.current.kind == 'end':
                raise self.error("Unclosed parenthesis", token)
            node = self.expression()
            self.expect(')', token)
            return node
        if token.kind == 'end':
            raise self.error("Unexpected end of expression")
        raise self.error(f"Unexpected '{token.text}'")


def parse_expression(text: str, line: Optional[int] = None, column_offset: int = 0) -> Expression:
    """Compile an expression string; errors carry the line and column of the offending token"""
    parser = _Parser(text, line, column_offset)
    evaluator = parser.parse()
    return Expression(text.strip(), evaluator, frozenset(parser.variables))
