"""
Arithmetic expressions in the coordinates t, x, y.

Grammar: numbers, the three coordinate names, ``+ - * / ^``, unary minus,
parentheses and the functions exp, log, sin, cos, sqrt, abs. Precedence from
loosest to tightest: ``+ -``, ``* /``, unary minus, ``^`` (right associative).
Exponents must be constant.
"""
import logging
import re
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Sequence, Tuple, Union

from app.exceptions.expression_exceptions import ExpressionDomainError, ParseError
from app.exceptions.geometry_exceptions import JetDivisionError, JetDomainError
from app.utils.jets import UNIVARIATE_FUNCTIONS, Jet, jet_compose_univariate, jet_power

logger = logging.getLogger(__name__)

COORDINATES: Tuple[str, ...] = ("t", "x", "y")
FUNCTIONS: Tuple[str, ...] = ("exp", "log", "sin", "cos", "sqrt", "abs")

# (precedence, associativity); unary minus sits between "*" and "^"
BINARY_OPERATORS: Dict[str, Tuple[int, str]] = {
    "+": (1, "left"),
    "-": (1, "left"),
    "*": (2, "left"),
    "/": (2, "left"),
    "^": (4, "right"),
}
UNARY_PRECEDENCE = 3

_TOKEN = re.compile(
    r"(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
)


@dataclass(frozen=True)
class Number:
    value: float


@dataclass(frozen=True)
class Variable:
    name: str


@dataclass(frozen=True)
class Unary:
    """``op`` is "neg" or one of FUNCTIONS."""
    op: str
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


Expr = Union[Number, Variable, Unary, Binary]


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    position: int


def tokenize(text: str) -> List[Token]:
    tokens: List[Token] = []
    position = 0
    while position < len(text):
        if text[position].isspace():
            position += 1
            continue
        match = _TOKEN.match(text, position)
        if match is None:
            raise ParseError(position, f"unexpected character '{text[position]}'")
        kind = match.lastgroup
        tokens.append(Token(kind, match.group(kind), position))
        position = match.end()
    tokens.append(Token("end", "", len(text)))
    return tokens


class _Parser:
    """Precedence-climbing parser over a token list."""

    def __init__(self, tokens: List[Token], variables: Sequence[str]):
        self.tokens = tokens
        self.index = 0
        self.variables = tuple(variables)

    def peek(self) -> Token:
        return self.tokens[self.index]

    def advance(self) -> Token:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def expect_close(self, opened: Token) -> None:
        token = self.peek()
        if token.kind == "op" and token.text == ")":
            self.advance()
            return
        raise ParseError(token.position, f"unbalanced parentheses (opened at {opened.position})")

    def parse(self) -> Expr:
        if self.peek().kind == "end":
            raise ParseError(0, "empty expression")
        expr = self.parse_expression(0)
        token = self.peek()
        if token.kind != "end":
            if token.text == ")":
                raise ParseError(token.position, "unbalanced parentheses")
            raise ParseError(token.position, f"unexpected token '{token.text}'")
        return expr

    def parse_expression(self, min_precedence: int) -> Expr:
        left = self.parse_atom()
        while True:
            token = self.peek()
            if token.kind != "op" or token.text not in BINARY_OPERATORS:
                break
            precedence, assoc = BINARY_OPERATORS[token.text]
            if precedence < min_precedence:
                break
            self.advance()
            right = self.parse_expression(precedence + 1 if assoc == "left" else precedence)
            if token.text == "^" and variables(right):
                raise ParseError(token.position, "exponent must be constant")
            left = Binary(token.text, left, right)
        return left

    def parse_atom(self) -> Expr:
        token = self.advance()
        if token.kind == "end":
            raise ParseError(token.position, "empty operand")
        if token.kind == "number":
            return Number(float(token.text))
        if token.kind == "name":
            if token.text in FUNCTIONS:
                opened = self.peek()
                if opened.kind != "op" or opened.text != "(":
                    raise ParseError(opened.position, f"expected '(' after '{token.text}'")
                self.advance()
                inner = self.parse_expression(0)
                self.expect_close(opened)
                return Unary(token.text, inner)
            if token.text in self.variables:
                return Variable(token.text)
            raise ParseError(token.position, f"unknown identifier '{token.text}'")
        if token.text == "(":
            inner = self.parse_expression(0)
            self.expect_close(token)
            return inner
        if token.text == "-":
            return Unary("neg", self.parse_expression(UNARY_PRECEDENCE))
        if token.text == ")":
            raise ParseError(token.position, "empty operand")
        raise ParseError(token.position, f"unexpected operator '{token.text}'")


def parse(text: str, coordinates: Sequence[str] = COORDINATES) -> Expr:
    return _Parser(tokenize(text), coordinates).parse()


def variables(expr: Expr) -> FrozenSet[str]:
    if isinstance(expr, Variable):
        return frozenset({expr.name})
    if isinstance(expr, Unary):
        return variables(expr.operand)
    if isinstance(expr, Binary):
        return variables(expr.left) | variables(expr.right)
    return frozenset()


def _precedence(expr: Expr) -> int:
    if isinstance(expr, Binary):
        return BINARY_OPERATORS[expr.op][0]
    if isinstance(expr, Unary) and expr.op == "neg":
        return UNARY_PRECEDENCE
    return 10


def to_text(expr: Expr) -> str:
    """Render an expression so that ``parse(to_text(e)) == e`` for parsed trees."""
    if isinstance(expr, Number):
        return repr(float(expr.value))
    if isinstance(expr, Variable):
        return expr.name
    if isinstance(expr, Unary):
        if expr.op == "neg":
            inner = to_text(expr.operand)
            if isinstance(expr.operand, Binary) and expr.operand.op != "^":
                inner = f"({inner})"
            return f"-{inner}"
        return f"{expr.op}({to_text(expr.operand)})"
    precedence, assoc = BINARY_OPERATORS[expr.op]
    left, right = to_text(expr.left), to_text(expr.right)
    left_prec, right_prec = _precedence(expr.left), _precedence(expr.right)
    if left_prec < precedence or (left_prec == precedence and assoc == "right"):
        left = f"({left})"
    if right_prec < precedence or (right_prec == precedence and assoc == "left"):
        right = f"({right})"
    separator = "" if expr.op == "^" else " "
    return f"{left}{separator}{expr.op}{separator}{right}"


def constant_value(expr: Expr) -> float:
    """Value of a variable-free expression."""
    return eval_jet(expr, (0.0, 0.0, 0.0), 0).value


def eval_jet(
    expr: Expr,
    point: Sequence[float],
    order: int,
    coordinates: Sequence[str] = COORDINATES,
) -> Jet:
    """Jet of ``expr`` at ``point`` through total order ``order``."""
    if isinstance(expr, Number):
        return Jet.constant(expr.value, order)
    if isinstance(expr, Variable):
        axis = list(coordinates).index(expr.name)
        return Jet.variable(axis, float(point[axis]), order)
    try:
        if isinstance(expr, Unary):
            operand = eval_jet(expr.operand, point, order, coordinates)
            if expr.op == "neg":
                return -operand
            return jet_compose_univariate(UNIVARIATE_FUNCTIONS[expr.op], operand)
        left = eval_jet(expr.left, point, order, coordinates)
        if expr.op == "^":
            return jet_power(left, constant_value(expr.right))
        right = eval_jet(expr.right, point, order, coordinates)
        if expr.op == "+":
            return left + right
        if expr.op == "-":
            return left - right
        if expr.op == "*":
            return left * right
        return left / right
    except JetDivisionError:
        raise ExpressionDomainError(to_text(expr), "division by zero")
    except JetDomainError as e:
        raise ExpressionDomainError(to_text(expr), e.reason)


def evaluate(expr: Expr, point: Sequence[float]) -> float:
    return eval_jet(expr, point, 0).value
