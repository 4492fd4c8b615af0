"""Rate-expression parser - infix arithmetic over species and parameters"""

import logging
import re
from typing import Sequence

from lnamor.lib.errors import ParseError, UnboundParameter
from lnamor.lib.network.ast import (
    BinaryOp,
    Constant,
    Expression,
    Negate,
    ParameterRef,
    SpeciesRef,
    Sqrt,
)

logger = logging.getLogger(__name__)

TOKEN_PATTERN = re.compile(
    r"\s*(?:"
    r"(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^(),])"
    r")"
)

FUNCTIONS = {"sqrt": Sqrt}


class ExpressionParser:
    """Recursive-descent parser for rate laws such as ``c1/(1+S2^2)``.

    Grammar (``^`` binds tightest and is right-associative)::

        expr   := term (('+' | '-') term)*
        term   := unary (('*' | '/') unary)*
        unary  := ('-' | '+') unary | power
        power  := atom ('^' unary)?
        atom   := NUMBER | NAME | 'sqrt' '(' expr ')' | '(' expr ')'

    Identifiers resolve to species first, then to parameters.
    """

    def __init__(self, text: str, species: Sequence[str], parameters: Sequence[str]):
        self._text = text
        self._tokens = self._tokenize(text)
        self._pos = 0
        self._species = {name: i for i, name in enumerate(species)}
        self._parameters = set(parameters)

    @classmethod
    def parse(
        cls, text: str, species: Sequence[str], parameters: Sequence[str]
    ) -> Expression:
        """Parse a rate expression into an Expression tree

        Args:
            text: Infix expression
            species: Ordered species names
            parameters: Bound parameter names

        Returns:
            Expression tree with identifiers resolved

        Raises:
            ParseError: If the text is not a valid expression
            UnboundParameter: If an identifier is neither a species nor a parameter
        """
        if not text or not text.strip():
            raise ParseError("rate expression cannot be empty")
        parser = cls(text, species, parameters)
        expr = parser._expr()
        if parser._peek() is not None:
            raise ParseError(
                f"unexpected token {parser._peek()[1]!r} in expression {text!r}"
            )
        return expr

    @staticmethod
    def _tokenize(text: str) -> list[tuple[str, str]]:
        tokens = []
        pos = 0
        stripped = text.rstrip()
        while pos < len(stripped):
            match = TOKEN_PATTERN.match(stripped, pos)
            if match is None or match.end() == pos:
                raise ParseError(
                    f"unexpected character {stripped[pos]!r} at column {pos + 1} "
                    f"in expression {text!r}"
                )
            kind = match.lastgroup
            tokens.append((kind, match.group(kind)))
            pos = match.end()
        return tokens

    def _peek(self) -> tuple[str, str] | None:
        if self._pos < len(self._tokens):
            return self._tokens[self._pos]
        return None

    def _advance(self) -> tuple[str, str]:
        token = self._peek()
        if token is None:
            raise ParseError(f"unexpected end of expression {self._text!r}")
        self._pos += 1
        return token

    def _accept(self, symbol: str) -> bool:
        token = self._peek()
        if token is not None and token == ("op", symbol):
            self._pos += 1
            return True
        return False

    def _expect(self, symbol: str) -> None:
        if not self._accept(symbol):
            found = self._peek()
            found_text = "end of input" if found is None else repr(found[1])
            raise ParseError(f"expected {symbol!r}, found {found_text} in {self._text!r}")

    def _expr(self) -> Expression:
        node = self._term()
        while True:
            if self._accept("+"):
                node = BinaryOp("+", node, self._term())
            elif self._accept("-"):
                node = BinaryOp("-", node, self._term())
            else:
                return node

    def _term(self) -> Expression:
        node = self._unary()
        while True:
            if self._accept("*"):
                node = BinaryOp("*", node, self._unary())
            elif self._accept("/"):
                node = BinaryOp("/", node, self._unary())
            else:
                return node

    def _unary(self) -> Expression:
        if self._accept("-"):
            return Negate(self._unary())
        if self._accept("+"):
            return self._unary()
        return self._power()

    def _power(self) -> Expression:
        base = self._atom()
        if self._accept("^"):
            return BinaryOp("^", base, self._unary())
        return base

    def _atom(self) -> Expression:
        kind, text = self._advance()
        if kind == "number":
            return Constant(float(text))
        if kind == "name":
            if text in FUNCTIONS and self._accept("("):
                operand = self._expr()
                self._expect(")")
                return FUNCTIONS[text](operand)
            return self._resolve(text)
        if text == "(":
            node = self._expr()
            self._expect(")")
            return node
        raise ParseError(f"unexpected token {text!r} in expression {self._text!r}")

    def _resolve(self, name: str) -> Expression:
        if name in self._species:
            return SpeciesRef(self._species[name], name)
        if name in self._parameters:
            return ParameterRef(name)
        raise UnboundParameter(f"identifier {name!r} is neither a species nor a parameter")
