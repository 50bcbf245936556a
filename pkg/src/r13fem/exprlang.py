"""Small arithmetic expression language for boundary data and sources.

Grammar (standard precedence, power binds tightest, then unary minus, then
mul/div, then add/sub; +,-,*,/ are left-associative, ^ is right-associative):

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := ("-" | "+") unary | power
    power  := atom (("^" | "**") unary)?
    atom   := NUMBER | "pi" | "x" | "y" | NAME "(" expr ("," expr)* ")"
            | "(" expr ")"

Available functions: sin, cos, sqrt, exp, abs, atan2.  ``atan2(a, b)`` is the
conventional two-argument arctangent (a is the y-like argument), so
atan2(1, 1) = pi/4.  Variables are x and y only.
"""

import math

import numpy as np

__all__ = ["Expr", "ExprSyntaxError", "ExprEvalError", "parse", "evaluate", "pretty"]

_FUNCTIONS = {
    "sin": (1, np.sin),
    "cos": (1, np.cos),
    "sqrt": (1, np.sqrt),
    "exp": (1, np.exp),
    "abs": (1, np.abs),
    "atan2": (2, np.arctan2),
}

_CONSTANTS = {"pi": math.pi}


class ExprSyntaxError(ValueError):
    """Raised on malformed expression text; carries the source offset."""

    def __init__(self, message, offset):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class ExprEvalError(ArithmeticError):
    """Raised when evaluation hits a domain error (division by zero, atan2(0,0))."""


# AST nodes are plain tuples:
#   ("num", value) ("var", name) ("const", name)
#   ("neg", node) ("bin", op, left, right) ("call", name, [args])


class Expr:
    """A parsed expression over the variables x and y."""

    def __init__(self, node, text=None):
        self._node = node
        self._text = text

    def __call__(self, x, y):
        return evaluate(self, x, y)

    def __repr__(self):
        return f"Expr({pretty(self)!r})"

    def __eq__(self, other):
        return isinstance(other, Expr) and self._node == other._node

    def __hash__(self):
        return hash(("Expr", pretty(self)))


class _Tokenizer:
    _PUNCT = ("**", "+", "-", "*", "/", "^", "(", ")", ",")

    def __init__(self, text):
        self.text = text
        self.pos = 0
        self.tokens = []
        self._scan()
        self.index = 0

    def _scan(self):
        text, n = self.text, len(self.text)
        i = 0
        while i < n:
            ch = text[i]
            if ch.isspace():
                i += 1
                continue
            if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
                j = i
                while j < n and (text[j].isdigit() or text[j] == "."):
                    j += 1
                if j < n and text[j] in "eE":
                    k = j + 1
                    if k < n and text[k] in "+-":
                        k += 1
                    if k < n and text[k].isdigit():
                        j = k
                        while j < n and text[j].isdigit():
                            j += 1
                try:
                    value = float(text[i:j])
                except ValueError:
                    raise ExprSyntaxError(f"bad number {text[i:j]!r}", i) from None
                self.tokens.append(("num", value, i))
                i = j
                continue
            if ch.isalpha() or ch == "_":
                j = i
                while j < n and (text[j].isalnum() or text[j] == "_"):
                    j += 1
                self.tokens.append(("name", text[i:j], i))
                i = j
                continue
            for punct in self._PUNCT:
                if text.startswith(punct, i):
                    self.tokens.append(("op", punct, i))
                    i += len(punct)
                    break
            else:
                raise ExprSyntaxError(f"unexpected character {ch!r}", i)
        self.tokens.append(("end", None, n))

    def peek(self):
        return self.tokens[self.index]

    def next(self):
        tok = self.tokens[self.index]
        if tok[0] != "end":
            self.index += 1
        return tok


class _Parser:
    def __init__(self, text):
        self.toks = _Tokenizer(text)

    def parse(self):
        node = self._expr()
        kind, value, offset = self.toks.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {value!r}", offset)
        return node

    def _expr(self):
        node = self._term()
        while True:
            kind, value, _ = self.toks.peek()
            if kind == "op" and value in ("+", "-"):
                self.toks.next()
                node = ("bin", value, node, self._term())
            else:
                return node

    def _term(self):
        node = self._unary()
        while True:
            kind, value, _ = self.toks.peek()
            if kind == "op" and value in ("*", "/"):
                self.toks.next()
                node = ("bin", value, node, self._unary())
            else:
                return node

    def _unary(self):
        kind, value, _ = self.toks.peek()
        if kind == "op" and value in ("+", "-"):
            self.toks.next()
            node = self._unary()
            return ("neg", node) if value == "-" else node
        return self._power()

    def _power(self):
        node = self._atom()
        kind, value, _ = self.toks.peek()
        if kind == "op" and value in ("^", "**"):
            self.toks.next()
            return ("bin", "^", node, self._unary())
        return node

    def _atom(self):
        kind, value, offset = self.toks.next()
        if kind == "num":
            return ("num", value)
        if kind == "name":
            if value in ("x", "y"):
                return ("var", value)
            if value in _CONSTANTS:
                return ("const", value)
            if value in _FUNCTIONS:
                return self._call(value, offset)
            raise ExprSyntaxError(f"unknown name {value!r}", offset)
        if kind == "op" and value == "(":
            node = self._expr()
            kind, value, offset = self.toks.next()
            if not (kind == "op" and value == ")"):
                raise ExprSyntaxError("expected ')'", offset)
            return node
        raise ExprSyntaxError("expected a value", offset)

    def _call(self, name, name_offset):
        arity, _ = _FUNCTIONS[name]
        kind, value, offset = self.toks.next()
        if not (kind == "op" and value == "("):
            raise ExprSyntaxError(f"expected '(' after {name!r}", offset)
        args = [self._expr()]
        while True:
            kind, value, offset = self.toks.next()
            if kind == "op" and value == ")":
                break
            if kind == "op" and value == ",":
                args.append(self._expr())
            else:
                raise ExprSyntaxError("expected ',' or ')'", offset)
        if len(args) != arity:
            raise ExprSyntaxError(
                f"{name} takes {arity} argument(s), got {len(args)}", name_offset
            )
        return ("call", name, args)


def parse(text):
    """Parse expression text into an :class:`Expr`.

    Raises :class:`ExprSyntaxError` with the source offset on malformed input.
    """
    return Expr(_Parser(text).parse(), text)


def _eval_node(node, x, y):
    kind = node[0]
    if kind == "num":
        return node[1]
    if kind == "var":
        return x if node[1] == "x" else y
    if kind == "const":
        return _CONSTANTS[node[1]]
    if kind == "neg":
        return -_eval_node(node[1], x, y)
    if kind == "bin":
        _, op, left, right = node
        a = _eval_node(left, x, y)
        b = _eval_node(right, x, y)
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            if np.any(np.asarray(b) == 0.0):
                raise ExprEvalError("division by zero")
            return a / b
        if op == "^":
            return a**b
    if kind == "call":
        _, name, args = node
        values = [_eval_node(arg, x, y) for arg in args]
        if name == "atan2" and np.any(
            (np.asarray(values[0]) == 0.0) & (np.asarray(values[1]) == 0.0)
        ):
            raise ExprEvalError("atan2(0, 0) is undefined")
        return _FUNCTIONS[name][1](*values)
    raise AssertionError(f"bad node {node!r}")


def evaluate(expr, x, y):
    """Evaluate at (x, y); accepts scalars or broadcastable numpy arrays."""
    result = _eval_node(expr._node, x, y)
    if not np.all(np.isfinite(result)):
        raise ExprEvalError("expression evaluated to a non-finite value")
    return result


# precedence levels used to place parentheses when printing
_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4, "atom": 5}


def _pp(node):
    """Return (text, precedence-of-root)."""
    kind = node[0]
    if kind == "num":
        value = node[1]
        if value == int(value) and abs(value) < 1e16:
            text = str(int(value))
        else:
            text = repr(value)
        return text, _PREC["atom"]
    if kind == "var" or kind == "const":
        return node[1], _PREC["atom"]
    if kind == "neg":
        inner, prec = _pp(node[1])
        if prec < _PREC["neg"]:
            inner = f"({inner})"
        return f"-{inner}", _PREC["neg"]
    if kind == "bin":
        _, op, left, right = node
        lt, lp = _pp(left)
        rt, rp = _pp(right)
        prec = _PREC[op]
        if lp < prec or (op == "^" and lp <= prec):
            lt = f"({lt})"
        # right operand needs parens at equal precedence for the
        # left-associative operators (and for unary minus under ^)
        if rp < prec or (op in ("-", "/") and rp == prec):
            rt = f"({rt})"
        return f"{lt} {op} {rt}", prec
    if kind == "call":
        _, name, args = node
        inner = ", ".join(_pp(arg)[0] for arg in args)
        return f"{name}({inner})", _PREC["atom"]
    raise AssertionError(f"bad node {node!r}")


def pretty(expr):
    """Canonical text form; ``pretty . parse`` is a fixed point on its image."""
    return _pp(expr._node)[0]
