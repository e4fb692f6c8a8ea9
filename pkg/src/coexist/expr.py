"""A tiny expression language for densities, curves and integrands.

Grammar (precedence low to high): ``+ -``, ``* /``, unary ``-``, ``^``
(right associative).  Functions: sin cos tan exp log sqrt abs min max.
Variables come from a fixed set: x, y, z, t, theta and x1..xn.  Angles are
radians; ``^`` is real power and requires a non-negative base when the
exponent is not an integer.

Three evaluators share the AST:

* :func:`eval_expression` -- IEEE double on scalars, domain violations raise
  :class:`EvalError` (never NaN).
* :func:`eval_array` -- vectorised numpy evaluation for samplers/quadrature.
* :func:`interval_eval` -- inclusion-isotone interval extension, used for
  certified range bounds (Darboux sums, level-set containment).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Mapping, Union

import numpy as np

__all__ = [
    "Expression",
    "Literal",
    "Var",
    "Unary",
    "Binary",
    "Call",
    "ParseError",
    "EvalError",
    "parse_expression",
    "eval_expression",
    "eval_array",
    "interval_eval",
    "pretty",
    "free_variables",
    "as_expression",
]

FUNCTIONS = {"sin": 1, "cos": 1, "tan": 1, "exp": 1, "log": 1, "sqrt": 1, "abs": 1,
             "min": 2, "max": 2}
_SIMPLE_VARS = ("x", "y", "z", "t", "theta")
_VAR_RE = re.compile(r"^(?:[xyzt]|theta|x[0-9]+)$")


def is_variable_name(name: str) -> bool:
    return bool(_VAR_RE.match(name))


class ParseError(ValueError):
    """Syntax error with byte offset and the tokens that would have been legal."""

    def __init__(self, message: str, offset: int, expected: tuple[str, ...] = ()):
        self.offset = offset
        self.expected = expected
        detail = f" (expected {', '.join(expected)})" if expected else ""
        super().__init__(f"{message} at offset {offset}{detail}")


class EvalError(ValueError):
    """Domain violation or unbound variable, tagged with the node offset."""

    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} (expression offset {offset})")


@dataclass(frozen=True)
class Literal:
    value: float
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Var:
    name: str
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Unary:
    op: str  # '-'
    operand: "Expression"
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Binary:
    op: str  # + - * / ^
    left: "Expression"
    right: "Expression"
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple["Expression", ...]
    pos: int = field(default=0, compare=False)


Expression = Union[Literal, Var, Unary, Binary, Call]

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:[0-9]+(?:\.[0-9]*)?|\.[0-9]+)(?:[eE][+-]?[0-9]+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)


def _tokenize(src: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if not m:
            stripped = src[pos:].lstrip()
            if not stripped:
                break
            at = len(src) - len(stripped)
            raise ParseError(f"unexpected character {stripped[0]!r}", at)
        if m.group("num") is not None:
            tokens.append(("num", m.group("num"), m.start("num")))
        elif m.group("ident") is not None:
            tokens.append(("ident", m.group("ident"), m.start("ident")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.tokens = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str):
        kind, text, pos = self.peek()
        if kind != "op" or text != op:
            raise ParseError(f"got {text or 'end of input'!r}", pos, (repr(op),))
        return self.advance()

    def parse(self) -> Expression:
        e = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ParseError(f"trailing input {text!r}", pos, ("operator", "end of input"))
        return e

    def expr(self) -> Expression:
        node = self.term()
        while True:
            kind, text, pos = self.peek()
            if kind == "op" and text in "+-":
                self.advance()
                node = Binary(text, node, self.term(), pos)
            else:
                return node

    def term(self) -> Expression:
        node = self.unary()
        while True:
            kind, text, pos = self.peek()
            if kind == "op" and text in "*/":
                self.advance()
                node = Binary(text, node, self.unary(), pos)
            else:
                return node

    def unary(self) -> Expression:
        kind, text, pos = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            return Unary("-", self.unary(), pos)
        return self.power()

    def power(self) -> Expression:
        base = self.atom()
        kind, text, pos = self.peek()
        if kind == "op" and text == "^":
            self.advance()
            # right associative; exponent may carry its own unary minus
            return Binary("^", base, self.unary(), pos)
        return base

    def atom(self) -> Expression:
        kind, text, pos = self.advance()
        if kind == "num":
            return Literal(float(text), pos)
        if kind == "ident":
            nkind, ntext, _ = self.peek()
            if nkind == "op" and ntext == "(":
                if text not in FUNCTIONS:
                    raise ParseError(f"unknown function {text!r}", pos, tuple(sorted(FUNCTIONS)))
                self.advance()
                args = [self.expr()]
                while True:
                    k2, t2, p2 = self.peek()
                    if k2 == "op" and t2 == ",":
                        self.advance()
                        args.append(self.expr())
                    else:
                        break
                self.expect_op(")")
                arity = FUNCTIONS[text]
                if text in ("min", "max"):
                    if len(args) < 2:
                        raise ParseError(f"{text} needs at least 2 arguments", pos)
                elif len(args) != arity:
                    raise ParseError(f"{text} takes {arity} argument(s), got {len(args)}", pos)
                return Call(text, tuple(args), pos)
            if not is_variable_name(text):
                raise ParseError(f"unknown identifier {text!r}", pos,
                                 _SIMPLE_VARS + ("x1..xn",))
            return Var(text, pos)
        if kind == "op" and text == "(":
            e = self.expr()
            self.expect_op(")")
            return e
        raise ParseError(f"got {text or 'end of input'!r}", pos, ("expression",))


def parse_expression(src: str) -> Expression:
    return _Parser(src).parse()


def as_expression(e: "Expression | str") -> Expression:
    return parse_expression(e) if isinstance(e, str) else e


def free_variables(e: Expression) -> set[str]:
    if isinstance(e, Literal):
        return set()
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Unary):
        return free_variables(e.operand)
    if isinstance(e, Binary):
        return free_variables(e.left) | free_variables(e.right)
    return set().union(*(free_variables(a) for a in e.args))


def pretty(e: Expression) -> str:
    """Fully parenthesised rendering; reparses to an identical tree."""
    if isinstance(e, Literal):
        if e.value < 0:
            return f"(-{-e.value!r})"
        return repr(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Unary):
        return f"(-{pretty(e.operand)})"
    if isinstance(e, Binary):
        return f"({pretty(e.left)} {e.op} {pretty(e.right)})"
    return f"{e.func}({', '.join(pretty(a) for a in e.args)})"


# --------------------------------------------------------------------------
# scalar evaluation


def _pow_scalar(a: float, b: float, pos: int) -> float:
    if a < 0 and b != int(b):
        raise EvalError(f"negative base {a} with non-integer exponent {b}", pos)
    if a == 0 and b < 0:
        raise EvalError("zero base with negative exponent", pos)
    try:
        return math.pow(a, b)
    except (ValueError, OverflowError) as exc:
        raise EvalError(f"power failed: {exc}", pos) from None


def eval_expression(e: Expression, env: Mapping[str, float]) -> float:
    v = _eval_scalar(e, env)
    if not math.isfinite(v):
        raise EvalError(f"non-finite result {v}", e.pos)
    return v


def _eval_scalar(e: Expression, env: Mapping[str, float]) -> float:
    if isinstance(e, Literal):
        return e.value
    if isinstance(e, Var):
        try:
            return float(env[e.name])
        except KeyError:
            raise EvalError(f"unbound variable {e.name!r}", e.pos) from None
    if isinstance(e, Unary):
        return -_eval_scalar(e.operand, env)
    if isinstance(e, Binary):
        a = _eval_scalar(e.left, env)
        b = _eval_scalar(e.right, env)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "/":
            if b == 0:
                raise EvalError("division by zero", e.pos)
            return a / b
        return _pow_scalar(a, b, e.pos)
    args = [_eval_scalar(a, env) for a in e.args]
    f = e.func
    if f == "sin":
        return math.sin(args[0])
    if f == "cos":
        return math.cos(args[0])
    if f == "tan":
        return math.tan(args[0])
    if f == "exp":
        try:
            return math.exp(args[0])
        except OverflowError:
            raise EvalError("exp overflow", e.pos) from None
    if f == "log":
        if args[0] <= 0:
            raise EvalError(f"log of non-positive value {args[0]}", e.pos)
        return math.log(args[0])
    if f == "sqrt":
        if args[0] < 0:
            raise EvalError(f"sqrt of negative value {args[0]}", e.pos)
        return math.sqrt(args[0])
    if f == "abs":
        return abs(args[0])
    if f == "min":
        return min(args)
    return max(args)


# --------------------------------------------------------------------------
# vectorised evaluation


def eval_array(e: Expression, env: Mapping[str, "np.ndarray | float"]) -> np.ndarray:
    """Evaluate over numpy arrays; any non-finite element raises EvalError."""
    with np.errstate(all="ignore"):
        v = np.asarray(_eval_np(e, env), dtype=float)
    if not np.all(np.isfinite(v)):
        raise EvalError("non-finite value in vectorised evaluation", e.pos)
    return v


def _eval_np(e: Expression, env):
    if isinstance(e, Literal):
        return e.value
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise EvalError(f"unbound variable {e.name!r}", e.pos) from None
    if isinstance(e, Unary):
        return -np.asarray(_eval_np(e.operand, env))
    if isinstance(e, Binary):
        a = _eval_np(e.left, env)
        b = _eval_np(e.right, env)
        if e.op == "+":
            return np.add(a, b)
        if e.op == "-":
            return np.subtract(a, b)
        if e.op == "*":
            return np.multiply(a, b)
        if e.op == "/":
            return np.divide(a, b)
        return np.power(a, b)
    args = [_eval_np(a, env) for a in e.args]
    f = e.func
    if f in ("sin", "cos", "tan", "exp", "sqrt", "abs"):
        return {"sin": np.sin, "cos": np.cos, "tan": np.tan,
                "exp": np.exp, "sqrt": np.sqrt, "abs": np.abs}[f](args[0])
    if f == "log":
        return np.log(args[0])
    if f == "min":
        return np.minimum.reduce(args)
    return np.maximum.reduce(args)


# --------------------------------------------------------------------------
# interval evaluation

Interval = tuple[float, float]

_TWO_PI = 2.0 * math.pi
# slack widens critical-point detection so the extension stays an enclosure
# even though the fold points k*pi are computed in floating point
_CRIT_SLACK = 1e-9


def interval_eval(e: Expression, env: Mapping[str, Interval]) -> Interval:
    """Enclosure of e over a box given as per-variable intervals.

    The natural interval extension: inclusion-isotone (smaller input boxes
    never widen the result), so Darboux bounds built from it refine
    monotonically.  Domain violations anywhere in the input box raise
    EvalError.
    """
    lo, hi = _eval_iv(e, env)
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise EvalError("non-finite interval bound", e.pos)
    return lo, hi


def _eval_iv(e: Expression, env) -> Interval:
    if isinstance(e, Literal):
        return e.value, e.value
    if isinstance(e, Var):
        try:
            lo, hi = env[e.name]
        except KeyError:
            raise EvalError(f"unbound variable {e.name!r}", e.pos) from None
        return float(lo), float(hi)
    if isinstance(e, Unary):
        lo, hi = _eval_iv(e.operand, env)
        return -hi, -lo
    if isinstance(e, Binary):
        a = _eval_iv(e.left, env)
        b = _eval_iv(e.right, env)
        if e.op == "+":
            return a[0] + b[0], a[1] + b[1]
        if e.op == "-":
            return a[0] - b[1], a[1] - b[0]
        if e.op == "*":
            cands = (a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1])
            return min(cands), max(cands)
        if e.op == "/":
            if b[0] <= 0 <= b[1]:
                raise EvalError("division by an interval containing zero", e.pos)
            cands = (a[0] / b[0], a[0] / b[1], a[1] / b[0], a[1] / b[1])
            return min(cands), max(cands)
        return _pow_iv(a, b, e.pos)
    args = [_eval_iv(a, env) for a in e.args]
    f = e.func
    if f == "sin":
        return _trig_iv(args[0], phase=0.0)
    if f == "cos":
        return _trig_iv(args[0], phase=math.pi / 2)
    if f == "tan":
        return _tan_iv(args[0], e.pos)
    if f == "exp":
        return math.exp(args[0][0]), math.exp(args[0][1])
    if f == "log":
        if args[0][0] <= 0:
            raise EvalError(f"log over an interval reaching {args[0][0]}", e.pos)
        return math.log(args[0][0]), math.log(args[0][1])
    if f == "sqrt":
        if args[0][0] < 0:
            raise EvalError(f"sqrt over an interval reaching {args[0][0]}", e.pos)
        return math.sqrt(args[0][0]), math.sqrt(args[0][1])
    if f == "abs":
        lo, hi = args[0]
        if lo >= 0:
            return lo, hi
        if hi <= 0:
            return -hi, -lo
        return 0.0, max(-lo, hi)
    if f == "min":
        return min(a[0] for a in args), min(a[1] for a in args)
    return max(a[0] for a in args), max(a[1] for a in args)


def _trig_iv(x: Interval, phase: float) -> Interval:
    """Range of sin(x + phase) over x; phase pi/2 turns it into cos."""
    lo, hi = x
    if hi - lo >= _TWO_PI:
        return -1.0, 1.0
    fn = (lambda v: math.cos(v)) if phase else (lambda v: math.sin(v))
    cands = [fn(lo), fn(hi)]
    # maxima of sin at pi/2 + 2k pi, of cos at 2k pi; minima half a turn away
    top = math.pi / 2 - phase
    bot = -math.pi / 2 - phase
    if _contains_shifted(lo, hi, top):
        cands.append(1.0)
    if _contains_shifted(lo, hi, bot):
        cands.append(-1.0)
    return min(cands), max(cands)


def _contains_shifted(lo: float, hi: float, anchor: float) -> bool:
    """Does [lo, hi] contain anchor + 2k*pi for some integer k (with slack)?"""
    k_lo = math.ceil((lo - anchor) / _TWO_PI - _CRIT_SLACK)
    k_hi = math.floor((hi - anchor) / _TWO_PI + _CRIT_SLACK)
    return k_lo <= k_hi


def _tan_iv(x: Interval, pos: int) -> Interval:
    lo, hi = x
    if hi - lo >= math.pi or _contains_shifted(lo, hi, math.pi / 2) or _contains_shifted(
        lo, hi, -math.pi / 2
    ):
        raise EvalError("tan over an interval containing a pole", pos)
    return math.tan(lo), math.tan(hi)


def _pow_iv(base: Interval, expo: Interval, pos: int) -> Interval:
    blo, bhi = base
    elo, ehi = expo
    if elo == ehi and float(elo).is_integer():
        n = int(elo)
        if n == 0:
            return 1.0, 1.0
        if n < 0:
            if blo <= 0 <= bhi:
                raise EvalError("negative power of an interval containing zero", pos)
            cands = (1.0 / blo, 1.0 / bhi)
            return _pow_iv((min(cands), max(cands)), (float(-n), float(-n)), pos)
        a, b = blo ** n, bhi ** n
        if n % 2 == 0:
            hi = max(a, b)
            lo = 0.0 if blo <= 0 <= bhi else min(a, b)
            return lo, hi
        return a, b
    if blo < 0:
        raise EvalError(f"non-integer power of an interval reaching {blo}", pos)
    if blo == 0 and elo <= 0:
        raise EvalError("zero base with non-positive exponent in interval power", pos)
    cands = [blo ** elo, blo ** ehi, bhi ** elo, bhi ** ehi]
    if blo <= 1.0 <= bhi:
        cands.append(1.0)
    return min(cands), max(cands)
