"""Inline toy systems from a small expression grammar.

Expressions use state variables ``x`` (1-D) or ``x1 .. xn``, the scalar
control ``u``, nonnegative-safe arithmetic ``+ - * /``, constant powers and
``exp``. Saturating ratios must be written ``P/(Q+P)`` (for example
``2*exp(-u)*(x/(1+x))``) so the analysis can see the shared term. Every
expression goes through a sign/monotonicity analysis; a
dynamics component must come out nonnegative, nondecreasing in the state
and nonincreasing in the control, and a constraint must be nondecreasing in
the state. Anything the analysis cannot vouch for is rejected.
"""
from __future__ import annotations

import ast
import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .order import ControlBounds, Direction, Indicator, IndicatorSet, MonotoneDynamics


class ToyError(ValueError):
    pass


# direction: 0 constant, +1 nondecreasing, -1 nonincreasing, None unknown
def _comb(a, b):
    if a is None or b is None:
        return None
    if a == 0:
        return b
    if b == 0 or a == b:
        return a
    return None


def _flip(a):
    return None if a is None else -a


@dataclass(frozen=True)
class _Info:
    dx: int | None
    du: int | None
    sign: str  # "pos", "nonneg" or "any"
    const: float | None = None  # numeric value when the node is a literal expression


def _nonneg(i: _Info) -> bool:
    return i.sign in ("pos", "nonneg")


class _Analyzer:
    def __init__(self, names: set[str], u_nonneg: bool):
        self.names = names
        self.u_nonneg = u_nonneg

    def visit(self, node) -> _Info:
        if isinstance(node, ast.Expression):
            return self.visit(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            v = float(node.value)
            return _Info(0, 0, "pos" if v > 0 else "nonneg" if v == 0 else "any", v)
        if isinstance(node, ast.Name):
            if node.id == "u":
                return _Info(0, 1, "nonneg" if self.u_nonneg else "any")
            if node.id in self.names:
                return _Info(1, 0, "nonneg")
            raise ToyError(f"unknown variable {node.id!r}")
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            a = self.visit(node.operand)
            if isinstance(node.op, ast.UAdd):
                return a
            const = -a.const if a.const is not None else None
            sign = "any"
            if const is not None:
                sign = "pos" if const > 0 else "nonneg" if const == 0 else "any"
            return _Info(_flip(a.dx), _flip(a.du), sign, const)
        if isinstance(node, ast.BinOp):
            a, b = self.visit(node.left), self.visit(node.right)
            if isinstance(node.op, ast.Add):
                return self._add(a, b)
            if isinstance(node.op, ast.Sub):
                return self._add(a, self.visit(ast.UnaryOp(ast.USub(), node.right)))
            if isinstance(node.op, ast.Mult):
                return self._mul(a, b)
            if isinstance(node.op, ast.Div):
                sat = self._saturating(node, a)
                return sat if sat is not None else self._div(a, b)
            if isinstance(node.op, ast.Pow):
                return self._pow(a, b)
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id == "exp":
            if len(node.args) != 1 or node.keywords:
                raise ToyError("exp takes exactly one argument")
            a = self.visit(node.args[0])
            const = float(np.exp(a.const)) if a.const is not None else None
            return _Info(a.dx, a.du, "pos", const)
        raise ToyError(f"unsupported syntax: {ast.dump(node)[:60]}")

    def _add(self, a, b):
        if a.sign == "pos" and _nonneg(b) or b.sign == "pos" and _nonneg(a):
            sign = "pos"
        elif _nonneg(a) and _nonneg(b):
            sign = "nonneg"
        else:
            sign = "any"
        const = a.const + b.const if a.const is not None and b.const is not None else None
        return _Info(_comb(a.dx, b.dx), _comb(a.du, b.du), sign, const)

    def _mul(self, a, b):
        for c, e in ((a, b), (b, a)):
            if c.const is not None:
                if c.const >= 0:
                    sign = e.sign if c.const > 0 else "nonneg"
                    const = c.const * e.const if e.const is not None else None
                    return _Info(e.dx if c.const > 0 else 0, e.du if c.const > 0 else 0, sign, const)
                return _Info(_flip(e.dx), _flip(e.du), "any", c.const * e.const if e.const is not None else None)
        if not (_nonneg(a) and _nonneg(b)):
            raise ToyError("products are only allowed between nonnegative factors")
        sign = "pos" if a.sign == b.sign == "pos" else "nonneg"
        return _Info(_comb(a.dx, b.dx), _comb(a.du, b.du), sign)

    def _saturating(self, node: ast.BinOp, num: _Info) -> _Info | None:
        """``P / (Q + P)`` rises with ``P`` and falls with ``Q`` when both are nonnegative and ``Q > 0``."""
        den = node.right
        if not (isinstance(den, ast.BinOp) and isinstance(den.op, ast.Add)):
            return None
        key = ast.dump(node.left)
        if ast.dump(den.right) == key:
            other = den.left
        elif ast.dump(den.left) == key:
            other = den.right
        else:
            return None
        q = self.visit(other)
        if not (_nonneg(num) and q.sign == "pos"):
            return None
        return _Info(_comb(num.dx, _flip(q.dx)), _comb(num.du, _flip(q.du)), "nonneg")

    def _div(self, a, b):
        if b.sign != "pos":
            raise ToyError("divisors must be provably positive")
        if b.const is not None:
            const = a.const / b.const if a.const is not None else None
            return _Info(a.dx, a.du, a.sign, const)
        if not _nonneg(a):
            raise ToyError("numerators of non-constant divisions must be nonnegative")
        return _Info(_comb(a.dx, _flip(b.dx)), _comb(a.du, _flip(b.du)), a.sign)

    def _pow(self, a, b):
        if b.const is None or b.const < 0:
            raise ToyError("exponents must be nonnegative constants")
        if not _nonneg(a):
            raise ToyError("powers need a nonnegative base")
        if b.const == 0:
            return _Info(0, 0, "pos", 1.0)
        const = a.const ** b.const if a.const is not None else None
        return _Info(a.dx, a.du, a.sign, const)


def _linear_state_lipschitz(node, names: set[str]) -> float | None:
    """Max absolute state coefficient if ``node`` is affine in the state with literal coefficients."""

    def has_state(n):
        return any(isinstance(s, ast.Name) and s.id in names for s in ast.walk(n))

    def literal(n):
        return not any(isinstance(s, ast.Name) for s in ast.walk(n))

    def coeffs(n) -> dict[str, float] | None:
        if not has_state(n):
            return {}
        if isinstance(n, ast.Name):
            return {n.id: 1.0}
        if isinstance(n, ast.UnaryOp):
            c = coeffs(n.operand)
            if c is None:
                return None
            return {k: -v for k, v in c.items()} if isinstance(n.op, ast.USub) else c
        if isinstance(n, ast.BinOp) and isinstance(n.op, (ast.Add, ast.Sub)):
            left, right = coeffs(n.left), coeffs(n.right)
            if left is None or right is None:
                return None
            sgn = 1.0 if isinstance(n.op, ast.Add) else -1.0
            out = dict(left)
            for k, v in right.items():
                out[k] = out.get(k, 0.0) + sgn * v
            return out
        if isinstance(n, ast.BinOp) and isinstance(n.op, (ast.Mult, ast.Div)):
            if isinstance(n.op, ast.Mult) and literal(n.left):
                factor, inner = _literal_value(n.left), n.right
            elif literal(n.right):
                factor, inner = _literal_value(n.right), n.left
                if isinstance(n.op, ast.Div):
                    factor = 1.0 / factor
            else:
                return None
            c = coeffs(inner)
            return None if c is None else {k: factor * v for k, v in c.items()}
        return None

    c = coeffs(node.body if isinstance(node, ast.Expression) else node)
    if c is None:
        return None
    return max((abs(v) for v in c.values()), default=0.0)


def _literal_value(node) -> float:
    return float(eval(compile(ast.Expression(node), "<toy>", "eval"), {"__builtins__": {}, "exp": np.exp}))


def _compile(tree: ast.Expression, names: list[str]):
    code = compile(tree, "<toy>", "eval")
    env = {"__builtins__": {}, "exp": np.exp}

    def fn(x: np.ndarray, u: np.ndarray) -> float:
        scope = dict(zip(names, (float(v) for v in x)))
        scope["u"] = float(u[0])
        return float(eval(code, env, scope))

    return fn


def _names(dim: int) -> list[str]:
    return ["x"] if dim == 1 else [f"x{i + 1}" for i in range(dim)]


def _parse(text: str) -> ast.Expression:
    try:
        return ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ToyError(f"cannot parse expression {text!r}: {exc.msg}") from None


@dataclass(frozen=True)
class ToySystem:
    dynamics: MonotoneDynamics
    constraints: IndicatorSet
    dim: int


_CONSTRAINT = re.compile(r"^(?P<expr>.+?)>=(?P<thr>[^=<>]+)$")


def parse_toy(dynamics: Sequence[str], control: tuple[float, float], constraints: Sequence[str]) -> ToySystem:
    """Build a monotone toy system.

    ``dynamics`` holds one expression per state component; ``constraints``
    are strings ``"expr >= threshold"``. Constraints constant in the control
    take the control direction shared by the others (preservation when all
    are constant).
    """
    dim = len(dynamics)
    if dim < 1:
        raise ToyError("need at least one dynamics expression")
    names = _names(dim)
    lo, hi = float(control[0]), float(control[1])
    bounds = ControlBounds([lo], [hi])
    analyzer = _Analyzer(set(names), u_nonneg=lo >= 0)

    fns = []
    for i, text in enumerate(dynamics):
        tree = _parse(text)
        info = analyzer.visit(tree)
        if info.dx not in (0, 1):
            raise ToyError(f"component {i + 1} is not nondecreasing in the state: {text!r}")
        if info.du not in (0, -1):
            raise ToyError(f"component {i + 1} is not nonincreasing in the control: {text!r}")
        if not _nonneg(info):
            raise ToyError(f"component {i + 1} is not provably nonnegative: {text!r}")
        fns.append(_compile(tree, names))

    def G(x, u):
        return np.array([f(x, u) for f in fns], dtype=float)

    parsed = []
    for text in constraints:
        m = _CONSTRAINT.match(text.strip())
        if not m:
            raise ToyError(f"constraints look like 'expr >= number', got {text!r}")
        tree = _parse(m.group("expr"))
        try:
            thr = float(m.group("thr"))
        except ValueError:
            raise ToyError(f"threshold in {text!r} is not a number") from None
        info = analyzer.visit(tree)
        if info.dx not in (0, 1):
            raise ToyError(f"constraint is not nondecreasing in the state: {text!r}")
        if info.du is None:
            raise ToyError(f"constraint has no definite control direction: {text!r}")
        parsed.append((tree, thr, info.du, _linear_state_lipschitz(tree, set(names)), m.group("expr").strip()))

    moving = {p[2] for p in parsed if p[2] != 0}
    neutral = Direction.INCREASING if moving == {1} else Direction.DECREASING
    indicators = []
    for tree, thr, du, lip, label in parsed:
        direction = neutral if du == 0 else (Direction.INCREASING if du == 1 else Direction.DECREASING)
        indicators.append(Indicator(_compile(tree, names), thr, direction, state_lipschitz=lip, name=label))

    g = MonotoneDynamics(map=G, bounds=bounds, state_dim=dim, name="toy")
    return ToySystem(g, IndicatorSet(tuple(indicators)), dim)
