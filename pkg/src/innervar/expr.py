"""Rational expressions in ``z``: safe parsing, evaluation, zeros and poles.

Grammar: numbers, ``z``, ``i`` (imaginary unit, also as a suffix ``2i``),
``+ - * /`` and ``^`` or ``**`` with integer exponents.  Parsing uses the
Python ``ast`` module restricted to those nodes, so nothing else is
evaluated.  Alongside a vectorised evaluator each expression carries a
factored form ``c * prod (z - p_k)^m_k`` from which zeros, poles and the
logarithmic derivative are read off.
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass

import numpy as np

MERGE_TOL = 1e-7

_BIN = {ast.Add: "+", ast.Sub: "-", ast.Mult: "*", ast.Div: "/", ast.Pow: "**"}


@dataclass(frozen=True)
class Factored:
    """``coeff * prod (z - root)^mult``; negative ``mult`` is a pole."""

    coeff: complex
    roots: tuple = ()            # ((point, mult), ...)

    @staticmethod
    def const(c) -> "Factored":
        return Factored(complex(c), ())

    @staticmethod
    def z() -> "Factored":
        return Factored(1.0 + 0j, ((0j, 1),))

    def _merge(self, other_roots, sign=1):
        acc = [[p, m] for p, m in self.roots]
        for p, m in other_roots:
            for a in acc:
                if abs(a[0] - p) < MERGE_TOL * max(1.0, abs(p)):
                    a[1] += sign * m
                    break
            else:
                acc.append([p, sign * m])
        return tuple((complex(p), int(m)) for p, m in acc if m != 0)

    def __mul__(self, o: "Factored"):
        return Factored(self.coeff * o.coeff, self._merge(o.roots))

    def __truediv__(self, o: "Factored"):
        if o.coeff == 0:
            raise ZeroDivisionError("division by the zero expression")
        return Factored(self.coeff / o.coeff, self._merge(o.roots, -1))

    def __pow__(self, n: int):
        if self.coeff == 0 and n < 0:
            raise ZeroDivisionError("negative power of the zero expression")
        return Factored(self.coeff ** n, tuple((p, m * n) for p, m in self.roots))

    def __neg__(self):
        return Factored(-self.coeff, self.roots)

    # sums go through polynomials over the common denominator
    def __add__(self, o: "Factored"):
        if self.coeff == 0:
            return o
        if o.coeff == 0:
            return self
        den = {}
        for f in (self, o):
            for p, m in f.roots:
                if m < 0:
                    key = next((q for q in den if abs(q - p) < MERGE_TOL * max(1.0, abs(p))), p)
                    den[key] = max(den.get(key, 0), -m)
        den_roots = tuple(den.items())
        a = _align(self, den_roots)
        b = _align(o, den_roots)
        num = np.polyadd(a, b)
        nz = np.nonzero(np.abs(num) > 1e-13 * max(np.abs(a).max(), np.abs(b).max()))[0]
        if nz.size == 0:
            return Factored.const(0.0)
        num = num[nz[0]:]
        lead = complex(num[0])
        roots = _cluster(np.roots(num)) if num.size > 1 else ()
        out = Factored(lead, roots)
        return out * Factored(1.0, tuple((p, -m) for p, m in den_roots))

    def __sub__(self, o):
        return self + (-o)

    # queries ----------------------------------------------------------------
    @property
    def zeros(self):
        return tuple((p, m) for p, m in self.roots if m > 0)

    @property
    def poles(self):
        return tuple((p, -m) for p, m in self.roots if m < 0)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.full(z.shape, self.coeff, dtype=complex)
        for p, m in self.roots:
            out = out * (z - p) ** m
        return out

    def log_derivative(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros(z.shape, complex)
        for p, m in self.roots:
            out = out + m / (z - p)
        return out


def _align(f: Factored, den_roots) -> np.ndarray:
    """Numerator polynomial of ``f`` over the common denominator ``den_roots``."""
    neg = {}
    pos = []
    for p, m in f.roots:
        if m < 0:
            neg[p] = -m
        else:
            pos.append((p, m))
    out = np.array([f.coeff])
    for p, m in pos:
        out = np.polymul(out, np.poly([p] * m))
    for q, m in den_roots:
        have = next((k for p, k in neg.items() if abs(p - q) < MERGE_TOL * max(1.0, abs(q))), 0)
        if m - have > 0:
            out = np.polymul(out, np.poly([q] * (m - have)))
    return out


def _cluster(roots: np.ndarray, tol: float = 1e-5):
    """Group numerically split multiple roots; a cluster is replaced by its mean."""
    left = list(roots)
    out = []
    while left:
        r = left.pop(0)
        grp = [r]
        rest = []
        for q in left:
            (grp if abs(q - r) < tol * max(1.0, abs(r)) else rest).append(q)
        left = rest
        c = complex(np.mean(grp))
        # snap round-off so that e.g. 0.9999999999999996 merges with 1
        c = complex(round(c.real, 12) + 0.0, round(c.imag, 12) + 0.0)
        out.append((c, len(grp)))
    return tuple(out)


def _normalize(text: str) -> str:
    s = text.replace("^", "**")
    s = re.sub(r"(?<![\w.])(\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?i\b",
               lambda m: m.group(0)[:-1] + "j", s)
    s = re.sub(r"\bi\b", "1j", s)
    return s


def _check(node):
    if isinstance(node, ast.Expression):
        return _check(node.body)
    if isinstance(node, ast.BinOp):
        if type(node.op) not in _BIN:
            raise ValueError(f"operator {type(node.op).__name__} is not allowed")
        if isinstance(node.op, ast.Pow):
            e = node.right
            if isinstance(e, ast.UnaryOp) and isinstance(e.op, ast.USub):
                e = e.operand
            if not (isinstance(e, ast.Constant) and isinstance(e.value, int)):
                raise ValueError("exponents must be integer literals")
        _check(node.left)
        _check(node.right)
        return
    if isinstance(node, ast.UnaryOp):
        if not isinstance(node.op, (ast.UAdd, ast.USub)):
            raise ValueError("only unary + and - are allowed")
        _check(node.operand)
        return
    if isinstance(node, ast.Constant):
        if not isinstance(node.value, (int, float, complex)) or isinstance(node.value, bool):
            raise ValueError("only numeric literals are allowed")
        return
    if isinstance(node, ast.Name):
        if node.id != "z":
            raise ValueError(f"unknown name {node.id!r}")
        return
    raise ValueError(f"syntax element {type(node).__name__} is not allowed")


def _factor(node) -> Factored:
    if isinstance(node, ast.Expression):
        return _factor(node.body)
    if isinstance(node, ast.Constant):
        return Factored.const(node.value)
    if isinstance(node, ast.Name):
        return Factored.z()
    if isinstance(node, ast.UnaryOp):
        f = _factor(node.operand)
        return -f if isinstance(node.op, ast.USub) else f
    a = _factor(node.left)
    op = type(node.op)
    if op is ast.Pow:
        return a ** int(ast.literal_eval(node.right))
    b = _factor(node.right)
    return {ast.Add: a.__add__, ast.Sub: a.__sub__, ast.Mult: a.__mul__,
            ast.Div: a.__truediv__}[op](b)


@dataclass(frozen=True, eq=False)
class Expression:
    text: str
    factored: Factored
    _fn: object

    def __call__(self, z):
        out = self._fn(z)
        if isinstance(z, np.ndarray) and np.ndim(out) == 0:
            return np.full(z.shape, complex(out))
        return out

    @property
    def zeros(self):
        return self.factored.zeros

    @property
    def poles(self):
        return self.factored.poles


def parse(text: str) -> Expression:
    """Parse a rational expression in ``z``; raises ``ValueError`` on anything else."""
    src = _normalize(text)
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError as e:
        raise ValueError(f"cannot parse {text!r}: {e.msg}") from None
    _check(tree)
    fac = _factor(tree)
    lam = ast.fix_missing_locations(ast.Expression(ast.Lambda(
        args=ast.arguments(posonlyargs=[], args=[ast.arg("z")], kwonlyargs=[],
                           kw_defaults=[], defaults=[]),
        body=tree.body)))
    code = compile(lam, "<expr>", "eval")
    fn = eval(code, {"__builtins__": {}}, {})  # tree restricted by _check
    return Expression(text, fac, fn)
