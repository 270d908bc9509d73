"""Truncated Taylor series and the physical-equation lift.

A right-hand side is written once against :class:`Series` arithmetic:

    def rhs(y, t, ctx):
        return [jets.exp(t) * y[0] ** 2]

and :func:`lift_derivatives` pushes Taylor coefficients through it to get
y', y'', ... at a node. Derivatives are stored raw (not divided by k!).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Any, Callable, List, Optional, Sequence

import gmpy2

from .errors import DomainError
from .numerics import DOUBLE, Precision


def _is_zero(x) -> bool:
    return x == 0


class Series:
    """Truncated power series c_0 + c_1 h + ... + c_{n-1} h^{n-1}."""

    __slots__ = ("c", "ctx")

    def __init__(self, c: List[Any], ctx: Precision):
        self.c = c
        self.ctx = ctx

    def __len__(self) -> int:
        return len(self.c)

    def __repr__(self) -> str:
        return f"Series({self.c!r})"

    def _lift(self, other) -> "Series":
        if isinstance(other, Series):
            return other
        c = [self.ctx.convert(other) if isinstance(other, (Fraction, str)) else other]
        c += [0 * c[0]] * (len(self.c) - 1)
        return Series(c, self.ctx)

    def __add__(self, other):
        if not isinstance(other, Series):
            c = list(self.c)
            c[0] = c[0] + (self.ctx.convert(other) if isinstance(other, (Fraction, str)) else other)
            return Series(c, self.ctx)
        return Series([a + b for a, b in zip(self.c, other.c)], self.ctx)

    __radd__ = __add__

    def __neg__(self):
        return Series([-a for a in self.c], self.ctx)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Series):
            if isinstance(other, (Fraction, str)):
                other = self.ctx.convert(other)
            return Series([a * other for a in self.c], self.ctx)
        a, b = self.c, other.c
        n = len(a)
        return Series([sum(a[i] * b[k - i] for i in range(k + 1)) for k in range(n)], self.ctx)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Series):
            if isinstance(other, (Fraction, str)):
                other = self.ctx.convert(other)
            if _is_zero(other):
                raise DomainError("division by zero")
            return Series([a / other for a in self.c], self.ctx)
        return self * other.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def reciprocal(self) -> "Series":
        b = self.c
        if _is_zero(b[0]):
            raise DomainError("division by a series with zero constant term")
        q = [1 / b[0]]
        for k in range(1, len(b)):
            q.append(-sum(b[j] * q[k - j] for j in range(1, k + 1)) / b[0])
        return Series(q, self.ctx)

    def __pow__(self, e):
        if isinstance(e, int) and e >= 0:
            out = self._lift(1)
            base = self
            while e:
                if e & 1:
                    out = out * base
                base = base * base
                e >>= 1
            return out
        if isinstance(e, int):
            return (self ** (-e)).reciprocal()
        return power(self, e)


def exp(x: Series) -> Series:
    a, ctx = x.c, x.ctx
    n = len(a)
    e = [ctx.exp(a[0])]
    # e' = a' e  ->  k e_k = sum_j j a_j e_{k-j}
    for k in range(1, n):
        e.append(sum(j * a[j] * e[k - j] for j in range(1, k + 1)) / k)
    return Series(e, ctx)


def _sincos(x: Series):
    a, ctx = x.c, x.ctx
    n = len(a)
    s = [ctx.sin(a[0])]
    c = [ctx.cos(a[0])]
    for k in range(1, n):
        s.append(sum(j * a[j] * c[k - j] for j in range(1, k + 1)) / k)
        c.append(-sum(j * a[j] * s[k - j] for j in range(1, k + 1)) / k)
    return Series(s, ctx), Series(c, ctx)


def sin(x: Series) -> Series:
    return _sincos(x)[0]


def cos(x: Series) -> Series:
    return _sincos(x)[1]


def log(x: Series) -> Series:
    a, ctx = x.c, x.ctx
    if not isinstance(a[0], complex) and type(a[0]).__name__ != "mpc" and not a[0] > 0:
        raise DomainError("log of a series with nonpositive constant term")
    n = len(a)
    out = [ctx.log(a[0])]
    # a * l' = a'
    for k in range(1, n):
        s = k * a[k] - sum(j * out[j] * a[k - j] for j in range(1, k))
        out.append(s / (k * a[0]))
    return Series(out, ctx)


def power(x: Series, e) -> Series:
    """x**e for a non-integer exponent: x' e x^e = x x^e' ."""
    a, ctx = x.c, x.ctx
    if _is_zero(a[0]):
        raise DomainError("non-integer power of a series vanishing at the origin")
    if not isinstance(a[0], complex) and type(a[0]).__name__ != "mpc" and a[0] < 0:
        raise DomainError("non-integer power of a negative constant term")
    e = ctx.convert(e) if isinstance(e, (Fraction, str)) else e
    n = len(a)
    p = [ctx.exp(e * ctx.log(a[0]))]
    for k in range(1, n):
        s = sum((e * j - (k - j)) * a[j] * p[k - j] for j in range(1, k + 1))
        p.append(s / (k * a[0]))
    return Series(p, ctx)


def sqrt(x: Series) -> Series:
    return power(x, Fraction(1, 2))


# ---------------------------------------------------------------------------


Rhs = Callable[[List[Series], Series, Precision], Sequence[Series]]


@dataclass
class OdeProblem:
    """An initial value problem y' = f(y, t) on [t0, T].

    ``t0``, ``T`` and the entries of ``y0`` may be ints, Fractions, decimal
    strings or complex numbers; ``y0`` may also be a callable taking a
    Precision. ``exact(t, ctx)`` returns the solution vector when known.
    """

    dimension: int
    rhs: Rhs
    t0: Any
    T: Any
    y0: Any
    exact: Optional[Callable[[Any, Precision], List[Any]]] = None
    name: str = ""
    components: Sequence[str] = field(default_factory=tuple)
    is_complex: bool = False

    def initial(self, ctx: Precision) -> List[Any]:
        y0 = self.y0(ctx) if callable(self.y0) else self.y0
        out = [ctx.convert(v) for v in y0]
        if self.is_complex:
            out = [v if isinstance(v, complex) or type(v).__name__ == "mpc" else ctx.complex(v) for v in out]
        if len(out) != self.dimension:
            raise ValueError("y0 does not match the problem dimension")
        return out

    def interval(self, ctx: Precision):
        return ctx.real(_frac(self.t0)), ctx.real(_frac(self.T))

    def component_names(self) -> List[str]:
        if self.components:
            return list(self.components)
        return [str(i) for i in range(self.dimension)]


def _frac(x):
    if isinstance(x, str):
        return Fraction(x)
    return Fraction(x) if isinstance(x, int) else x


def lift_derivatives_given_prefix(p: OdeProblem, t, prefix: Sequence[Sequence[Any]], K: int, ctx: Precision = DOUBLE):
    """Complete a jet from its first j+1 orders.

    ``prefix[k][c]`` holds y^(k) of component c for k = 0..j. Orders j+1..K
    are computed from the physical equations using the supplied lower
    orders verbatim. Returns a list of K+1 d-vectors.
    """
    d = p.dimension
    jet = [list(v) for v in prefix]
    j = len(jet) - 1
    if j < 0 or any(len(v) != d for v in jet):
        raise ValueError("prefix must contain at least order 0 with d components")
    if j >= K:
        return jet[: K + 1]
    zero = 0 * t
    # Taylor coefficients c_k = y^(k)/k!
    coef = [[jet[k][c] / factorial(k) for k in range(j + 1)] for c in range(d)]
    for k in range(j, K):
        n = k + 1
        ts = Series([t, 1 + zero] + [zero] * (n - 2) if n > 1 else [t], ctx)
        ys = [Series(coef[c][:n], ctx) for c in range(d)]
        try:
            fs = p.rhs(ys, ts, ctx)
        except ZeroDivisionError as exc:
            raise DomainError(str(exc)) from exc
        except ArithmeticError as exc:
            # overflow is left to the caller: it signals divergence, not a bad argument
            if isinstance(exc, (DomainError, OverflowError, gmpy2.OverflowResultError)):
                raise
            raise DomainError(str(exc)) from exc
        row = []
        for c in range(d):
            f = fs[c]
            val = f.c[k] if isinstance(f, Series) else (f if k == 0 else 0 * t)
            coef[c].append(val / (k + 1))
            row.append(val * factorial(k))
        jet.append(row)
    return jet


def lift_derivatives(p: OdeProblem, t, y: Sequence[Any], K: int, ctx: Precision = DOUBLE):
    """Jet (y, y', ..., y^(K)) at (t, y)."""
    return lift_derivatives_given_prefix(p, t, [list(y)], K, ctx)


def to_taylor(jet: Sequence[Sequence[Any]]):
    return [[v / factorial(k) for v in row] for k, row in enumerate(jet)]


def from_taylor(coeffs: Sequence[Sequence[Any]]):
    return [[v * factorial(k) for v in row] for k, row in enumerate(coeffs)]
