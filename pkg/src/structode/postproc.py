"""Backward-history formulas for derivatives above the scheme order K."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, List, Optional, Sequence, Tuple

from .errors import DegenerateFit, Infeasible, InvalidSpec
from .numerics import DOUBLE, Precision, get_precision, rational_solve
from .structural import falling


@dataclass(frozen=True)
class PostProcessor:
    """dt^p y^(p)_N = sum_{i<=I_p} sum_{k<=K} a[i][k] dt^k y^(k)_{N-i}."""

    K: int
    p: int
    I_p: int
    coeffs: Tuple[Tuple[Fraction, ...], ...]  # [i][k]
    order: int

    def to_json(self) -> dict:
        flat = [x for row in self.coeffs for x in row]
        return {
            "K": self.K,
            "R": self.I_p,
            "S": 1,
            "vectors": [[[x.numerator, x.denominator] for x in flat]],
            "exactness_degree": self.p + self.order - 1,
            "p": self.p,
            "I_p": self.I_p,
            "order": self.order,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def condition_rows(K: int, p: int, I_p: int, count: int):
    """Rows m = 1..count of E_p(a; pi_m) = 0 and the right-hand side."""
    rows, rhs = [], []
    for m in range(1, count + 1):
        row = []
        for i in range(I_p + 1):
            for k in range(K + 1):
                c = falling(m, k)
                row.append(Fraction(c * (-i) ** (m - 1 - k)) if c else Fraction(0))
        rows.append(row)
        rhs.append(Fraction(math.factorial(p)) if m == p + 1 else Fraction(0))
    return rows, rhs


def build_postprocessor(K: int, p: int, I_p: int, d: Optional[int] = None) -> PostProcessor:
    """Solve the exactness system for pi_1..pi_{p+d}.

    ``d`` defaults to the square case d = (I_p+1)(K+1) - p. Underdetermined
    systems take the minimum-norm exact solution a = M^T (M M^T)^{-1} b.
    """
    if p <= K:
        raise InvalidSpec("post-processing targets p > K")
    if I_p < 0:
        raise InvalidSpec("I_p must be nonnegative")
    unknowns = (I_p + 1) * (K + 1)
    if d is None:
        d = unknowns - p
    if d < 1:
        raise Infeasible(f"no order left: p={p} with {unknowns} unknowns")
    if p + d > unknowns:
        raise Infeasible(f"p + d = {p + d} conditions exceed {unknowns} unknowns")
    Mp, b = condition_rows(K, p, I_p, p + d)
    if p + d == unknowns:
        a = [row[0] for row in rational_solve(Mp, [[x] for x in b])]
    else:
        MMt = [[sum(x * y for x, y in zip(r1, r2)) for r2 in Mp] for r1 in Mp]
        y = [row[0] for row in rational_solve(MMt, [[x] for x in b])]
        a = [sum(Mp[m][j] * y[m] for m in range(len(Mp))) for j in range(unknowns)]
    coeffs = tuple(tuple(a[i * (K + 1) + k] for k in range(K + 1)) for i in range(I_p + 1))
    return PostProcessor(K, p, I_p, coeffs, d)


def is_solution(K: int, p: int, I_p: int, coeffs: Sequence[Sequence], count: int) -> bool:
    """Exact check that ``coeffs[i][k]`` satisfies conditions m = 1..count."""
    Mp, b = condition_rows(K, p, I_p, count)
    flat = [Fraction(coeffs[i][k]) for i in range(I_p + 1) for k in range(K + 1)]
    return all(sum(x * y for x, y in zip(row, flat)) == rhs for row, rhs in zip(Mp, b))


def apply(pp: PostProcessor, history: Sequence[Sequence[Sequence[Any]]], dt, ctx: Precision = DOUBLE):
    """y^(p) at the newest node.

    ``history`` lists node jets oldest first (t_{N-I_p} .. t_N), each
    ``jet[k][c]``. Returns a d-vector.
    """
    if len(history) != pp.I_p + 1:
        raise ValueError(f"need {pp.I_p + 1} history nodes")
    d = len(history[0][0])
    out = []
    with ctx:
        dtk = [ctx.real(1)]
        for _ in range(pp.K):
            dtk.append(dtk[-1] * dt)
        for c in range(d):
            acc = 0 * dt
            for i in range(pp.I_p + 1):
                jet = history[-1 - i]
                for k in range(pp.K + 1):
                    a = pp.coeffs[i][k]
                    if a:
                        acc += ctx.real(a) * dtk[k] * jet[k][c]
            out.append(acc / dt ** pp.p)
    return out


def exp_history(K: int, I_p: int, N: int, T, ctx: Precision):
    """Exact node jets of e^t on the uniform grid of [0, T], last I_p+1 nodes."""
    with ctx:
        T = ctx.real(T)
        dt = T / N
        nodes = []
        for i in range(I_p, -1, -1):
            v = ctx.exp(T - i * dt)
            nodes.append([[v] for _ in range(K + 1)])
        return nodes, dt


def consistency_error(K: int, p: int, I_p: int, N: int, precision="double", T=1, d=None):
    ctx = get_precision(precision)
    pp = build_postprocessor(K, p, I_p, d)
    hist, dt = exp_history(K, I_p, N, T, ctx)
    with ctx:
        val = apply(pp, hist, dt, ctx)[0]
        return abs(val - ctx.exp(ctx.real(T)))


def measure_consistency_order(K: int, p: int, I_p: int, grids: Sequence[int], precision="double", d=None) -> float:
    """Least-squares log-log slope of the e^t consistency error."""
    if len(grids) < 2:
        raise InvalidSpec("need at least two grids")
    ctx = get_precision(precision)
    errs = [consistency_error(K, p, I_p, N, ctx, d=d) for N in grids]
    floor = 100 * ctx.eps
    if any(float(e) <= floor for e in errs):
        raise DegenerateFit("errors reach the working-precision floor")
    xs = [math.log(N) for N in grids]
    ys = [math.log(float(e)) for e in errs]
    mx, my = sum(xs) / len(xs), sum(ys) / len(ys)
    slope = sum((x - mx) * (y - my) for x, y in zip(xs, ys)) / sum((x - mx) ** 2 for x in xs)
    return -slope
