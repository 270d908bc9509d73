"""Scalars, exact rational linear algebra, generic LU and polynomials.

Two scalar families are supported. ``double`` uses Python floats and
complex numbers. ``extN`` uses :mod:`gmpy2` mpfr/mpc values with an N bit
significand. Arithmetic on gmpy2 values follows the active gmpy2 context,
so extended computations must run inside ``with prec:``.
"""

from __future__ import annotations

import cmath
import math
from fractions import Fraction
from functools import reduce
from typing import Any, Iterable, List, Sequence

import gmpy2
import numpy as np

from .errors import DegenerateDenominator, InvalidSpec, NoConvergence, RankDeficient, SingularMatrix

Matrix = List[List[Any]]


# ---------------------------------------------------------------------------
# precision contexts


class Precision:
    """A fixed working precision and the elementary functions that go with it."""

    def __init__(self, bits: int):
        if bits != 53 and bits < 200:
            raise InvalidSpec("extended precision needs at least 200 significand bits")
        self.bits = bits
        self.is_double = bits == 53
        self.name = "double" if self.is_double else f"ext{bits}"
        self.eps = 2.0 ** (1 - bits)
        self._stack: list = []
        if self.is_double:
            self.pi = math.pi
        else:
            self.pi = gmpy2.const_pi(bits)

    def __repr__(self) -> str:
        return f"Precision({self.name!r})"

    def __enter__(self) -> "Precision":
        if not self.is_double:
            ctx = gmpy2.context(
                precision=self.bits, trap_divzero=True, trap_overflow=True, trap_invalid=True
            )
            ctx.__enter__()
            self._stack.append(ctx)
        return self

    def __exit__(self, *exc) -> None:
        if not self.is_double:
            self._stack.pop().__exit__(*exc)

    # conversions -----------------------------------------------------------
    def real(self, x) -> Any:
        if isinstance(x, Fraction):
            if self.is_double:
                return x.numerator / x.denominator
            return gmpy2.mpfr(gmpy2.mpq(x.numerator, x.denominator), self.bits)
        if self.is_double:
            return float(x)
        if isinstance(x, float):
            # go through the decimal form so that 0.1 means one tenth
            x = repr(x)
        return gmpy2.mpfr(x, self.bits)

    def complex(self, re, im=0) -> Any:
        if self.is_double:
            return complex(self.real(re), self.real(im))
        return gmpy2.mpc(self.real(re), self.real(im), precision=self.bits)

    def convert(self, x) -> Any:
        """Bring an int/Fraction/float/str/complex value into this precision."""
        if isinstance(x, complex) or type(x).__name__ == "mpc":
            return self.complex(x.real, x.imag)
        return self.real(x)

    def to_float(self, x) -> float:
        return float(x)

    # elementary functions --------------------------------------------------
    def exp(self, x):
        if self.is_double:
            return cmath.exp(x) if isinstance(x, complex) else math.exp(x)
        return gmpy2.exp(x)

    def sin(self, x):
        if self.is_double:
            return cmath.sin(x) if isinstance(x, complex) else math.sin(x)
        return gmpy2.sin(x)

    def cos(self, x):
        if self.is_double:
            return cmath.cos(x) if isinstance(x, complex) else math.cos(x)
        return gmpy2.cos(x)

    def log(self, x):
        if self.is_double:
            return cmath.log(x) if isinstance(x, complex) else math.log(x)
        return gmpy2.log(x)

    def sqrt(self, x):
        if self.is_double:
            return cmath.sqrt(x) if isinstance(x, complex) else math.sqrt(x)
        return gmpy2.sqrt(x)

    def arg(self, x):
        if self.is_double:
            return cmath.phase(x)
        if type(x).__name__ == "mpc":
            return gmpy2.phase(x)
        return gmpy2.atan2(0, x)

    def isfinite(self, x) -> bool:
        if isinstance(x, complex) or type(x).__name__ == "mpc":
            return self.isfinite(x.real) and self.isfinite(x.imag)
        if self.is_double:
            return math.isfinite(x)
        return gmpy2.is_finite(x)


DOUBLE = Precision(53)
_CACHE = {53: DOUBLE}


def get_precision(spec) -> Precision:
    """Accept ``"double"``, ``"extN"``, an int bit count or a Precision."""
    if isinstance(spec, Precision):
        return spec
    if isinstance(spec, int):
        bits = spec
    elif spec in ("double", "f64", "binary64"):
        bits = 53
    elif isinstance(spec, str) and spec.startswith("ext") and spec[3:].isdigit():
        bits = int(spec[3:])
    else:
        raise InvalidSpec(f"unknown precision {spec!r}")
    if bits not in _CACHE:
        _CACHE[bits] = Precision(bits)
    return _CACHE[bits]


# ---------------------------------------------------------------------------
# small helpers


def mat_shape(A: Sequence[Sequence]) -> tuple:
    return len(A), (len(A[0]) if len(A) else 0)


def norm_inf(A) -> Any:
    """Induced sup-norm of a matrix (max absolute row sum), or max-abs of a vector."""
    if not len(A):
        return 0
    if isinstance(A[0], (list, tuple)):
        return max(sum(abs(x) for x in row) for row in A)
    return max(abs(x) for x in A)


def matmul(A, B) -> Matrix:
    n, m = mat_shape(A)
    p = len(B[0])
    return [[sum(A[i][k] * B[k][j] for k in range(m)) for j in range(p)] for i in range(n)]


def identity(n: int, one=1) -> Matrix:
    return [[one if i == j else 0 * one for j in range(n)] for i in range(n)]


def to_fractions(A) -> Matrix:
    return [[Fraction(x) for x in row] for row in A]


# ---------------------------------------------------------------------------
# generic LU with partial pivoting


def lu_factor(A, tol=None):
    """Factor ``A`` in place on a copy; returns (LU, perm).

    Works for any field-like scalar (float, complex, Fraction, mpfr, mpc).
    ``tol`` defaults to 1e3*eps*|A| for inexact scalars and 0 for Fractions.
    """
    n, m = mat_shape(A)
    if n != m:
        raise ValueError("lu_factor needs a square matrix")
    LU = [list(row) for row in A]
    perm = list(range(n))
    if tol is None:
        exact = all(isinstance(x, (int, Fraction)) for row in A for x in row)
        if exact:
            tol = 0
        else:
            sample = next((x for row in A for x in row if not isinstance(x, (int, Fraction))), 0.0)
            eps = 2.0 ** (1 - _bits_of(sample))
            tol = 1e3 * eps * float(norm_inf(A))
    for j in range(n):
        p = max(range(j, n), key=lambda i: abs(LU[i][j]))
        if abs(LU[p][j]) <= tol:
            raise SingularMatrix(f"pivot {j} below tolerance")
        if p != j:
            LU[j], LU[p] = LU[p], LU[j]
            perm[j], perm[p] = perm[p], perm[j]
        piv = LU[j][j]
        for i in range(j + 1, n):
            f = LU[i][j] / piv
            LU[i][j] = f
            if f:
                row_i, row_j = LU[i], LU[j]
                for c in range(j + 1, n):
                    row_i[c] -= f * row_j[c]
    return LU, perm


def lu_solve_factored(LU, perm, B) -> Matrix:
    n = len(LU)
    cols = len(B[0])
    X = [[B[perm[i]][c] for c in range(cols)] for i in range(n)]
    for c in range(cols):
        for i in range(n):
            s = X[i][c]
            for k in range(i):
                s -= LU[i][k] * X[k][c]
            X[i][c] = s
        for i in range(n - 1, -1, -1):
            s = X[i][c]
            for k in range(i + 1, n):
                s -= LU[i][k] * X[k][c]
            X[i][c] = s / LU[i][i]
    return X


def lu_solve(A, B, tol=None) -> Matrix:
    """Solve ``A X = B`` by LU with partial pivoting.

    ``B`` is a matrix (list of rows). Raises SingularMatrix when a pivot
    falls below ``tol``.
    """
    if len(B) != len(A):
        raise ValueError("row count of B does not match A")
    LU, perm = lu_factor(A, tol)
    return lu_solve_factored(LU, perm, B)


def _bits_of(x) -> int:
    if type(x).__name__ in ("mpfr", "mpc"):
        p = x.precision
        return p[0] if isinstance(p, tuple) else p
    return 53


def rational_solve(A, B) -> Matrix:
    """Exact solve over the rationals."""
    return lu_solve(to_fractions(A), to_fractions(B), tol=0)


def rational_inverse(A) -> Matrix:
    return rational_solve(A, identity(len(A), Fraction(1)))


def rational_det(A) -> Fraction:
    A = to_fractions(A)
    try:
        LU, perm = lu_factor(A, tol=0)
    except SingularMatrix:
        return Fraction(0)
    det = Fraction(1)
    for i in range(len(A)):
        det *= LU[i][i]
    # sign of the permutation
    seen, sign = set(), 1
    for i in range(len(perm)):
        if i in seen:
            continue
        j, length = i, 0
        while j not in seen:
            seen.add(j)
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign * det


# ---------------------------------------------------------------------------
# null spaces


def normalize_integer_vector(v: Sequence) -> list:
    """Scale to integer entries with gcd 1 and a positive leading nonzero entry."""
    v = [Fraction(x) for x in v]
    lead = next((x for x in v if x != 0), None)
    if lead is None:
        return [Fraction(0)] * len(v)
    den = reduce(math.lcm, (x.denominator for x in v), 1)
    ints = [int(x * den) for x in v]
    g = reduce(math.gcd, ints, 0)
    if lead < 0:
        g = -g
    return [Fraction(x // g) for x in ints]


def _row_echelon_integer(A: Matrix):
    """Fraction-free elimination on integer rows; returns (rows, pivot columns)."""
    rows = []
    for r in A:
        den = reduce(math.lcm, (Fraction(x).denominator for x in r), 1)
        rows.append([int(Fraction(x) * den) for x in r])
    n, m = len(rows), (len(rows[0]) if rows else 0)
    pivots = []
    pr = 0
    for c in range(m):
        p = next((i for i in range(pr, n) if rows[i][c] != 0), None)
        if p is None:
            continue
        rows[pr], rows[p] = rows[p], rows[pr]
        piv = rows[pr][c]
        for i in range(n):
            if i != pr and rows[i][c] != 0:
                f = rows[i][c]
                new = [piv * a - f * b for a, b in zip(rows[i], rows[pr])]
                g = reduce(math.gcd, new, 0) or 1
                rows[i] = [x // g for x in new]
        pivots.append(c)
        pr += 1
        if pr == n:
            break
    return rows, pivots


def rational_null_space(A) -> list:
    """Exact kernel basis of a full-row-rank rational matrix.

    Each returned vector is normalized with :func:`normalize_integer_vector`.
    Raises RankDeficient when the rank is smaller than the row count.
    """
    n, m = mat_shape(A)
    rows, pivots = _row_echelon_integer([list(r) for r in A])
    if len(pivots) < n:
        raise RankDeficient(f"rank {len(pivots)} < {n} rows")
    free = [c for c in range(m) if c not in pivots]
    basis = []
    for fc in free:
        v = [Fraction(0)] * m
        v[fc] = Fraction(1)
        for i, pc in enumerate(pivots):
            v[pc] = Fraction(-rows[i][fc], rows[i][pc])
        basis.append(normalize_integer_vector(v))
    return basis


def rank_rational(A) -> int:
    if not A:
        return 0
    return len(_row_echelon_integer([list(r) for r in A])[1])


def svd_null_space(A, s: int, prec: Precision = DOUBLE) -> list:
    """Right singular vectors for the ``s`` smallest singular values.

    Uses LAPACK in double precision and :mod:`mpmath` otherwise.
    """
    n, m = mat_shape(A)
    if prec.is_double:
        M = np.array([[float(Fraction(x)) if isinstance(x, Fraction) else float(x) for x in r] for r in A])
        try:
            _, _, vt = np.linalg.svd(M, full_matrices=True)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence(f"SVD failed: {exc}") from exc
        return [list(vt[m - s + j]) for j in range(s)]
    import mpmath

    ctx = mpmath.MPContext()
    ctx.prec = prec.bits
    M = ctx.matrix(n, m)
    for i in range(n):
        for j in range(m):
            x = A[i][j]
            if isinstance(x, Fraction):
                M[i, j] = ctx.mpf(x.numerator) / x.denominator
            else:
                M[i, j] = ctx.mpf(str(x))
    # pad to square so the full right basis is returned
    if n < m:
        P = ctx.matrix(m, m)
        for i in range(n):
            for j in range(m):
                P[i, j] = M[i, j]
        M = P
    try:
        _, S, V = ctx.svd_r(M, full_matrices=True, compute_uv=True)
    except Exception as exc:  # mpmath raises ValueError on stalled QR sweeps
        raise NoConvergence(f"SVD failed: {exc}") from exc
    order = sorted(range(m), key=lambda j: S[j])
    with prec:
        return [[prec.real(ctx.nstr(V[j, c], prec.bits // 3 + 5)) for c in range(m)] for j in order[:s]]


# ---------------------------------------------------------------------------
# polynomials


class Poly:
    """Univariate polynomial with ascending coefficients.

    Coefficients are Fractions for exact algebra; any ring scalar works for
    evaluation. The zero polynomial has an empty coefficient list and degree -1.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        c = list(coeffs)
        while c and c[-1] == 0:
            c.pop()
        self.coeffs = tuple(c)

    @classmethod
    def const(cls, a) -> "Poly":
        return cls([a])

    @classmethod
    def z(cls) -> "Poly":
        return cls([Fraction(0), Fraction(1)])

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __repr__(self) -> str:
        return f"Poly({[str(c) for c in self.coeffs]})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Poly):
            other = Poly([other])
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __add__(self, other) -> "Poly":
        if not isinstance(other, Poly):
            other = Poly([other])
        a, b = self.coeffs, other.coeffs
        n = max(len(a), len(b))
        return Poly([(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)])

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly([-c for c in self.coeffs])

    def __sub__(self, other) -> "Poly":
        return self + (-other if isinstance(other, Poly) else Poly([-other]))

    def __rsub__(self, other) -> "Poly":
        return (-self) + other

    def __mul__(self, other) -> "Poly":
        if not isinstance(other, Poly):
            return Poly([c * other for c in self.coeffs])
        a, b = self.coeffs, other.coeffs
        if not a or not b:
            return Poly()
        out = [0] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x == 0:
                continue
            for j, y in enumerate(b):
                out[i + j] += x * y
        return Poly(out)

    __rmul__ = __mul__

    def __call__(self, x):
        acc = 0 * x
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def eval_in(self, x, prec: Precision):
        """Evaluate with coefficients converted to ``prec`` first."""
        acc = prec.convert(0) * x
        for c in reversed(self.coeffs):
            acc = acc * x + prec.convert(c)
        return acc

    def reflect(self) -> "Poly":
        """p(-z)."""
        return Poly([c if i % 2 == 0 else -c for i, c in enumerate(self.coeffs)])

    def content(self) -> Fraction:
        """Positive rational g with p/g integral and primitive."""
        if not self.coeffs:
            return Fraction(1)
        fr = [Fraction(c) for c in self.coeffs]
        den = reduce(math.lcm, (c.denominator for c in fr), 1)
        g = reduce(math.gcd, (int(c * den) for c in fr), 0)
        return Fraction(g, den)

    def divmod(self, other: "Poly"):
        if other.degree < 0:
            raise ZeroDivisionError("polynomial division by zero")
        r = [Fraction(c) for c in self.coeffs]
        d = [Fraction(c) for c in other.coeffs]
        q = [Fraction(0)] * max(len(r) - len(d) + 1, 0)
        while len(r) >= len(d) and any(r):
            shift = len(r) - len(d)
            f = r[-1] / d[-1]
            q[shift] = f
            for i, c in enumerate(d):
                r[i + shift] -= f * c
            r.pop()
            while r and r[-1] == 0:
                r.pop()
        return Poly(q), Poly(r)

    def monic(self) -> "Poly":
        lead = Fraction(self.coeffs[-1])
        return Poly([Fraction(c) / lead for c in self.coeffs])


def poly_gcd(a: Poly, b: Poly) -> Poly:
    """Monic gcd over the rationals."""
    while b.degree >= 0:
        a, b = b, a.divmod(b)[1]
    return a.monic() if a.degree >= 0 else a


def poly_det(A) -> Poly:
    """Determinant of a square matrix of Poly by cofactor expansion."""
    n = len(A)
    if n == 0:
        return Poly([Fraction(1)])
    A = [[x if isinstance(x, Poly) else Poly([x]) for x in row] for row in A]

    def det(rows: tuple, cols: tuple) -> Poly:
        if len(rows) == 1:
            return A[rows[0]][cols[0]]
        r0 = rows[0]
        total = Poly()
        for j, c in enumerate(cols):
            entry = A[r0][c]
            if entry.degree < 0:
                continue
            minor = det(rows[1:], cols[:j] + cols[j + 1:])
            term = entry * minor
            total = total + (term if j % 2 == 0 else -term)
        return total

    return det(tuple(range(n)), tuple(range(n)))


def check_denominator(p: Poly) -> None:
    if p.degree < 0:
        raise DegenerateDenominator("denominator polynomial vanishes identically")
