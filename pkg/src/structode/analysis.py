"""Linear stability, spectral resolution and Runge-Kutta export."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, List, Optional, Sequence, Tuple

from .errors import DegenerateDenominator, InvalidSpec, NoConvergence, SearchExhausted, SingularA0, SingularMatrix
from .numerics import DOUBLE, Poly, Precision, get_precision, lu_solve, poly_det, poly_gcd
from .structural import SchemeId, StructuralBasis, split


@dataclass(frozen=True)
class RationalTransfer:
    """chi_R(z) = num(z)/den(z) with rational coefficients.

    ``G`` and ``b`` keep the polynomial system so that intermediate
    amplification factors chi_r, r < R, can be evaluated.
    """

    num: Poly
    den: Poly
    R: int = 1
    G: Optional[Tuple[Tuple[Poly, ...], ...]] = field(default=None, compare=False)
    b: Optional[Tuple[Poly, ...]] = field(default=None, compare=False)

    def __call__(self, z):
        return self.num(z) / self.den(z)

    def eval_in(self, z, prec: Precision):
        d = self.den.eval_in(z, prec)
        if d == 0:
            raise DegenerateDenominator("denominator vanishes at the sample point")
        return self.num.eval_in(z, prec) / d

    def amplification_vector(self, z, prec: Precision) -> List[Any]:
        """chi(z) = -G(z)^{-1} b(z) evaluated numerically."""
        if self.G is None:
            if self.R != 1:
                raise InvalidSpec("intermediate factors need the polynomial system")
            return [self.eval_in(z, prec)]
        G = [[g.eval_in(z, prec) for g in row] for row in self.G]
        rhs = [[-bb.eval_in(z, prec)] for bb in self.b]
        try:
            x = lu_solve(G, rhs)
        except SingularMatrix as exc:
            raise DegenerateDenominator("det G vanishes at the sample point") from exc
        return [row[0] for row in x]


def polynomial_system(basis: StructuralBasis):
    K, R = basis.K, basis.R
    if basis.S != R:
        raise InvalidSpec("transfer functions need S = R")
    G = tuple(
        tuple(Poly([basis.vectors[s][k][r] for k in range(K + 1)]) for r in range(1, R + 1)) for s in range(R)
    )
    b = tuple(Poly([basis.vectors[s][k][0] for k in range(K + 1)]) for s in range(R))
    return G, b


def transfer_function(basis: StructuralBasis) -> RationalTransfer:
    """chi_R by Cramer's rule on G(z) chi = -b(z), reduced to lowest terms."""
    G, b = polynomial_system(basis)
    R = basis.R
    den = poly_det([list(row) for row in G])
    if den.degree < 0:
        raise DegenerateDenominator("det G(z) vanishes identically")
    cols = [list(row[: R - 1]) + [-b[s]] for s, row in enumerate(G)]
    num = poly_det(cols)
    g = poly_gcd(num, den)
    if g.degree > 0:
        num, den = num.divmod(g)[0], den.divmod(g)[0]
    num, den = _normalize_pair(num, den)
    return RationalTransfer(num, den, R, G, b)


def _normalize_pair(num: Poly, den: Poly):
    c = den.content()
    num, den = num * (1 / c), den * (1 / c)
    # integral coefficients with common content removed
    from math import gcd, lcm
    from functools import reduce

    allc = [Fraction(x) for x in num.coeffs + den.coeffs]
    L = reduce(lcm, (x.denominator for x in allc), 1)
    num, den = num * L, den * L
    G = reduce(gcd, (int(x) for x in num.coeffs + den.coeffs), 0) or 1
    num, den = num * Fraction(1, G), den * Fraction(1, G)
    if den.coeffs and den.coeffs[0] < 0:
        num, den = -num, -den
    if not den.coeffs or den.coeffs[0] == 0:
        raise DegenerateDenominator("chi_R is not defined at z = 0")
    return Poly([Fraction(x) for x in num.coeffs]), Poly([Fraction(x) for x in den.coeffs])


# ---------------------------------------------------------------------------
# Hurwitz criterion


@dataclass(frozen=True)
class HurwitzReport:
    p: Poly
    minors: Tuple[Fraction, ...]
    verdict: str  # "AStable", "NotPalindromicForm", "MinorNonPositive(i)"
    matrix: Tuple[Tuple[Fraction, ...], ...] = ()

    @property
    def a_stable(self) -> bool:
        return self.verdict == "AStable"


def hurwitz_matrix(p: Poly) -> List[List[Fraction]]:
    """I x I Hurwitz matrix of p, leading coefficient made positive."""
    c = [Fraction(x) for x in p.coeffs]
    if c and c[-1] < 0:
        c = [-x for x in c]
    n = len(c) - 1
    a = list(reversed(c))  # a[0] z^n + a[1] z^{n-1} + ... + a[n]

    def coef(i):
        return a[i] if 0 <= i <= n else Fraction(0)

    return [[coef(2 * (j + 1) - (i + 1)) for j in range(n)] for i in range(n)]


def leading_minors(H: Sequence[Sequence[Fraction]]) -> List[Fraction]:
    from .numerics import rational_det

    return [rational_det([row[:i] for row in H[:i]]) for i in range(1, len(H) + 1)]


def hurwitz_report(p: Poly) -> HurwitzReport:
    H = hurwitz_matrix(p)
    minors = leading_minors(H)
    verdict = "AStable"
    for i, m in enumerate(minors, start=1):
        if m <= 0:
            verdict = f"MinorNonPositive({i})"
            break
    return HurwitzReport(p, tuple(minors), verdict, tuple(tuple(r) for r in H))


def a_stability(chi) -> HurwitzReport:
    """A-stability verdict on Re z <= 0 for chi = p(z)/p(-z).

    A bare Poly is treated as p itself.
    """
    if isinstance(chi, Poly):
        return hurwitz_report(chi)
    num, den = chi.num, chi.den
    refl = num.reflect()
    if not (den == refl or den == -refl):
        return HurwitzReport(num, (), "NotPalindromicForm")
    return hurwitz_report(num)


# ---------------------------------------------------------------------------
# spectral resolution


def _unit_phase(theta, prec: Precision):
    return prec.exp(prec.complex(0, theta))


def zeta(chi: RationalTransfer, omega, r: Optional[int] = None, prec: Precision = DOUBLE):
    """zeta_r(omega) = chi_r(i omega) exp(-i r omega); r defaults to R."""
    prec = get_precision(prec)
    R = chi.R
    r = R if r is None else r
    if not 1 <= r <= R:
        raise InvalidSpec(f"r={r} outside 1..{R}")
    with prec:
        w = prec.real(omega) if not isinstance(omega, (float, int)) else prec.real(repr(omega) if isinstance(omega, float) else omega)
        z = prec.complex(0, w)
        if r == R:
            c = chi.eval_in(z, prec)
        else:
            c = chi.amplification_vector(z, prec)[r - 1]
        return c * _unit_phase(-r * w, prec)


def deviation(chi: RationalTransfer, omega, N: int, R: Optional[int] = None, prec: Precision = DOUBLE):
    """dev = zeta_R(omega)^(N/R): state after N steps over the exact one."""
    R = chi.R if R is None else R
    if N % R:
        raise InvalidSpec("N must be a multiple of R")
    prec = get_precision(prec)
    zr = zeta(chi, omega, R, prec)
    with prec:
        return zr ** (N // R)


def arg_deviation(chi: RationalTransfer, omega, N: int, prec: Precision = DOUBLE):
    """Final phase error: (N/R) arg zeta_R, unwrapped."""
    prec = get_precision(prec)
    zr = zeta(chi, omega, None, prec)
    with prec:
        return prec.arg(zr) * (N // chi.R)


def dispersion_table(schemes: Sequence[Tuple[int, int]], omegas: Sequence, ells: Sequence[int] = (1,), prec: Precision = DOUBLE, basis_source: str = "exact_kernel"):
    """Rows (K, R, ell, omega, |zeta^ell(omega/ell)|, arg zeta^ell(omega/ell)).

    Points where det G(i omega) vanishes are reported with None in the two
    numeric columns.
    """
    from .structural import get_basis

    prec = get_precision(prec)
    rows = []
    for K, R in schemes:
        chi = transfer_function(get_basis(SchemeId(K, R), basis_source))
        for ell in ells:
            for w in omegas:
                try:
                    zr = zeta(chi, Fraction(w) / ell if isinstance(w, (int, Fraction)) else w / ell, None, prec)
                    with prec:
                        zl = zr ** ell
                        rows.append((K, R, ell, w, abs(zl), prec.arg(zl)))
                except DegenerateDenominator:
                    rows.append((K, R, ell, w, None, None))
    return rows


def dispersion_csv(rows) -> str:
    out = ["K,R,ell,omega,mod_zeta,arg_dev"]
    for K, R, ell, w, m, a in rows:
        ms = "nan" if m is None else f"{float(m):.17e}"
        as_ = "nan" if a is None else f"{float(a):.17e}"
        out.append(f"{K},{R},{ell},{float(w):.17e},{ms},{as_}")
    return "\n".join(out) + "\n"


def parse_dispersion_csv(text: str):
    lines = [l for l in text.strip().splitlines() if l]
    if lines[0] != "K,R,ell,omega,mod_zeta,arg_dev":
        raise ValueError("unexpected dispersion header")
    rows = []
    for l in lines[1:]:
        K, R, ell, w, m, a = l.split(",")
        rows.append((int(K), int(R), int(ell), float(w), None if m == "nan" else float(m), None if a == "nan" else float(a)))
    return rows


# ---------------------------------------------------------------------------
# Runge-Kutta form


@dataclass(frozen=True)
class ButcherTableau:
    """alpha[j] rows r = 1..R over stages 0..R, for derivative orders j = 1..K.

    ``raw`` is in dt units; ``normalized`` is in block units dT = R dt.
    """

    K: int
    R: int
    raw: Tuple[Tuple[Tuple[Fraction, ...], ...], ...]
    normalized: Tuple[Tuple[Tuple[Fraction, ...], ...], ...]

    @property
    def nodes(self) -> Tuple[Fraction, ...]:
        return tuple(Fraction(r, self.R) for r in range(self.R + 1))

    def to_json(self) -> dict:
        def enc(m):
            return [[f"{x.numerator}/{x.denominator}" for x in row] for row in m]

        return {
            "K": self.K,
            "R": self.R,
            "stages": self.R + 1,
            "nodes": [f"{c.numerator}/{c.denominator}" for c in self.nodes],
            "alpha": {str(j + 1): enc(m) for j, m in enumerate(self.normalized)},
            "alpha_dt_units": {str(j + 1): enc(m) for j, m in enumerate(self.raw)},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def butcher_export(basis: StructuralBasis) -> ButcherTableau:
    """alpha[j] = -A0^{-1} [a_hat_j | A^(j)]."""
    sb = split(basis)
    raw, norm = [], []
    for j in range(1, sb.K + 1):
        m = tuple(tuple([-sb.q[j][s]] + [-x for x in sb.P[j][s]]) for s in range(sb.R))
        raw.append(m)
        scale = Fraction(1, sb.R ** j)
        norm.append(tuple(tuple(x * scale for x in row) for row in m))
    return ButcherTableau(sb.K, sb.R, tuple(raw), tuple(norm))


# ---------------------------------------------------------------------------
# minimal grid search


def find_min_n(p, scheme: SchemeId, eps_target, solver_eps: float = 1e-14, precision="double", cap: int = 1 << 22, basis=None, max_iters: int = 200) -> int:
    """Smallest N (multiple of R) whose final error is <= eps_target.

    Doubling from N = R locates a bracket, then bisection on multiples of R.
    Grids on which the fixed point fails count as not passing.
    """
    from .solver import SolverConfig, errors_at_final, integrate

    R = scheme.R
    prec = get_precision(precision)
    cache = {}

    def passes(N: int) -> bool:
        if N in cache:
            return cache[N]
        cfg = SolverConfig(scheme, N, solver_eps, max_iters=max_iters, precision=prec)
        try:
            tr = integrate(p, cfg, basis)
        except NoConvergence:
            cache[N] = False
            return False
        err = max(errors_at_final(tr, p, prec, 0)[0])
        cache[N] = bool(err <= eps_target)
        return cache[N]

    if passes(R):
        return R
    lo = R
    hi = 2 * R
    while not passes(hi):
        lo = hi
        hi *= 2
        if hi > cap:
            raise SearchExhausted(f"no grid up to {cap} reaches {eps_target}")
    # smallest passing multiple of R in (lo, hi]
    a, b = lo // R, hi // R
    while b - a > 1:
        mid = (a + b) // 2
        if passes(mid * R):
            b = mid
        else:
            a = mid
    return b * R
