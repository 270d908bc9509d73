"""Constraint matrix, structural-equation bases and the A^(k) split."""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Dict, List, Sequence, Tuple

from .errors import InvalidSpec, NotInCatalog, SingularA0, SingularMatrix
from .numerics import (
    Precision,
    DOUBLE,
    normalize_integer_vector,
    rational_inverse,
    rational_null_space,
    svd_null_space,
    matmul,
)
from . import _catalog

SOURCES = ("analytic", "exact_kernel", "svd", "hierarchical")


@dataclass(frozen=True)
class SchemeId:
    K: int
    R: int
    S: int = 0  # 0 means S = R

    def __post_init__(self):
        if self.S == 0:
            object.__setattr__(self, "S", self.R)
        if not (1 <= self.K <= 4 and 1 <= self.R <= 5):
            raise InvalidSpec(f"unsupported scheme K={self.K}, R={self.R}")
        if not 1 <= self.S <= self.M - 1:
            raise InvalidSpec(f"S={self.S} out of range for M={self.M}")

    @property
    def M(self) -> int:
        return (self.K + 1) * (self.R + 1)

    @property
    def order(self) -> int:
        """Nominal convergence order K(R+1) of the solving scheme."""
        return self.K * (self.R + 1)


def falling(m: int, k: int) -> int:
    """C^m_k = (m-1)!/(m-1-k)! for m > k, else 0."""
    if m <= k:
        return 0
    return factorial(m - 1) // factorial(m - 1 - k)


def column(K: int, R: int, k: int, r: int) -> int:
    """Zero-based column of coefficient a_{k,r} in a flattened vector."""
    return k * (R + 1) + r


def build_constraint_matrix(sid: SchemeId) -> List[List[Fraction]]:
    """The M x M matrix of the exactness conditions E(a; pi_m) = 0."""
    K, R, M = sid.K, sid.R, sid.M
    rows = []
    for m in range(1, M + 1):
        row = [Fraction(0)] * M
        for k in range(K + 1):
            c = falling(m, k)
            if c == 0:
                continue
            e = m - 1 - k
            for r in range(R + 1):
                row[column(K, R, k, r)] = Fraction(c * r ** e)  # 0**0 == 1
        rows.append(row)
    return rows


@dataclass(frozen=True)
class StructuralBasis:
    """S coefficient matrices a^s of shape (K+1) x (R+1)."""

    id: SchemeId
    vectors: Tuple[Tuple[Tuple[Fraction, ...], ...], ...]
    exactness_degree: int
    source: str

    @property
    def K(self) -> int:
        return self.id.K

    @property
    def R(self) -> int:
        return self.id.R

    @property
    def S(self) -> int:
        return len(self.vectors)

    def flat(self) -> List[List[Fraction]]:
        return [[x for row in a for x in row] for a in self.vectors]

    def to_json(self) -> dict:
        return {
            "K": self.K,
            "R": self.R,
            "S": self.S,
            "vectors": [
                [[int(x.numerator), int(x.denominator)] for x in flat] for flat in self.flat()
            ],
            "exactness_degree": self.exactness_degree,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, data: dict, source: str = "exact_kernel") -> "StructuralBasis":
        sid = SchemeId(data["K"], data["R"], data["S"])
        flats = [[Fraction(n, d) for n, d in v] for v in data["vectors"]]
        return cls(sid, _shape(flats, sid.K, sid.R), data["exactness_degree"], source)


def _shape(flats: Sequence[Sequence], K: int, R: int):
    return tuple(
        tuple(tuple(Fraction(v[column(K, R, k, r)]) for r in range(R + 1)) for k in range(K + 1))
        for v in flats
    )


def basis_exact(sid: SchemeId) -> StructuralBasis:
    """Kernel of the first M-S rows of the constraint matrix, exact."""
    M = build_constraint_matrix(sid)
    kern = rational_null_space(M[: sid.M - sid.S])
    return StructuralBasis(sid, _shape(kern, sid.K, sid.R), sid.M - sid.S - 1, "exact_kernel")


def basis_svd(sid: SchemeId, prec: Precision = DOUBLE) -> List[List]:
    """Orthonormal numeric kernel vectors (flattened, k-major)."""
    M = build_constraint_matrix(sid)
    return svd_null_space(M[: sid.M - sid.S], sid.S, prec)


def basis_analytic(sid: SchemeId) -> StructuralBasis:
    """Hard-coded closed-form coefficient tables.

    The catalog lists a hierarchical family a^1..a^Smax; the first S entries
    span the S-equation kernel.
    """
    key = (sid.K, sid.R)
    if key not in _catalog.STRUCTURAL:
        raise NotInCatalog(f"no closed-form table for K={sid.K}, R={sid.R}")
    entries = _catalog.STRUCTURAL[key]
    if sid.S > len(entries):
        raise NotInCatalog(f"catalog lists {len(entries)} equations, S={sid.S} requested")
    flats = [catalog_vector(sid.K, sid.R, e) for e in entries[: sid.S]]
    return StructuralBasis(sid, _shape(flats, sid.K, sid.R), sid.M - sid.S - 1, "analytic")


def catalog_vector(K: int, R: int, entry: Sequence[Sequence[int]]) -> List[Fraction]:
    """Flatten one catalog entry given as K+1 rows of R+1 integers."""
    if len(entry) != K + 1 or any(len(row) != R + 1 for row in entry):
        raise ValueError("catalog entry has the wrong shape")
    return [Fraction(x) for row in entry for x in row]


def basis_hierarchical(sid: SchemeId) -> StructuralBasis:
    """a^s in ker M[1:M-s] and orthogonal to a^1..a^(s-1); computed exactly."""
    M = build_constraint_matrix(sid)
    found: List[List[Fraction]] = []
    for s in range(1, sid.S + 1):
        rows = M[: sid.M - s] + found
        kern = rational_null_space(rows)
        if len(kern) != 1:
            raise AssertionError("hierarchical step did not isolate one direction")
        found.append(kern[0])
    return StructuralBasis(sid, _shape(found, sid.K, sid.R), sid.M - sid.S - 1, "hierarchical")


def get_basis(sid: SchemeId, source: str = "exact_kernel") -> StructuralBasis:
    if source == "exact_kernel":
        return basis_exact(sid)
    if source == "analytic":
        return basis_analytic(sid)
    if source == "hierarchical":
        return basis_hierarchical(sid)
    if source == "svd":
        raise InvalidSpec("the svd source yields floating vectors; use basis_svd")
    raise InvalidSpec(f"unknown basis source {source!r}")


def exactness_residuals(flat: Sequence, sid: SchemeId, upto: int) -> List[Fraction]:
    """E(a; pi_m) for m = 1..upto, exact."""
    rows = _extended_rows(sid.K, sid.R, upto)
    return [sum(Fraction(a) * b for a, b in zip(flat, row)) for row in rows]


def _extended_rows(K: int, R: int, upto: int) -> List[List[Fraction]]:
    rows = []
    for m in range(1, upto + 1):
        row = [Fraction(0)] * ((K + 1) * (R + 1))
        for k in range(K + 1):
            c = falling(m, k)
            if c:
                for r in range(R + 1):
                    row[column(K, R, k, r)] = Fraction(c * r ** (m - 1 - k))
        rows.append(row)
    return rows


def exactness_degree_of(flat: Sequence, K: int, R: int) -> int:
    """Largest degree d such that the vector annihilates every pi_m, m <= d+1."""
    m = 1
    while m <= 4 * (K + 1) * (R + 1):
        row = _extended_rows(K, R, m)[-1]
        if sum(Fraction(a) * b for a, b in zip(flat, row)) != 0:
            return m - 2
        m += 1
    return m - 2


def in_span(vectors: Sequence[Sequence], v: Sequence) -> bool:
    """Exact membership of ``v`` in the span of ``vectors``."""
    from .numerics import rank_rational

    base = [list(map(Fraction, x)) for x in vectors]
    return rank_rational(base + [list(map(Fraction, v))]) == rank_rational(base)


@dataclass(frozen=True)
class SplitBasis:
    """A^(k) (R x R, columns r = 1..R) and anchors a_hat_k (column r = 0).

    ``P[k] = A0^{-1} A^(k)`` and ``q[k] = A0^{-1} a_hat_k`` are kept exact.
    """

    K: int
    R: int
    A: Tuple[Tuple[Tuple[Fraction, ...], ...], ...]
    a_hat: Tuple[Tuple[Fraction, ...], ...]
    P: Tuple[Tuple[Tuple[Fraction, ...], ...], ...]
    q: Tuple[Tuple[Fraction, ...], ...]

    def reassemble(self) -> List[List[List[Fraction]]]:
        out = []
        for s in range(self.R):
            out.append([[self.a_hat[k][s]] + list(self.A[k][s]) for k in range(self.K + 1)])
        return out


def split(b: StructuralBasis) -> SplitBasis:
    K, R = b.K, b.R
    if b.S != R:
        raise InvalidSpec("split needs S = R")
    A = tuple(
        tuple(tuple(b.vectors[s][k][r] for r in range(1, R + 1)) for s in range(R)) for k in range(K + 1)
    )
    a_hat = tuple(tuple(b.vectors[s][k][0] for s in range(R)) for k in range(K + 1))
    try:
        inv = rational_inverse([list(row) for row in A[0]])
    except SingularMatrix as exc:
        raise SingularA0("A^(0) is singular for this basis") from exc
    P = tuple(tuple(tuple(row) for row in matmul(inv, [list(r) for r in A[k]])) for k in range(K + 1))
    q = tuple(tuple(row[0] for row in matmul(inv, [[x] for x in a_hat[k]])) for k in range(K + 1))
    return SplitBasis(K, R, A, a_hat, P, q)


def transform(b: StructuralBasis, Xi: Sequence[Sequence]) -> StructuralBasis:
    """Apply a change of basis a'^s = sum_t Xi[s][t] a^t."""
    flats = b.flat()
    new = [[sum(Fraction(Xi[s][t]) * flats[t][j] for t in range(b.S)) for j in range(len(flats[0]))] for s in range(b.S)]
    return StructuralBasis(b.id, _shape(new, b.K, b.R), b.exactness_degree, b.source)


def normalized(b: StructuralBasis) -> List[List[Fraction]]:
    return [normalize_integer_vector(f) for f in b.flat()]
