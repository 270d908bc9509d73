"""The SK(K,R) block integrator."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Any, List, Optional, Sequence

import gmpy2

from .errors import InvalidSpec, NoConvergence, StructodeError
from .jets import OdeProblem, lift_derivatives, lift_derivatives_given_prefix
from .numerics import Precision, get_precision, norm_inf
from .structural import SchemeId, SplitBasis, get_basis, split


@dataclass(frozen=True)
class SolverConfig:
    scheme: SchemeId
    N: int
    eps: float
    max_iters: int = 200
    precision: Any = "double"
    basis_source: str = "exact_kernel"

    def __post_init__(self):
        if self.N <= 0 or self.N % self.scheme.R:
            raise InvalidSpec(f"N={self.N} must be a positive multiple of R={self.scheme.R}")
        if not self.eps > 0:
            raise InvalidSpec("eps must be positive")
        if self.scheme.S != self.scheme.R:
            raise InvalidSpec("solving needs S = R")
        if self.max_iters < 1:
            raise InvalidSpec("max_iters must be at least 1")
        object.__setattr__(self, "precision", get_precision(self.precision))


@dataclass
class BlockState:
    """``psi[k][c]`` anchors the block; ``phi[k][r][c]`` holds nodes n+1..n+R."""

    psi: List[List[Any]]
    phi: List[List[List[Any]]]
    iter_count: int = 0
    change: Any = None


@dataclass
class Trace:
    problem: str
    K: int
    R: int
    N: int
    precision: str
    times: List[Any] = field(default_factory=list)
    # nodes[n][k][c]
    nodes: List[List[List[Any]]] = field(default_factory=list)
    block_iters: List[int] = field(default_factory=list)
    failed_block: Optional[int] = None
    failure: Optional[StructodeError] = None

    @property
    def kappa_bar(self) -> float:
        """Total sweeps divided by the number of time steps."""
        return sum(self.block_iters) / self.N

    @property
    def tau_bar(self) -> float:
        """Mean sweeps per node of a block, kappa_bar / R."""
        return self.kappa_bar / self.R

    @property
    def final(self):
        return self.nodes[-1]


class _Stepper:
    """Scaled block matrices for one (basis, dt, precision) triple."""

    def __init__(self, sb: SplitBasis, dt, ctx: Precision):
        self.sb = sb
        self.K, self.R = sb.K, sb.R
        self.ctx = ctx
        self.dt = dt
        dtk = [ctx.real(1)]
        for _ in range(self.K):
            dtk.append(dtk[-1] * dt)
        self.dtk = dtk
        # phi0_new = -sum_{k>=1} dt^k P_k phi_k - sum_k dt^k q_k psi_k
        self.P = [[[-dtk[k] * ctx.real(x) for x in row] for row in sb.P[k]] for k in range(self.K + 1)]
        self.q = [[-dtk[k] * ctx.real(x) for x in sb.q[k]] for k in range(self.K + 1)]


def init_block(p: OdeProblem, psi, t_n, dt, K: int, R: int, ctx: Precision):
    """Taylor predictor marching over the R nodes of a block."""
    d = p.dimension
    phi = [[None] * R for _ in range(K + 1)]
    prev = psi
    coef = [ctx.real(1)]
    for j in range(1, K + 1):
        coef.append(coef[-1] * dt / j)
    for r in range(R):
        y = [sum(coef[j] * prev[j][c] for j in range(K + 1)) for c in range(d)]
        jet = lift_derivatives(p, t_n + (r + 1) * dt, y, K, ctx)
        for k in range(K + 1):
            phi[k][r] = jet[k]
        prev = jet
    return phi


def _refresh(p: OdeProblem, phi, t_n, dt, K: int, R: int, ctx: Precision):
    for r in range(R):
        jet = lift_derivatives_given_prefix(p, t_n + (r + 1) * dt, [phi[0][r]], K, ctx)
        for k in range(1, K + 1):
            phi[k][r] = jet[k]


def _solve_structural(st: _Stepper, psi, phi, d: int):
    K, R = st.K, st.R
    new = []
    for s in range(R):
        row = []
        for c in range(d):
            acc = st.q[0][s] * psi[0][c]
            for k in range(1, K + 1):
                acc += st.q[k][s] * psi[k][c]
                Pk = st.P[k][s]
                for r in range(R):
                    acc += Pk[r] * phi[k][r][c]
            row.append(acc)
        new.append(row)
    return new


def sweep(p: OdeProblem, st: _Stepper, state: BlockState, t_n):
    """One physical refresh of orders 1..K, then the structural solve for order 0.

    Returns the sup-norm change of the order-0 block.
    """
    K, R, d = st.K, st.R, p.dimension
    phi = state.phi
    _refresh(p, phi, t_n, st.dt, K, R, st.ctx)
    new = _solve_structural(st, state.psi, phi, d)
    change = max(abs(new[r][c] - phi[0][r][c]) for r in range(R) for c in range(d))
    phi[0] = new
    state.change = change
    return change


def solve_block(p: OdeProblem, st: _Stepper, psi, t_n, eps, max_iters: int = 200) -> BlockState:
    K, R = st.K, st.R
    phi = init_block(p, psi, t_n, st.dt, K, R, st.ctx)
    state = BlockState(psi=psi, phi=phi)
    ctx = st.ctx
    for it in range(1, max_iters + 1):
        try:
            change = sweep(p, st, state, t_n)
        except (OverflowError, gmpy2.OverflowResultError) as exc:
            raise NoConvergence(f"fixed-point iterates overflow ({exc})", None, it) from exc
        state.iter_count = it
        if not ctx.isfinite(change):
            raise NoConvergence("fixed-point iterates are not finite", change, it)
        if change <= eps:
            _refresh(p, state.phi, t_n, st.dt, K, R, ctx)
            return state
    raise NoConvergence(
        f"no convergence after {max_iters} sweeps (last change {float(state.change):.3e})",
        state.change,
        max_iters,
    )


def make_stepper(cfg: SolverConfig, dt, basis=None) -> _Stepper:
    b = basis if basis is not None else get_basis(cfg.scheme, cfg.basis_source)
    return _Stepper(split(b), dt, cfg.precision)


def integrate(p: OdeProblem, cfg: SolverConfig, basis=None, raise_on_failure: bool = True) -> Trace:
    """Advance block by block from t0 to T with N uniform steps.

    On NoConvergence the trace keeps the finished blocks and records the
    failing block index; the error is re-raised unless
    ``raise_on_failure`` is False.
    """
    ctx = cfg.precision
    K, R, N = cfg.scheme.K, cfg.scheme.R, cfg.N
    with ctx:
        t0, T = p.interval(ctx)
        dt = (T - t0) / N
        st = make_stepper(cfg, dt, basis)
        eps = ctx.real(cfg.eps) if not isinstance(cfg.eps, (int, float)) else ctx.real(repr(float(cfg.eps)))
        trace = Trace(p.name, K, R, N, ctx.name)
        psi = lift_derivatives(p, t0, p.initial(ctx), K, ctx)
        trace.times.append(t0)
        trace.nodes.append(psi)
        for b in range(N // R):
            t_n = t0 + (b * R) * dt
            try:
                state = solve_block(p, st, psi, t_n, eps, cfg.max_iters)
            except NoConvergence as exc:
                exc.block = b
                trace.failed_block = b
                trace.failure = exc
                trace.block_iters.append(exc.iterations)
                if raise_on_failure:
                    raise
                return trace
            trace.block_iters.append(state.iter_count)
            for r in range(R):
                trace.times.append(t0 + (b * R + r + 1) * dt)
                trace.nodes.append([list(state.phi[k][r]) for k in range(K + 1)])
            psi = trace.nodes[-1]
        return trace


def contraction_coefficient(sb: SplitBasis, L_hats: Sequence, dt) -> Any:
    """chi_K = sum_k dt^k L_k |A0^{-1} A^(k)|_inf, k = 1..K."""
    total = 0 * dt
    for k in range(1, sb.K + 1):
        nrm = norm_inf([[abs(x) for x in row] for row in sb.P[k]])
        total += dt ** k * L_hats[k - 1] * float(nrm) if isinstance(dt, float) else dt ** k * L_hats[k - 1] * nrm
    return total


def errors_at_final(trace: Trace, p: OdeProblem, ctx: Precision, K: int):
    """|y^(k)_N - y^(k)(T)| per order and component, using the exact solution jet."""
    with ctx:
        T = trace.times[-1]
        exact = p.exact(T, ctx)
        ref = lift_derivatives(p, T, exact, K, ctx)
        return [[abs(trace.final[k][c] - ref[k][c]) for c in range(p.dimension)] for k in range(K + 1)]
