"""Convergence tables, self-reference traces and table emitters."""

from __future__ import annotations

import json
import math
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import gmpy2

from .errors import InvalidSpec, NoConvergence, NoReference
from .jets import lift_derivatives
from .numerics import Precision, get_precision
from .postproc import apply as pp_apply, build_postprocessor
from .problems import SELF_REFERENCE, get_problem
from .solver import SolverConfig, Trace, integrate
from .structural import SchemeId

# Maximal-order runs used as reference for problems without a closed form:
# (K, R, N, fixed-point eps by precision)
REFERENCE_RUNS = {
    "ode5a": (4, 5, 1440),
    "ode5b": (4, 5, 20000),
    "ode7": (4, 5, 24000),
}


@dataclass(frozen=True)
class BenchmarkSpec:
    name: str
    grids: Tuple[int, ...]
    scheme: SchemeId
    eps: float
    precision: Any = "double"
    orders: Optional[Tuple[int, ...]] = None
    postproc: Tuple[Tuple[int, int], ...] = ()  # (p, I_p) pairs
    max_iters: int = 200
    basis_source: str = "exact_kernel"

    def __post_init__(self):
        get_problem(self.name)
        if not self.grids:
            raise InvalidSpec("at least one grid is required")
        for N in self.grids:
            if N <= 0 or N % self.scheme.R:
                raise InvalidSpec(f"grid N={N} is not a positive multiple of R={self.scheme.R}")
        if not self.eps > 0:
            raise InvalidSpec("eps must be positive")
        for k in self.orders or ():
            if not 0 <= k <= self.scheme.K:
                raise InvalidSpec(f"order {k} not produced by K={self.scheme.K}")
        for p, ip in self.postproc:
            if p <= self.scheme.K or ip < 0:
                raise InvalidSpec(f"post-processing needs p > K and I_p >= 0 (got p={p}, I_p={ip})")
        object.__setattr__(self, "precision", get_precision(self.precision))

    def report_orders(self) -> Tuple[int, ...]:
        return self.orders if self.orders is not None else tuple(range(self.scheme.K + 1))


@dataclass
class ConvergenceRow:
    N: int
    labels: Tuple[str, ...]
    errors: Tuple[Optional[float], ...]
    orders: Tuple[Optional[float], ...] = ()
    kappa_bar: Optional[float] = None
    converged: bool = True


def observed_order(E1, E2, N1: int, N2: int) -> Optional[float]:
    """|log(E1/E2)| / |log(N1/N2)|."""
    if E1 is None or E2 is None or E1 <= 0 or E2 <= 0 or N1 == N2:
        return None
    return abs(math.log(E1 / E2)) / abs(math.log(N1 / N2))


def attach_orders(rows: List[ConvergenceRow]) -> List[ConvergenceRow]:
    prev = None
    for row in rows:
        if prev is None:
            row.orders = tuple(None for _ in row.errors)
        else:
            row.orders = tuple(
                observed_order(a, b, prev.N, row.N) for a, b in zip(prev.errors, row.errors)
            )
        prev = row
    return rows


# ---------------------------------------------------------------------------
# reference traces


def cache_dir() -> Path:
    root = os.environ.get("STRUCTODE_CACHE")
    return Path(root) if root else Path.home() / ".cache" / "structode"


def cache_path(problem: str, prec: Precision) -> Path:
    return cache_dir() / f"{problem}-{prec.name}.trace"


MAGIC = b"SKTRACE1\n"


def _encode(v, prec: Precision) -> bytes:
    if prec.is_double:
        if isinstance(v, complex):
            return struct.pack("<dd", v.real, v.imag)
        return struct.pack("<d", v)
    raw = gmpy2.to_binary(v)
    return struct.pack("<H", len(raw)) + raw


def _decode(buf: memoryview, pos: int, prec: Precision, is_complex: bool):
    if prec.is_double:
        if is_complex:
            re, im = struct.unpack_from("<dd", buf, pos)
            return complex(re, im), pos + 16
        return struct.unpack_from("<d", buf, pos)[0], pos + 8
    (n,) = struct.unpack_from("<H", buf, pos)
    pos += 2
    return gmpy2.from_binary(bytes(buf[pos:pos + n])), pos + n


def write_trace(path: Path, trace: Trace, prec: Precision, dimension: int, is_complex: bool = False) -> None:
    """Columns (t, state x (K+1)) per node after a JSON header; atomic rename."""
    header = {
        "problem": trace.problem,
        "K": trace.K,
        "R": trace.R,
        "N": trace.N,
        "precision_bits": prec.bits,
        "dimension": dimension,
        "complex": is_complex,
        "nodes": len(trace.nodes),
    }
    hb = json.dumps(header, sort_keys=True).encode()
    chunks = [MAGIC, struct.pack("<I", len(hb)), hb]
    for t, jet in zip(trace.times, trace.nodes):
        chunks.append(_encode(t, prec))
        for k in range(trace.K + 1):
            for c in range(dimension):
                chunks.append(_encode(jet[k][c], prec))
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(b"".join(chunks))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_trace(path: Path):
    """Return (header, times, nodes)."""
    data = memoryview(path.read_bytes())
    if bytes(data[: len(MAGIC)]) != MAGIC:
        raise ValueError(f"{path} is not a trace file")
    pos = len(MAGIC)
    (hl,) = struct.unpack_from("<I", data, pos)
    pos += 4
    header = json.loads(bytes(data[pos:pos + hl]))
    pos += hl
    prec = get_precision(header["precision_bits"])
    K, d, cplx = header["K"], header["dimension"], header["complex"]
    times, nodes = [], []
    with prec:
        for _ in range(header["nodes"]):
            t, pos = _decode(data, pos, prec, False)
            jet = []
            for k in range(K + 1):
                row = []
                for c in range(d):
                    v, pos = _decode(data, pos, prec, cplx)
                    row.append(v)
                jet.append(row)
            times.append(t)
            nodes.append(jet)
    return header, times, nodes


def generate_reference(name: str, precision="double", run: Optional[Tuple[int, int, int]] = None, eps=None) -> Path:
    """Integrate with a maximal-order scheme and cache the trace on disk."""
    prec = get_precision(precision)
    p = get_problem(name)
    K, R, N = run or REFERENCE_RUNS.get(name, (4, 5, 6000))
    if eps is None:
        eps = 1e-14 if prec.is_double else 10.0 ** (-int(prec.bits * 0.28))
    tr = integrate(p, SolverConfig(SchemeId(K, R), N, eps, precision=prec))
    path = cache_path(name, prec)
    write_trace(path, tr, prec, p.dimension, p.is_complex)
    return path


def reference_solution(name: str, t, precision="double", K: int = 0):
    """Solution d-vector at ``t`` (jet with orders 0..K when K > 0).

    Closed forms are evaluated directly. Self-reference problems look the
    node up in the cached trace and raise NoReference when it is missing.
    """
    prec = get_precision(precision)
    p = get_problem(name)
    with prec:
        tt = prec.convert(t)
        if p.exact is not None:
            y = p.exact(tt, prec)
            return lift_derivatives(p, tt, y, K, prec) if K else y
        path = cache_path(name, prec)
        if not path.exists():
            raise NoReference(f"no reference trace for {name} at {prec.name}; generate it first")
        header, times, nodes = read_trace(path)
        T = times[-1]
        tol = abs(T - times[0]) * 16 * prec.eps + 16 * prec.eps
        for ti, jet in zip(times, nodes):
            if abs(ti - tt) <= tol:
                if K > header["K"]:
                    y = jet[0]
                    return lift_derivatives(p, tt, y, K, prec)
                return [list(r) for r in jet[: K + 1]] if K else list(jet[0])
        raise NoReference(f"t={t} is not a node of the cached {name} trace")


# ---------------------------------------------------------------------------


def column_labels(spec: BenchmarkSpec, comps: Sequence[str]) -> Tuple[str, ...]:
    ks = list(spec.report_orders()) + [p for p, _ in spec.postproc]
    if len(comps) == 1:
        return tuple(str(k) for k in ks)
    return tuple(f"{k}_{c}" for k in ks for c in comps)


def run_benchmark(spec: BenchmarkSpec) -> List[ConvergenceRow]:
    """One row per grid: final-time errors per order/component and kappa_bar.

    Rows whose integration failed carry None errors and converged=False.
    """
    p = get_problem(spec.name)
    prec = spec.precision
    K = spec.scheme.K
    comps = p.component_names()
    labels = column_labels(spec, comps)
    kmax = max(list(spec.report_orders()) + [p_ for p_, _ in spec.postproc] + [0])
    pps = [(pp, build_postprocessor(K, pp, ip)) for pp, ip in spec.postproc]
    rows = []
    for N in spec.grids:
        cfg = SolverConfig(spec.scheme, N, spec.eps, spec.max_iters, prec, spec.basis_source)
        try:
            tr = integrate(p, cfg)
        except NoConvergence:
            rows.append(ConvergenceRow(N, labels, tuple(None for _ in labels), converged=False))
            continue
        with prec:
            T = tr.times[-1]
            ref = reference_solution(spec.name, T, prec, K=kmax)
            if kmax == 0:
                ref = [ref]
            errs = []
            for k in spec.report_orders():
                errs.extend(float(abs(tr.final[k][c] - ref[k][c])) for c in range(p.dimension))
            t0, TT = p.interval(prec)
            dt = (TT - t0) / N
            for pdeg, pp in pps:
                vals = pp_apply(pp, tr.nodes[-(pp.I_p + 1):], dt, prec)
                errs.extend(float(abs(vals[c] - ref[pdeg][c])) for c in range(p.dimension))
        rows.append(ConvergenceRow(N, labels, tuple(errs), kappa_bar=tr.kappa_bar))
    return attach_orders(rows)


# ---------------------------------------------------------------------------
# emitters


def _fmt_float(x: Optional[float]) -> str:
    return "nc" if x is None else repr(float(x))


def emit_table(rows: Sequence[ConvergenceRow], fmt: str = "csv") -> str:
    if not rows:
        raise ValueError("no rows to emit")
    labels = rows[0].labels
    if fmt == "csv":
        head = ["N"] + [f"{s}{l}" for l in labels for s in ("E", "O")] + ["kappa_bar"]
        lines = [",".join(head)]
        for i, r in enumerate(rows):
            cells = [str(r.N)]
            for e, o in zip(r.errors, r.orders or [None] * len(r.errors)):
                cells.append(_fmt_float(e))
                cells.append("---" if i == 0 else ("nc" if o is None else repr(float(o))))
            cells.append(_fmt_float(r.kappa_bar))
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"
    if fmt in ("markdown", "md"):
        head = "| N | kappa_bar | " + " | ".join(f"E{l} | O{l}" for l in labels) + " |"
        sep = "|" + "---|" * (2 + 2 * len(labels))
        lines = [head, sep]
        for i, r in enumerate(rows):
            cells = [str(r.N), "---" if r.kappa_bar is None else f"{r.kappa_bar:.2f}"]
            prev = rows[i - 1].errors if i else [None] * len(r.errors)
            for e, o, ep in zip(r.errors, r.orders or [None] * len(r.errors), prev):
                cells.append("↑" if e is None else f"{e:.2E}")
                if i == 0 or o is None:
                    cells.append("---")
                else:
                    # growing error between grids is flagged, not given an order
                    cells.append("↑" if ep is not None and e > ep else f"{o:.1f}")
            lines.append("| " + " | ".join(cells) + " |")
        return "\n".join(lines) + "\n"
    raise InvalidSpec(f"unknown table format {fmt!r}")


def parse_csv(text: str) -> List[ConvergenceRow]:
    lines = [l for l in text.strip().splitlines() if l]
    head = lines[0].split(",")
    if head[0] != "N" or head[-1] != "kappa_bar":
        raise ValueError("unexpected benchmark header")
    labels = tuple(h[1:] for h in head[1:-1:2])

    def num(s):
        return None if s in ("nc", "---") else float(s)

    rows = []
    for line in lines[1:]:
        cells = line.split(",")
        errs = tuple(num(c) for c in cells[1:-1:2])
        ords = tuple(num(c) for c in cells[2:-1:2])
        kb = num(cells[-1])
        rows.append(ConvergenceRow(int(cells[0]), labels, errs, ords, kb, all(e is not None for e in errs)))
    return rows
