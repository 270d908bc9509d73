import json
import math

import pytest

from structode import benchmark as bm
from structode.benchmark import (
    BenchmarkSpec,
    ConvergenceRow,
    attach_orders,
    emit_table,
    generate_reference,
    parse_csv,
    read_trace,
    reference_solution,
    run_benchmark,
    write_trace,
)
from structode.cli import main
from structode.errors import InvalidSpec, NoReference
from structode.numerics import get_precision
from structode.problems import get_problem
from structode.solver import SolverConfig, integrate
from structode.structural import SchemeId


@pytest.fixture
def cache(tmp_path, monkeypatch):
    monkeypatch.setenv("STRUCTODE_CACHE", str(tmp_path))
    return tmp_path


def test_closed_form_references():
    assert abs(reference_solution("ode1", 1)[0] - math.exp(-1)) < 1e-15
    assert abs(reference_solution("ode3a", 1)[0] + 1 / (1 + math.e)) < 1e-15
    e = get_precision("ext256")
    with e:
        v = reference_solution("ode3c", "0.95", e)[0]
        assert abs(v - 20) < 1e-70


def test_self_reference_needs_cache(cache):
    with pytest.raises(NoReference):
        reference_solution("ode5a", "6.657")


@pytest.mark.parametrize("name,prec", [("ode1", "double"), ("ode2a", "double"), ("ode4", "ext256"), ("ode2a", "ext256")])
def test_trace_round_trip(tmp_path, name, prec):
    p = get_problem(name)
    ctx = get_precision(prec)
    tr = integrate(p, SolverConfig(SchemeId(2, 2), 8, 1e-14 if ctx.is_double else 1e-40, precision=ctx))
    path = tmp_path / "t.trace"
    write_trace(path, tr, ctx, p.dimension, p.is_complex)
    header, times, nodes = read_trace(path)
    assert header == {
        "problem": name, "K": 2, "R": 2, "N": 8, "precision_bits": ctx.bits,
        "dimension": p.dimension, "complex": p.is_complex, "nodes": 9,
    }
    assert times == tr.times and nodes == tr.nodes
    assert not list(tmp_path.glob("*.tmp"))


def test_generated_reference_lookup(cache):
    path = generate_reference("ode5a", "double", run=(2, 2, 480))
    assert path.parent == cache
    p = get_problem("ode5a")
    y = reference_solution("ode5a", p.T)
    assert len(y) == 2
    with pytest.raises(NoReference):
        reference_solution("ode5a", 1.2345)
    rows = run_benchmark(BenchmarkSpec("ode5a", (240, 480), SchemeId(1, 1), 1e-14, orders=(0,)))
    assert rows[0].labels == ("0_x", "0_y")
    assert rows[1].orders[0] == pytest.approx(2.0, abs=0.2)


def test_spec_validation():
    with pytest.raises(InvalidSpec):
        BenchmarkSpec("ode9", (60,), SchemeId(1, 1), 1e-14)
    with pytest.raises(InvalidSpec):
        BenchmarkSpec("ode1", (61,), SchemeId(1, 2), 1e-14)
    with pytest.raises(InvalidSpec):
        BenchmarkSpec("ode1", (60,), SchemeId(1, 2), 1e-14, orders=(2,))


def test_orders_recomputed_from_neighbours():
    rows = attach_orders([ConvergenceRow(60, ("0",), (1e-6,)), ConvergenceRow(120, ("0",), (1e-6 / 16,))])
    assert rows[0].orders == (None,)
    assert rows[1].orders[0] == pytest.approx(4.0)


def _rows():
    return run_benchmark(BenchmarkSpec("ode1", (60, 120, 240), SchemeId(1, 2), 1e-14, postproc=((2, 2),)))


def test_csv_layout_and_round_trip():
    rows = _rows()
    text = emit_table(rows, "csv")
    lines = text.splitlines()
    assert lines[0] == "N,E0,O0,E1,O1,E2,O2,kappa_bar"
    assert lines[1].split(",")[2] == "---"
    back = parse_csv(text)
    for a, b in zip(rows, back):
        assert (a.N, a.labels, a.errors, a.kappa_bar) == (b.N, b.labels, b.errors, b.kappa_bar)
        assert all(x == y for x, y in zip(a.orders[1:] if a is rows[0] else a.orders, b.orders[1:] if a is rows[0] else b.orders))
    assert emit_table(_rows(), "csv") == text


def test_single_row_and_markdown():
    rows = run_benchmark(BenchmarkSpec("ode1", (60,), SchemeId(1, 1), 1e-14))
    assert len(emit_table(rows, "csv").splitlines()) == 2
    md = emit_table(rows, "markdown").splitlines()
    assert md[0].startswith("| N | kappa_bar |") and "---" in md[2]
    with pytest.raises(InvalidSpec):
        emit_table(rows, "xml")


def test_post_processed_column():
    rows = _rows()
    # phi'' from the last three nodes of SK(1,2): 3.46e-5, order 2
    assert rows[0].errors[2] == pytest.approx(3.46e-5, rel=0.01)
    assert rows[2].orders[2] == pytest.approx(2.0, abs=0.05)


def test_markdown_flags_growing_error():
    rows = attach_orders([ConvergenceRow(60, ("0",), (1.0,)), ConvergenceRow(120, ("0",), (2.0,))])
    assert emit_table(rows, "markdown").splitlines()[-1].endswith("| 2.00E+00 | ↑ |")


def test_cli_exit_codes(tmp_path, capsys):
    out = tmp_path / "t.csv"
    assert main(["bench", "--problem", "ode1", "--k", "1", "--r", "2", "--grids", "60,120", "--out", str(out)]) == 0
    assert out.read_text().startswith("N,E0,O0")
    assert main(["bench", "--problem", "ode1", "--k", "1", "--r", "2", "--grids", "61"]) == 3
    assert main(["bench", "--problem", "nope", "--k", "1", "--r", "2", "--grids", "60"]) == 3
    assert main(["bench", "--problem", "ode1", "--k", "9", "--r", "2", "--grids", "60"]) == 3
    assert main(["bench", "--problem", "ode1", "--k", "1", "--r", "1", "--grids", "60", "--max-iters", "1"]) == 2
    capsys.readouterr()
    assert main(["bench"]) == 3


def test_cli_reports(tmp_path, capsys):
    assert main(["scheme", "dump", "--k", "2", "--r", "2"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["K"] == 2 and len(d["vectors"]) == 2
    assert main(["postproc", "--k", "1", "--p", "2", "--ip", "2"]) == 0
    d = json.loads(capsys.readouterr().out)
    assert d["order"] == 4
    assert main(["stability", "--k", "1..2", "--r", "1..2", "--format", "json"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert [r["verdict"] for r in rows] == ["AStable"] * 4
    out = tmp_path / "d.csv"
    assert main(["dispersion", "--k", "1", "--r", "1..2", "--omega-max", "6.283", "--samples", "16", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 33
    assert main(["butcher", "--k", "1", "--r", "2"]) == 0
    assert json.loads(capsys.readouterr().out)["alpha"]["1"][0] == ["5/24", "1/3", "-1/24"]
