import math
from fractions import Fraction as F

import pytest

from structode import jets
from structode.errors import DomainError
from structode.jets import OdeProblem, Series, lift_derivatives, lift_derivatives_given_prefix
from structode.numerics import DOUBLE, get_precision
from structode.problems import get_problem, van_der_pol
from structode.solver import SolverConfig, integrate
from structode.structural import SchemeId


def t_series(t0, n, ctx=DOUBLE):
    return Series([t0, 1.0] + [0.0] * (n - 2), ctx)


def close(a, b, tol=1e-13):
    return all(abs(x - y) <= tol * max(1.0, abs(y)) for x, y in zip(a, b))


def test_series_mul_div():
    x = t_series(0.0, 6)
    y = (1 + x) * (1 - x)
    assert close(y.c, [1, 0, -1, 0, 0, 0])
    g = 1 / (1 - x)
    assert close(g.c, [1.0] * 6)


def test_elementary_series():
    x = t_series(0.0, 7)
    e = jets.exp(x)
    assert close(e.c, [1 / math.factorial(k) for k in range(7)])
    s, c = jets.sin(x), jets.cos(x)
    assert close(s.c, [0, 1, 0, -1 / 6, 0, 1 / 120, 0])
    assert close(c.c, [1, 0, -0.5, 0, 1 / 24, 0, -1 / 720])
    lg = jets.log(1 + x)
    assert close(lg.c, [0, 1, -1 / 2, 1 / 3, -1 / 4, 1 / 5, -1 / 6])
    r = jets.sqrt(1 + x)
    assert close(r.c[:3], [1, 0.5, -0.125])
    p3 = (1 + x) ** 3
    assert close(p3.c, [1, 3, 3, 1, 0, 0, 0])


def test_domain_errors():
    x = t_series(0.0, 4)
    with pytest.raises(DomainError):
        jets.log(x)
    with pytest.raises(DomainError):
        1 / x


def test_ode1_jet_is_alternating():
    p = get_problem("ode1")
    jet = lift_derivatives(p, 0.0, [2.0], 5)
    assert [row[0] for row in jet] == [2.0, -2.0, 2.0, -2.0, 2.0, -2.0]


def test_prefix_kept_verbatim():
    p = get_problem("ode1")
    jet = lift_derivatives_given_prefix(p, 0.0, [[1.0], [5.0]], 3)
    assert jet[1] == [5.0]
    assert jet[2] == [-5.0]  # y'' = -y' from the supplied y'


def test_ode3a_jet_matches_closed_form():
    ctx = get_precision("ext256")
    p = get_problem("ode3a")
    with ctx:
        t = ctx.real(F(1, 3))
        y = p.exact(t, ctx)
        jet = lift_derivatives(p, t, y, 3, ctx)
        # phi = -1/(1+e^t): phi' = e^t/(1+e^t)^2
        e = ctx.exp(t)
        assert abs(jet[1][0] - e / (1 + e) ** 2) < 1e-70
        assert abs(jet[2][0] - e * (1 - e) / (1 + e) ** 3) < 1e-70


def test_wave_and_plane_wave_jets():
    p = get_problem("ode2a")
    jet = lift_derivatives(p, 0.0, [1 + 0j], 3)
    w = 2j * math.pi
    assert all(abs(jet[k][0] - w ** k) < 1e-12 * abs(w) ** k for k in range(4))
    q = get_problem("ode4")
    a = 2.1 * math.pi
    jet = lift_derivatives(q, 0.0, [1.0, 0.0], 2)
    assert close(jet[1], [0.0, -a]) and close(jet[2], [-a * a, 0.0])


def _vdp_at(t_end, x0=2, y0=0):
    ode = OdeProblem(2, van_der_pol(1, "v").rhs, 0, t_end, [x0, y0])
    tr = integrate(ode, SolverConfig(SchemeId(4, 4), 4, 1e-15))
    return tr.final[0]


def test_van_der_pol_jet_against_finite_differences():
    p = van_der_pol(1, "v")
    jet = lift_derivatives(p, 0.0, [2.0, 0.0], 3)
    h = F(1, 1000)
    plus, minus = _vdp_at(h), _vdp_at(-h)
    f = lambda y: lift_derivatives(p, 0.0, y, 2)
    fp, fm = f(plus), f(minus)
    hf = float(h)
    for k in (2, 3):
        for c in range(2):
            fd = (fp[k - 1][c] - fm[k - 1][c]) / (2 * hf)
            ref = jet[k][c]
            assert abs(fd - ref) <= 1e-5 * abs(ref), (k, c, fd, ref)
