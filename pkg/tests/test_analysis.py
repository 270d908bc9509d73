import cmath
import math
from fractions import Fraction as F

import pytest

from structode.analysis import (
    a_stability,
    arg_deviation,
    butcher_export,
    deviation,
    dispersion_csv,
    dispersion_table,
    find_min_n,
    hurwitz_matrix,
    hurwitz_report,
    parse_dispersion_csv,
    transfer_function,
    zeta,
)
from structode.numerics import DOUBLE, Poly, get_precision
from structode.problems import get_problem
from structode.structural import SchemeId, basis_exact, get_basis


def chi(K, R):
    return transfer_function(basis_exact(SchemeId(K, R)))


def test_trapezoid_transfer():
    c = chi(1, 1)
    assert c.num == Poly([2, 1]) and c.den == Poly([2, -1])
    assert c(F(-1)) == F(1, 3)


def test_transfer_is_pade_like_near_zero():
    # chi_R(z) approximates e^{Rz} to the scheme order
    for K, R in ((1, 2), (2, 2), (3, 1)):
        c = chi(K, R)
        z = 1e-2
        err = abs(c(z) - math.exp(R * z))
        assert err < 10 * z ** (K * (R + 1) + 1)


def test_intermediate_amplification():
    c = chi(1, 2)
    v = c.amplification_vector(complex(-0.1, 0.2), DOUBLE)
    assert abs(v[1] - c(complex(-0.1, 0.2))) < 1e-14
    assert abs(v[0] - cmath.exp(complex(-0.1, 0.2))) < 1e-4


def test_hurwitz_matrix_layout():
    p = Poly([12, 18, 11, 3])  # 3z^3 + 11z^2 + 18z + 12
    assert hurwitz_matrix(p) == [[11, 12, 0], [3, 18, 0], [0, 11, 12]]
    rep = hurwitz_report(p)
    assert rep.minors == (11, 162, 1944) and rep.a_stable


def test_unstable_polynomial_verdict():
    rep = hurwitz_report(Poly([-1, 0, 1]))  # z^2 - 1
    assert not rep.a_stable and rep.verdict.startswith("MinorNonPositive")


def test_non_palindromic_form():
    from structode.analysis import RationalTransfer

    bad = RationalTransfer(Poly([1, 1]), Poly([3, -1]))
    assert a_stability(bad).verdict == "NotPalindromicForm"


@pytest.mark.parametrize("K,R", [(1, 3), (2, 2), (3, 3)])
def test_zeta_unit_modulus(K, R):
    c = chi(K, R)
    for w in (0.1, 0.7, 2.5):
        assert abs(abs(zeta(c, w)) - 1) < 1e-12


def test_deviation_and_phase():
    c = chi(1, 1)
    w = 2 * math.pi / 60
    dev = deviation(c, w, 60)
    assert abs(cmath.phase(dev) - arg_deviation(c, w, 60)) < 1e-12
    # trapezoid phase error per step: 2 atan(w/2) - w
    assert abs(arg_deviation(c, w, 60) - 60 * (2 * math.atan(w / 2) - w)) < 1e-12


def test_dispersion_csv_round_trip():
    rows = dispersion_table([(1, 2), (2, 1)], [0.5, 1.0, 2.0], ells=(1, 2))
    text = dispersion_csv(rows)
    assert text.splitlines()[0] == "K,R,ell,omega,mod_zeta,arg_dev"
    back = parse_dispersion_csv(text)
    assert len(back) == len(rows) == 12
    for a, b in zip(rows, back):
        assert a[:3] == b[:3] and abs(a[4] - b[4]) < 1e-15 and abs(a[5] - b[5]) < 1e-15
    assert dispersion_csv(dispersion_table([(1, 2), (2, 1)], [0.5, 1.0, 2.0], ells=(1, 2))) == text


def test_trapezoid_tableau():
    t = butcher_export(basis_exact(SchemeId(1, 1)))
    assert t.normalized == (((F(1, 2), F(1, 2)),),)
    assert t.nodes == (0, 1)
    assert t.to_json()["alpha"]["1"] == [["1/2", "1/2"]]


def test_tableau_row_sums_are_nodes():
    # consistency: sum_j alpha_rj = c_r for the first derivative
    for R in (2, 3, 4):
        t = butcher_export(basis_exact(SchemeId(1, R)))
        for r, row in enumerate(t.normalized[0], start=1):
            assert sum(row) == F(r, R)


def test_find_min_n_small():
    p = get_problem("ode1")
    N = find_min_n(p, SchemeId(1, 1), 1e-4)
    from structode.solver import SolverConfig, errors_at_final, integrate

    def err(n):
        tr = integrate(p, SolverConfig(SchemeId(1, 1), n, 1e-14))
        return errors_at_final(tr, p, DOUBLE, 0)[0][0]

    assert err(N) <= 1e-4 < err(N - 1)
