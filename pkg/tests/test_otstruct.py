from fractions import Fraction

import pytest
from flint import arb

from otlab.balls import upper, width
from otlab.embeddings import isolate_roots
from otlab.exactnum import NumberField, Poly
from otlab.otstruct import (
    IntervalSingular,
    OTPreconditionError,
    check_admissible,
    compute_c_matrix,
    find_exact_dependency,
    interval_solve,
    l_map,
    row_sum_widths,
)

from conftest import CUBIC, SEXTIC, make_data


def test_sextic_b_matrix(sextic):
    # canonical order pairs sigma_1 with the second complex place
    expected = [[0, -1], [-1, 0]]
    for k in range(2):
        for i in range(2):
            assert sextic.B[k][i].contains(expected[k][i])
            assert upper(width(sextic.B[k][i])) < Fraction(1, 2 ** 128)


def test_cubic_b_is_minus_one(cubic):
    assert upper(abs(cubic.B[0][0] + 1)) < Fraction(1, 2 ** 200)


@pytest.mark.parametrize("name", ["sextic", "cubic", "septic", "sextic_alt"])
def test_row_sums_within_half_precision(request, name):
    data = request.getfixturevalue(name)
    for w in row_sum_widths(data):
        assert w < Fraction(1, 2 ** (data.precision // 2))
    for r in data.row_sum_residuals:
        assert r.contains(0)


def test_l_map_trace_zero(sextic):
    # sum of l(u) over all places is log |N(u)| = 0
    for u in sextic.generators:
        v = l_map(sextic.system, u, 256)
        assert sum(v, arb(0)).contains(0)


def test_c_reconstruction(sextic, cubic):
    assert upper(sextic.C_reconstruction) < Fraction(1, 2 ** 150)
    assert upper(cubic.C_reconstruction) < Fraction(1, 2 ** 150)


def test_c_branch_shift(cubic):
    C0, _ = compute_c_matrix(cubic, [[0]])
    C1, res = compute_c_matrix(cubic, [[1]])
    # shifting the branch adds 2 pi / log sigma_1(u)
    shift = 2 * arb.pi() / cubic.L[0][0]
    assert (C1[0][0] - C0[0][0] - shift).contains(0)
    assert upper(res) < Fraction(1, 2 ** 150)


def test_admissible_certificate(sextic):
    cert = sextic.admissibility
    assert cert.admissible and not cert.determinant.contains(0)


def test_powers_not_admissible(sextic_field):
    a = sextic_field.gen
    system = isolate_roots(sextic_field)
    cert = check_admissible(system, [a, a * a])
    assert not cert.admissible and cert.dependency == (2, -1)


def test_large_dependency_found_numerically(sextic_field):
    a = sextic_field.gen
    b = 1 - a
    system = isolate_roots(sextic_field)
    cert = check_admissible(system, [a ** 3 * b, a ** 6 * b ** 2])
    assert not cert.admissible
    m = cert.dependency
    assert m is not None and any(abs(x) > 1 for x in m)


def test_find_exact_dependency_none_for_independent(sextic_field):
    a = sextic_field.gen
    assert find_exact_dependency([a, 1 - a]) is None


def test_rank_mismatch():
    with pytest.raises(OTPreconditionError, match="rank"):
        make_data(SEXTIC, [[0, 1]])


def test_not_ot_signature():
    with pytest.raises(OTPreconditionError):
        make_data([-2, 0, 1], [[1, 1]])


def test_non_unit_rejected():
    with pytest.raises(OTPreconditionError, match="unit"):
        make_data(CUBIC, [[2, 1]])


def test_not_totally_positive_rejected():
    # -a is a unit with negative real embeddings
    with pytest.raises(OTPreconditionError, match="positive"):
        make_data(SEXTIC, [[0, -1], [1, -1]])


def test_interval_solve_singular():
    with pytest.raises(IntervalSingular):
        interval_solve([[arb(1), arb(2)], [arb(2), arb(4)]], [[arb(1)], [arb(1)]])


def test_interval_solve_small():
    x, det = interval_solve([[arb(2), arb(1)], [arb(1), arb(3)]], [[arb(3)], [arb(5)]])
    assert (x[0][0] * 2 + x[1][0] - 3).contains(0)
    assert (x[0][0] + x[1][0] * 3 - 5).contains(0)
    assert det.contains(5)


def test_generator_order_does_not_change_verdict_data():
    d1 = make_data(SEXTIC, [[0, 1], [1, -1]])
    d2 = make_data(SEXTIC, [[1, -1], [0, 1]])
    # B is intrinsic to the group
    for k in range(2):
        for i in range(2):
            assert d1.B[k][i].overlaps(d2.B[k][i])
