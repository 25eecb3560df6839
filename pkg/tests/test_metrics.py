from fractions import Fraction

import pytest

from otlab.balls import upper
from otlab.metrics import (
    DimensionError,
    InconsistencyError,
    classify,
    classify_dim4,
    corollary_gate,
    decide_balanced,
    decide_lck,
    decide_pluriclosed,
    lcb_exponents,
    lcb_metric,
    pluriclosed_obstruction_values,
)

from conftest import CUBIC, SEXTIC, make_data

FIXTURES = ["sextic", "cubic", "septic", "sextic_alt"]


def test_sextic_verdicts(sextic):
    assert not decide_lck(sextic).exists
    plc = decide_pluriclosed(sextic)
    assert plc.exists
    assert plc.witness == {"permutation": [2, 1]}
    assert all(c.verified for c in plc.certification)
    assert not decide_balanced(sextic).exists
    assert lcb_metric(sextic).exists


def test_cubic_verdicts(cubic):
    assert decide_lck(cubic).exists
    plc = decide_pluriclosed(cubic)
    assert plc.exists and plc.witness == {"permutation": [1]}
    assert not decide_balanced(cubic).exists


def test_s_not_t_is_not_pluriclosed(septic):
    v = decide_pluriclosed(septic)
    assert not v.exists and not v.certification


def test_type_s1_is_lck(cubic):
    assert decide_lck(cubic).exists


def test_alt_group_not_pluriclosed(sextic_alt):
    assert not decide_pluriclosed(sextic_alt).exists


@pytest.mark.parametrize("name", FIXTURES)
def test_constant_verdicts(request, name):
    data = request.getfixturevalue(name)
    out = classify(data)
    assert not out.balanced.exists
    assert out.lcb.exists


@pytest.mark.parametrize("name", FIXTURES)
def test_pluriclosed_iff_obstruction_vanishes(request, name):
    data = request.getfixturevalue(name)
    if data.s != data.t:
        return
    vanishes = all(v.real.contains(0) and v.imag.contains(0)
                   for row in pluriclosed_obstruction_values(data) for v in row)
    assert vanishes == decide_pluriclosed(data).exists


def test_pluriclosed_implies_minus_permutation(sextic):
    perm = decide_pluriclosed(sextic).witness["permutation"]
    for k in range(2):
        for i in range(2):
            target = -1 if perm[i] == k + 1 else 0
            assert sextic.B[k][i].contains(target)


def test_lcb_exponents_reduce_to_im_w(sextic):
    perm = decide_pluriclosed(sextic).witness["permutation"]
    E = lcb_exponents(sextic)
    for i in range(2):
        for k in range(2):
            assert E[k][i].contains(1 if perm[i] == k + 1 else 0)


def test_lee_form_has_s_components(sextic):
    lee = lcb_metric(sextic).witness["lee_form"]
    omega_parts = [x for x in lee if x["generator"].startswith("w")]
    assert len(omega_parts) == sextic.s
    assert all(x["coefficient"] in ("1/(2i)", "-1/(2i)") for x in lee)


def test_balanced_witness_values(sextic):
    w = decide_balanced(sextic).witness
    for c in w["m_coefficients"]:
        assert c["im"]["value"].startswith("5.0")


def test_corollary_gate():
    corollary_gate(1, 1, True, True)
    corollary_gate(2, 2, False, True)
    with pytest.raises(InconsistencyError):
        corollary_gate(2, 2, True, True)


def test_classify_gate_on_fixtures(cubic, sextic):
    c = classify(cubic)
    assert c.lck.exists and c.pluriclosed.exists
    s = classify(sextic)
    assert s.pluriclosed.exists and not s.lck.exists


def test_dim4_sextic(sextic):
    assert classify_dim4(sextic) == {"pluriclosed": True, "b3": 2, "h21": 2, "equivalent": True}


def test_dim4_type_1_3(septic):
    out = classify_dim4(septic)
    assert out["pluriclosed"] is False
    assert out["b3"] != 2 and out["h21"] != 2 and out["equivalent"]


def test_dim4_non_pluriclosed_2_2(sextic_alt):
    out = classify_dim4(sextic_alt)
    assert not out["pluriclosed"] and out["equivalent"]


def test_dim4_wrong_dimension(cubic):
    with pytest.raises(DimensionError):
        classify_dim4(cubic)


def test_verdicts_invariant_under_generator_permutation():
    d1 = make_data(SEXTIC, [[0, 1], [1, -1]])
    d2 = make_data(SEXTIC, [[1, -1], [0, 1]])
    v1 = [v.exists for v in classify(d1).verdicts()]
    v2 = [v.exists for v in classify(d2).verdicts()]
    assert v1 == v2
    assert decide_pluriclosed(d1).witness == decide_pluriclosed(d2).witness


def test_verdicts_invariant_under_branch():
    d1 = make_data(SEXTIC, [[0, 1], [1, -1]])
    d2 = make_data(SEXTIC, [[0, 1], [1, -1]], branch=[[1, 0], [0, -2]])
    assert [v.exists for v in classify(d1).verdicts()] == [v.exists for v in classify(d2).verdicts()]


def test_lck_routes_agree(sextic, septic):
    # decide_lck raises on disagreement between relations and B columns
    for data in (sextic, septic):
        v = decide_lck(data)
        assert len(v.certification) == data.t * (data.t - 1) // 2


def test_screen_tolerance(cubic):
    assert upper(abs(cubic.B[0][0] + 1)) < Fraction(1, 2 ** (cubic.precision // 4))
