import random
from fractions import Fraction

import pytest
import sympy as sp
from hypothesis import given, strategies as st

from otlab.dga import (
    DGAConsistencyError,
    FormAlgebra,
    balanced_obstruction,
    hermitian_two_form,
    interleaved_monomial,
    lcb_form,
    lee_form,
    obstruction_formula,
    pluriclosed_metric_form,
    pluriclosed_obstruction,
    rational_structure,
    symbolic_structure,
    verify_lcb,
)

from oracles import coordinate_structure_equations

SHAPES = [(s, t) for s in (1, 2, 3) for t in (1, 2, 3)]


def _to_sympy(alg, c, symbols):
    expr = c.as_expr()
    return expr.subs({sp.Symbol(name): symbols[name] for name in symbols if sp.Symbol(name) in expr.free_symbols})


@pytest.mark.parametrize("s,t", [(1, 1), (2, 1), (1, 2)])
def test_structure_equations_match_coordinates(s, t):
    b, c, ref = coordinate_structure_equations(s, t)
    symbols = {str(x): x for row in b + c for x in row}
    sc = symbolic_structure(s, t, row_sums=False)
    alg = sc.algebra
    for idx in range(2 * alg.n):
        got = sc.d_generator(idx)
        assert set(got.terms) == set(ref[idx])
        for word, coef in got.terms.items():
            assert sp.simplify(_to_sympy(alg, coef, symbols) - ref[idx][word]) == 0


def test_d_omega():
    sc = symbolic_structure(2, 2)
    alg = sc.algebra
    assert alg.word(0).d(sc).render() == "(i/2) w1^cw1"
    assert alg.scalar(1).d(sc).is_zero()
    assert alg.word(0, alg.bar(0)).d(sc).is_zero()


@pytest.mark.parametrize("s,t", SHAPES)
def test_d_of_gamma_volume(s, t):
    sc = symbolic_structure(s, t)
    alg = sc.algebra
    letters = []
    for i in range(t):
        letters += [alg.g(i), alg.bar(alg.g(i))]
    vol = alg.word(*letters)
    theta = alg.form([((alg.w(k),), (0, Fraction(-1, 2))) for k in range(s)]
                     + [((alg.bar(alg.w(k)),), (0, Fraction(1, 2))) for k in range(s)])
    assert vol.d(sc) == theta.wedge(vol)


@pytest.mark.parametrize("s,t", SHAPES)
def test_d_squared_on_generators(s, t):
    sc = symbolic_structure(s, t)
    for g in range(2 * sc.algebra.n):
        assert sc.algebra.word(g).d(sc).d(sc).is_zero()


def _random_sc(rng, s, t):
    B = []
    for _ in range(s):
        row = [Fraction(rng.randint(-6, 6), rng.randint(1, 4)) for _ in range(t - 1)]
        row.append(-1 - sum(row, Fraction(0)))
        B.append(row)
    C = [[Fraction(rng.randint(-6, 6), rng.randint(1, 4)) for _ in range(t)] for _ in range(s)]
    return rational_structure(B, C)


seeds = st.integers(0, 2 ** 32 - 1)
shapes = st.sampled_from([(1, 1), (2, 1), (1, 2), (2, 2)])


@given(seeds, shapes)
def test_d_squared_random_forms(seed, shape):
    rng = random.Random(seed)
    sc = _random_sc(rng, *shape)
    x = sc.algebra.random_form(rng)
    assert x.d(sc).d(sc).is_zero()


@given(seeds, shapes)
def test_leibniz(seed, shape):
    rng = random.Random(seed)
    sc = _random_sc(rng, *shape)
    alg = sc.algebra
    k = rng.randint(0, 3)
    x = alg.random_form(rng, degree=k)
    y = alg.random_form(rng)
    sign = -1 if k % 2 else 1
    assert x.wedge(y).d(sc) == x.d(sc).wedge(y) + x.wedge(y.d(sc)).scale(sign)


@given(seeds, shapes)
def test_conjugation_commutes_with_d(seed, shape):
    rng = random.Random(seed)
    sc = _random_sc(rng, *shape)
    x = sc.algebra.random_form(rng)
    assert x.conj().d(sc) == x.d(sc).conj()


@given(seeds, shapes)
def test_d_splits_into_bidegrees(seed, shape):
    rng = random.Random(seed)
    sc = _random_sc(rng, *shape)
    x = sc.algebra.random_form(rng)
    assert x.partial(sc) + x.partial_bar(sc) == x.d(sc)


@given(seeds, shapes)
def test_ddc_is_minus_2i_del_delbar(seed, shape):
    rng = random.Random(seed)
    sc = _random_sc(rng, *shape)
    x = sc.algebra.random_form(rng, degree=2)
    ddc = x.dc(sc).d(sc)
    ddbar = x.partial_bar(sc).partial(sc)
    # del delbar = (i/2) dd^c
    assert ddbar == ddc.scale((0, Fraction(1, 2)))


def test_dc_of_constant():
    sc = symbolic_structure(1, 1)
    assert sc.algebra.scalar(3).dc(sc).is_zero()


def test_J_inverse():
    rng = random.Random(3)
    sc = _random_sc(rng, 2, 2)
    x = sc.algebra.random_form(rng)
    assert x.J().J_inv() == x


@pytest.mark.parametrize("s", [1, 2, 3])
def test_pluriclosed_metric_closed_when_b_is_minus_identity(s):
    B = [[-1 if i == k else 0 for i in range(s)] for k in range(s)]
    sc = rational_structure(B, [[Fraction(k + i, 3) for i in range(s)] for k in range(s)])
    omega = pluriclosed_metric_form(sc.algebra)
    assert omega.dc(sc).d(sc).is_zero()


def test_pluriclosed_metric_not_closed_otherwise():
    sc = rational_structure([[Fraction(-1, 2), Fraction(-1, 2)]])
    assert not pluriclosed_metric_form(sc.algebra).dc(sc).d(sc).is_zero()


def test_obstruction_single_entry():
    # b = -1/2 (t = 2 keeps row sum -1), a = 1: -(1/2)(-1/2)(1/2) = 1/8
    sc = rational_structure([[Fraction(-1, 2), Fraction(-1, 2)]])
    n = 3
    eye = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    obs = pluriclosed_obstruction(sc, eye)
    assert obs.expansion[0][0] == sc.algebra.coerce(Fraction(1, 8))


def test_obstruction_minus_identity_vanishes():
    sc = rational_structure([[-1, 0], [0, -1]])
    a = [[Fraction(i + 1) if i == j else 0 for j in range(4)] for i in range(4)]
    assert pluriclosed_obstruction(sc, a).vanishes()


@given(seeds, st.sampled_from([(1, 2), (2, 2), (2, 1), (3, 2)]))
def test_obstruction_formula_equals_expansion(seed, shape):
    rng = random.Random(seed)
    sc = _random_sc(rng, *shape)
    n = sum(shape)
    a = [[(Fraction(rng.randint(-3, 3)), Fraction(rng.randint(-3, 3))) for _ in range(n)] for _ in range(n)]
    for i in range(n):
        a[i][i] = Fraction(rng.randint(1, 5))
    obs = pluriclosed_obstruction(sc, a)
    assert obs.agree


@given(seeds)
def test_obstruction_independent_of_c(seed):
    rng = random.Random(seed)
    B = [[Fraction(rng.randint(-4, 4), 2), None] for _ in range(2)]
    for row in B:
        row[1] = -1 - row[0]
    eye = [[1 if i == j else 0 for j in range(4)] for i in range(4)]
    r1 = pluriclosed_obstruction(rational_structure(B, [[rng.randint(-5, 5) for _ in range(2)] for _ in range(2)]), eye)
    r2 = pluriclosed_obstruction(rational_structure(B, [[rng.randint(-5, 5) for _ in range(2)] for _ in range(2)]), eye)
    assert [[str(c) for c in row] for row in r1.expansion] == [[str(c) for c in row] for row in r2.expansion]


def test_obstruction_symbolic_in_b():
    sc = symbolic_structure(2, 2, extra_atoms=["a3", "a4"])
    alg = sc.algebra
    a = [[0] * 4 for _ in range(4)]
    a[0][0] = a[1][1] = 1
    a[2][2], a[3][3] = alg.atoms["a3"], alg.atoms["a4"]
    obs = pluriclosed_obstruction(sc, a)
    assert obs.expansion == obstruction_formula(sc, [a[2][2], a[3][3]])


def test_obstruction_zero_grid_sweep():
    # (s, t) = (2, 2): rows from {0, -1}^2 with row sum -1, against non-grid rows
    grid_rows = [[0, -1], [-1, 0]]
    off_rows = [[Fraction(-1, 2), Fraction(-1, 2)], [Fraction(1, 2), Fraction(-3, 2)], [1, -2]]
    eye = [[1 if i == j else 0 for j in range(4)] for i in range(4)]
    for r1 in grid_rows + off_rows:
        for r2 in grid_rows + off_rows:
            obs = pluriclosed_obstruction(rational_structure([r1, r2]), eye)
            on_grid = r1 in grid_rows and r2 in grid_rows
            assert obs.vanishes() == on_grid


@pytest.mark.parametrize("s,t", SHAPES)
def test_balanced_m_coefficient_sign(s, t):
    sc = symbolic_structure(s, t)
    n = s + t
    eye = [[1 if i == j else 0 for j in range(n)] for i in range(n)]
    obs = balanced_obstruction(sc, eye)
    half_i = sc.algebra.I / 2
    assert all(c == half_i for c in obs.m)
    assert all(c == -half_i for c in obs.m_bar)


def test_balanced_zero_diagonal_entry():
    sc = symbolic_structure(1, 1)
    obs = balanced_obstruction(sc, [[0, 0], [0, 1]])
    assert not obs.m[0]


def test_balanced_general_matrix():
    sc = symbolic_structure(2, 1, extra_atoms=[f"a{i}{j}" for i in range(3) for j in range(3)])
    alg = sc.algebra
    a = [[alg.atoms[f"a{i}{j}"] for j in range(3)] for i in range(3)]
    obs = balanced_obstruction(sc, a)
    assert obs.m[1] == alg.I / 2 * a[1][1]


def test_interleaved_monomial():
    alg = FormAlgebra(1, 1)
    assert interleaved_monomial(alg, 0, 0) == (1, 3)
    assert interleaved_monomial(alg, 0, None) == (2, 1, 3)


@pytest.mark.parametrize("s,t", SHAPES)
def test_lcb_identity(s, t):
    check = verify_lcb(symbolic_structure(s, t))
    assert check.ok and check.residual.is_zero() and check.d_theta.is_zero()


@given(seeds, st.sampled_from(SHAPES))
def test_lcb_identity_random_rational(seed, shape):
    rng = random.Random(seed)
    assert verify_lcb(_random_sc(rng, *shape)).ok


def test_lcb_perturbed_lee_form_fails():
    sc = symbolic_structure(2, 2)
    bad = verify_lcb(sc, lee_coefficient=(0, Fraction(-1, 3)))
    assert not bad.ok and not bad.residual.is_zero()
    flipped = verify_lcb(sc, lee_coefficient=(0, Fraction(1, 2)))
    assert not flipped.ok


def test_lee_form_real_and_closed():
    sc = symbolic_structure(2, 1)
    theta = lee_form(sc.algebra)
    assert theta.conj() == theta
    assert theta.d(sc).is_zero()


def test_lcb_form_is_real():
    alg = FormAlgebra(2, 2)
    assert lcb_form(alg).conj() == lcb_form(alg)


def test_hermitian_form_real():
    alg = FormAlgebra(1, 1)
    omega = hermitian_two_form(alg, [[2, (1, 1)], [(1, -1), 3]])
    assert omega.conj() == omega


def test_render_zero_and_text():
    alg = FormAlgebra(1, 1)
    assert alg.form([]).render() == "0"
    assert "w1^g1" in alg.word(1, 0).render()


def test_consistency_error_type():
    assert issubclass(DGAConsistencyError, AssertionError)
