"""Independent reference implementations used only by the tests.

Everything here goes through sympy/mpmath or naive loops rather than the
package's own exact and ball arithmetic.
"""

from __future__ import annotations

from itertools import combinations

import mpmath
import sympy as sp

from otlab.embeddings import certify_relation

X = sp.Symbol("x")


def sympy_poly(coeffs):
    return sp.Poly(list(reversed(coeffs)), X)


def norm_by_resultant(f_coeffs, rep):
    """N(g(a)) = Res(f, g) for monic f."""
    f = sympy_poly(f_coeffs)
    g = sp.Poly(list(reversed([sp.Rational(c) for c in rep])) or [0], X)
    return sp.resultant(f.as_expr(), g.as_expr(), X)


def is_irreducible(f_coeffs) -> bool:
    _, factors = sympy_poly(f_coeffs).factor_list()
    return len(factors) == 1 and factors[0][1] == 1


def mp_roots(f_coeffs, dps=60):
    """Roots ordered like the package: reals ascending, then upper-half-plane
    representatives by (re, im), then their conjugates."""
    with mpmath.workdps(dps):
        roots = mpmath.polyroots(list(reversed(f_coeffs)), maxsteps=200, extraprec=4 * dps)
        tol = mpmath.mpf(10) ** (-dps // 2)
        reals = sorted(mpmath.re(r) for r in roots if abs(mpmath.im(r)) < tol)
        upper = sorted((r for r in roots if mpmath.im(r) > tol), key=lambda z: (mpmath.re(z), mpmath.im(z)))
        return [mpmath.mpc(r) for r in reals] + upper + [mpmath.conj(z) for z in upper]


def mp_embed(f_coeffs, rep, dps=60):
    with mpmath.workdps(dps):
        return [sum(mpmath.mpf(c) * z ** k for k, c in enumerate(rep)) for z in mp_roots(f_coeffs, dps)]


def brute_rho(data, k):
    """Naive nested loops over index tuples i1 < ... < ik + certify_relation."""
    n = data.n
    count = 0
    for idx in combinations(range(1, n + 1), k):
        e = [0] * n
        for i in idx:
            e[i - 1] = 1
        if certify_relation(data.system, data.generators, e).verified:
            count += 1
    return count


def brute_dolbeault(data, p, q):
    from math import comb
    s, t = data.s, data.t
    total = 0
    for i in range(q + 1):
        j = q - i
        cnt = 0
        for I in combinations(range(1, s + t + 1), p):
            for J in combinations(range(1, t + 1), j):
                e = [0] * data.n
                for a in I:
                    e[a - 1] += 1
                for b in J:
                    e[s + t + b - 1] += 1
                if certify_relation(data.system, data.generators, e).verified:
                    cnt += 1
        total += comb(s, i) * cnt
    return total


# ---------- coordinate model of the co-frame ----------

def coordinate_structure_equations(s: int, t: int):
    """Exterior derivatives of the co-frame computed in coordinates.

    Coordinates w_k = x_k + i y_k on the half planes and z_i on C; the
    co-frame is w_k -> dw_k / y_k and
    g_i -> prod_k y_k^(-b_ki/2) exp(-i c_ki log y_k) dz_i.
    Returns (symbols b, c, dict generator -> {(a, b): coefficient}) with the
    same generator indices and ordering as the package.
    """
    n = s + t
    y = sp.symbols(f"y1:{s + 1}", positive=True)
    b = [[sp.Symbol(f"b{k + 1}_{i + 1}", real=True) for i in range(t)] for k in range(s)]
    c = [[sp.Symbol(f"c{k + 1}_{i + 1}", real=True) for i in range(t)] for k in range(s)]
    # holomorphic 1-forms dw_k (index k), dz_i (index s+i); conjugates at +n.
    # A 1-form is {index: coefficient}; d of f*dxi is sum over y-derivatives
    # since the only non-constant coefficients depend on y.
    # dy_k = (dw_k - dwbar_k) / (2i)
    dy = [{k: 1 / (2 * sp.I), k + n: -1 / (2 * sp.I)} for k in range(s)]

    def d_function_times(f, idx):
        out = {}
        for k in range(s):
            df = sp.diff(f, y[k])
            if df == 0:
                continue
            for a, ca in dy[k].items():
                out[(a, idx)] = out.get((a, idx), 0) + df * ca
        return out

    # co-frame in terms of coordinate differentials: theta = phi * d(coord)
    phi = {}
    for k in range(s):
        phi[k] = 1 / y[k]
        phi[k + n] = 1 / y[k]
    for i in range(t):
        g = sp.Integer(1)
        for k in range(s):
            g *= y[k] ** (-b[k][i] / 2) * sp.exp(-sp.I * c[k][i] * sp.log(y[k]))
        phi[s + i] = g
        phi[s + i + n] = sp.conjugate(g)
    result = {}
    for idx in range(2 * n):
        raw = d_function_times(phi[idx], idx)
        # convert d(coord_a) ^ d(coord_b) into co-frame words
        conv = {}
        for (a, bb), v in raw.items():
            if a == bb:
                continue
            coef = sp.simplify(v / (phi[a] * phi[bb]))
            if a > bb:
                a, bb, coef = bb, a, -coef
            if coef != 0:
                conv[(a, bb)] = conv.get((a, bb), 0) + coef
        result[idx] = {key: sp.simplify(val) for key, val in conv.items() if sp.simplify(val) != 0}
    return b, c, result
