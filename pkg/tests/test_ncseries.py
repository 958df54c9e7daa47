from fractions import Fraction

import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st

from ncmeixner.ncseries import (
    DimensionError,
    NCSeries,
    NotInvertibleError,
    SeriesTuple,
    SubstitutionError,
    comp_inverse,
    compose,
    count_words,
    gradient,
    left_derive,
    mul,
    mul_inverse,
    parse_rational,
    star,
    words,
)

Z = sympy.symbols("z1:4", commutative=False)


def to_sympy(s: NCSeries):
    expr = sympy.Integer(0)
    for w, c in s.items():
        term = sympy.Rational(c.numerator, c.denominator)
        for i in w:
            term = term * Z[i - 1]
        expr += term
    return expr


def from_sympy(expr, n, order):
    out = {}
    for term in sympy.Add.make_args(sympy.expand(expr)):
        coeff, factors = term.args_cnc()
        c = sympy.Mul(*coeff)
        w = []
        for f in factors:
            base, exp = f.as_base_exp()
            w.extend([Z.index(base) + 1] * int(exp))
        if len(w) <= order:
            out[tuple(w)] = out.get(tuple(w), 0) + Fraction(int(c.p), int(c.q))
    return NCSeries(n, order, out)


small_q = st.fractions(min_value=-3, max_value=3, max_denominator=3)


@st.composite
def series(draw, n=2, order=4, const=True):
    ws = [w for w in words(n, order, 0 if const else 1)]
    chosen = draw(st.lists(st.sampled_from(ws), max_size=6, unique=True))
    return NCSeries(n, order, {w: draw(small_q) for w in chosen})


def test_words_graded_lex_and_count():
    ws = list(words(2, 2))
    assert ws == [(), (1,), (2,), (1, 1), (1, 2), (2, 1), (2, 2)]
    assert count_words(2, 3) == len(list(words(2, 3))) == 15


def test_words_min_len():
    assert list(words(2, 2, 2)) == [(1, 1), (1, 2), (2, 1), (2, 2)]


def test_constructor_drops_zero_and_over_order():
    s = NCSeries(2, 2, {(1,): 0, (1, 2): 3, (1, 1, 1): 5})
    assert s.support() == [(1, 2)]
    assert s[(1, 1, 1)] == 0


def test_constructor_rejects_bad_letters_and_floats():
    with pytest.raises(DimensionError):
        NCSeries(2, 3, {(3,): 1})
    with pytest.raises(TypeError):
        NCSeries(1, 3, {(1,): 0.5})


def test_noncommutativity():
    z1, z2 = NCSeries.var(1, 2, 3), NCSeries.var(2, 2, 3)
    assert z1 * z2 != z2 * z1
    assert (z1 * z2)[(1, 2)] == 1
    assert (z1 * z2)[(2, 1)] == 0


def test_mul_truncates():
    z = NCSeries.var(1, 1, 2)
    assert (z * z * z).is_zero()


def test_mismatched_orders_raise():
    with pytest.raises(DimensionError):
        NCSeries.var(1, 1, 2) + NCSeries.var(1, 1, 3)
    with pytest.raises(DimensionError):
        NCSeries.var(1, 1, 2) * NCSeries.var(1, 2, 2)


@given(series(), series())
def test_mul_matches_sympy(a, b):
    expected = from_sympy(to_sympy(a) * to_sympy(b), 2, 4)
    assert mul(a, b) == expected


@given(series(), series(), series())
def test_mul_associative(a, b, c):
    assert (a * b) * c == a * (b * c)


@given(series(), series())
def test_star_antihomomorphism(a, b):
    assert star(a * b) == star(b) * star(a)


@given(series(const=False))
def test_mul_inverse(a):
    u = a + 1
    assert u * mul_inverse(u) == NCSeries.one(2, 4)
    assert mul_inverse(u) * u == NCSeries.one(2, 4)


def test_mul_inverse_needs_constant():
    with pytest.raises(NotInvertibleError):
        mul_inverse(NCSeries.var(1, 1, 3))


def test_comp_inverse_one_variable_catalan():
    # inverse of z + z^2 is sum (-1)^k Catalan(k) z^{k+1}
    u = SeriesTuple([NCSeries(1, 5, {(1,): 1, (1, 1): 1})])
    w = comp_inverse(u)[1]
    assert [w[(1,) * k] for k in range(1, 6)] == [1, -1, 2, -5, 14]


@given(st.data())
def test_comp_inverse_two_sided(data):
    order = 4
    comps = []
    for i in (1, 2):
        h = data.draw(series(2, order, const=False))
        h = h - h.degree_part(1)
        comps.append(NCSeries.var(i, 2, order) + h)
    u = SeriesTuple(comps)
    w = comp_inverse(u)
    ident = SeriesTuple.identity(2, order)
    assert u.then(w) == ident
    assert w.then(u) == ident


def test_comp_inverse_rejects_nonidentity_linear_part():
    u = SeriesTuple([NCSeries(1, 3, {(1,): 2})])
    with pytest.raises(NotInvertibleError):
        comp_inverse(u)


@given(series(), series(const=False), series(const=False))
def test_compose_matches_sympy(a, v1, v2):
    v = SeriesTuple([v1, v2])
    expr = to_sympy(a).subs({Z[0]: to_sympy(v1), Z[1]: to_sympy(v2)}, simultaneous=True)
    assert compose(a, v) == from_sympy(expr, 2, 4)


def test_compose_rejects_constant_terms():
    with pytest.raises(SubstitutionError):
        SeriesTuple([NCSeries(1, 2, {(): 1, (1,): 1})])


def test_left_derive():
    s = NCSeries(2, 3, {(1,): 2, (1, 2): 3, (2, 1): 5, (1, 1, 2): 7})
    d = left_derive(1, s)
    assert d.order == 2
    assert d == NCSeries(2, 2, {(): 2, (2,): 3, (1, 2): 7})
    g = gradient(s - s.degree_part(1))
    assert g[1] == NCSeries(2, 2, {(2,): 3, (1, 2): 7})
    assert g[2] == NCSeries(2, 2, {(1,): 5})


def test_json_roundtrip_and_canonical_strings():
    s = NCSeries(2, 3, {(2, 1): Fraction(-3, 4), (1,): 2})
    obj = s.to_json()
    assert obj["terms"] == [{"word": [1], "coeff": "2"}, {"word": [2, 1], "coeff": "-3/4"}]
    assert NCSeries.from_json(obj) == s


def test_parse_rational():
    assert parse_rational("6/8") == Fraction(3, 4)
    assert parse_rational(-2) == -2
    for bad in ("0.5", "1e3", "x", 0.5, True):
        with pytest.raises(ValueError):
            parse_rational(bad)


def test_truncate_raise_pads_as_polynomial():
    s = NCSeries(1, 2, {(1, 1): 1})
    assert s.truncate(4)[(1, 1)] == 1
    assert s.truncate(1).is_zero()
