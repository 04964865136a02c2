import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quadfree.errors import NotIntersective, NotIrrational
from quadfree.polycore import (
    AuxiliaryFamily,
    DoubleRoot,
    Factored,
    Irrational,
    QuadraticPoly,
    auxiliary_poly,
    content,
    factor_over_rationals,
    has_root_mod,
    is_intersective,
    root_system,
    roots_mod,
    witness_prime,
)

P = QuadraticPoly


def test_parse_and_text():
    f = P.parse("6, 5, 1")
    assert f == P(6, 5, 1)
    assert f.text() == "6,5,1"
    assert str(P(1, -5, 0)) == "x^2 - 5x"
    with pytest.raises(ValueError):
        P(0, 1, 1)


def test_factor_examples():
    assert isinstance(factor_over_rationals(P(1, 0, 1)), Irrational)
    assert factor_over_rationals(P(2, 3, 1)) == Factored(a=1, alpha=1, beta=1, gamma=2, lam=1)
    assert isinstance(factor_over_rationals(P(1, 0, -2)), Irrational)
    assert factor_over_rationals(P(4, 4, 1)) == DoubleRoot(a=4, root=Fraction(-1, 2))


@given(st.integers(-30, 30).filter(bool), st.integers(-30, 30), st.integers(-30, 30))
def test_factored_form_reproduces(a2, a1, a0):
    f = P(a2, a1, a0)
    form = factor_over_rationals(f)
    if isinstance(form, Factored):
        a, al, be, ga, la = form.a, form.alpha, form.beta, form.gamma, form.lam
        assert math.gcd(al, be) == 1 and math.gcd(ga, la) == 1
        assert (a * al * ga, a * (al * la + be * ga), a * be * la) == f.coefficients
    elif isinstance(form, DoubleRoot):
        assert f.discriminant == 0 and f.a2 == form.a
    else:
        assert math.isqrt(max(f.discriminant, 0)) ** 2 != f.discriminant or f.discriminant < 0


def test_intersective_examples():
    assert is_intersective(P(1, 0, 0))
    assert is_intersective(P(6, 5, 1))
    res = is_intersective(P(8, 6, 1))
    assert not res and res.witness == 2
    res = is_intersective(P(1, 0, 1))
    assert not res and res.witness == 3


def test_witness_prime_examples():
    assert witness_prime(P(1, 0, -2)) == 2
    assert witness_prime(P(1, 0, 1)) == 3
    assert witness_prime(P(1, 1, 1)) == 3
    with pytest.raises(NotIrrational):
        witness_prime(P(1, 0, -1))


@settings(max_examples=80, deadline=None)
@given(st.integers(-20, 20).filter(bool), st.integers(-20, 20), st.integers(-20, 20))
def test_decision_is_sound(a2, a1, a0):
    f = P(a2, a1, a0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = is_intersective(f)
    if res:
        assert all(has_root_mod(f, q) for q in range(1, 200))
    elif res.witness is not None:
        assert not has_root_mod(f, res.witness)


def test_root_system_examples():
    assert all(root_system(P(1, 1, 0), d) == 0 for d in range(1, 50))
    assert root_system(P(1, 0, -1), 2) == -1
    assert root_system(P(6, 5, 1), 1) == 0


def test_auxiliary_examples():
    f = P(6, 5, 1)
    assert auxiliary_poly(f, 1) == f
    assert auxiliary_poly(P(1, 1, 0), 2) == P(2, 1, 0)
    assert all(auxiliary_poly(P(3, -30, 75), d) == P(3, 0, 0) for d in (1, 2, 7, 30))


def test_not_intersective_family():
    with pytest.raises(NotIntersective):
        AuxiliaryFamily(P(8, 6, 1))


def test_content_examples():
    assert content(P(2, 1, 0)) == 1
    assert content(P(4, 6, 3)) == 2
    assert content(P(1, 0, 0)) == 1


def test_coherence_and_auxiliary_roots(corpus):
    for f in corpus:
        fam = AuxiliaryFamily(f)
        for d in range(1, 121):
            r = fam.root(d)
            assert -d < r <= 0 and f(r) % d == 0
            for s in range(1, d + 1):
                if d % s == 0:
                    assert (r - fam.root(s)) % s == 0
            g = fam.poly(d)
            if not fam.double_root:
                assert g.a2 == d * f.a2
                # f_d(x) = f(r_d + d x) / d on a few points
                for x in (-2, 0, 3):
                    assert d * g(x) == f(r + d * x)
            assert content(g) <= fam.content_bound()
        for d in (1, 6, 30, 97):
            g = fam.poly(d)
            assert all(has_root_mod(g, q) for q in range(1, 61))


def test_double_root_content(corpus):
    for f in corpus:
        fam = AuxiliaryFamily(f)
        if fam.double_root:
            assert {content(fam.poly(d)) for d in range(1, 40)} == {f.a2}


def test_derivative_congruence(corpus):
    # p^k | d and p^k | f'(r_d) force p^k | a * resultant (a is the content factor)
    for f in corpus:
        fam = AuxiliaryFamily(f)
        if fam.double_root:
            continue
        res = fam.form.a * fam.form.resultant
        for d in range(2, 200):
            g = math.gcd(d, f.derivative_at(fam.root(d)))
            assert res % g == 0


def test_roots_mod_matches_loop():
    f = P(5, 7, -6)
    for q in (1, 7, 12, 25):
        expect = [x for x in range(q) if f(x) % q == 0]
        assert roots_mod(f, q).tolist() == expect


def test_scaled_polynomial_keeps_content_factor():
    form = factor_over_rationals(P(6, 4, -2))
    assert isinstance(form, Factored) and form.a == 2


def test_derivative_congruence_needs_content_factor():
    # 6x^2 + 3x = 3x(2x + 1): resultant 1, yet 3 divides both d = 3 and f'(r_3)
    f = P(6, 3, 0)
    fam = AuxiliaryFamily(f)
    assert fam.form.resultant == 1
    assert math.gcd(3, f.derivative_at(fam.root(3))) == 3
