"""Property tests for the mantissa/exponent complex representation."""

import math

import pytest
from hypothesis import given, strategies as st

from cylbem.scaled import ScaledComplex

finite = st.floats(min_value=-1e150, max_value=1e150, allow_nan=False,
                   allow_infinity=False)
nonzero = finite.filter(lambda x: abs(x) > 1e-150)


def _sc(re, im):
    return ScaledComplex.from_complex(complex(re, im))


@given(nonzero, finite)
def test_normalization_invariant(re, im):
    s = _sc(re, im)
    assert 0.5 <= abs(s.mantissa) < 2.0
    # round trip exact relative to the complex modulus (a component可
    # smaller than modulus * 2^-1074 may land subnormal and lose bits)
    want = complex(re, im)
    assert abs(s.to_complex() - want) <= 4 * 2.0**-52 * abs(want)


@given(nonzero, finite, nonzero, finite)
def test_product_matches_plain_complex(ar, ai, br, bi):
    a, b = complex(ar, ai), complex(br, bi)
    got = (_sc(ar, ai) * _sc(br, bi)).to_complex()
    want = a * b
    assert abs(got - want) <= 4 * 2.0**-52 * abs(want)


@given(nonzero, finite, nonzero, finite)
def test_sum_matches_plain_complex(ar, ai, br, bi):
    a, b = complex(ar, ai), complex(br, bi)
    want = a + b
    got = (_sc(ar, ai) + _sc(br, bi)).to_complex()
    if want == 0:
        assert abs(got) <= 4 * 2.0**-52 * max(abs(a), abs(b))
    else:
        assert abs(got - want) <= 4 * 2.0**-52 * max(abs(a), abs(b))


@given(nonzero, finite, nonzero, finite)
def test_division_inverts_product(ar, ai, br, bi):
    a = _sc(ar, ai)
    b = _sc(br, bi)
    back = (a * b) / b
    rel = ((back - a) / a).magnitude()
    assert rel <= 1e-14


def test_huge_exponents_do_not_overflow():
    a = ScaledComplex(1.0 + 0.0j, 5000)
    b = ScaledComplex(1.5 + 0.5j, -4000)
    p = a * b
    assert p.exp2 > 900
    assert 0.5 <= abs(p.mantissa) < 2.0
    # collapsing an out-of-range value saturates instead of raising
    assert math.isinf(ScaledComplex(1.0 + 0j, 20000).to_complex().real)
    assert ScaledComplex(1.0 + 0j, -20000).to_complex() == 0


def test_add_with_disparate_scales_keeps_larger():
    big = ScaledComplex(1.0 + 0j, 400)
    small = ScaledComplex(1.0 + 0j, 0)
    assert (big + small).to_complex() == big.to_complex()
    assert (small + big).to_complex() == big.to_complex()


def test_zero_handling():
    z = ScaledComplex.zero()
    a = _sc(3.0, -4.0)
    assert (z + a).to_complex() == a.to_complex()
    assert (a * z).is_zero()
    assert z.magnitude() == 0.0
