import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from coinforge import gf2k
from coinforge.errors import ParameterError


def test_smallest_irreducibles():
    assert gf2k.find_irreducible(1).modulus == 0b10
    assert gf2k.find_irreducible(2).modulus == 0b111
    assert gf2k.find_irreducible(3).modulus == 0b1011
    assert gf2k.find_irreducible(8).modulus == 0x11B


@pytest.mark.parametrize("q", [0, 33, -1])
def test_find_irreducible_range(q):
    with pytest.raises(ParameterError):
        gf2k.find_irreducible(q)


def test_modulus_of_every_supported_degree_is_irreducible():
    for q in (5, 13, 16, 24, 32):
        spec = gf2k.find_irreducible(q)
        assert spec.modulus.bit_length() - 1 == q
        assert gf2k.is_irreducible(spec.modulus)


def test_reducible_modulus_rejected():
    with pytest.raises(ParameterError):
        gf2k.FieldSpec(2, 0b101)  # x^2 + 1 = (x + 1)^2


def test_gf4_examples():
    f = gf2k.find_irreducible(2)
    assert f.mul(0b10, 0b11) == 1
    assert f.inv(0b10) == 0b11
    assert gf2k.field_ops(f, "mul", 0b10, 0b11) == 1
    assert gf2k.field_ops(f, "inv", 0b10, 0) == 0b11
    for a in range(4):
        assert f.add(a, a) == 0


def test_inverse_of_zero():
    with pytest.raises(ZeroDivisionError):
        gf2k.find_irreducible(4).inv(0)


def test_element_range_checked():
    with pytest.raises(ParameterError):
        gf2k.find_irreducible(2).mul(4, 1)


@pytest.mark.parametrize("q", range(1, 9))
def test_field_axioms_random(q):
    f = gf2k.find_irreducible(q)
    rng = random.Random(q)
    for _ in range(10_000):
        a, b, c = (rng.randrange(f.size) for _ in range(3))
        assert f.mul(f.mul(a, b), c) == f.mul(a, f.mul(b, c))
        assert f.mul(a, f.add(b, c)) == f.add(f.mul(a, b), f.mul(a, c))
        assert f.add(a, a) == 0


@pytest.mark.parametrize("q", range(1, 9))
def test_fermat(q):
    f = gf2k.find_irreducible(q)
    for a in range(1, f.size):
        assert f.pow(a, f.size - 1) == 1
        assert f.mul(a, f.inv(a)) == 1


@given(st.integers(1, 16), st.data())
@settings(max_examples=200, deadline=None)
def test_vectorized_product_matches_scalar(q, data):
    f = gf2k.find_irreducible(q)
    a = data.draw(st.lists(st.integers(0, f.size - 1), min_size=1, max_size=20))
    b = data.draw(st.lists(st.integers(0, f.size - 1), min_size=len(a), max_size=len(a)))
    assert f.mul_array(a, b).tolist() == [f.mul(x, y) for x, y in zip(a, b)]


def test_interpolation_examples():
    f = gf2k.find_irreducible(2)
    assert gf2k.interpolate(f, [(0, 0), (1, 1)]).coeffs == (0, 1)
    assert gf2k.interpolate(f, [(3, 2)]).coeffs == (2,)
    # slope x through the origin
    assert gf2k.interpolate(f, [(0, 0), (1, 0b10)]).coeffs == (0, 0b10)


def test_interpolation_duplicate_abscissa():
    f = gf2k.find_irreducible(3)
    with pytest.raises(ParameterError):
        gf2k.interpolate(f, [(1, 2), (1, 3)])


@pytest.mark.parametrize("q", [1, 2, 3])
def test_interpolation_round_trip_exhaustive(q):
    f = gf2k.find_irreducible(q)
    for k in range(1, min(3, f.size) + 1):
        for xs in itertools.combinations(range(f.size), k):
            for ys in itertools.product(range(f.size), repeat=k):
                P = gf2k.interpolate(f, zip(xs, ys))
                assert P.degree < k
                assert [gf2k.evaluate(P, x) for x in xs] == list(ys)


@pytest.mark.parametrize("q", [1, 2, 3])
def test_low_degree_polynomials_agree_rarely(q):
    f = gf2k.find_irreducible(q)
    for ell in (1, 2, 3):
        polys = [gf2k.FieldPoly(f, c) for c in itertools.product(range(f.size), repeat=ell)]
        values = [tuple(P(y) for y in range(f.size)) for P in polys]
        for u, v in itertools.combinations(values, 2):
            assert sum(a == b for a, b in zip(u, v)) <= ell - 1


def test_lagrange_basis_values():
    f = gf2k.find_irreducible(3)
    L = gf2k.lagrange_basis_values(f, [0, 1, 2], range(8))
    for t in range(3):
        assert [L[t][x] for x in (0, 1, 2)] == [int(t == s) for s in range(3)]
