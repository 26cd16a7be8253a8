import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from magnetic_gaps.poly import (
    is_homogeneous,
    mul_monomial,
    poly_curl,
    poly_degree,
    poly_diff,
    poly_eval,
    poly_max_on_circle,
)


def test_eval_and_degree():
    p = {(2, 0): 1.0, (0, 2): 3.0}
    assert poly_degree(p) == 2
    assert poly_eval(p, 2.0, 1.0) == 4.0 + 3.0
    out = poly_eval(p, np.array([1.0, 2.0]), np.array([0.0, 1.0]))
    assert np.allclose(out, [1.0, 7.0])


def test_diff_exact():
    p = {(3, 1): 2.0}
    assert poly_diff(p, 0) == {(2, 1): 6.0}
    assert poly_diff(p, 1) == {(3, 0): 2.0}
    assert poly_diff({(0, 0): 5.0}, 0) == {}


def test_curl_of_gradient_vanishes():
    chi = {(2, 2): 1.7, (4, 0): -0.3}
    g1, g2 = poly_diff(chi, 0), poly_diff(chi, 1)
    curl = poly_curl(g1, g2)
    assert all(abs(c) < 1e-14 for c in curl.values())


def test_homogeneity_and_monomial_shift():
    p = {(2, 0): 1.0, (0, 2): 1.0}
    assert is_homogeneous(p, 2)
    q = mul_monomial(p, 0, 1, -0.25)
    assert q == {(2, 1): -0.25, (0, 3): -0.25}
    assert is_homogeneous(q, 3)


def test_max_on_circle_radial():
    c = 4 * np.pi**3
    assert np.isclose(poly_max_on_circle({(2, 0): c, (0, 2): c}), c)


@settings(deadline=None, max_examples=50, derandomize=True)
@given(
    st.dictionaries(
        st.tuples(st.integers(0, 3), st.integers(0, 3)),
        st.floats(-10, 10, allow_nan=False),
        max_size=5,
    ),
    st.floats(-2, 2, allow_nan=False),
    st.floats(-2, 2, allow_nan=False),
)
def test_diff_matches_finite_difference(p, x, y):
    eps = 1e-6
    fd = (poly_eval(p, x + eps, y) - poly_eval(p, x - eps, y)) / (2 * eps)
    scale = 1.0 + sum(abs(c) for c in p.values()) * 100
    assert abs(poly_eval(poly_diff(p, 0), x, y) - fd) < 1e-6 * scale
