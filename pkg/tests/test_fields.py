import numpy as np
import pytest
import sympy

from magnetic_gaps.errors import DegenerateZeroSet, LowerBoundFailure, NonIntegerOrder
from magnetic_gaps.fields import (
    PeriodicScalarField,
    analyze_zeros,
    eval_field,
    find_zeros,
    load_field,
    save_field,
    taylor_leading,
    vanishing_order,
)

PI = np.pi


# -- symbolic oracle ----------------------------------------------------------

X, Y = sympy.symbols("x y", real=True)
TEST_EXPR = 2 * sympy.pi * (1 - sympy.cos(2 * sympy.pi * X) * sympy.cos(2 * sympy.pi * Y))


def sym_taylor_coeff(expr, x0, y0, p, q):
    d = sympy.diff(expr, X, p, Y, q).subs({X: x0, Y: y0})
    return float(d / (sympy.factorial(p) * sympy.factorial(q)))


# -- evaluation ---------------------------------------------------------------


def test_eval_constant_field():
    f = PeriodicScalarField.constant(3.5)
    assert eval_field(f, (0.123, 0.77)) == pytest.approx(3.5, abs=1e-14)


def test_eval_test_field_values(test_field):
    assert eval_field(test_field, (0.25, 0.25)) == pytest.approx(2 * PI, rel=1e-14)
    assert eval_field(test_field, (0.0, 0.0)) == pytest.approx(0.0, abs=1e-13)
    # against the symbolic expression at an arbitrary point
    pt = (0.137, 0.811)
    assert eval_field(test_field, pt) == pytest.approx(
        float(TEST_EXPR.subs({X: pt[0], Y: pt[1]})), rel=1e-12
    )


def test_reality_enforced():
    with pytest.raises(ValueError, match="reality"):
        PeriodicScalarField(1, np.arange(9).reshape(3, 3) * (1 + 1j))


def test_flux_equals_c00_and_quadrature(test_field):
    assert test_field.total_flux == pytest.approx(2 * PI, rel=1e-15)
    for n in (3, 8, 37):
        quad = test_field.grid_values(n).mean()
        assert quad == pytest.approx(test_field.total_flux, rel=1e-13)


# -- zero finding -------------------------------------------------------------


def test_find_zeros_test_field(test_field):
    zeros = find_zeros(test_field, seed_grid=64, tol=1e-10)
    assert len(zeros) == 2
    got = sorted(tuple(z) for z in zeros)
    # symbolic solve of cos(2pi x) cos(2pi y) = 1 on [0,1)^2
    assert np.allclose(got, [(0.0, 0.0), (0.5, 0.5)], atol=1e-10)


def test_find_zeros_constant_field_empty():
    assert find_zeros(PeriodicScalarField.constant(2 * PI), 32, 1e-10) == []


def test_find_zeros_degenerate_line():
    f = PeriodicScalarField.from_modes({(1, 0): -0.5j})  # sin(2 pi x)
    assert eval_field(f, (0.25, 0.3)) == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(DegenerateZeroSet):
        find_zeros(f, seed_grid=64, tol=1e-10)


def test_find_zeros_translation_equivariance(test_field):
    v = (0.25, 0.375)  # grid-resolvable shift keeps Newton noise-free
    shifted = test_field.shift(v)
    z0 = find_zeros(test_field, 64, 1e-10)
    z1 = find_zeros(shifted, 64, 1e-10)
    expected = sorted(tuple(np.mod(z + v, 1.0)) for z in z0)
    got = sorted(tuple(z) for z in z1)
    assert np.allclose(got, expected, atol=1e-9)


def test_find_zeros_off_grid_shift(test_field):
    shifted = test_field.shift((0.3, 0.7))
    zeros = find_zeros(shifted, 64, 1e-10)
    got = sorted(tuple(z) for z in zeros)
    assert np.allclose(got, [(0.3, 0.7), (0.8, 0.2)], atol=1e-7)


def test_find_zeros_validates_args(test_field):
    with pytest.raises(ValueError):
        find_zeros(test_field, seed_grid=8)
    with pytest.raises(ValueError):
        find_zeros(test_field, tol=0.0)


# -- vanishing order ----------------------------------------------------------


def test_vanishing_order_test_field(test_field):
    k, lo, hi = vanishing_order(test_field, np.array([0.0, 0.0]))
    assert k == 2
    assert 0 < lo <= hi
    # isotropic quadratic form: constants bracket 4 pi^3
    assert lo == pytest.approx(4 * PI**3, rel=0.05)
    assert hi == pytest.approx(4 * PI**3, rel=0.05)


def test_vanishing_order_squared_field(test_field):
    # (1 - cos cos)^2 has order 4; square the field via mode convolution
    big = 2 * test_field.max_mode
    n = 2 * big + 1
    vals = test_field.grid_values(8 * n) ** 2 / (2 * PI) ** 2
    coeffs = np.fft.fft2(vals) / vals.size
    modes = {}
    for m in range(-big, big + 1):
        for l in range(-big, big + 1):
            c = coeffs[m % (8 * n), l % (8 * n)]
            if abs(c) > 1e-12:
                modes[(m, l)] = c
    sq = PeriodicScalarField.from_modes(modes, max_mode=big)
    k, _, _ = vanishing_order(sq, np.array([0.0, 0.0]), probe_radius=0.04)
    assert k == 4


def test_vanishing_order_requires_zero(test_field):
    with pytest.raises(ValueError, match="not a zero"):
        vanishing_order(PeriodicScalarField.constant(1.0), np.array([0.1, 0.2]))


def test_vanishing_order_probe_stability(test_field):
    k1, _, _ = vanishing_order(test_field, np.array([0.0, 0.0]), probe_radius=0.05)
    k2, _, _ = vanishing_order(test_field, np.array([0.0, 0.0]), probe_radius=0.025)
    assert k1 == k2 == 2


def test_lower_bound_failure_zero_direction():
    # B = 2pi[(1-cos 2pi x) + (1-cos 2pi y)^2]: leading form 4 pi^3 x^2
    # vanishes along the y axis, so the two-sided bound must fail
    # ((1-cos u)^2 = 3/2 - 2 cos u + cos(2u)/2)
    modes = {
        (0, 0): 2 * PI * (1 + 1.5),
        (1, 0): -PI,
        (0, 1): -2 * PI,
        (0, 2): PI / 2,
    }
    f = PeriodicScalarField.from_modes(modes)
    assert abs(eval_field(f, (0.0, 0.0))) < 1e-12
    with pytest.raises(LowerBoundFailure):
        vanishing_order(f, np.array([0.0, 0.0]), probe_radius=0.02)


def test_non_integer_order_rejected():
    # |B| ~ r^2 near (0,0) but probed across a huge annulus the slope is junk
    f = PeriodicScalarField.from_modes({(0, 0): 2 * PI, (1, 1): -PI / 2, (1, -1): -PI / 2})
    with pytest.raises((NonIntegerOrder, LowerBoundFailure)):
        vanishing_order(f, np.array([0.0, 0.0]), probe_radius=0.49, slope_tol=0.01)


# -- taylor coefficients ------------------------------------------------------


def test_taylor_leading_symbolic_oracle(test_field):
    form = taylor_leading(test_field, np.array([0.0, 0.0]), 2)
    for (p, q), c in form.items():
        assert c == pytest.approx(sym_taylor_coeff(TEST_EXPR, 0, 0, p, q), abs=1e-10)
    assert form[(2, 0)] == pytest.approx(4 * PI**3, rel=1e-12)
    assert form[(1, 1)] == pytest.approx(0.0, abs=1e-10)


def test_taylor_leading_second_zero_matches(test_field):
    f1 = taylor_leading(test_field, np.array([0.0, 0.0]), 2)
    f2 = taylor_leading(test_field, np.array([0.5, 0.5]), 2)
    for key in f1:
        assert f1[key] == pytest.approx(f2[key], abs=1e-10)


def test_taylor_translation_equivariance(test_field):
    shifted = test_field.shift((0.3, 0.7))
    f1 = taylor_leading(test_field, np.array([0.0, 0.0]), 2)
    f2 = taylor_leading(shifted, np.array([0.3, 0.7]), 2)
    for key in f1:
        assert f1[key] == pytest.approx(f2[key], abs=1e-9)


def test_taylor_remainder_bound(test_field):
    # degree-2 form approximates the field to O(r^{k+2}) on small circles
    # (odd orders vanish for this even field, so the remainder is r^4)
    form = taylor_leading(test_field, np.array([0.0, 0.0]), 2)
    from magnetic_gaps.poly import poly_eval

    for r in (1e-2, 5e-3):
        ang = np.linspace(0, 2 * PI, 64, endpoint=False)
        exact = test_field.eval(r * np.cos(ang), r * np.sin(ang))
        approx = poly_eval(form, r * np.cos(ang), r * np.sin(ang))
        assert np.max(np.abs(exact - approx)) < 200.0 * 4 * PI**3 * r**4


# -- analyze + file round trip -------------------------------------------------


def test_analyze_zeros_bundles(test_field):
    data = analyze_zeros(test_field)
    assert [d.order for d in data] == [2, 2]
    for d in data:
        assert d.comp_lower <= 4 * PI**3 <= d.comp_upper * 1.05


def test_field_file_roundtrip(test_field, tmp_path):
    path = tmp_path / "f.txt"
    save_field(test_field, path)
    back = load_field(path)
    assert back.max_mode == test_field.max_mode
    assert np.allclose(back.coeffs, test_field.coeffs, atol=1e-16)
    text = path.read_text()
    assert text.startswith("M 1\n")
    # only the m > 0 or (m = 0, n >= 0) half is stored
    for line in text.splitlines()[1:]:
        m, n = int(line.split()[0]), int(line.split()[1])
        assert m > 0 or (m == 0 and n >= 0)


def test_load_field_rejects_conjugate_half(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("M 1\n-1 0 1.0 0.0\n")
    with pytest.raises(ValueError, match="conjugate half"):
        load_field(path)
