"""Polynomials in two variables with coefficients indexed by exponent pairs.

A polynomial is a plain dict {(p, q): c} meaning sum of c * X1^p * X2^q.
Used for leading Taylor forms of the field (homogeneous degree k) and for
the polynomial gauge potentials built from them (degree k+1).
"""

import numpy as np

Poly = dict


def poly_degree(coeffs):
    """Total degree, or -1 for the zero polynomial."""
    live = [p + q for (p, q), c in coeffs.items() if c != 0]
    return max(live) if live else -1


def is_homogeneous(coeffs, degree):
    return all(p + q == degree or c == 0 for (p, q), c in coeffs.items())


def poly_eval(coeffs, x1, x2):
    """Evaluate at scalars or numpy arrays (broadcasting)."""
    x1 = np.asarray(x1)
    x2 = np.asarray(x2)
    out = np.zeros(np.broadcast(x1, x2).shape)
    for (p, q), c in coeffs.items():
        out = out + c * x1**p * x2**q
    return out if out.shape else float(out)


def poly_diff(coeffs, axis):
    """Exact partial derivative with respect to X1 (axis=0) or X2 (axis=1)."""
    out = {}
    for (p, q), c in coeffs.items():
        if axis == 0 and p > 0:
            out[(p - 1, q)] = out.get((p - 1, q), 0.0) + p * c
        elif axis == 1 and q > 0:
            out[(p, q - 1)] = out.get((p, q - 1), 0.0) + q * c
    return out


def poly_scale(coeffs, s):
    return {pq: s * c for pq, c in coeffs.items()}


def poly_add(a, b):
    out = dict(a)
    for pq, c in b.items():
        out[pq] = out.get(pq, 0.0) + c
    return out


def mul_monomial(coeffs, dp, dq, s=1.0):
    """Multiply by s * X1^dp * X2^dq."""
    return {(p + dp, q + dq): s * c for (p, q), c in coeffs.items()}


def poly_curl(a1, a2):
    """d1 a2 - d2 a1, the scalar curl of the 1-form (a1, a2)."""
    return poly_add(poly_diff(a2, 0), poly_scale(poly_diff(a1, 1), -1.0))


def poly_max_on_circle(coeffs, n_angles=256):
    """max over the unit circle of |p(omega)|; the scale of a homogeneous form."""
    ang = np.linspace(0.0, 2.0 * np.pi, n_angles, endpoint=False)
    return float(np.max(np.abs(poly_eval(coeffs, np.cos(ang), np.sin(ang)))))


def poly_allclose(a, b, rtol=1e-13, atol=0.0):
    keys = set(a) | set(b)
    scale = max((abs(c) for c in list(a.values()) + list(b.values())), default=0.0)
    tol = rtol * scale + atol
    return all(abs(a.get(k, 0.0) - b.get(k, 0.0)) <= tol for k in keys)
