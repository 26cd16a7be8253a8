import numpy as np
import pytest

from magnetic_gaps import kernels
from magnetic_gaps.eig import SparseHermitianOperator


def random_stencil(n1, n2, dirichlet, seed=0):
    rng = np.random.default_rng(seed)
    diag = rng.uniform(1.0, 3.0, (n1, n2))
    tx = rng.standard_normal((n1, n2)) + 1j * rng.standard_normal((n1, n2))
    ty = rng.standard_normal((n1, n2)) + 1j * rng.standard_normal((n1, n2))
    if dirichlet:
        tx[-1, :] = 0.0
        ty[:, -1] = 0.0
    return diag, tx, ty


@pytest.mark.parametrize("dirichlet", [False, True])
def test_stencil_matches_csr(dirichlet):
    diag, tx, ty = random_stencil(13, 17, dirichlet)
    kind = "dirichlet" if dirichlet else "periodic"
    op = SparseHermitianOperator.from_stencil(diag, tx, ty, kind=kind, w1=1.0, w2=1.0)
    rng = np.random.default_rng(1)
    x = rng.standard_normal((op.dim, 4)) + 1j * rng.standard_normal((op.dim, 4))
    y_stencil = op.matmat(x)
    y_csr = op.matrix @ x
    assert np.max(np.abs(y_stencil - y_csr)) < 1e-13 * np.max(np.abs(y_csr))


def test_backends_agree():
    diag, tx, ty = random_stencil(9, 11, dirichlet=False, seed=5)
    rng = np.random.default_rng(2)
    x = rng.standard_normal((9, 11, 3)) + 1j * rng.standard_normal((9, 11, 3))
    y_py = kernels.apply_stencil_with("python", diag, tx, ty, np.ascontiguousarray(x))
    if kernels.backend_name() == "cython":
        y_cy = kernels.apply_stencil_with("cython", diag, tx, ty, np.ascontiguousarray(x))
        assert np.max(np.abs(y_py - y_cy)) < 1e-14 * max(np.max(np.abs(y_py)), 1.0)
    y_default = kernels.apply_stencil(diag, tx, ty, np.ascontiguousarray(x))
    assert np.allclose(y_default, y_py, atol=1e-13)


def test_unknown_backend_rejected():
    diag, tx, ty = random_stencil(4, 4, dirichlet=False)
    x = np.zeros((4, 4, 1), dtype=complex)
    with pytest.raises(ValueError):
        kernels.apply_stencil_with("fortran", diag, tx, ty, x)
