import numpy as np
import pytest
import scipy.sparse as sp

from magnetic_gaps.eig import (
    EigOptions,
    SparseHermitianOperator,
    SpectrumSlice,
    count_below,
    lowest_eigs,
)
from magnetic_gaps.errors import OutOfValidatedRange, SolverStagnation


def random_hermitian(n, seed):
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (g + g.conj().T) / (2 * np.sqrt(n))


def test_diagonal_operator():
    op = SparseHermitianOperator(sp.diags(np.arange(1.0, 101.0)).tocsr())
    slc = lowest_eigs(op, EigOptions(m=3, seed=1))
    assert np.allclose(slc.eigenvalues, [1.0, 2.0, 3.0], atol=1e-7)


def test_1d_dirichlet_laplacian_closed_form():
    n = 50
    mat = sp.diags([2 * np.ones(n), -np.ones(n - 1), -np.ones(n - 1)], [0, 1, -1]).tocsr()
    op = SparseHermitianOperator(mat)
    slc = lowest_eigs(op, EigOptions(m=2, seed=1))
    exact = [2 - 2 * np.cos(np.pi / 51), 2 - 2 * np.cos(2 * np.pi / 51)]
    assert np.allclose(slc.eigenvalues, exact, rtol=1e-9)


def test_random_hermitian_matches_dense_oracle():
    a = random_hermitian(200, seed=7)
    op = SparseHermitianOperator(sp.csr_matrix(a))
    slc = lowest_eigs(op, EigOptions(m=10, seed=3))
    oracle = np.linalg.eigvalsh(a)[:10]
    assert np.max(np.abs(slc.eigenvalues - oracle) / np.abs(oracle)) < 1e-8


def test_determinism_bit_identical():
    a = random_hermitian(120, seed=11)
    op = SparseHermitianOperator(sp.csr_matrix(a))
    s1 = lowest_eigs(op, EigOptions(m=5, seed=9))
    s2 = lowest_eigs(op, EigOptions(m=5, seed=9))
    assert np.array_equal(s1.eigenvalues, s2.eigenvalues)
    assert np.array_equal(s1.residuals, s2.residuals)


def test_shift_invariance():
    a = random_hermitian(90, seed=4)
    c = 3.7182
    op = SparseHermitianOperator(sp.csr_matrix(a))
    op_shift = SparseHermitianOperator(sp.csr_matrix(a + c * np.eye(90)))
    s0 = lowest_eigs(op, EigOptions(m=4, seed=2))
    s1 = lowest_eigs(op_shift, EigOptions(m=4, seed=2))
    assert np.allclose(s1.eigenvalues, s0.eigenvalues + c, atol=1e-7 * op_shift.norm_estimate)


def test_eigenvector_orthonormality_and_residuals():
    a = random_hermitian(150, seed=21)
    op = SparseHermitianOperator(sp.csr_matrix(a))
    opts = EigOptions(m=6, seed=0)
    slc = lowest_eigs(op, opts)
    v = slc.meta["vectors"]
    gram = v.conj().T @ v
    assert np.max(np.abs(gram - np.eye(6))) < 1e-10
    res = op.matmat(v) - v * slc.eigenvalues[None, :]
    assert np.all(np.linalg.norm(res, axis=0) <= opts.tol * op.norm_estimate * 1.0001)


def test_residual_certificate_enforced():
    with pytest.raises(ValueError, match="residual certificate"):
        SpectrumSlice(
            eigenvalues=np.array([1.0, 2.0]),
            residuals=np.array([1.0, 2.0]),
            meta={"tol": 1e-8, "norm_estimate": 1.0},
        )


def test_hermiticity_check_rejects():
    bad = sp.csr_matrix(np.array([[1.0, 2.0], [0.5, 1.0]], dtype=complex))
    with pytest.raises(ValueError, match="Hermiticity"):
        SparseHermitianOperator(bad)


def test_gershgorin_norm_bound():
    a = random_hermitian(80, seed=2)
    op = SparseHermitianOperator(sp.csr_matrix(a))
    true_norm = np.max(np.abs(np.linalg.eigvalsh(a)))
    assert op.norm_estimate >= true_norm


def test_m_cap_versus_dimension():
    op = SparseHermitianOperator(sp.identity(16, dtype=complex, format="csr"))
    with pytest.raises(ValueError, match="dim/4"):
        lowest_eigs(op, EigOptions(m=8))


def test_stagnation_raised_on_tiny_budget():
    a = random_hermitian(150, seed=5)
    op = SparseHermitianOperator(sp.csr_matrix(a))
    with pytest.raises(SolverStagnation):
        lowest_eigs(op, EigOptions(m=6, seed=0, max_iter=3))


def test_count_below():
    slc = SpectrumSlice(
        eigenvalues=np.array([1.0, 2.0, 2.0, 5.0]),
        residuals=np.zeros(4),
        meta={"tol": 1e-8, "norm_estimate": 1.0},
    )
    assert count_below(slc, 2.0) == 3
    assert count_below(slc, 0.5) == 0
    assert count_below(slc, 5.0) == 4
    with pytest.raises(OutOfValidatedRange):
        count_below(slc, 6.0)
