"""Sparse Hermitian extremal eigensolver with residual certificates.

The solver is a blocked preconditioned gradient iteration (LOBPCG-style):
Rayleigh-Ritz on the span of the current Ritz block X, the preconditioned
residuals W and the previous search directions P, with the whole basis
reorthogonalized every iteration. Deterministic given the seed.
"""

import logging
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.sparse as sp

from .errors import BlockDeflationFailure, OutOfValidatedRange, SolverStagnation
from .kernels import apply_stencil, apply_stencil_with

log = logging.getLogger("magnetic_gaps.eig")


@dataclass(frozen=True)
class StencilForm:
    """Five-point stencil payload: real diagonal plus two complex hop arrays.

    kind is 'periodic' or 'dirichlet'; w1, w2 are the per-direction hop
    weights of the underlying discrete Laplacian (used by the kinetic
    preconditioner).
    """

    diag: np.ndarray
    tx: np.ndarray
    ty: np.ndarray
    kind: str
    w1: float
    w2: float

    @property
    def shape(self):
        return self.diag.shape


class SparseHermitianOperator:
    """Assembled Hermitian operator: CSR entries + Gershgorin norm bound.

    Construction verifies Hermitian symmetry of the stored pattern. When the
    operator came from a five-point stencil assembly the structured form is
    kept alongside and drives the fast matvec path.
    """

    def __init__(self, matrix, stencil=None, check=True, check_tol=1e-13):
        mat = sp.csr_matrix(matrix, dtype=complex)
        if mat.shape[0] != mat.shape[1]:
            raise ValueError("operator must be square")
        if check:
            scale = np.max(np.abs(mat.data)) if mat.nnz else 0.0
            defect = abs(mat - mat.getH())
            worst = defect.data.max() if defect.nnz else 0.0
            if scale > 0 and worst > check_tol * scale:
                raise ValueError(f"Hermiticity defect {worst:.3e} > {check_tol} * {scale:.3e}")
        self.matrix = mat
        self.dim = mat.shape[0]
        self.norm_estimate = float(abs(mat).sum(axis=1).max()) if mat.nnz else 0.0
        self.stencil = stencil

    @classmethod
    def from_stencil(cls, diag, tx, ty, kind, w1, w2):
        n1, n2 = diag.shape
        st = StencilForm(
            diag=np.ascontiguousarray(diag, dtype=float),
            tx=np.ascontiguousarray(tx, dtype=complex),
            ty=np.ascontiguousarray(ty, dtype=complex),
            kind=kind,
            w1=float(w1),
            w2=float(w2),
        )
        dim = n1 * n2
        idx = np.arange(dim).reshape(n1, n2)
        rows, cols, vals = [idx.ravel()], [idx.ravel()], [st.diag.ravel().astype(complex)]
        for arr, nb in ((st.tx, np.roll(idx, -1, axis=0)), (st.ty, np.roll(idx, -1, axis=1))):
            live = arr.ravel() != 0
            r = idx.ravel()[live]
            c = nb.ravel()[live]
            v = arr.ravel()[live]
            rows += [r, c]
            cols += [c, r]
            vals += [v, np.conj(v)]
        mat = sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
            shape=(dim, dim),
        )
        return cls(mat, stencil=st, check=True)

    def hermiticity_defect(self):
        """max |M - M*| over entries, relative to max |entry|."""
        scale = np.max(np.abs(self.matrix.data)) if self.matrix.nnz else 0.0
        if scale == 0:
            return 0.0
        defect = abs(self.matrix - self.matrix.getH())
        worst = defect.data.max() if defect.nnz else 0.0
        return float(worst / scale)

    def diagonal(self):
        return np.real(self.matrix.diagonal())

    def matmat(self, x, backend=None):
        """Operator times a block of vectors, shape (dim, nvec)."""
        x = np.ascontiguousarray(x, dtype=complex)
        single = x.ndim == 1
        if single:
            x = x[:, None]
        if self.stencil is not None:
            n1, n2 = self.stencil.shape
            xg = x.reshape(n1, n2, x.shape[1])
            if backend is None:
                yg = apply_stencil(self.stencil.diag, self.stencil.tx, self.stencil.ty, xg)
            else:
                yg = apply_stencil_with(
                    backend, self.stencil.diag, self.stencil.tx, self.stencil.ty, xg
                )
            y = yg.reshape(self.dim, x.shape[1])
        else:
            y = self.matrix @ x
        return y[:, 0] if single else y


@dataclass(frozen=True)
class EigOptions:
    """Solver controls; defaults match the pipeline's certified runs."""

    m: int
    tol: float = 1e-8
    max_iter: int = 2000
    block_size: int | None = None
    seed: int = 0
    preconditioner: str = "auto"  # auto | splu | kinetic | jacobi | none
    stagnation_window: int = 200
    verbose: bool = False

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")


@dataclass(frozen=True)
class SpectrumSlice:
    """Certified low eigenvalues: ascending values plus residual norms."""

    eigenvalues: np.ndarray
    residuals: np.ndarray
    meta: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=float)
        res = np.asarray(self.residuals, dtype=float)
        if ev.ndim != 1 or ev.shape != res.shape:
            raise ValueError("eigenvalues and residuals must be matching 1-d arrays")
        if np.any(np.diff(ev) < 0):
            raise ValueError("eigenvalues must be ascending")
        tol = self.meta.get("tol")
        norm = self.meta.get("norm_estimate")
        if tol is not None and norm is not None and np.any(res > 1.0001 * tol * max(norm, 1e-300)):
            raise ValueError("residual certificate violated")
        ev.flags.writeable = False
        res.flags.writeable = False
        object.__setattr__(self, "eigenvalues", ev)
        object.__setattr__(self, "residuals", res)

    def __len__(self):
        return len(self.eigenvalues)

    @property
    def top(self):
        return float(self.eigenvalues[-1])


def count_below(slice_, lam):
    """Number of eigenvalues <= lam, with multiplicity."""
    ev = slice_.eigenvalues
    if lam > ev[-1] * (1 + 1e-12) + 1e-300:
        raise OutOfValidatedRange(f"lambda = {lam} above validated top {ev[-1]}")
    return int(np.searchsorted(ev, lam, side="right"))


def _kinetic_symbols(stencil):
    n1, n2 = stencil.shape
    if stencil.kind == "periodic":
        s1 = 2.0 * stencil.w1 * (1.0 - np.cos(2.0 * np.pi * np.arange(n1) / n1))
        s2 = 2.0 * stencil.w2 * (1.0 - np.cos(2.0 * np.pi * np.arange(n2) / n2))
    else:
        s1 = 2.0 * stencil.w1 * (1.0 - np.cos(np.pi * np.arange(1, n1 + 1) / (n1 + 1)))
        s2 = 2.0 * stencil.w2 * (1.0 - np.cos(np.pi * np.arange(1, n2 + 1) / (n2 + 1)))
    return s1[:, None] + s2[None, :]


def _make_preconditioner(op, options):
    choice = options.preconditioner
    if choice == "auto":
        # sparse LU of the shifted operator for grid operators: Peierls
        # phases defeat both point-Jacobi and Fourier kinetic inverses
        # (gauge-oscillatory low modes are not smooth). Identity for generic
        # matrices, where Jacobi measurably slows convergence.
        choice = "splu" if op.stencil is not None else "none"
    if choice == "none":
        return lambda r, shifts: r
    if choice == "splu":
        import scipy.sparse.linalg as spla

        sigma = 1e-6 * max(op.norm_estimate, 1e-300)
        lu = spla.splu((op.matrix + sigma * sp.identity(op.dim, dtype=complex)).tocsc())

        def shifted_inverse(r, shifts):
            return lu.solve(np.ascontiguousarray(r))

        return shifted_inverse
    if choice == "jacobi":
        d = np.abs(op.diagonal())
        floor = max(1e-8 * op.norm_estimate, 1e-300)
        d = np.maximum(d, floor)[:, None]

        def jacobi(r, shifts):
            return r / d

        return jacobi
    if choice == "kinetic":
        if op.stencil is None:
            raise ValueError("kinetic preconditioner needs a stencil operator")
        from scipy import fft as sfft

        st = op.stencil
        sym = _kinetic_symbols(st)
        n1, n2 = st.shape
        periodic = st.kind == "periodic"
        floor = max(1e-8 * op.norm_estimate, 1e-300)

        def kinetic(r, shifts):
            nv = r.shape[1]
            rg = r.reshape(n1, n2, nv)
            sig = np.maximum(np.abs(shifts), floor)
            if periodic:
                z = sfft.fft2(rg, axes=(0, 1))
                z /= sym[:, :, None] + sig[None, None, :]
                out = sfft.ifft2(z, axes=(0, 1))
            else:
                zr = sfft.dstn(rg.real, type=1, axes=(0, 1))
                zi = sfft.dstn(rg.imag, type=1, axes=(0, 1))
                den = sym[:, :, None] + sig[None, None, :]
                zr /= den
                zi /= den
                norm = 4.0 * (n1 + 1) * (n2 + 1)
                out = (
                    sfft.dstn(zr, type=1, axes=(0, 1)) + 1j * sfft.dstn(zi, type=1, axes=(0, 1))
                ) / norm
            return np.ascontiguousarray(out.reshape(r.shape))

        return kinetic
    raise ValueError(f"unknown preconditioner {choice!r}")


def _orthonormalize(block, against=None, drop_tol=1e-12):
    """QR-orthonormalize columns, dropping near-dependent ones."""
    if against is not None:
        block = block - against @ (against.conj().T @ block)
        block = block - against @ (against.conj().T @ block)
    if block.shape[1] == 0:
        return block
    q, r = np.linalg.qr(block)
    keep = np.abs(np.diag(r)) > drop_tol * max(np.max(np.abs(r)), 1e-300)
    return q[:, keep]


def lowest_eigs(op, options):
    """The m lowest eigenpairs of a SparseHermitianOperator, certified.

    Returns a SpectrumSlice whose residuals satisfy
    ||A v - lambda v|| <= tol * norm_estimate. Raises SolverStagnation when
    the residual floor stops moving, BlockDeflationFailure on basis collapse.
    """
    n = op.dim
    m = options.m
    if not m < n / 4:
        raise ValueError(f"need m < dim/4 (m={m}, dim={n})")
    b = options.block_size or (m + 4)
    b = min(max(b, m), n // 2)
    rng = np.random.default_rng(options.seed)
    target = options.tol * max(op.norm_estimate, 1e-300)
    precond = _make_preconditioner(op, options)

    x = rng.standard_normal((n, b)) + 1j * rng.standard_normal((n, b))
    x = _orthonormalize(x)
    if x.shape[1] < b:
        raise BlockDeflationFailure("random start block is rank deficient")
    ax = op.matmat(x)
    p = np.zeros((n, 0), dtype=complex)
    ap = np.zeros((n, 0), dtype=complex)

    best = np.inf
    since_best = 0
    history = []

    for it in range(options.max_iter):
        theta = np.real(np.einsum("ij,ij->j", np.conj(x), ax))
        resid = ax - x * theta[None, :]
        rnorm = np.linalg.norm(resid, axis=0)
        history.append((it, float(np.min(rnorm[:m])), float(theta[min(m, b) - 1])))
        if options.verbose:
            log.debug("%d,%.6e,%.12g", it, float(np.min(rnorm[:m])), float(theta[m - 1]))
        if np.all(rnorm[:m] <= target):
            order = np.argsort(theta[:m], kind="stable")
            vals = theta[:m][order]
            res = rnorm[:m][order]
            return SpectrumSlice(
                eigenvalues=vals,
                residuals=res,
                meta={
                    "tol": options.tol,
                    "norm_estimate": op.norm_estimate,
                    "iterations": it,
                    "seed": options.seed,
                    "block_size": b,
                    "vectors": x[:, order],
                },
            )

        floor = float(np.max(rnorm[:m]))
        if floor < best * (1 - 1e-3):
            best = floor
            since_best = 0
        else:
            since_best += 1
            if since_best > options.stagnation_window:
                raise SolverStagnation(
                    f"no residual progress for {options.stagnation_window} iterations "
                    f"(residual floor {best:.3e}, target {target:.3e})"
                )

        active = rnorm > 0.1 * target
        # full reorthogonalization: residuals and directions are projected
        # against the current block and QR-filtered every iteration
        w = _orthonormalize(precond(resid[:, active], theta[active]), against=x)
        pq = _orthonormalize(p, against=np.hstack([x, w])) if p.shape[1] else p
        if w.shape[1] == 0 and pq.shape[1] == 0:
            raise BlockDeflationFailure("search directions collapsed onto the Ritz block")

        s = np.hstack([x, w, pq])
        as_ = np.hstack(
            [ax]
            + ([op.matmat(w)] if w.shape[1] else [])
            + ([op.matmat(pq)] if pq.shape[1] else [])
        )
        h = s.conj().T @ as_
        h = 0.5 * (h + h.conj().T)
        _, c = np.linalg.eigh(h)
        nb = min(b, s.shape[1])
        cb = c[:, :nb]
        x_new = s @ cb
        ax_new = as_ @ cb
        # conjugate direction: the update's component outside the old X block
        cp = cb[x.shape[1] :, :]
        tail = s[:, x.shape[1] :]
        atail = as_[:, x.shape[1] :]
        p = tail @ cp
        ap = atail @ cp
        x, ax = x_new, ax_new

    raise SolverStagnation(
        f"max_iter={options.max_iter} reached with residual floor {best:.3e} (target {target:.3e})"
    )
