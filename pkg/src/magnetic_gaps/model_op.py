"""Model magnetic Schrodinger operators attached to the zeros of the field.

For a zero of order k with leading Taylor form b0 (homogeneous, degree k),
the model operator acts on R^2 with the homogeneous polynomial potential of
degree k+1 whose curl is b0. Discretization: centered five-point stencil on
a Dirichlet box with Peierls link phases; rescaled spectra
eig / h^((2k+2)/(k+2)) are h-independent, which scaling_check certifies
numerically.
"""

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from ._quadrature import GAUSS3_NODES, GAUSS3_WEIGHTS
from .eig import EigOptions, SparseHermitianOperator, SpectrumSlice, count_below, lowest_eigs
from .errors import ResolutionError, TruncationDominated
from .poly import (
    is_homogeneous,
    mul_monomial,
    poly_allclose,
    poly_curl,
    poly_degree,
    poly_eval,
    poly_max_on_circle,
)

__all__ = [
    "HomogeneousGauge",
    "ModelProblem",
    "ScalingReport",
    "poincare_gauge",
    "assemble_model",
    "model_spectrum",
    "scaling_check",
    "model_gaps",
    "count_below",
    "default_problem",
]


@dataclass(frozen=True)
class HomogeneousGauge:
    """Polynomial 1-form (a1, a2), homogeneous of degree k+1, with curl b0."""

    degree: int
    a1: dict
    a2: dict

    def __post_init__(self):
        for comp in (self.a1, self.a2):
            if comp and not is_homogeneous(comp, self.degree):
                raise ValueError(f"gauge components must be homogeneous of degree {self.degree}")

    def curl(self):
        """d1 a2 - d2 a1, exact polynomial arithmetic."""
        return poly_curl(self.a1, self.a2)

    def verify_curl(self, b0, rtol=1e-13):
        if not poly_allclose(self.curl(), b0, rtol=rtol):
            raise ValueError("curl identity d1 a2 - d2 a1 = b0 violated")

    def add_gradient(self, chi):
        """Gauge-equivalent potential A + grad(chi); chi a polynomial dict."""
        from .poly import poly_add, poly_diff

        return (
            poly_add(self.a1, poly_diff(chi, 0)),
            poly_add(self.a2, poly_diff(chi, 1)),
        )


def poincare_gauge(leading_form):
    """Radial gauge A = b0(X)/(k+2) * (-X2, X1); curl equals b0 exactly."""
    k = poly_degree(leading_form)
    if k < 0:
        raise ValueError("leading form is identically zero")
    if not is_homogeneous(leading_form, k):
        raise ValueError("leading form must be homogeneous")
    a1 = mul_monomial(leading_form, 0, 1, -1.0 / (k + 2))
    a2 = mul_monomial(leading_form, 1, 0, 1.0 / (k + 2))
    gauge = HomogeneousGauge(degree=k + 1, a1=a1, a2=a2)
    gauge.verify_curl(leading_form)
    return gauge


@dataclass(frozen=True)
class ModelProblem:
    """One discretized model solve: gauge, h, Dirichlet box, grid, flat metric."""

    gauge: HomogeneousGauge
    h: float
    box_halfwidth: float
    grid_n: int
    metric0: np.ndarray = dc_field(default_factory=lambda: np.eye(2))

    def __post_init__(self):
        object.__setattr__(self, "metric0", np.asarray(self.metric0, dtype=float))
        if self.h <= 0 or self.box_halfwidth <= 0 or self.grid_n < 8:
            raise ValueError("need h > 0, box_halfwidth > 0, grid_n >= 8")
        g = self.metric0
        if g.shape != (2, 2) or not np.allclose(g, g.T) or np.any(np.linalg.eigvalsh(g) <= 0):
            raise ValueError("metric0 must be symmetric positive definite 2x2")
        k = self.gauge.degree - 1
        if self.spacing > self.h ** (1.0 / (k + 2)) / 8.0:
            raise ResolutionError(
                f"grid spacing {self.spacing:.4g} exceeds h^(1/(k+2))/8 = "
                f"{self.h ** (1.0 / (k + 2)) / 8.0:.4g}"
            )

    @property
    def spacing(self):
        return 2.0 * self.box_halfwidth / (self.grid_n - 1)


def default_problem(gauge, h, box_lengths=6.0, points_per_length=16):
    """Box and grid from the semiclassical length (h/scale(b0))^(1/(k+2))."""
    k = gauge.degree - 1
    scale = poly_max_on_circle(gauge.curl())
    ell = (h / scale) ** (1.0 / (k + 2))
    box = box_lengths * ell
    spacing = ell / points_per_length
    grid_n = int(math.ceil(2.0 * box / spacing)) + 1
    return ModelProblem(gauge=gauge, h=h, box_halfwidth=box, grid_n=grid_n)


def _link_phases(a_component, x1, x2, axis, spacing):
    """Gauss-3 line integral of one gauge component along grid links."""
    acc = np.zeros_like(x1)
    for t, wgt in zip(GAUSS3_NODES, GAUSS3_WEIGHTS):
        if axis == 0:
            acc += wgt * poly_eval(a_component, x1 + t * spacing, x2)
        else:
            acc += wgt * poly_eval(a_component, x1, x2 + t * spacing)
    return spacing * acc


def assemble_model(problem):
    """Five-point Peierls discretization on the Dirichlet box, Hermitian exactly."""
    g = problem.metric0
    if abs(g[0, 1]) > 0:
        raise NotImplementedError("off-diagonal metric0 is stored but not discretized")
    n_int = problem.grid_n - 2
    a = problem.spacing
    h = problem.h
    ginv = np.linalg.inv(g)
    w1 = h * h / (a * a) * ginv[0, 0]
    w2 = h * h / (a * a) * ginv[1, 1]

    xi = -problem.box_halfwidth + a * (1.0 + np.arange(n_int))
    x1, x2 = np.meshgrid(xi, xi, indexing="ij")

    phi_x = _link_phases(problem.gauge.a1, x1, x2, axis=0, spacing=a)
    phi_y = _link_phases(problem.gauge.a2, x1, x2, axis=1, spacing=a)
    tx = -w1 * np.exp(-1j * phi_x / h)
    ty = -w2 * np.exp(-1j * phi_y / h)
    tx[-1, :] = 0.0  # Dirichlet seam
    ty[:, -1] = 0.0
    diag = np.full((n_int, n_int), 2.0 * w1 + 2.0 * w2)
    return SparseHermitianOperator.from_stencil(diag, tx, ty, kind="dirichlet", w1=w1, w2=w2)


def _solve(problem, m, options):
    op = assemble_model(problem)
    opts = options or EigOptions(m=m)
    if opts.m != m:
        opts = EigOptions(
            m=m,
            tol=opts.tol,
            max_iter=opts.max_iter,
            block_size=opts.block_size,
            seed=opts.seed,
            preconditioner=opts.preconditioner,
        )
    return lowest_eigs(op, opts), op


def model_spectrum(problem, m, options=None, box_check=True):
    """The m lowest model eigenvalues with residual and truncation certificates.

    The Dirichlet truncation error is estimated by re-solving on a box grown
    by 1.25 at identical spacing; per-level shifts land in meta and raising
    TruncationDominated when they exceed 10x the solver tolerance budget.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    slc, op = _solve(problem, m, options)
    tol = slc.meta["tol"]
    budget = 10.0 * tol * op.norm_estimate

    meta = dict(slc.meta)
    meta.update(
        h=problem.h,
        grid_n=problem.grid_n,
        box_halfwidth=problem.box_halfwidth,
    )

    if box_check:
        # box zero-point energy must sit well below the computed levels,
        # otherwise the walls (not the well) set the spectrum
        box_scale = 4.0 * (problem.h * np.pi / (2.0 * problem.box_halfwidth)) ** 2
        if box_scale > slc.eigenvalues[0] * (1 + 1e-9):
            raise TruncationDominated(
                f"Dirichlet confinement scale {box_scale:.4g} exceeds the first "
                f"computed level {slc.eigenvalues[0]:.4g}: box too small"
            )
        grow = int(round((problem.grid_n - 1) * 1.25))
        big = ModelProblem(
            gauge=problem.gauge,
            h=problem.h,
            box_halfwidth=problem.box_halfwidth * grow / (problem.grid_n - 1),
            grid_n=grow + 1,
            metric0=problem.metric0,
        )
        slc_big, _ = _solve(big, m, options)
        shift = slc.eigenvalues - slc_big.eigenvalues
        meta["truncation_shift"] = shift
        meta["box_check_halfwidth"] = big.box_halfwidth
        if np.max(np.abs(shift)) > budget:
            raise TruncationDominated(
                f"eigenvalues shift by {np.max(np.abs(shift)):.3e} when the box grows "
                f"(budget {budget:.3e}); enlarge the box"
            )
    return SpectrumSlice(eigenvalues=slc.eigenvalues, residuals=slc.residuals, meta=meta)


def model_gaps(slice_, rel_width_min, merge_scale=None):
    """Open gaps (lam_m, lam_m+1) after merging near-degenerate multiplets.

    Eigenvalues closer than twice the solver tolerance budget count as one
    multiplet; a gap is kept when its relative width exceeds rel_width_min.
    """
    tol = slice_.meta.get("tol", 1e-8)
    norm = slice_.meta.get("norm_estimate", float(np.max(np.abs(slice_.eigenvalues))))
    merge = merge_scale if merge_scale is not None else 2.0 * tol * norm
    reps = merge_multiplets(slice_.eigenvalues, merge)
    gaps = []
    for lo, hi in zip(reps[:-1], reps[1:]):
        if hi != 0 and (hi - lo) / abs(hi) > rel_width_min:
            gaps.append((float(lo), float(hi)))
    return gaps


def merge_multiplets(values, merge):
    """Cluster ascending values at resolution merge; returns cluster means."""
    values = np.asarray(values, dtype=float)
    reps = []
    start = 0
    for i in range(1, len(values) + 1):
        if i == len(values) or values[i] - values[i - 1] > merge:
            reps.append(float(np.mean(values[start:i])))
            start = i
    return reps


@dataclass(frozen=True)
class ScalingReport:
    """Outcome of the h-independence check of the rescaled model spectra."""

    exponent: float
    h1: float
    h2: float
    rescaled1: np.ndarray
    rescaled2: np.ndarray
    max_rel_deviation: float


def scaling_check(gauge, k, h1, h2, m, problems=None, options=None):
    """Compare eig(K^h)/h^((2k+2)/(k+2)) across two h values.

    In the continuum the two rescaled spectra coincide exactly (unitary
    scaling X -> h^(1/(k+2)) X); the reported deviation is pure
    discretization error.
    """
    if not (0 < h1 <= 1 and 0 < h2 <= 1):
        raise ValueError("h values must lie in (0, 1]")
    if gauge.degree != k + 1:
        raise ValueError("gauge degree must equal k+1")
    exponent = (2.0 * k + 2.0) / (k + 2.0)
    if problems is None:
        problems = (default_problem(gauge, h1), default_problem(gauge, h2))
    slc1 = model_spectrum(problems[0], m, options=options, box_check=False)
    slc2 = model_spectrum(problems[1], m, options=options, box_check=False)
    r1 = slc1.eigenvalues / h1**exponent
    r2 = slc2.eigenvalues / h2**exponent
    dev = float(np.max(np.abs(r1 - r2) / np.maximum(np.abs(r1), np.abs(r2))))
    if h1 == h2:
        dev = 0.0 if np.array_equal(r1, r2) else dev
    return ScalingReport(
        exponent=exponent,
        h1=h1,
        h2=h2,
        rescaled1=r1,
        rescaled2=r2,
        max_rel_deviation=dev,
    )
