"""Magnetic Bloch-Floquet reduction of the full torus operator.

At integer effective flux Q = c00/(2 pi h) the magnetic translations
commute, so the spectrum of H^h on the plane is the union over the
quasimomentum theta in [0, 2pi)^2 of discrete fiber spectra on one cell.
The cell gauge splits into a Landau linear part carrying the mean field
and a periodic stream-function part carrying the oscillation; wraparound
links pick up theta together with the Landau matching phase.
"""

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np

from ._quadrature import GAUSS3_NODES, GAUSS3_WEIGHTS
from .eig import EigOptions, SparseHermitianOperator, lowest_eigs
from .errors import NonIntegerFlux, PartialSweep, ResolutionError
from .fields import PeriodicScalarField

TWO_PI = 2.0 * np.pi

__all__ = [
    "CellGauge",
    "BlochProblem",
    "BandSpectrum",
    "build_gauge",
    "assemble_bloch",
    "bloch_spectrum",
    "detect_gaps",
    "effective_flux",
    "min_grid_for",
]


def effective_flux(field, h):
    return field.total_flux / (TWO_PI * h)


def _require_integer_flux(field, h, tol=1e-9):
    q = effective_flux(field, h)
    if abs(q - round(q)) > tol * max(1.0, abs(q)):
        raise NonIntegerFlux(q, h, field.total_flux)
    return int(round(q))


@dataclass(frozen=True)
class CellGauge:
    """Cell gauge with d(A_per + linear part) = B.

    orientation 'x1' puts the mean field into the Landau component
    (0, mean_field * (x1 - 1/2)); orientation 'x2' uses
    (-mean_field * (x2 - 1/2), 0). The periodic part comes from the stream
    function psi with Laplace(psi) = B - mean_field, A_per = (-d2 psi, d1 psi),
    and has zero mean per component.
    """

    mean_field: float
    psi: PeriodicScalarField
    a_per1: PeriodicScalarField
    a_per2: PeriodicScalarField
    orientation: str = "x1"

    def __post_init__(self):
        if self.orientation not in ("x1", "x2"):
            raise ValueError("orientation must be 'x1' or 'x2'")

    def curl_defect(self, field):
        """max |dA - B| / max |B| on the (2M+1)-point grid (exact modes)."""
        n = 2 * field.max_mode + 1
        curl_per = self.a_per2.derivative(1, 0).grid_values(n) - self.a_per1.derivative(
            0, 1
        ).grid_values(n)
        b = field.grid_values(n)
        scale = max(np.max(np.abs(b)), 1e-300)
        return float(np.max(np.abs(curl_per + self.mean_field - b)) / scale)

    def vector_potential_max(self, n=None):
        """sup of |A| over the cell (linear part centered, so <= |B|/2 there)."""
        n = n or max(64, 4 * self.psi.max_mode + 4)
        x = (np.arange(n) + 0.5) / n
        x1, x2 = np.meshgrid(x, x, indexing="ij")
        a1 = self.a_per1.eval(x1, x2)
        a2 = self.a_per2.eval(x1, x2)
        if self.orientation == "x1":
            a2 = a2 + self.mean_field * (x1 - 0.5)
        else:
            a1 = a1 - self.mean_field * (x2 - 0.5)
        return float(np.max(np.hypot(a1, a2)))


def build_gauge(field, h, orientation="x1"):
    """Stream-function + Landau cell gauge; requires integer effective flux."""
    _require_integer_flux(field, h)
    big = field.max_mode
    ms = np.arange(-big, big + 1)
    m_grid, n_grid = np.meshgrid(ms, ms, indexing="ij")
    lap = -4.0 * np.pi**2 * (m_grid**2 + n_grid**2).astype(float)
    psi_coeffs = np.zeros_like(field.coeffs)
    mask = lap != 0
    psi_coeffs[mask] = field.coeffs[mask] / lap[mask]
    psi = PeriodicScalarField(big, psi_coeffs)
    a_per1 = psi.derivative(0, 1)
    a_per1 = PeriodicScalarField(big, -a_per1.coeffs)
    a_per2 = psi.derivative(1, 0)
    gauge = CellGauge(
        mean_field=field.total_flux,
        psi=psi,
        a_per1=a_per1,
        a_per2=a_per2,
        orientation=orientation,
    )
    defect = gauge.curl_defect(field)
    if defect > 1e-12:
        raise AssertionError(f"curl reproduction defect {defect:.3e}")
    return gauge


@dataclass(frozen=True)
class BlochProblem:
    """One quasimomentum fiber: field, h, theta, cell grid and gauge."""

    field: PeriodicScalarField
    h: float
    theta: tuple
    grid_n: int
    gauge: CellGauge

    def __post_init__(self):
        _require_integer_flux(self.field, self.h)
        if self.grid_n < 8:
            raise ValueError("grid_n must be >= 8")

    @property
    def spacing(self):
        return 1.0 / self.grid_n


def min_grid_for(gauge, h):
    """Smallest grid satisfying the phase-aliasing guard a <= h/(4 max|A|)."""
    amax = gauge.vector_potential_max()
    if amax == 0:
        return 8
    return int(np.ceil(4.0 * amax / h))


def _gauss_line_integral(field_component, x1, x2, axis, spacing):
    acc = np.zeros_like(x1)
    for t, wgt in zip(GAUSS3_NODES, GAUSS3_WEIGHTS):
        if axis == 0:
            acc += wgt * field_component.eval(x1 + t * spacing, x2)
        else:
            acc += wgt * field_component.eval(x1, x2 + t * spacing)
    return spacing * acc


def assemble_bloch(problem):
    """Periodic five-point Peierls stencil with magnetic boundary phases.

    Wraparound links carry exp(i theta_l) plus the Landau matching factor of
    the chosen orientation (centered, which keeps the two orientations'
    fiber spectra aligned at identical theta for every integer flux).
    """
    gauge = problem.gauge
    n = problem.grid_n
    a = problem.spacing
    h = problem.h
    bbar = gauge.mean_field

    amax = gauge.vector_potential_max()
    if amax > 0 and a > h / (4.0 * amax):
        raise ResolutionError(
            f"grid spacing {a:.4g} exceeds h/(4 max|A|) = {h / (4 * amax):.4g}: "
            f"need grid_n >= {min_grid_for(gauge, h)}"
        )

    w = h * h / (a * a)
    xi = a * np.arange(n)
    x1, x2 = np.meshgrid(xi, xi, indexing="ij")

    phi_x = _gauss_line_integral(gauge.a_per1, x1, x2, axis=0, spacing=a)
    phi_y = _gauss_line_integral(gauge.a_per2, x1, x2, axis=1, spacing=a)
    if gauge.orientation == "x1":
        phi_y = phi_y + a * bbar * (x1 - 0.5)
    else:
        phi_x = phi_x - a * bbar * (x2 - 0.5)

    tx = -w * np.exp(-1j * phi_x / h)
    ty = -w * np.exp(-1j * phi_y / h)

    th1, th2 = problem.theta
    if gauge.orientation == "x1":
        tx[-1, :] *= np.exp(1j * (th1 + bbar * (xi - 0.5) / h))
        ty[:, -1] *= np.exp(1j * th2)
    else:
        tx[-1, :] *= np.exp(1j * th1)
        ty[:, -1] *= np.exp(1j * (th2 - bbar * (xi - 0.5) / h))

    diag = np.full((n, n), 4.0 * w)
    return SparseHermitianOperator.from_stencil(diag, tx, ty, kind="periodic", w1=w, w2=w)


def _solve_to_cutoff(problem, cutoff, options):
    """All fiber eigenvalues <= cutoff, growing m until the slice tops out."""
    op = assemble_bloch(problem)
    h = problem.h
    m = max(4, int(np.ceil(1.2 * cutoff / (4.0 * np.pi * h * h))) + 2)
    cap = op.dim // 4 - 1
    while True:
        m = min(m, cap)
        opts = EigOptions(
            m=m,
            tol=options.tol,
            max_iter=options.max_iter,
            seed=options.seed,
            preconditioner=options.preconditioner,
        )
        slc = lowest_eigs(op, opts)
        if slc.top > cutoff or m == cap:
            meta = dict(slc.meta)
            meta.pop("vectors", None)
            meta.update(h=h, grid_n=problem.grid_n, theta=tuple(problem.theta))
            keep = slc.eigenvalues <= cutoff
            return type(slc)(
                eigenvalues=slc.eigenvalues[keep],
                residuals=slc.residuals[keep],
                meta=meta,
            )
        m = int(np.ceil(1.6 * m)) + 4


@dataclass(frozen=True)
class BandSpectrum:
    """Fiber spectra per theta sample plus their band-merged union."""

    slices: dict
    cutoff: float
    delta: float
    merged_bands: list
    meta: dict = dc_field(default_factory=dict)

    def all_eigenvalues(self):
        return np.sort(np.concatenate([s.eigenvalues for s in self.slices.values()]))


def _merge_to_bands(values, delta):
    bands = []
    if len(values) == 0:
        return bands
    lo = hi = values[0]
    for v in values[1:]:
        if v - hi <= delta:
            hi = v
        else:
            bands.append((float(lo), float(hi)))
            lo = hi = v
    bands.append((float(lo), float(hi)))
    return bands


def _theta_worker(payload):
    (idx, coeffs, max_mode, h, theta, grid_n, cutoff, orientation, opts_kw) = payload
    field = PeriodicScalarField(max_mode, coeffs)
    gauge = build_gauge(field, h, orientation=orientation)
    problem = BlochProblem(field=field, h=h, theta=theta, grid_n=grid_n, gauge=gauge)
    return idx, _solve_to_cutoff(problem, cutoff, EigOptions(m=4, **opts_kw))


def _worker_count():
    cap = int(os.environ.get("MAGNETIC_GAPS_THREADS", "1") or "0")
    if cap == 0:
        cap = os.cpu_count() or 1
    return max(1, cap)


def bloch_spectrum(
    field,
    h,
    theta_samples=8,
    cutoff=None,
    grid_n=None,
    band_delta=None,
    orientation="x1",
    options=None,
    workers=None,
):
    """Sweep the theta grid, solve each fiber to the cutoff, merge bands.

    The sweep is a parallel map over independent fiber solves; results are
    reduced in theta-index order so the output is execution-order free.
    """
    _require_integer_flux(field, h)
    gauge = build_gauge(field, h, orientation=orientation)
    if grid_n is None:
        grid_n = max(48, min_grid_for(gauge, h))
    spacing = 1.0 / grid_n
    validity_top = 0.1 * h * h / spacing**2
    if cutoff is None:
        cutoff = validity_top
    if cutoff > validity_top:
        raise ResolutionError(
            f"cutoff {cutoff:.4g} above the discretization validity top "
            f"{validity_top:.4g}; refine the grid"
        )
    options = options or EigOptions(m=4)
    opts_kw = dict(
        tol=options.tol,
        max_iter=options.max_iter,
        seed=options.seed,
        preconditioner=options.preconditioner,
    )
    thetas = TWO_PI * np.arange(theta_samples) / theta_samples
    jobs = []
    for i1 in range(theta_samples):
        for i2 in range(theta_samples):
            jobs.append(
                (
                    (i1, i2),
                    field.coeffs,
                    field.max_mode,
                    h,
                    (float(thetas[i1]), float(thetas[i2])),
                    grid_n,
                    cutoff,
                    orientation,
                    opts_kw,
                )
            )

    workers = workers if workers is not None else _worker_count()
    results = {}
    failures = []
    if workers > 1 and len(jobs) > 1:
        import multiprocessing as mp

        with ProcessPoolExecutor(
            max_workers=workers, mp_context=mp.get_context("spawn")
        ) as pool:
            for payload, fut in [(j, pool.submit(_theta_worker, j)) for j in jobs]:
                try:
                    idx, slc = fut.result()
                    results[idx] = slc
                except Exception as exc:  # noqa: BLE001 - collected into PartialSweep
                    failures.append((payload[0], repr(exc)))
    else:
        for payload in jobs:
            try:
                idx, slc = _theta_worker(payload)
                results[idx] = slc
            except Exception as exc:  # noqa: BLE001
                failures.append((payload[0], repr(exc)))
    if failures:
        raise PartialSweep(failures)

    delta = band_delta if band_delta is not None else 1e-3 * cutoff
    ordered = [results[idx] for idx in sorted(results)]
    all_vals = np.sort(np.concatenate([s.eigenvalues for s in ordered]))
    bands = _merge_to_bands(all_vals[all_vals <= cutoff], delta)

    lipschitz = 0.0
    if theta_samples >= 2:
        dtheta = TWO_PI / theta_samples
        for i1 in range(theta_samples):
            for i2 in range(theta_samples):
                here = results[(i1, i2)].eigenvalues
                for nb in (((i1 + 1) % theta_samples, i2), (i1, (i2 + 1) % theta_samples)):
                    there = results[nb].eigenvalues
                    k = min(len(here), len(there))
                    if k:
                        lipschitz = max(
                            lipschitz, float(np.max(np.abs(here[:k] - there[:k]))) / dtheta
                        )

    return BandSpectrum(
        slices=results,
        cutoff=float(cutoff),
        delta=float(delta),
        merged_bands=bands,
        meta={
            "h": h,
            "grid_n": grid_n,
            "theta_samples": theta_samples,
            "orientation": orientation,
            "lipschitz": lipschitz,
            "flux": _require_integer_flux(field, h),
        },
    )


def detect_gaps(bands, rescale_exponent, h):
    """Complement of the merged bands in (0, cutoff), in rescaled units."""
    scale = h**rescale_exponent
    top = bands.cutoff / scale
    gaps = []
    prev = 0.0
    for lo, hi in bands.merged_bands:
        lo_r, hi_r = lo / scale, hi / scale
        if lo_r > prev:
            gaps.append((max(prev, 0.0), min(lo_r, top)))
        prev = max(prev, hi_r)
    if prev < top:
        gaps.append((prev, top))
    return [(a, b) for a, b in gaps if b > a]
