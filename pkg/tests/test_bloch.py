import numpy as np
import pytest

from magnetic_gaps.bloch import (
    BlochProblem,
    assemble_bloch,
    bloch_spectrum,
    build_gauge,
    detect_gaps,
    effective_flux,
    min_grid_for,
)
from magnetic_gaps.eig import EigOptions, lowest_eigs
from magnetic_gaps.errors import NonIntegerFlux, PartialSweep, ResolutionError
from magnetic_gaps.fields import PeriodicScalarField

PI = np.pi


def constant_field(b=2 * PI):
    return PeriodicScalarField.constant(b)


# -- gauge --------------------------------------------------------------------


def test_build_gauge_constant_field():
    g = build_gauge(constant_field(), 0.25)
    assert g.mean_field == pytest.approx(2 * PI)
    assert np.all(g.a_per1.coeffs == 0) and np.all(g.a_per2.coeffs == 0)


def test_build_gauge_stream_function(test_field):
    g = build_gauge(test_field, 0.25)
    # psi modes: -B_mn / (4 pi^2 (m^2+n^2)) at (±1,±1)
    expected = (PI / 2) / (8 * PI**2)
    assert g.psi.mode(1, 1) == pytest.approx(expected, rel=1e-12)
    assert g.curl_defect(test_field) < 1e-12
    # zero mean per component
    assert g.a_per1.total_flux == pytest.approx(0.0, abs=1e-15)
    assert g.a_per2.total_flux == pytest.approx(0.0, abs=1e-15)


def test_non_integer_flux_rejected(test_field):
    n = 4
    bad_h = 1.0 / (n + 0.5e-3)
    with pytest.raises(NonIntegerFlux) as exc:
        build_gauge(test_field, bad_h)
    assert "nearest admissible" in str(exc.value)
    assert effective_flux(test_field, 1.0 / n) == pytest.approx(n)


def test_resolution_guard(test_field):
    h = 0.25
    g = build_gauge(test_field, h)
    n_min = min_grid_for(g, h)
    with pytest.raises(ResolutionError):
        assemble_bloch(
            BlochProblem(field=test_field, h=h, theta=(0.0, 0.0), grid_n=n_min - 8, gauge=g)
        )


# -- fiber spectra -------------------------------------------------------------


def test_free_field_discrete_symbol_exact():
    f = constant_field(0.0)
    h, n = 1.0, 20
    g = build_gauge(f, h)
    for theta in ((0.0, 0.0), (1.3, 2.1), (4.0, 5.5)):
        op = assemble_bloch(BlochProblem(field=f, h=h, theta=theta, grid_n=n, gauge=g))
        slc = lowest_eigs(op, EigOptions(m=5, seed=0, tol=1e-10))
        p = np.arange(n)
        sym = np.add.outer(
            2 - 2 * np.cos((2 * PI * p + theta[0]) / n),
            2 - 2 * np.cos((2 * PI * p + theta[1]) / n),
        ).ravel() * (h * n) ** 2
        exact = np.sort(sym)[:5]
        assert np.max(np.abs(slc.eigenvalues - exact)) < 1e-8 * op.norm_estimate


def test_landau_levels_and_degeneracy():
    f = constant_field()
    h = 0.25  # Q = 4
    g = build_gauge(f, h)
    n = max(48, min_grid_for(g, h))
    op = assemble_bloch(BlochProblem(field=f, h=h, theta=(0.7, 1.9), grid_n=n, gauge=g))
    assert op.hermiticity_defect() <= 1e-13
    slc = lowest_eigs(op, EigOptions(m=9, seed=0))
    for level in range(2):
        vals = slc.eigenvalues[4 * level : 4 * level + 4]
        assert np.ptp(vals) < 1e-6 * vals[0]  # Q-fold degenerate
        assert vals[0] == pytest.approx((2 * level + 1) * 2 * PI * h, rel=5e-3)


def test_gauge_orientation_invariance(test_field):
    h = 0.25
    gx = build_gauge(test_field, h, orientation="x1")
    gy = build_gauge(test_field, h, orientation="x2")
    n = max(min_grid_for(gx, h), min_grid_for(gy, h), 48)
    for theta in ((0.0, 0.0), (1.0, 2.5), (5.1, 0.3)):
        s1 = lowest_eigs(
            assemble_bloch(BlochProblem(field=test_field, h=h, theta=theta, grid_n=n, gauge=gx)),
            EigOptions(m=4, seed=0, tol=1e-10),
        )
        s2 = lowest_eigs(
            assemble_bloch(BlochProblem(field=test_field, h=h, theta=theta, grid_n=n, gauge=gy)),
            EigOptions(m=4, seed=1, tol=1e-10),
        )
        assert np.max(np.abs(s1.eigenvalues - s2.eigenvalues) / s1.eigenvalues) < 1e-9


def test_flux_shift_symmetry(test_field):
    h = 0.5
    g = build_gauge(test_field, h)
    n = max(min_grid_for(g, h), 48)
    th = (0.8, 1.7)
    s1 = lowest_eigs(
        assemble_bloch(BlochProblem(field=test_field, h=h, theta=th, grid_n=n, gauge=g)),
        EigOptions(m=4, seed=0),
    )
    shifted = (th[0] + 2 * PI, th[1])
    s2 = lowest_eigs(
        assemble_bloch(BlochProblem(field=test_field, h=h, theta=shifted, grid_n=n, gauge=g)),
        EigOptions(m=4, seed=0),
    )
    assert np.max(np.abs(s1.eigenvalues - s2.eigenvalues)) < 1e-9 * op_norm(s1)


def op_norm(slc):
    return slc.meta["norm_estimate"]


# -- sweeps and bands -----------------------------------------------------------


def test_bloch_spectrum_landau_flat_band():
    f = constant_field()
    h = 0.25
    bands = bloch_spectrum(
        f, h, theta_samples=2, cutoff=2.0, options=EigOptions(m=4, seed=0), workers=1
    )
    assert len(bands.merged_bands) == 1
    lo, hi = bands.merged_bands[0]
    center = 0.5 * (lo + hi)
    assert center == pytest.approx(PI / 2, rel=0.01)
    assert (hi - lo) < 0.01 * center  # flat to 1% of the level
    assert bands.meta["flux"] == 4
    assert bands.meta["lipschitz"] * (2 * PI / 2) < 0.01 * center  # theta-continuity


def test_bloch_spectrum_free_field_bands():
    f = constant_field(0.0)
    bands = bloch_spectrum(
        f, 1.0, theta_samples=3, cutoff=50.0, grid_n=24, options=EigOptions(m=4, seed=0), workers=1
    )
    # ground band touches zero (theta = 0 fiber) and stays below the cutoff
    assert bands.merged_bands[0][0] == pytest.approx(0.0, abs=1e-9 * 4608)
    assert bands.merged_bands[-1][1] <= 50.0
    # band invariants: every eigenvalue below cutoff covered, bands disjoint
    for slc in bands.slices.values():
        for v in slc.eigenvalues[slc.eigenvalues <= bands.cutoff]:
            assert any(lo - 1e-12 <= v <= hi + 1e-12 for lo, hi in bands.merged_bands)
    for (_, hi), (lo, _) in zip(bands.merged_bands[:-1], bands.merged_bands[1:]):
        assert lo - hi >= bands.delta


def test_bloch_spectrum_cutoff_guard(test_field):
    with pytest.raises(ResolutionError):
        bloch_spectrum(test_field, 0.25, theta_samples=1, cutoff=1e9, grid_n=48, workers=1)


def test_partial_sweep_reports_failures(test_field, monkeypatch):
    import magnetic_gaps.bloch as bloch_mod

    real_worker = bloch_mod._theta_worker

    def flaky(payload):
        if payload[0] == (0, 1):
            raise RuntimeError("synthetic solver failure")
        return real_worker(payload)

    monkeypatch.setattr(bloch_mod, "_theta_worker", flaky)
    with pytest.raises(PartialSweep) as exc:
        bloch_spectrum(
            test_field, 0.5, theta_samples=2, cutoff=3.0, grid_n=48,
            options=EigOptions(m=4, seed=0), workers=1,
        )
    assert exc.value.failures[0][0] == (0, 1)


def test_parallel_sweep_matches_serial(test_field):
    kw = dict(theta_samples=2, cutoff=3.0, grid_n=48, options=EigOptions(m=4, seed=0))
    serial = bloch_spectrum(test_field, 0.5, workers=1, **kw)
    parallel = bloch_spectrum(test_field, 0.5, workers=2, **kw)
    for idx in serial.slices:
        assert np.array_equal(
            serial.slices[idx].eigenvalues, parallel.slices[idx].eigenvalues
        )
    assert serial.merged_bands == parallel.merged_bands


def test_detect_gaps_and_rescale():
    f = constant_field()
    h = 0.25
    bands = bloch_spectrum(
        f, h, theta_samples=2, cutoff=8 * 2 * PI * h, options=EigOptions(m=4, seed=0), workers=1
    )
    gaps = detect_gaps(bands, rescale_exponent=1.0, h=h)
    # rescaled Landau levels at 2pi(2m+1): gaps must cover the voids between
    centers = [2 * PI * (2 * m + 1) for m in range(3)]
    for lo, hi in zip(centers[:-1], centers[1:]):
        assert any(a < 0.5 * (lo + hi) < b for a, b in gaps)
    flat = [(0.0, bands.cutoff)]
    empty = detect_gaps(
        type(bands)(
            slices=bands.slices,
            cutoff=bands.cutoff,
            delta=bands.delta,
            merged_bands=flat,
            meta=bands.meta,
        ),
        1.0,
        h,
    )
    assert empty == []
