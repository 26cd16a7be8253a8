"""End-to-end verification: model ladders vs rescaled Bloch spectra.

For a field with zeros of common order k, the rescaled spectrum
eig(H^h)/h^((2k+2)/(k+2)) must cluster near the model ladder {lambda_m} and
leave the windows strictly between consecutive ladder values empty once h
is small enough. The h schedule is tied to integer flux: h = c00/(2 pi N).
"""

import os
import time
from dataclasses import dataclass, field as dc_field

import numpy as np

from .bloch import bloch_spectrum, build_gauge, min_grid_for
from .eig import EigOptions
from .errors import InvalidConfig, MagneticGapsError
from .fields import analyze_zeros, load_field
from .intervals import gap_exponent
from .model_op import default_problem, merge_multiplets, model_spectrum, poincare_gauge

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class VerificationConfig:
    field_path: str
    n_schedule: tuple
    theta_samples: int = 8
    grid_n: int = 0  # 0 = auto rule
    model_levels: int = 2
    cutoff_multiplier: float = 1.5
    margin: float = 0.1
    output_dir: str = "gap_report"
    n_min_pass: int = 0  # 0 = the largest N of the schedule
    seed: int = 0
    solver_tol: float = 1e-8
    svg: bool = False
    workers: int = 0  # 0 = MAGNETIC_GAPS_THREADS / cpu count

    def __post_init__(self):
        sched = tuple(int(n) for n in self.n_schedule)
        object.__setattr__(self, "n_schedule", sched)
        if not sched:
            raise InvalidConfig("empty N schedule")
        if any(b <= a for a, b in zip(sched, sched[1:])):
            raise InvalidConfig("N schedule must be strictly increasing")
        if not 0 < self.margin < 0.5:
            raise InvalidConfig("margin fraction must lie in (0, 1/2)")
        if self.model_levels < 2:
            raise InvalidConfig("model_levels must be >= 2 (need at least one gap)")

    @classmethod
    def from_file(cls, path):
        kv = {}
        with open(path, "r", encoding="utf-8") as fh:
            for raw in fh:
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise InvalidConfig(f"{path}: expected 'key = value', got {line!r}")
                key, val = (s.strip() for s in line.split("=", 1))
                kv[key] = val
        try:
            sched = tuple(int(tok) for tok in kv.pop("n_schedule").replace(",", " ").split())
        except KeyError as exc:
            raise InvalidConfig(f"{path}: missing n_schedule") from exc
        known = {
            "field": ("field_path", str),
            "theta_samples": ("theta_samples", int),
            "grid_n": ("grid_n", int),
            "model_levels": ("model_levels", int),
            "cutoff_multiplier": ("cutoff_multiplier", float),
            "margin": ("margin", float),
            "output_dir": ("output_dir", str),
            "n_min_pass": ("n_min_pass", int),
            "seed": ("seed", int),
            "solver_tol": ("solver_tol", float),
            "svg": ("svg", lambda s: s.lower() in ("1", "true", "yes")),
            "workers": ("workers", int),
        }
        kwargs = {"n_schedule": sched}
        for key, val in kv.items():
            if key not in known:
                raise InvalidConfig(f"{path}: unknown key {key!r}")
            name, conv = known[key]
            kwargs[name] = conv(val)
        if "field_path" not in kwargs:
            raise InvalidConfig(f"{path}: missing field")
        return cls(**kwargs)


@dataclass(frozen=True)
class ModelLadder:
    """Sorted distinct rescaled model levels, the union over all zeros."""

    values: tuple
    orders: tuple  # vanishing order per zero
    merge_scale: float

    @property
    def top(self):
        return self.values[-1]


def build_model_ladder(zero_data, m, options=None, box_lengths=6.0, points_per_length=16):
    """Lowest m distinct values of the union of per-zero model spectra at h=1.

    zero_data: list of ZeroDatum (from fields.analyze_zeros) or a
    PeriodicScalarField, in which case the zeros are analyzed first.
    """
    if hasattr(zero_data, "coeffs"):
        zero_data = analyze_zeros(zero_data)
    if not zero_data:
        raise InvalidConfig("field has no zeros; the model ladder is empty")
    per_zero = []
    merge = 0.0
    # per-zero levels requested: enough that the union has m distinct values
    for datum in zero_data:
        gauge = poincare_gauge(datum.leading_form)
        problem = default_problem(
            gauge, 1.0, box_lengths=box_lengths, points_per_length=points_per_length
        )
        opts = options or EigOptions(m=m + 2)
        slc = model_spectrum(problem, m + 2, options=opts, box_check=False)
        per_zero.append(slc)
        merge = max(merge, 2.0 * slc.meta["tol"] * slc.meta["norm_estimate"])
    union = np.sort(np.concatenate([s.eigenvalues for s in per_zero]))
    distinct = merge_multiplets(union, merge)
    if len(distinct) < m:
        raise InvalidConfig(f"only {len(distinct)} distinct model levels below validity")
    return ModelLadder(
        values=tuple(distinct[:m]),
        orders=tuple(d.order for d in zero_data),
        merge_scale=merge,
    )


def predict_intervals(ladder_values, margin):
    """Windows (a, b) strictly inside each consecutive ladder gap."""
    vals = list(ladder_values)
    if len(vals) < 2:
        raise InvalidConfig("need at least two ladder values to predict a gap")
    out = []
    for m, (lo, hi) in enumerate(zip(vals[:-1], vals[1:]), start=1):
        gap = hi - lo
        out.append({"m": m, "a": lo + margin * gap, "b": hi - margin * gap})
    return out


@dataclass(frozen=True)
class NRow:
    """Verification outcome for one flux integer N."""

    n: int
    h: float
    grid_n: int
    theta_samples: int
    cutoff_abs: float
    bands_abs: tuple  # merged bands in absolute energy units
    rescaled: tuple  # all rescaled fiber eigenvalues
    clusters: tuple  # per ladder level: (center, width, count)
    interval_results: tuple  # per interval: (empty, min_dist)
    ground_deviation: float
    stray_fraction: float
    wall_time: float


@dataclass(frozen=True)
class GapReport:
    ladder: ModelLadder
    intervals: tuple
    exponent: float
    rows: tuple
    n_min_pass: int
    passed: bool
    n0: int  # smallest N from which all later rows are clean; -1 if never
    partial: bool = False
    error: str = ""
    provenance: dict = dc_field(default_factory=dict)


def _evaluate_bands(bands_abs, ladder_values, intervals, exponent, h, theta_count, rescaled):
    """Clusters, interval verdicts and stray measure from one N's band data."""
    vals = np.asarray(rescaled)
    ladder = list(ladder_values)
    mids = [0.0] + [0.5 * (a + b) for a, b in zip(ladder[:-1], ladder[1:])]
    mids.append(ladder[-1] + 0.5 * (ladder[-1] - mids[-1]))
    clusters = []
    for i, lam in enumerate(ladder):
        sel = vals[(vals >= mids[i]) & (vals < mids[i + 1])]
        if len(sel):
            clusters.append((float(np.mean(sel)), float(np.max(sel) - np.min(sel)), len(sel)))
        else:
            clusters.append((float("nan"), float("nan"), 0))
    results = []
    for itv in intervals:
        inside = vals[(vals > itv["a"]) & (vals < itv["b"])]
        if len(inside):
            results.append((False, 0.0))
        else:
            below = vals[vals <= itv["a"]]
            above = vals[vals >= itv["b"]]
            d = min(
                float(itv["a"] - below.max()) if len(below) else float("inf"),
                float(above.min() - itv["b"]) if len(above) else float("inf"),
            )
            results.append((True, d))
    lam1 = ladder[0]
    delta = intervals[0]["a"] - lam1  # margin * first gap
    b1 = intervals[0]["b"]
    stray = np.sum((vals <= b1) & (np.abs(vals - lam1) > delta)) / max(theta_count, 1)
    ground_dev = abs(clusters[0][0] - lam1) if clusters[0][2] else float("inf")
    return tuple(clusters), tuple(results), float(ground_dev), float(stray)


def auto_grid(n_flux, gauge, h):
    """Per-h grid rule: magnetic-length tracking floor plus the phase guard."""
    return max(48, int(np.ceil(32.0 * np.sqrt(n_flux))), min_grid_for(gauge, h))


def run_verification(config, zero_data=None):
    """Theta-swept Bloch spectra along the N schedule, checked against the ladder.

    zero_data normally comes from analyzing the field's zeros; tests may
    inject synthetic data (e.g. a constant leading form of order 0, whose
    ladder is the closed-form Landau sequence).
    """
    t0 = time.monotonic()
    field = load_field(config.field_path)
    c00 = field.total_flux
    if c00 <= 0:
        raise InvalidConfig("field must carry positive total flux c00")

    if zero_data is None:
        zero_data = analyze_zeros(field)
    orders = {d.order for d in zero_data}
    if len(orders) != 1:
        raise InvalidConfig(f"zeros have mixed vanishing orders {sorted(orders)}")
    k = orders.pop()
    exponent = gap_exponent(k)

    opts = EigOptions(m=4, tol=config.solver_tol, seed=config.seed)
    ladder = build_model_ladder(
        zero_data,
        config.model_levels,
        options=EigOptions(m=config.model_levels + 2, tol=config.solver_tol, seed=config.seed),
    )
    intervals = predict_intervals(ladder.values, config.margin)

    rows = []
    partial = False
    err = ""
    for n in config.n_schedule:
        h = c00 / (TWO_PI * n)
        gauge = build_gauge(field, h)
        grid_n = config.grid_n or auto_grid(n, gauge, h)
        cutoff = config.cutoff_multiplier * ladder.top * h**exponent
        t_row = time.monotonic()
        try:
            bands = bloch_spectrum(
                field,
                h,
                theta_samples=config.theta_samples,
                cutoff=cutoff,
                grid_n=grid_n,
                options=opts,
                workers=config.workers or None,
            )
        except MagneticGapsError as exc:
            partial = True
            err = f"N={n}: {exc!r}"
            break
        rescaled = bands.all_eigenvalues() / h**exponent
        clusters, itv_results, ground_dev, stray = _evaluate_bands(
            bands.merged_bands,
            ladder.values,
            intervals,
            exponent,
            h,
            config.theta_samples**2,
            rescaled,
        )
        rows.append(
            NRow(
                n=n,
                h=h,
                grid_n=grid_n,
                theta_samples=config.theta_samples,
                cutoff_abs=cutoff,
                bands_abs=tuple(bands.merged_bands),
                rescaled=tuple(float(v) for v in rescaled),
                clusters=clusters,
                interval_results=itv_results,
                ground_deviation=ground_dev,
                stray_fraction=stray,
                wall_time=time.monotonic() - t_row,
            )
        )

    n_min_pass = config.n_min_pass or config.n_schedule[-1]
    passed = (not partial) and all(
        all(res[0] for res in row.interval_results)
        for row in rows
        if row.n >= n_min_pass
    )
    n0 = -1
    for i, row in enumerate(rows):
        if all(all(r[0] for r in rw.interval_results) for rw in rows[i:]):
            n0 = row.n
            break
    report = GapReport(
        ladder=ladder,
        intervals=tuple(intervals),
        exponent=exponent,
        rows=tuple(rows),
        n_min_pass=n_min_pass,
        passed=passed,
        n0=n0,
        partial=partial,
        error=err,
        provenance={
            "field": config.field_path,
            "solver_tol": config.solver_tol,
            "seed": config.seed,
            "k": k,
            "total_wall_time": time.monotonic() - t0,
        },
    )
    if config.output_dir:
        write_report(report, config)
    return report


def rederive_verdicts(report):
    """Recompute every row's verdicts from its stored band data."""
    out = []
    for row in report.rows:
        clusters, results, ground_dev, stray = _evaluate_bands(
            row.bands_abs,
            report.ladder.values,
            list(report.intervals),
            report.exponent,
            row.h,
            row.theta_samples**2,
            np.asarray(row.rescaled),
        )
        out.append(
            {
                "n": row.n,
                "clusters": clusters,
                "interval_results": results,
                "ground_deviation": ground_dev,
                "stray_fraction": stray,
            }
        )
    return out


def _fmt(x):
    return f"{x:.17g}"


def write_report(report, config):
    """report.csv, bands_N<k>.csv, summary.txt and optional spectrum.svg."""
    outdir = config.output_dir
    os.makedirs(outdir, exist_ok=True)

    header = ["n", "h", "grid_n", "theta_samples", "cutoff", "ground_center", "ground_width"]
    header += ["ground_count", "ground_deviation", "stray_fraction"]
    for i in range(len(report.intervals)):
        header += [f"a_{i+1}", f"b_{i+1}", f"empty_{i+1}", f"min_dist_{i+1}"]
    lines = [",".join(header)]
    for row in report.rows:
        cells = [
            str(row.n),
            _fmt(row.h),
            str(row.grid_n),
            str(row.theta_samples),
            _fmt(row.cutoff_abs),
            _fmt(row.clusters[0][0]),
            _fmt(row.clusters[0][1]),
            str(row.clusters[0][2]),
            _fmt(row.ground_deviation),
            _fmt(row.stray_fraction),
        ]
        for itv, (empty, dist) in zip(report.intervals, row.interval_results):
            cells += [_fmt(itv["a"]), _fmt(itv["b"]), "1" if empty else "0", _fmt(dist)]
        lines.append(",".join(cells))
    with open(os.path.join(outdir, "report.csv"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")

    for row in report.rows:
        with open(os.path.join(outdir, f"bands_N{row.n}.csv"), "w", encoding="utf-8") as fh:
            fh.write("lo,hi\n")
            for lo, hi in row.bands_abs:
                fh.write(f"{_fmt(lo)},{_fmt(hi)}\n")

    with open(os.path.join(outdir, "summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(f"generated: {time.strftime('%Y-%m-%d %H:%M:%S')}\n")
        fh.write(f"field: {config.field_path}\n")
        fh.write(f"vanishing order k = {report.provenance['k']}, ")
        fh.write(f"rescale exponent = {_fmt(report.exponent)}\n")
        fh.write("model ladder: " + ", ".join(_fmt(v) for v in report.ladder.values) + "\n")
        for itv in report.intervals:
            fh.write(f"predicted gap {itv['m']}: ({_fmt(itv['a'])}, {_fmt(itv['b'])})\n")
        for row in report.rows:
            verdicts = " ".join(
                f"[{i+1}:{'empty' if res[0] else 'HIT'}]"
                for i, res in enumerate(row.interval_results)
            )
            fh.write(
                f"N={row.n} h={row.h:.6g} grid={row.grid_n} "
                f"ground={row.clusters[0][0]:.6g}+-{row.clusters[0][1]:.3g} "
                f"dev={row.ground_deviation:.3g} {verdicts} "
                f"({row.wall_time:.1f}s)\n"
            )
        fh.write(f"empirical N0 = {report.n0}\n")
        if report.partial:
            fh.write(f"PARTIAL: {report.error}\n")
        fh.write("PASS\n" if report.passed else "FAIL\n")

    if config.svg:
        from .svgplot import spectrum_svg

        spectrum_svg(report, os.path.join(outdir, "spectrum.svg"))
