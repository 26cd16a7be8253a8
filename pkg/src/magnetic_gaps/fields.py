"""Periodic magnetic fields on the unit 2-torus and their zero structure.

A field is a truncated Fourier series B(x, y) = sum c_mn exp(2*pi*i(m x + n y))
over |m|, |n| <= M with the reality constraint c_{-m,-n} = conj(c_mn).
Keeping the exact trigonometric representation makes differentiation, flux
and Taylor extraction closed-form, so vanishing-order detection never relies
on numerical differentiation.
"""

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import DegenerateZeroSet, LowerBoundFailure, NewtonDivergence, NonIntegerOrder

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class PeriodicScalarField:
    """Real trigonometric polynomial on the unit torus (field strength b12)."""

    max_mode: int
    coeffs: np.ndarray  # (2M+1, 2M+1) complex, index [m + M, n + M]

    def __post_init__(self):
        m = self.max_mode
        if m < 0:
            raise ValueError("max_mode must be >= 0")
        arr = np.asarray(self.coeffs, dtype=complex)
        if arr.shape != (2 * m + 1, 2 * m + 1):
            raise ValueError(f"coeffs must have shape {(2*m+1, 2*m+1)}")
        scale = np.max(np.abs(arr)) if arr.size else 0.0
        defect = np.max(np.abs(arr - np.conj(arr[::-1, ::-1])))
        if scale > 0 and defect > 1e-12 * scale:
            raise ValueError(f"reality violated: c_-m,-n != conj(c_mn), defect {defect:.3e}")
        # exact symmetrization so evaluations are real to rounding
        arr = 0.5 * (arr + np.conj(arr[::-1, ::-1]))
        arr.flags.writeable = False
        object.__setattr__(self, "coeffs", arr)

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_modes(cls, modes, max_mode=None):
        """Build from {(m, n): c}; missing conjugate partners are filled in.

        When both (m, n) and (-m, -n) are given they must be conjugate
        consistent; giving one half is enough.
        """
        if max_mode is None:
            max_mode = max((max(abs(m), abs(n)) for (m, n) in modes), default=0)
        big = max_mode
        scale = max((abs(c) for c in modes.values()), default=0.0)
        arr = np.zeros((2 * big + 1, 2 * big + 1), dtype=complex)
        for (m, n), c in modes.items():
            if max(abs(m), abs(n)) > big:
                raise ValueError(f"mode {(m, n)} exceeds max_mode {big}")
            partner = modes.get((-m, -n))
            if partner is not None and abs(partner - np.conj(c)) > 1e-12 * max(scale, 1.0):
                raise ValueError(f"modes ({m},{n}) and ({-m},{-n}) are not conjugate")
            arr[m + big, n + big] = c
            arr[-m + big, -n + big] = np.conj(c) if partner is None else partner
        return cls(big, arr)

    @classmethod
    def constant(cls, b):
        return cls.from_modes({(0, 0): complex(b)}, max_mode=0)

    # -- basic queries ------------------------------------------------------

    @property
    def total_flux(self):
        """Integral over the unit cell; equals the (0,0) coefficient exactly."""
        return float(self.coeffs[self.max_mode, self.max_mode].real)

    @property
    def coeff_scale(self):
        return float(np.sum(np.abs(self.coeffs)))

    def mode(self, m, n):
        big = self.max_mode
        return complex(self.coeffs[m + big, n + big])

    def _phase_tables(self, x, y):
        ms = np.arange(-self.max_mode, self.max_mode + 1)
        e1 = np.exp(2j * np.pi * np.multiply.outer(np.asarray(x, dtype=float), ms))
        e2 = np.exp(2j * np.pi * np.multiply.outer(np.asarray(y, dtype=float), ms))
        return e1, e2

    def eval(self, x, y):
        """Pointwise values; broadcasts over array arguments."""
        e1, e2 = self._phase_tables(x, y)
        vals = np.einsum("...m,mn,...n->...", e1, self.coeffs, e2)
        scale = max(self.coeff_scale, 1.0)
        im = np.max(np.abs(vals.imag)) if vals.size else 0.0
        if im > 1e-12 * scale:
            raise AssertionError(f"imaginary residue {im:.3e} exceeds tolerance")
        out = vals.real
        return out if out.shape else float(out)

    def grid_values(self, n):
        """Values on the uniform n x n grid (i/n, j/n); exact for n > 2M."""
        x = np.arange(n) / n
        e1, e2 = self._phase_tables(x, x)
        vals = e1 @ self.coeffs @ e2.T
        return vals.real

    # -- exact transforms ---------------------------------------------------

    def derivative(self, p, q):
        """Field of the exact partial derivative d^p_x d^q_y B."""
        ms = np.arange(-self.max_mode, self.max_mode + 1)
        fac = np.multiply.outer((2j * np.pi * ms) ** p, (2j * np.pi * ms) ** q)
        return PeriodicScalarField(self.max_mode, self.coeffs * fac)

    def shift(self, v):
        """Field translated by v: (shifted B)(x) = B(x - v)."""
        ms = np.arange(-self.max_mode, self.max_mode + 1)
        ph = np.multiply.outer(np.exp(-2j * np.pi * ms * v[0]), np.exp(-2j * np.pi * ms * v[1]))
        return PeriodicScalarField(self.max_mode, self.coeffs * ph)


@dataclass(frozen=True)
class ZeroDatum:
    """One isolated zero of the field with its local structure."""

    position: np.ndarray  # point in [0,1)^2
    order: int  # vanishing order k
    leading_form: dict  # {(p, q): c}, homogeneous of degree k
    comp_lower: float
    comp_upper: float
    probe_radius: float

    def __post_init__(self):
        pos = np.array(self.position, dtype=float)
        pos.flags.writeable = False
        object.__setattr__(self, "position", pos)
        if not any(c != 0.0 for c in self.leading_form.values()):
            raise ValueError("leading_form must not vanish identically")
        if not (0.0 < self.comp_lower <= self.comp_upper):
            raise ValueError("need 0 < comp_lower <= comp_upper")


# -- operations --------------------------------------------------------------


def eval_field(field, point):
    """Value of the field at one point of R^2 (periodic continuation)."""
    return field.eval(point[0], point[1])


def _periodic_components(mask):
    """Connected components (8-neighborhood) of a boolean grid on the torus."""
    n = mask.shape[0]
    labels = -np.ones(mask.shape, dtype=int)
    comps = []
    idx = np.argwhere(mask)
    for start in map(tuple, idx):
        if labels[start] >= 0:
            continue
        cid = len(comps)
        stack = [start]
        labels[start] = cid
        members = []
        while stack:
            i, j = stack.pop()
            members.append((i, j))
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    if di == 0 and dj == 0:
                        continue
                    nb = ((i + di) % n, (j + dj) % n)
                    if mask[nb] and labels[nb] < 0:
                        labels[nb] = cid
                        stack.append(nb)
        comps.append(members)
    return comps


def _periodic_diameter(members, n):
    pts = np.array(members, dtype=float) / n
    if len(pts) == 1:
        return 0.0
    diff = pts[:, None, :] - pts[None, :, :]
    diff = np.abs(diff)
    diff = np.minimum(diff, 1.0 - diff)
    return float(np.max(np.hypot(diff[..., 0], diff[..., 1])))


def find_zeros(field, seed_grid=64, tol=1e-10, max_newton=200):
    """Isolated zeros of the field in [0,1)^2, Newton-refined.

    Local minima of |B| on the seed grid start Newton iterations on
    grad |B|^2; converged points with |B| <= tol are kept and deduplicated
    modulo the lattice.
    """
    if seed_grid < 16:
        raise ValueError("seed_grid must be >= 16")
    if tol <= 0:
        raise ValueError("tol must be positive")

    g = seed_grid
    vals = np.abs(field.grid_values(g))

    # isolatedness guard: a sublevel component wider than a few grid cells
    # means the zero set is not a finite point set
    for members in _periodic_components(vals <= tol):
        if _periodic_diameter(members, g) > 4.0 / g:
            raise DegenerateZeroSet(
                f"sublevel set {{|B| <= {tol}}} has a component of diameter "
                f"> {4.0 / g}: zero set is not isolated points"
            )

    is_min = np.ones_like(vals, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            is_min &= vals <= np.roll(np.roll(vals, di, axis=0), dj, axis=1)

    dx, dy = field.derivative(1, 0), field.derivative(0, 1)
    dxx, dxy, dyy = field.derivative(2, 0), field.derivative(1, 1), field.derivative(0, 2)
    scale_b = max(field.coeff_scale, 1e-300)
    scale_db = scale_b * TWO_PI * 2 * max(field.max_mode, 1)
    eps = np.finfo(float).eps

    def refine(x):
        x = np.array(x, dtype=float)
        for _ in range(max_newton):
            b = field.eval(x[0], x[1])
            gx, gy = dx.eval(x[0], x[1]), dy.eval(x[0], x[1])
            grad = 2.0 * b * np.array([gx, gy])
            # stop once the gradient is indistinguishable from rounding
            # noise of the two evaluated factors
            noise = 128.0 * eps * (scale_b * np.hypot(gx, gy) + abs(b) * scale_db)
            if np.hypot(*grad) <= noise:
                return x
            hxx = 2.0 * (gx * gx + b * dxx.eval(x[0], x[1]))
            hxy = 2.0 * (gx * gy + b * dxy.eval(x[0], x[1]))
            hyy = 2.0 * (gy * gy + b * dyy.eval(x[0], x[1]))
            det = hxx * hyy - hxy * hxy
            if abs(det) <= 1e-30 * (scale_db**4):
                if abs(b) <= tol:
                    return x
                raise NewtonDivergence(f"singular Hessian at {x} with |B| = {abs(b):.3e}")
            step = np.array(
                [(hyy * grad[0] - hxy * grad[1]) / det, (hxx * grad[1] - hxy * grad[0]) / det]
            )
            x = x - step
            if np.hypot(*step) <= 1e-13:
                return x
        raise NewtonDivergence(f"no convergence in {max_newton} iterations near {x}")

    found = []
    for i, j in np.argwhere(is_min):
        p = refine((i / g, j / g))
        p = np.mod(p, 1.0)
        if abs(field.eval(p[0], p[1])) > tol:
            continue
        dup = False
        for q in found:
            d = np.abs(p - q)
            d = np.minimum(d, 1.0 - d)
            if np.hypot(*d) < 0.5 / g:
                dup = True
                break
        if not dup:
            found.append(p)
    found.sort(key=lambda p: (round(p[0], 12), round(p[1], 12)))
    return found


def vanishing_order(
    field,
    zero,
    probe_radius=0.05,
    n_angles=64,
    tol=1e-8,
    n_radii=9,
    slope_tol=0.1,
    floor_frac=1e-3,
):
    """Vanishing order k and two-sided comparability constants at a zero.

    Fits the log-log slope of max over angles of |B(zero + r w)| against r
    on a geometric ladder in [probe_radius/4, probe_radius]. The slope must
    sit within slope_tol of an integer; the min/max of |B|/r^k over all
    samples give the comparability constants.
    """
    b0 = abs(field.eval(zero[0], zero[1]))
    if b0 > tol:
        raise ValueError(f"|B(zero)| = {b0:.3e} exceeds {tol}: not a zero")

    radii = np.geomspace(probe_radius / 4.0, probe_radius, n_radii)
    ang = np.linspace(0.0, TWO_PI, n_angles, endpoint=False)
    w = np.stack([np.cos(ang), np.sin(ang)])
    xs = zero[0] + np.multiply.outer(radii, w[0])
    ys = zero[1] + np.multiply.outer(radii, w[1])
    vals = np.abs(field.eval(xs, ys))  # (n_radii, n_angles)

    env = np.max(vals, axis=1)
    slope = float(np.polyfit(np.log(radii), np.log(env), 1)[0])
    k = int(round(slope))
    if abs(slope - k) > slope_tol or k < 1:
        raise NonIntegerOrder(f"log-log slope {slope:.4f} not within {slope_tol} of an integer >= 1")

    ratios = vals / radii[:, None] ** k
    comp_upper = float(np.max(ratios))
    comp_lower = float(np.min(ratios))
    floor = floor_frac * comp_upper
    if np.min(ratios, axis=1).min() < floor:
        raise LowerBoundFailure(
            f"min over angles of |B|/r^{k} fell below {floor:.3e}: "
            "two-sided comparability fails (leading form has a zero direction)"
        )
    return k, comp_lower, comp_upper


def taylor_leading(field, zero, k):
    """Degree-k Taylor form of the field at the zero, by exact differentiation."""
    out = {}
    scale = max(field.coeff_scale, 1.0)
    for p in range(k + 1):
        q = k - p
        d = field.derivative(p, q)
        c = d.eval(zero[0], zero[1]) / (math.factorial(p) * math.factorial(q))
        out[(p, q)] = float(c)
    if all(abs(c) <= 1e-12 * scale for c in out.values()):
        raise ValueError(f"degree-{k} Taylor form vanishes at {zero}; wrong order?")
    return out


def analyze_zeros(field, seed_grid=64, tol=1e-10, probe_radius=None, n_angles=64):
    """find_zeros + vanishing_order + taylor_leading, bundled into ZeroDatum list."""
    zeros = find_zeros(field, seed_grid=seed_grid, tol=tol)
    data = []
    for i, z in enumerate(zeros):
        probe = probe_radius
        if probe is None:
            probe = 0.05
            for j, other in enumerate(zeros):
                if j == i:
                    continue
                d = np.abs(z - other)
                d = np.minimum(d, 1.0 - d)
                probe = min(probe, float(np.hypot(*d)) / 4.0)
        k, lo, hi = vanishing_order(field, z, probe_radius=probe, n_angles=n_angles)
        form = taylor_leading(field, z, k)
        data.append(
            ZeroDatum(
                position=z,
                order=k,
                leading_form=form,
                comp_lower=lo,
                comp_upper=hi,
                probe_radius=probe,
            )
        )
    return data


# -- file format --------------------------------------------------------------
#
# UTF-8 text: one line "M <max_mode>", then one line "m n re im" per stored
# mode with m > 0 or (m == 0 and n >= 0); conjugate modes are implied.


def save_field(field, path):
    big = field.max_mode
    lines = [f"M {big}"]
    for m in range(0, big + 1):
        for n in range(-big, big + 1):
            if m == 0 and n < 0:
                continue
            c = field.mode(m, n)
            if c != 0:
                lines.append(f"{m} {n} {c.real:.17g} {c.imag:.17g}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_field(path):
    with open(path, "r", encoding="utf-8") as fh:
        raw = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    if not raw or not raw[0].startswith("M "):
        raise ValueError(f"{path}: expected header line 'M <max_mode>'")
    big = int(raw[0].split()[1])
    modes = {}
    for ln in raw[1:]:
        parts = ln.split()
        if len(parts) != 4:
            raise ValueError(f"{path}: malformed mode line {ln!r}")
        m, n = int(parts[0]), int(parts[1])
        if m < 0 or (m == 0 and n < 0):
            raise ValueError(f"{path}: mode ({m},{n}) is in the implied conjugate half")
        modes[(m, n)] = float(parts[2]) + 1j * float(parts[3])
    return PeriodicScalarField.from_modes(modes, max_mode=big)
