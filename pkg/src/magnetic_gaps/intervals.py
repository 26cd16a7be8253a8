"""Scalar gap-transfer calculus: window maps, parameter rates, optimal kappa.

The forward map takes a window (a1, b1) free of the spectrum of the model
side to a window (a2, b2) free of the spectrum of the full operator, through
eleven scalar localization parameters. All arithmetic runs in extended
precision (80-bit long double) because the b2 formula cancels when
alpha2 ~ b2 + gamma2; results are rounded to double on output.
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ConditionViolated

LD = np.longdouble


def _ld(x):
    return x if isinstance(x, LD) else LD(repr(float(x)))


@dataclass(frozen=True)
class TransferParams:
    """The scalar inputs (rho, alpha_l, beta_l, gamma_l, eps_l, lambda_0l)."""

    rho: float
    alpha1: float
    alpha2: float
    beta1: float = 1.0
    beta2: float = 1.0
    gamma1: float = 0.0
    gamma2: float = 0.0
    eps1: float = 0.0
    eps2: float = 0.0
    lambda01: float = 0.0
    lambda02: float = 0.0

    def __post_init__(self):
        if self.rho < 1.0:
            raise ValueError("rho must be >= 1 (rho = 1 is the flat-metric limit)")
        if self.alpha1 <= 0 or self.alpha2 <= 0:
            raise ValueError("alpha_l must be positive")
        if self.beta1 < 1.0 or self.beta2 < 1.0:
            raise ValueError("beta_l must be >= 1")
        if self.gamma1 < 0 or self.gamma2 < 0:
            raise ValueError("gamma_l must be >= 0")
        if self.eps1 < 0 or self.eps2 < 0:
            raise ValueError("eps_l must be >= 0")
        if self.lambda01 > 0 or self.lambda02 > 0:
            raise ValueError("lambda_0l must be <= 0")


@dataclass(frozen=True)
class GapWindow:
    a: float
    b: float

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"window needs a < b, got ({self.a}, {self.b})")


@dataclass(frozen=True)
class TransferResult:
    """Mapped endpoints plus the theorem's side conditions as validity flags."""

    a2: float
    b2: float
    valid: bool
    violated: tuple

    @property
    def window(self):
        if not self.valid:
            raise ConditionViolated(", ".join(self.violated), "no valid output window")
        return GapWindow(self.a2, self.b2)


def _endpoints_ld(params, window):
    p = {k: _ld(v) for k, v in vars(params).items()}
    a1, b1 = _ld(window.a), _ld(window.b)

    den1 = p["alpha1"] - a1 - p["gamma1"]
    if not den1 > 0:
        raise ConditionViolated("alpha1 > a1 + gamma1", f"margin {float(den1):.6g}")
    a2 = p["rho"] * (
        p["beta1"] * (a1 + p["gamma1"] + (a1 + p["gamma1"] - p["lambda01"]) ** 2 / den1)
        + p["eps1"]
    )

    t_in = b1 / p["rho"] - p["eps2"]
    if not t_in > 0:
        raise ConditionViolated("b1/rho > eps2", f"margin {float(t_in):.6g}")
    t = t_in / p["beta2"]
    den2 = p["alpha2"] - 2 * p["lambda02"] + t
    if not den2 > 0:
        raise ConditionViolated("b2 denominator positive", f"value {float(den2):.6g}")
    b2 = (
        t * (p["alpha2"] - p["gamma2"])
        - p["alpha2"] * p["gamma2"]
        + 2 * p["lambda02"] * p["gamma2"]
        - p["lambda02"] ** 2
    ) / den2
    return a2, b2, p


def transfer(params, window):
    """Forward window map; raises ConditionViolated on precondition failure.

    The theorem's side conditions alpha2 > b2 + gamma2 and b2 > a2 are
    returned as a validity flag (naming what failed) rather than raised, so
    callers can still inspect the computed endpoints.
    """
    a2, b2, p = _endpoints_ld(params, window)
    violated = []
    if not p["alpha2"] > b2 + p["gamma2"]:
        violated.append("alpha2 > b2 + gamma2")
    if not b2 > a2:
        violated.append("b2 > a2")
    return TransferResult(
        a2=float(a2), b2=float(b2), valid=not violated, violated=tuple(violated)
    )


def dual_b1(params, b2):
    """Reverse formula of the remark: b1 from b2 with the 2-side parameters."""
    p = {k: _ld(v) for k, v in vars(params).items()}
    b2 = _ld(b2)
    den = p["alpha2"] - b2 - p["gamma2"]
    if not den > 0:
        raise ConditionViolated("alpha2 > b2 + gamma2", f"margin {float(den):.6g}")
    b1 = p["rho"] * (
        p["beta2"] * (b2 + p["gamma2"] + (b2 + p["gamma2"] - p["lambda02"]) ** 2 / den)
        + p["eps2"]
    )
    return float(b1)


@dataclass(frozen=True)
class EstimateConstants:
    """Implied constants of the h-power parameter estimates (inputs, not derived)."""

    k: int
    kappa: float
    c_rho: float = 1.0
    c_gamma: float = 1.0
    c_alpha: float = 1.0
    c_beta: float = 1.0
    c_eps: float = 1.0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not (0 < self.kappa and self.kappa * self.k < 2):
            raise ValueError("need 0 < kappa and k*kappa < 2")
        if min(self.c_rho, self.c_gamma, self.c_alpha, self.c_beta, self.c_eps) <= 0:
            raise ValueError("constants must be positive")


def gap_exponent(k):
    """(2k+2)/(k+2): the h-power of the rescaled spectral window."""
    return (2.0 * k + 2.0) / (k + 2.0)


def estimate_params(constants, h):
    """TransferParams at parameter h from the power-law estimates.

    rho = 1 + c h^kappa, beta = 1 + c h^kappa, gamma ~ h^(2 - 2 kappa - p),
    alpha ~ h^(1 + k kappa - p), eps ~ h^((2k+3) kappa - p) with
    p = (2k+2)/(k+2); lambda_0 = 0. alpha is a lower-bound-type parameter:
    its constant encodes the magnetic-well lower-bound constant.
    """
    if not 0 < h < 1:
        raise ValueError("h must lie in (0, 1)")
    k = constants.k
    kap = _ld(constants.kappa)
    hh = _ld(h)
    p = (2 * LD(k) + 2) / (LD(k) + 2)
    e_gamma = 2 - 2 * kap - p
    e_alpha = 1 + k * kap - p
    e_eps = 2 * kap * (k + 2) - kap - p
    rho = 1 + _ld(constants.c_rho) * hh**kap
    beta = 1 + _ld(constants.c_beta) * hh**kap
    gamma = _ld(constants.c_gamma) * hh**e_gamma
    alpha = _ld(constants.c_alpha) * hh**e_alpha
    eps = _ld(constants.c_eps) * hh**e_eps
    return TransferParams(
        rho=float(rho),
        alpha1=float(alpha),
        alpha2=float(alpha),
        beta1=float(beta),
        beta2=float(beta),
        gamma1=float(gamma),
        gamma2=float(gamma),
        eps1=float(eps),
        eps2=float(eps),
        lambda01=0.0,
        lambda02=0.0,
    )


def shrink_rate(k, kappa):
    """s = min{(2k+3) kappa - p, 2 - 2 kappa - p}; the window drift is O(h^s)."""
    if not 0 < kappa < 2 / k:
        raise ValueError("need 0 < kappa < 2/k")
    p = gap_exponent(k)
    return min((2 * k + 3) * kappa - p, 2 - 2 * kappa - p)


def optimal_kappa(k):
    """Exact maximizer of the shrink rate: kappa* = 2/(2k+5), s* at the crossing."""
    if k < 1:
        raise ValueError("k must be >= 1")
    kappa_star = Fraction(2, 2 * k + 5)
    s_star = Fraction(2, (2 * k + 5) * (k + 2))
    p = Fraction(2 * k + 2, k + 2)
    assert (2 * k + 3) * kappa_star - p == 2 - 2 * kappa_star - p == s_star
    num1 = (2 * k + 3) * float(kappa_star) - float(p)
    num2 = 2.0 - 2.0 * float(kappa_star) - float(p)
    assert abs(num1 - num2) <= 1e-14
    return kappa_star, s_star
