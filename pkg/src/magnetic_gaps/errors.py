"""Exception hierarchy for the magnetic_gaps package."""


class MagneticGapsError(Exception):
    """Base class for all package-specific failures."""


class DegenerateZeroSet(MagneticGapsError):
    """The sublevel set of |B| is not a union of isolated points."""


class NewtonDivergence(MagneticGapsError):
    """Newton refinement of a zero candidate failed to converge."""


class NonIntegerOrder(MagneticGapsError):
    """Log-log slope of |B| near a zero is not close to an integer."""


class LowerBoundFailure(MagneticGapsError):
    """min over angles of |B|/r^k dropped below the configured floor."""


class ResolutionError(MagneticGapsError):
    """Grid too coarse for the requested semiclassical parameter."""


class SolverStagnation(MagneticGapsError):
    """Eigensolver made no residual progress within its window."""


class BlockDeflationFailure(MagneticGapsError):
    """Eigensolver iterate block lost rank beyond recovery."""


class TruncationDominated(MagneticGapsError):
    """Dirichlet box truncation error exceeds the solver tolerance budget."""


class NonIntegerFlux(MagneticGapsError):
    """Effective flux c00/(2*pi*h) is not an integer; Bloch reduction unavailable."""

    def __init__(self, q, h, c00):
        self.q = q
        self.h = h
        self.c00 = c00
        n_lo = max(1, int(round(q)))
        h_lo = c00 / (2.0 * 3.141592653589793 * n_lo)
        super().__init__(
            f"effective flux Q = {q!r} is not an integer (h = {h!r}); "
            f"nearest admissible h = c00/(2*pi*N): N = {n_lo} gives h = {h_lo!r}"
        )


class PartialSweep(MagneticGapsError):
    """Some quasimomentum solves failed during a Bloch sweep."""

    def __init__(self, failures):
        self.failures = failures
        labels = ", ".join(str(theta) for theta, _ in failures)
        super().__init__(f"theta solves failed at: {labels}")


class OutOfValidatedRange(MagneticGapsError):
    """Query energy above the validated top of a spectrum slice."""


class ConditionViolated(MagneticGapsError):
    """A precondition inequality of the gap-transfer formulas failed."""

    def __init__(self, which, detail=""):
        self.which = which
        msg = f"condition violated: {which}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class InvalidConfig(MagneticGapsError):
    """Verification config failed validation."""
