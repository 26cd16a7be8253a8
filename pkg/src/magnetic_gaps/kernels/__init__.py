"""Hot matvec kernels: compiled stencil core with a pure-NumPy fallback.

The discretized operators are five-point stencils on an n1 x n2 grid, stored
as a real diagonal plus two complex hop arrays (tx couples (i,j)->(i+1,j),
ty couples (i,j)->(i,j+1), wrapping around; Dirichlet boxes simply carry
zeros on the seam). The Cython kernel applies the stencil to a block of
vectors without materializing sparse index arrays; selection happens at
import and can be forced with MAGNETIC_GAPS_BACKEND={auto,cython,python}.
"""

import os

from . import _stencil_py

_REQUESTED = os.environ.get("MAGNETIC_GAPS_BACKEND", "auto").lower()

_cy = None
if _REQUESTED in ("auto", "cython"):
    try:
        from . import _stencil_cy as _cy
    except ImportError:
        _cy = None
        if _REQUESTED == "cython":
            raise ImportError(
                "MAGNETIC_GAPS_BACKEND=cython but the compiled extension is unavailable"
            )

_IMPL = _cy if _cy is not None else _stencil_py


def backend_name():
    """'cython' if the compiled core is active, else 'python'."""
    return "cython" if _IMPL is _cy and _cy is not None else "python"


def apply_stencil(diag, tx, ty, x, out=None):
    """y[i,j] = diag*x + tx*x[i+1,j] + conj(tx[i-1,j])*x[i-1,j] + (same in j).

    x has shape (n1, n2, nvec); indices wrap periodically (seam entries of
    tx/ty must be zero for Dirichlet boxes). Returns out.
    """
    import numpy as np

    if out is None:
        out = np.empty_like(x)
    _IMPL.apply_stencil(diag, tx, ty, x, out)
    return out


def apply_stencil_with(backend, diag, tx, ty, x, out=None):
    """Like apply_stencil but with an explicit backend ('cython' or 'python')."""
    import numpy as np

    if out is None:
        out = np.empty_like(x)
    if backend == "cython":
        if _cy is None:
            raise ImportError("compiled stencil kernel not available")
        _cy.apply_stencil(diag, tx, ty, x, out)
    elif backend == "python":
        _stencil_py.apply_stencil(diag, tx, ty, x, out)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    return out
