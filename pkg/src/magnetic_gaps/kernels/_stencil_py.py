"""NumPy fallback for the five-point stencil block matvec."""

import numpy as np


def apply_stencil(diag, tx, ty, x, out):
    d = diag[:, :, None]
    np.multiply(d, x, out=out)
    out += tx[:, :, None] * np.roll(x, -1, axis=0)
    out += np.conj(np.roll(tx, 1, axis=0))[:, :, None] * np.roll(x, 1, axis=0)
    out += ty[:, :, None] * np.roll(x, -1, axis=1)
    out += np.conj(np.roll(ty, 1, axis=1))[:, :, None] * np.roll(x, 1, axis=1)
