"""Spectral gaps of periodic magnetic Schrodinger operators on the 2-torus.

Pipeline: analyze the zeros of the field (fields), build the model-well
operators and their h-independent rescaled ladders (model_op), sweep the
magnetic Bloch fibers of the full operator (bloch), and check the predicted
gap windows (harness). The intervals module carries the exact scalar
gap-transfer calculus; eig is the shared certified eigensolver.
"""

__version__ = "0.1.0"

from . import bloch, eig, errors, fields, harness, intervals, model_op  # noqa: F401
from .kernels import backend_name  # noqa: F401
