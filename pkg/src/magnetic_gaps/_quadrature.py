"""Gauss-Legendre nodes shared by the Peierls link integrals."""

import numpy as np

# 3-point Gauss-Legendre on [0, 1]: exact through polynomial degree 5,
# which keeps straight-link integrals of polynomial gauge gradients exact
# (discrete gauge transformations stay exact unitaries).
GAUSS3_NODES = np.array([0.5 - np.sqrt(15.0) / 10.0, 0.5, 0.5 + np.sqrt(15.0) / 10.0])
GAUSS3_WEIGHTS = np.array([5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0])
