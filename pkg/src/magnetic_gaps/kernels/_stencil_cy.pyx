# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled five-point stencil block matvec.

Same contract as _stencil_py.apply_stencil; avoids sparse index traffic by
walking the grid directly and reusing the two hop arrays for both hop
directions (reverse hops are conjugates).
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def apply_stencil(
    double[:, ::1] diag,
    double complex[:, ::1] tx,
    double complex[:, ::1] ty,
    double complex[:, :, ::1] x,
    double complex[:, :, ::1] out,
):
    cdef Py_ssize_t n1 = x.shape[0], n2 = x.shape[1], nv = x.shape[2]
    cdef Py_ssize_t i, j, v, im, ip, jm, jp
    cdef double complex hop_up, hop_dn_conj, hop_rt, hop_lf_conj
    cdef double d

    for i in range(n1):
        ip = i + 1 if i + 1 < n1 else 0
        im = i - 1 if i > 0 else n1 - 1
        for j in range(n2):
            jp = j + 1 if j + 1 < n2 else 0
            jm = j - 1 if j > 0 else n2 - 1
            d = diag[i, j]
            hop_up = tx[i, j]
            hop_dn_conj = tx[im, j].conjugate()
            hop_rt = ty[i, j]
            hop_lf_conj = ty[i, jm].conjugate()
            for v in range(nv):
                out[i, j, v] = (
                    d * x[i, j, v]
                    + hop_up * x[ip, j, v]
                    + hop_dn_conj * x[im, j, v]
                    + hop_rt * x[i, jp, v]
                    + hop_lf_conj * x[i, jm, v]
                )
