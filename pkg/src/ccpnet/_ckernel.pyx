# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled scenario-exposure kernel.

One pass per path over all pairs and scenarios; no large temporaries. The
loop releases the GIL so chunk-level thread pools get real parallelism.
Contract mirrors ``ccpnet._kernel_py.scenario_exposures``.
"""

from libc.stdlib cimport free, malloc


def scenario_exposures(
    double[:, :, ::1] y,
    double[:, ::1] s_plus,
    double[:, ::1] s_minus,
    Py_ssize_t[::1] pair_i,
    Py_ssize_t[::1] pair_j,
    double[:, ::1] resid_w,
    double[:, ::1] ccp_w,
    Py_ssize_t[::1] ccp_offsets,
    Py_ssize_t n_dealers,
    double[:, :, ::1] out,
):
    cdef Py_ssize_t n_paths = y.shape[0]
    cdef Py_ssize_t n_pairs = y.shape[1]
    cdef Py_ssize_t n_classes = y.shape[2]
    cdef Py_ssize_t n_scen = resid_w.shape[0]
    cdef Py_ssize_t c, s, q, k, g, n
    cdef double vp, vm, yy, w

    cdef double* net = <double*> malloc(n_dealers * sizeof(double))
    if net == NULL:
        raise MemoryError()
    try:
        with nogil:
            for c in range(n_paths):
                for s in range(n_scen):
                    for n in range(n_dealers):
                        out[c, s, n] = 0.0
                    for q in range(n_pairs):
                        vp = 0.0
                        vm = 0.0
                        for k in range(n_classes):
                            yy = y[c, q, k]
                            w = resid_w[s, k]
                            vp += w * s_plus[q, k] * yy
                            vm -= w * s_minus[q, k] * yy
                        if vp > 0.0:
                            out[c, s, pair_i[q]] += vp
                        if vm > 0.0:
                            out[c, s, pair_j[q]] += vm
                    for g in range(ccp_offsets[s], ccp_offsets[s + 1]):
                        for n in range(n_dealers):
                            net[n] = 0.0
                        for q in range(n_pairs):
                            vp = 0.0
                            vm = 0.0
                            for k in range(n_classes):
                                w = ccp_w[g, k]
                                if w != 0.0:
                                    yy = y[c, q, k]
                                    vp += w * s_plus[q, k] * yy
                                    vm -= w * s_minus[q, k] * yy
                            net[pair_i[q]] += vp
                            net[pair_j[q]] += vm
                        for n in range(n_dealers):
                            if net[n] > 0.0:
                                out[c, s, n] += net[n]
    finally:
        free(net)
    return out
