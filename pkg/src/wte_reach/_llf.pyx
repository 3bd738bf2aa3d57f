# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled backward LLF sweep with obstacle projection.

Arrays are in storage layout ``(nE, nK, nx)``.  Each output node depends only
on the input field, so the sweep parallelises over E-planes and the result is
independent of the thread count.
"""
from cython.parallel cimport prange
from libc.math cimport isfinite, NAN, fabs


cdef struct Consts:
    double beta, gamma, mu, alpha, alpha_K, q_max, I_max, eta_min, eta_max
    double dt


cdef inline double _dmax(double a, double b) noexcept nogil:
    return a if a > b else b


cdef inline double _dmin(double a, double b) noexcept nogil:
    return a if a < b else b


cdef inline double _node(const Consts* c, double v, double x, double K, double E,
                         double dmx, double dpx, double dmK, double dpK, double dmE, double dpE,
                         double cx, double cK, double cE) noexcept nogil:
    cdef double px = (dmx + dpx) * 0.5
    cdef double pK = (dmK + dpK) * 0.5
    cdef double pE = (dmE + dpE) * 0.5
    cdef double H = (-c.beta * x * px - c.gamma * K * pK - (c.alpha * E + c.alpha_K * K) * pE) \
        + _dmax(px * c.eta_min, px * c.eta_max) \
        + _dmin(0.0, pK * c.I_max) \
        + _dmin(0.0, (c.mu * pE - px) * c.q_max * K * x)
    cdef double diss = 0.5 * (cx * (dpx - dmx) + cK * (dpK - dmK) + cE * (dpE - dmE))
    return v + c.dt * (H + diss)


def llf_update(const double[:, :, ::1] V,
               const double[:, :, ::1] gD,
               const double[:, :, ::1] cx,
               const double[:, :, ::1] cK,
               const double[:, :, ::1] cE,
               double[:, :, ::1] out,
               const double[::1] mins,
               const double[::1] h,
               const double[::1] coef,
               double dt,
               int threads,
               double[::1] plane_change):
    """One explicit step; returns the count of non-finite candidates.

    ``plane_change[k]`` receives the max |out - V| over E-plane ``k``.
    Non-finite candidates are written through unprojected as NaN.
    """
    cdef Py_ssize_t nE = V.shape[0], nK = V.shape[1], nx = V.shape[2]
    cdef Py_ssize_t i, j, k
    cdef double hx = h[0], hK = h[1], hE = h[2]
    cdef double ihx = 1.0 / hx, ihK = 1.0 / hK, ihE = 1.0 / hE
    cdef Consts c
    c.beta = coef[0]; c.gamma = coef[1]; c.mu = coef[2]; c.alpha = coef[3]
    c.alpha_K = coef[4]; c.q_max = coef[5]; c.I_max = coef[6]
    c.eta_min = coef[7]; c.eta_max = coef[8]; c.dt = dt
    cdef const double* row
    cdef const double* rKm
    cdef const double* rKp
    cdef const double* rEm
    cdef const double* rEp
    cdef const double* grow
    cdef const double* cxr
    cdef const double* cKr
    cdef const double* cEr
    cdef double* orow
    cdef double v, g, dmx, dpx, dmK, dpK, dmE, dpE, x, K, E, cand, new, best
    cdef double ghK, ghE, gh
    cdef bint kedge, jedge
    cdef int bad = 0
    if threads < 1:
        threads = 1

    for k in prange(nE, nogil=True, schedule="static", num_threads=threads):
        best = 0.0
        E = mins[2] + k * hE
        for j in range(nK):
            K = mins[1] + j * hK
            row = &V[k, j, 0]
            grow = &gD[k, j, 0]
            cxr = &cx[k, j, 0]
            cKr = &cK[k, j, 0]
            cEr = &cE[k, j, 0]
            orow = &out[k, j, 0]
            # neighbour rows; at an edge the missing row is never read
            rKm = &V[k, j - 1, 0] if j > 0 else row
            rKp = &V[k, j + 1, 0] if j < nK - 1 else row
            rEm = &V[k - 1, j, 0] if k > 0 else row
            rEp = &V[k + 1, j, 0] if k < nE - 1 else row
            jedge = j == 0 or j == nK - 1
            kedge = k == 0 or k == nE - 1
            for i in range(nx):
                v = row[i]
                g = grow[i]
                x = mins[0] + i * hx
                if i == 0:
                    gh = _dmax(v, g + hx)
                    dmx = (v - gh) * ihx
                    dpx = (row[1] - v) * ihx
                elif i == nx - 1:
                    gh = _dmax(v, g + hx)
                    dmx = (v - row[i - 1]) * ihx
                    dpx = (gh - v) * ihx
                else:
                    dmx = (v - row[i - 1]) * ihx
                    dpx = (row[i + 1] - v) * ihx
                if jedge:
                    ghK = _dmax(v, g + hK)
                    if j == 0:
                        dmK = (v - ghK) * ihK
                        dpK = (rKp[i] - v) * ihK
                    else:
                        dmK = (v - rKm[i]) * ihK
                        dpK = (ghK - v) * ihK
                else:
                    dmK = (v - rKm[i]) * ihK
                    dpK = (rKp[i] - v) * ihK
                if kedge:
                    ghE = _dmax(v, g + hE)
                    if k == 0:
                        dmE = (v - ghE) * ihE
                        dpE = (rEp[i] - v) * ihE
                    else:
                        dmE = (v - rEm[i]) * ihE
                        dpE = (ghE - v) * ihE
                else:
                    dmE = (v - rEm[i]) * ihE
                    dpE = (rEp[i] - v) * ihE
                cand = _node(&c, v, x, K, E, dmx, dpx, dmK, dpK, dmE, dpE, cxr[i], cKr[i], cEr[i])
                if isfinite(cand):
                    new = _dmax(cand, g)
                    best = _dmax(best, fabs(new - v))
                else:
                    new = NAN
                    bad += 1
                orow[i] = new
        plane_change[k] = best
    return bad
