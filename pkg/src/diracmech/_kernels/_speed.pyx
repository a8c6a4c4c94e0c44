# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the reference kernels in ``_ref``.

Same contracts, loop implementations; these carry the Newton inner loop of
the implicit integrator, where per-call numpy overhead dominates at the
small system sizes this library targets.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

MIDPOINT = 0
BACKWARD_EULER = 1


cdef inline double ipow(double x, long e) noexcept nogil:
    cdef double r = 1.0
    cdef long i
    for i in range(e):
        r *= x
    return r


cdef double _term(const double[::1] coeffs, const long[:, ::1] qexps,
                  const long[:, ::1] vexps, const double[::1] q,
                  const double[::1] v, Py_ssize_t t) noexcept nogil:
    cdef double val = coeffs[t]
    cdef Py_ssize_t j
    for j in range(q.shape[0]):
        val *= ipow(q[j], qexps[t, j])
    for j in range(v.shape[0]):
        val *= ipow(v[j], vexps[t, j])
    return val


def poly_value(const double[::1] coeffs, const long[:, ::1] qexps,
               const long[:, ::1] vexps, const double[::1] q,
               const double[::1] v):
    cdef double total = 0.0
    cdef Py_ssize_t t
    for t in range(coeffs.shape[0]):
        total += _term(coeffs, qexps, vexps, q, v, t)
    return total


cdef void _grad_into(const double[::1] coeffs, const long[:, ::1] dexps,
                     const long[:, ::1] oexps, const double[::1] x,
                     const double[::1] other, double sign,
                     double[::1] out) noexcept nogil:
    # d/dx_i of sum_t c_t * prod x^dexps[t] * prod other^oexps[t], scaled by
    # sign and accumulated into out.
    cdef Py_ssize_t t, i, j
    cdef long e
    cdef double fac
    for t in range(coeffs.shape[0]):
        fac = coeffs[t]
        for j in range(other.shape[0]):
            fac *= ipow(other[j], oexps[t, j])
        for i in range(x.shape[0]):
            e = dexps[t, i]
            if e == 0:
                continue
            val = fac * e * ipow(x[i], e - 1)
            for j in range(x.shape[0]):
                if j != i:
                    val *= ipow(x[j], dexps[t, j])
            out[i] += sign * val


def poly_grad_q(const double[::1] coeffs, const long[:, ::1] qexps,
                const long[:, ::1] vexps, const double[::1] q,
                const double[::1] v):
    out = np.zeros(q.shape[0])
    _grad_into(coeffs, qexps, vexps, q, v, 1.0, out)
    return out


def poly_grad_v(const double[::1] coeffs, const long[:, ::1] qexps,
                const long[:, ::1] vexps, const double[::1] q,
                const double[::1] v):
    out = np.zeros(v.shape[0])
    _grad_into(coeffs, vexps, qexps, v, q, 1.0, out)
    return out


def poly_covector(const long[::1] comps, const double[::1] coeffs,
                  const long[:, ::1] qexps, const long[:, ::1] vexps,
                  const double[::1] q, const double[::1] v, Py_ssize_t n):
    out = np.zeros(n)
    cdef double[::1] mv = out
    cdef Py_ssize_t t
    for t in range(coeffs.shape[0]):
        mv[comps[t]] += _term(coeffs, qexps, vexps, q, v, t)
    return out


def step_residual(const double[::1] z, const double[::1] q0,
                  const double[::1] v0, const double[::1] p0, double h,
                  long scheme, const double[::1] lcoef,
                  const long[:, ::1] lqe, const long[:, ::1] lve,
                  const long[::1] fcomp, const double[::1] fcoef,
                  const long[:, ::1] fqe, const long[:, ::1] fve,
                  const double[:, ::1] w):
    cdef Py_ssize_t n = q0.shape[0]
    cdef Py_ssize_t m = w.shape[0]
    cdef Py_ssize_t i, a, t
    out = np.empty(3 * n + m)
    base = np.empty(2 * n)
    cdef double[::1] res = out
    cdef double[::1] qb = base[:n]
    cdef double[::1] vb = base[n:]
    cdef const double[::1] qp = z[:n]
    cdef const double[::1] vp = z[n:2 * n]
    cdef const double[::1] pp = z[2 * n:3 * n]
    cdef const double[::1] mu = z[3 * n:]

    if scheme == 0:
        for i in range(n):
            qb[i] = 0.5 * (q0[i] + qp[i])
            vb[i] = 0.5 * (v0[i] + vp[i])
    else:
        for i in range(n):
            qb[i] = qp[i]
            vb[i] = vp[i]

    for i in range(n):
        res[i] = (qp[i] - q0[i]) / h - vb[i]
        res[n + i] = (pp[i] - p0[i]) / h
        res[2 * n + i] = pp[i]

    _grad_into(lcoef, lqe, lve, qb, vb, -1.0, res[n:2 * n])
    _grad_into(lcoef, lve, lqe, vp, qp, -1.0, res[2 * n:3 * n])

    for t in range(fcoef.shape[0]):
        res[n + fcomp[t]] -= _term(fcoef, fqe, fve, qb, vb, t)

    for a in range(m):
        for i in range(n):
            res[n + i] -= mu[a] * w[a, i]

    for a in range(m):
        res[3 * n + a] = 0.0
        for i in range(n):
            res[3 * n + a] += w[a, i] * vp[i]
    return out
