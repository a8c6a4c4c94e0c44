"""Reference (pure numpy) implementations of the hot evaluation kernels.

These are the fallback for the compiled extension and the ground truth it
is tested against.  Polynomial data is held as parallel arrays: a float
coefficient vector plus int64 exponent matrices (one row per term, one
column per coordinate) for the configuration and velocity factors.
"""

import numpy as np

MIDPOINT = 0
BACKWARD_EULER = 1


def _monomials(coeffs, qexps, vexps, q, v):
    qp = np.power(q[None, :], qexps)
    vp = np.power(v[None, :], vexps)
    return coeffs * qp.prod(axis=1) * vp.prod(axis=1)


def poly_value(coeffs, qexps, vexps, q, v):
    if coeffs.size == 0:
        return 0.0
    return float(_monomials(coeffs, qexps, vexps, q, v).sum())


def _poly_grad(coeffs, exps, other_factor, x):
    n = x.size
    grad = np.zeros(n)
    if coeffs.size == 0:
        return grad
    xp = np.power(x[None, :], exps)
    for i in range(n):
        e = exps[:, i]
        lowered = np.where(e > 0, np.power(x[i], np.maximum(e - 1, 0)), 0.0)
        rest = np.prod(np.delete(xp, i, axis=1), axis=1)
        grad[i] = np.sum(coeffs * e * lowered * rest * other_factor)
    return grad


def poly_grad_q(coeffs, qexps, vexps, q, v):
    vfac = np.power(v[None, :], vexps).prod(axis=1) if coeffs.size else None
    return _poly_grad(coeffs, qexps, vfac, q)


def poly_grad_v(coeffs, qexps, vexps, q, v):
    qfac = np.power(q[None, :], qexps).prod(axis=1) if coeffs.size else None
    return _poly_grad(coeffs, vexps, qfac, v)


def poly_covector(comps, coeffs, qexps, vexps, q, v, n):
    out = np.zeros(n)
    if coeffs.size:
        np.add.at(out, comps, _monomials(coeffs, qexps, vexps, q, v))
    return out


def step_residual(z, q0, v0, p0, h, scheme,
                  lcoef, lqe, lve, fcomp, fcoef, fqe, fve, w):
    """Stacked one-step residual for polynomial systems with constant rows.

    Unknowns z = (q_new, v_new, p_new, mu).  Rows: difference quotient of q
    against the scheme velocity; difference quotient of p against gradient,
    force and multiplier rows at the scheme point; the momentum definition
    and the velocity constraints, both at the new state.
    """
    n = q0.size
    qp, vp, pp, mu = z[:n], z[n:2 * n], z[2 * n:3 * n], z[3 * n:]
    if scheme == MIDPOINT:
        qb, vb = 0.5 * (q0 + qp), 0.5 * (v0 + vp)
    else:
        qb, vb = qp, vp
    ra = (qp - q0) / h - vb
    rb = (pp - p0) / h - poly_grad_q(lcoef, lqe, lve, qb, vb)
    rb -= poly_covector(fcomp, fcoef, fqe, fve, qb, vb, n)
    if mu.size:
        rb -= w.T @ mu
    rc = pp - poly_grad_v(lcoef, lqe, lve, qp, vp)
    rd = w @ vp if w.shape[0] else np.zeros(0)
    return np.concatenate([ra, rb, rc, rd])
