"""Lagrangians, forces, and the implicit equations on the Pontryagin bundle.

A system state is (t, q, v, p, mu): configuration, velocity, conjugate
momentum and one multiplier per constraint row.  The governing equations,
stacked by :func:`residual`, are

    qdot = v,
    pdot = dL/dq + F(q, v, p) + mu . omega(q),
    p    = dL/dv,
    omega(q) v = 0,

with omega stacking the per-subsystem rows and the coupling rows.  The same
dynamics can be posed as membership of ((qdot, pdot), (-dL/dq - F, v)) in
the interconnected Dirac structure at (q, p); :func:`check_membership` does
exactly that, and the two formulations agreeing is one of the library's
standing invariants.

Lagrangians may be degenerate: the momentum rows are algebraic residuals,
never inverted.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _kernels, induced
from .induced import InterconnectionSpec

CBRT_EPS = float(np.finfo(float).eps) ** (1.0 / 3.0)


class InconsistentStateError(ValueError):
    """A state handed to an operation that requires residual ~ 0 fails it."""


def central_difference_gradient(fn, x, step_scale=CBRT_EPS):
    """Central differences with per-component step step_scale * max(1, |x_i|)."""
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for i in range(x.size):
        h = step_scale * max(1.0, abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        grad[i] = (fn(xp) - fn(xm)) / (2.0 * h)
    return grad


def _term_arrays(config_dim, terms):
    coeffs = np.array([float(t[0]) for t in terms])
    qexps = np.array([t[1] for t in terms], dtype=np.int64).reshape(-1, config_dim)
    vexps = np.array([t[2] for t in terms], dtype=np.int64).reshape(-1, config_dim)
    if np.any(qexps < 0) or np.any(vexps < 0):
        raise ValueError("polynomial exponents must be non-negative")
    return coeffs, qexps, vexps


class PolynomialLagrangian:
    """L(q, v) as a list of terms (coeff, q_exponents, v_exponents).

    Exponent tuples have one entry per coordinate.  Gradients are exact.
    """

    __slots__ = ("config_dim", "coeffs", "qexps", "vexps")

    def __init__(self, config_dim, terms):
        self.config_dim = int(config_dim)
        self.coeffs, self.qexps, self.vexps = _term_arrays(self.config_dim, terms)

    def value(self, q, v):
        return _kernels.poly_value(self.coeffs, self.qexps, self.vexps,
                                   np.asarray(q, float), np.asarray(v, float))

    def grad_q(self, q, v):
        return _kernels.poly_grad_q(self.coeffs, self.qexps, self.vexps,
                                    np.asarray(q, float), np.asarray(v, float))

    def grad_v(self, q, v):
        return _kernels.poly_grad_v(self.coeffs, self.qexps, self.vexps,
                                    np.asarray(q, float), np.asarray(v, float))

    def terms(self):
        return [
            (float(c), tuple(int(e) for e in qe), tuple(int(e) for e in ve))
            for c, qe, ve in zip(self.coeffs, self.qexps, self.vexps)
        ]

    def polynomial_data(self):
        return self.coeffs, self.qexps, self.vexps

    def __add__(self, other):
        if not isinstance(other, PolynomialLagrangian):
            return NotImplemented
        if other.config_dim != self.config_dim:
            raise ValueError("config dimension mismatch")
        return PolynomialLagrangian(self.config_dim, self.terms() + other.terms())


class CallableLagrangian:
    """L(q, v) given as a closed-form callable, with optional gradients.

    Missing gradients fall back to central differences with step
    cbrt(machine epsilon) * max(1, |x|) per component.
    """

    __slots__ = ("config_dim", "_fn", "_grad_q", "_grad_v")

    def __init__(self, config_dim, fn, grad_q=None, grad_v=None):
        self.config_dim = int(config_dim)
        self._fn = fn
        self._grad_q = grad_q
        self._grad_v = grad_v

    def value(self, q, v):
        return float(self._fn(np.asarray(q, float), np.asarray(v, float)))

    def grad_q(self, q, v):
        q = np.asarray(q, float)
        v = np.asarray(v, float)
        if self._grad_q is not None:
            return np.asarray(self._grad_q(q, v), dtype=float)
        return central_difference_gradient(lambda x: self._fn(x, v), q)

    def grad_v(self, q, v):
        q = np.asarray(q, float)
        v = np.asarray(v, float)
        if self._grad_v is not None:
            return np.asarray(self._grad_v(q, v), dtype=float)
        return central_difference_gradient(lambda x: self._fn(q, x), v)

    def polynomial_data(self):
        return None


class PolynomialForce:
    """Covector field with polynomial components in (q, v).

    Terms are (component, coeff, q_exponents, v_exponents); the momentum
    argument is accepted for interface uniformity and ignored.
    """

    __slots__ = ("config_dim", "comps", "coeffs", "qexps", "vexps")

    def __init__(self, config_dim, terms=()):
        self.config_dim = int(config_dim)
        self.comps = np.array([int(t[0]) for t in terms], dtype=np.int64)
        if np.any(self.comps < 0) or np.any(self.comps >= config_dim):
            raise ValueError("force component index out of range")
        self.coeffs, self.qexps, self.vexps = _term_arrays(
            self.config_dim, [(t[1], t[2], t[3]) for t in terms]
        )

    def eval(self, q, v, p):
        return _kernels.poly_covector(self.comps, self.coeffs, self.qexps,
                                      self.vexps, np.asarray(q, float),
                                      np.asarray(v, float), self.config_dim)

    def terms(self):
        return [
            (int(i), float(c), tuple(int(e) for e in qe), tuple(int(e) for e in ve))
            for i, c, qe, ve in zip(self.comps, self.coeffs, self.qexps, self.vexps)
        ]

    def polynomial_data(self):
        return self.comps, self.coeffs, self.qexps, self.vexps


class CallableForce:
    """Covector field given by an arbitrary callable (q, v, p) -> covector."""

    __slots__ = ("config_dim", "_fn")

    def __init__(self, config_dim, fn):
        self.config_dim = int(config_dim)
        self._fn = fn

    def eval(self, q, v, p):
        return np.asarray(self._fn(q, v, p), dtype=float)

    def polynomial_data(self):
        return None


def zero_force(config_dim) -> PolynomialForce:
    return PolynomialForce(config_dim, ())


@dataclass
class PontryaginState:
    """A point (q, v, p) of the Pontryagin bundle plus multipliers mu."""

    t: float
    q: np.ndarray
    v: np.ndarray
    p: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        self.p = np.asarray(self.p, dtype=float)
        self.mu = np.asarray(self.mu, dtype=float)

    def copy(self):
        return PontryaginState(self.t, self.q.copy(), self.v.copy(),
                               self.p.copy(), self.mu.copy())


@dataclass
class LagrangeDiracSystem:
    """A (possibly degenerate, possibly constrained) implicit system.

    The Lagrangian is the total over all subsystems; interconnection forces
    are never user forces, they arise only through the multipliers of the
    coupling rows in ``constraints``.
    """

    lagrangian: object
    force: object
    constraints: InterconnectionSpec
    name: str = "custom"
    chart_update: object = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.lagrangian.config_dim != self.constraints.config_dim:
            raise ValueError("Lagrangian and constraints disagree on dimension")
        if self.force.config_dim != self.constraints.config_dim:
            raise ValueError("force field dimension mismatch")

    @property
    def config_dim(self):
        return self.constraints.config_dim

    @property
    def subsystem_slices(self):
        return self.constraints.slices()

    @property
    def subsystem_row_count(self):
        return sum(f.row_count for f in self.constraints.fields)

    @property
    def coupling_row_count(self):
        return self.constraints.coupling.row_count

    @property
    def constraint_row_count(self):
        return self.subsystem_row_count + self.coupling_row_count

    def constraint_rows(self, q):
        return self.constraints.stacked_rows(q)

    def row_labels(self):
        """Names for the stacked residual rows, used by solver diagnostics."""
        labels = [f"qdot[{i}]" for i in range(self.config_dim)]
        labels += [f"pdot[{i}]" for i in range(self.config_dim)]
        labels += [f"legendre[{i}]" for i in range(self.config_dim)]
        for si, f in enumerate(self.constraints.fields):
            labels += [f"constraint[s{si}.r{r}]" for r in range(f.row_count)]
        labels += [f"constraint[c.r{r}]" for r in range(self.coupling_row_count)]
        return labels


def generalized_energy(sys: LagrangeDiracSystem, q, v, p) -> float:
    """E(q, v, p) = <p, v> - L(q, v)."""
    q, v, p = (np.asarray(x, dtype=float) for x in (q, v, p))
    return float(p @ v) - sys.lagrangian.value(q, v)


def residual(sys: LagrangeDiracSystem, state: PontryaginState, qdot, pdot):
    """Stacked residual of the implicit equations; zero exactly on solutions."""
    qdot = np.asarray(qdot, dtype=float)
    pdot = np.asarray(pdot, dtype=float)
    q, v, p, mu = state.q, state.v, state.p, state.mu
    w = sys.constraint_rows(q)
    force = sys.force.eval(q, v, p)
    ra = qdot - v
    rb = pdot - sys.lagrangian.grad_q(q, v) - force
    if mu.size:
        rb = rb - w.T @ mu
    rc = p - sys.lagrangian.grad_v(q, v)
    rd = w @ v if w.shape[0] else np.zeros(0)
    return np.concatenate([ra, rb, rc, rd])


def legendre_residual(sys, state) -> float:
    return float(np.max(np.abs(state.p - sys.lagrangian.grad_v(state.q, state.v)),
                        initial=0.0))


def constraint_residual(sys, state) -> float:
    w = sys.constraint_rows(state.q)
    if w.shape[0] == 0:
        return 0.0
    return float(np.max(np.abs(w @ state.v), initial=0.0))


def check_membership(sys, state, qdot, pdot, tol=1e-9) -> bool:
    """Test ((qdot, pdot), (-dL/dq - F, v)) against the structure at (q, p).

    Equivalent to a small residual whenever the state is Legendre
    consistent; the multipliers never appear, membership quantifies over
    the whole annihilator.
    """
    q, v, p = state.q, state.v, state.p
    d = induced.interconnect_at(sys.constraints, q, p)
    covector = np.concatenate([-sys.lagrangian.grad_q(q, v) - sys.force.eval(q, v, p), v])
    velocity = np.concatenate([np.asarray(qdot, float), np.asarray(pdot, float)])
    return d.contains(velocity, covector, tol)


def power_balance_residual(sys, state, qdot, pdot) -> float:
    """dE/dt minus the power injected by the external force.

    With p = dL/dv, the chain rule collapses dE/dt to <pdot, v> - <dL/dq,
    qdot>; on solutions the multiplier force is workless against admissible
    velocities, so the residual vanishes.
    """
    q, v, p = state.q, state.v, state.p
    qdot = np.asarray(qdot, dtype=float)
    energy_rate = float(np.asarray(pdot, float) @ v) - float(
        sys.lagrangian.grad_q(q, v) @ qdot
    )
    injected = float(sys.force.eval(q, v, p) @ qdot)
    return energy_rate - injected


def recover_interface_forces(sys, state, qdot, pdot, tol=1e-8):
    """Split the coupling-multiplier force into per-subsystem covectors.

    Requires an (approximately) solving state; the returned blocks F_i sum
    to a covector in the coupling annihilator, and each subsystem's own
    forced equations hold with its block appended to its external force.
    """
    res = residual(sys, state, qdot, pdot)
    if np.linalg.norm(res) > tol:
        raise InconsistentStateError(
            f"residual norm {np.linalg.norm(res):.3e} exceeds {tol:.1e}"
        )
    mu_c = state.mu[sys.subsystem_row_count:]
    rows = sys.constraints.coupling.rows(state.q)
    total = rows.T @ mu_c if mu_c.size else np.zeros(sys.config_dim)
    return [total[sl] for sl in sys.subsystem_slices]


def subsystem_forced_residual(sys, index, state, qdot, pdot, interface_force):
    """Residual of one subsystem's own equations with an interface force.

    Valid when the total Lagrangian and external force split over the
    subsystem blocks, which holds for every built-in system: then the
    slice of the total gradient is the subsystem gradient.
    """
    sl = sys.subsystem_slices[index]
    field_ = sys.constraints.fields[index]
    q, v, p = state.q, state.v, state.p
    gq = sys.lagrangian.grad_q(q, v)[sl]
    gv = sys.lagrangian.grad_v(q, v)[sl]
    force = sys.force.eval(q, v, p)[sl] + np.asarray(interface_force, float)
    w = field_.rows(q[sl])
    start = sum(f.row_count for f in sys.constraints.fields[:index])
    mu_i = state.mu[start:start + field_.row_count]
    ra = np.asarray(qdot, float)[sl] - v[sl]
    rb = np.asarray(pdot, float)[sl] - gq - force
    if mu_i.size:
        rb = rb - w.T @ mu_i
    rc = p[sl] - gv
    rd = w @ v[sl] if w.shape[0] else np.zeros(0)
    return np.concatenate([ra, rb, rc, rd])


def gradient_check(model, rng, points=20, box=1.0):
    """Worst relative deviation between model gradients and central differences.

    The probe uses a doubled step so finite-difference-backed models are
    still compared against an independent evaluation.
    """
    n = model.config_dim
    worst = 0.0
    for _ in range(points):
        q = box * rng.uniform(-1.0, 1.0, n)
        v = box * rng.uniform(-1.0, 1.0, n)
        for got, ref in (
            (model.grad_q(q, v),
             central_difference_gradient(lambda x: model.value(x, v), q, 2 * CBRT_EPS)),
            (model.grad_v(q, v),
             central_difference_gradient(lambda x: model.value(q, x), v, 2 * CBRT_EPS)),
        ):
            scale = max(1.0, float(np.max(np.abs(ref), initial=0.0)))
            worst = max(worst, float(np.max(np.abs(got - ref), initial=0.0)) / scale)
    return worst
