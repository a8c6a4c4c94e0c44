"""Implicit one-step integration of the constrained implicit equations.

Each step solves a nonlinear system in the unknowns (q_new, v_new, p_new,
mu) by Newton iteration with a finite-difference Jacobian: the kinematic
and dynamic rows are collocated at the scheme point (midpoint averages or
the new state), while the momentum definition and the velocity constraints
are always enforced at the new state.  Multipliers are per-step unknowns;
nothing is ever inverted symbolically, so degenerate Lagrangians integrate
through the same path.

Systems whose Lagrangian and force are polynomial and whose constraint
rows are constant dispatch the residual to the compiled kernels; everything
else uses the same formulas through plain closures.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels, induced, mechanics
from . import subspace as sub
from .mechanics import CBRT_EPS, PontryaginState

SQRT_EPS = float(np.sqrt(np.finfo(float).eps))

SCHEMES = ("implicit-midpoint", "backward-euler")


class StepFailure(RuntimeError):
    """Newton did not converge; carries the residual-norm history."""

    def __init__(self, message, history):
        super().__init__(message)
        self.history = list(history)


class SingularJacobianError(RuntimeError):
    """The step Jacobian is rank deficient; names the deficient rows."""

    def __init__(self, rows):
        super().__init__("singular step Jacobian; deficient rows: " + ", ".join(rows))
        self.rows = list(rows)


class SimulationAborted(RuntimeError):
    """A step failed mid-run; carries the partial trajectory."""

    def __init__(self, trajectory, cause):
        super().__init__(f"simulation aborted at t={trajectory.states[-1].t:g}: {cause}")
        self.trajectory = trajectory
        self.cause = cause


class RankVariationWarning(UserWarning):
    pass


@dataclass
class IntegratorConfig:
    scheme: str = "implicit-midpoint"
    h: float = 1e-2
    newton_tol: float = 1e-12
    newton_max_iter: int = 50
    jacobian: str = "finite-difference"
    jacobian_fn: object = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; pick one of {SCHEMES}")
        if not self.h > 0:
            raise ValueError("step size must be positive")
        if not self.newton_tol > 0:
            raise ValueError("newton tolerance must be positive")
        if self.newton_max_iter < 1:
            raise ValueError("newton_max_iter must be at least 1")
        if self.jacobian not in ("finite-difference", "user"):
            raise ValueError("jacobian must be 'finite-difference' or 'user'")
        if self.jacobian == "user" and not callable(self.jacobian_fn):
            raise ValueError("user jacobian requires a callable jacobian_fn")


@dataclass
class Trajectory:
    """Uniformly spaced states with per-state diagnostics."""

    states: list = field(default_factory=list)
    energy: list = field(default_factory=list)
    power_residual: list = field(default_factory=list)
    constraint_residual_max: list = field(default_factory=list)
    newton_iterations: list = field(default_factory=list)
    chart_transitions: int = 0

    def append(self, state, energy, power_residual, constraint_residual, iters):
        self.states.append(state)
        self.energy.append(float(energy))
        self.power_residual.append(float(power_residual))
        self.constraint_residual_max.append(float(constraint_residual))
        self.newton_iterations.append(int(iters))

    @property
    def times(self):
        return np.array([s.t for s in self.states])

    def array(self, name):
        return np.array([getattr(s, name) for s in self.states])

    def __len__(self):
        return len(self.states)


def _finite_difference_jacobian(fn, z, r0):
    m = r0.size
    jac = np.empty((m, z.size))
    for j in range(z.size):
        hj = SQRT_EPS * max(1.0, abs(z[j]))
        zj = z.copy()
        zj[j] += hj
        jac[:, j] = (fn(zj) - r0) / hj
    return jac


def _deficient_rows(jac, labels):
    u, s, _ = np.linalg.svd(jac)
    cutoff = max(s[0], 1.0) * 1e-12
    names = []
    for k in range(s.size):
        if s[k] <= cutoff:
            comp = np.abs(u[:, k])
            worst = np.argsort(comp)[::-1]
            names.extend(labels[i] for i in worst[:2] if comp[i] > 0.1)
    return sorted(set(names)) or ["<unidentified>"]


def _fast_path_data(sys):
    """Kernel arrays when the whole residual is kernel-expressible."""
    lag = sys.lagrangian.polynomial_data()
    frc = sys.force.polynomial_data()
    if lag is None or frc is None:
        return None
    fields = list(sys.constraints.fields) + [sys.constraints.coupling]
    if not all(f.is_constant for f in fields):
        return None
    w = np.ascontiguousarray(sys.constraint_rows(np.zeros(sys.config_dim)))
    return lag, frc, w


def make_step_residual(sys, state, cfg):
    """Residual of one step as a function of z = (q_new, v_new, p_new, mu)."""
    n = sys.config_dim
    h = cfg.h
    scheme = _kernels.MIDPOINT if cfg.scheme == "implicit-midpoint" else _kernels.BACKWARD_EULER
    q0, v0, p0 = state.q.copy(), state.v.copy(), state.p.copy()

    data = _fast_path_data(sys)
    if data is not None:
        (lc, lqe, lve), (fcomp, fcoef, fqe, fve), w = data

        def fn(z):
            return _kernels.step_residual(z, q0, v0, p0, h, scheme,
                                          lc, lqe, lve, fcomp, fcoef, fqe, fve, w)

        return fn

    midpoint = scheme == _kernels.MIDPOINT

    def fn(z):
        qp, vp, pp, mu = z[:n], z[n:2 * n], z[2 * n:3 * n], z[3 * n:]
        if midpoint:
            qb, vb, pb = 0.5 * (q0 + qp), 0.5 * (v0 + vp), 0.5 * (p0 + pp)
        else:
            qb, vb, pb = qp, vp, pp
        ra = (qp - q0) / h - vb
        rb = (pp - p0) / h - sys.lagrangian.grad_q(qb, vb) - sys.force.eval(qb, vb, pb)
        if mu.size:
            rb = rb - sys.constraint_rows(qb).T @ mu
        rc = pp - sys.lagrangian.grad_v(qp, vp)
        wp = sys.constraint_rows(qp)
        rd = wp @ vp if wp.shape[0] else np.zeros(0)
        return np.concatenate([ra, rb, rc, rd])

    return fn


def step(sys, state: PontryaginState, cfg: IntegratorConfig):
    """Advance one step; returns (new_state, newton_iterations)."""
    n = sys.config_dim
    fn = make_step_residual(sys, state, cfg)
    z = np.concatenate([state.q, state.v, state.p, state.mu])
    labels = sys.row_labels()
    r = fn(z)
    norm = float(np.linalg.norm(r))
    history = [norm]
    iters = 0
    while norm > cfg.newton_tol:
        if iters >= cfg.newton_max_iter:
            raise StepFailure(
                f"Newton stalled after {cfg.newton_max_iter} iterations "
                f"(residual {norm:.3e} > {cfg.newton_tol:.1e})", history
            )
        if cfg.jacobian == "user":
            jac = cfg.jacobian_fn(sys, state, cfg, z)
        else:
            jac = _finite_difference_jacobian(fn, z, r)
        try:
            dz = np.linalg.solve(jac, r)
        except np.linalg.LinAlgError:
            raise SingularJacobianError(_deficient_rows(jac, labels)) from None
        if not np.all(np.isfinite(dz)) or (
            np.max(np.abs(dz)) > 1e12 * (1.0 + float(np.max(np.abs(z))))
        ):
            raise SingularJacobianError(_deficient_rows(jac, labels))
        z = z - dz
        iters += 1
        r = fn(z)
        norm = float(np.linalg.norm(r))
        history.append(norm)
    new = PontryaginState(state.t + cfg.h, z[:n].copy(), z[n:2 * n].copy(),
                          z[2 * n:3 * n].copy(), z[3 * n:].copy())
    return new, iters


def _second_derivatives(sys, q, v):
    """Finite-difference velocity Hessian blocks of the Lagrangian."""
    n = sys.config_dim
    lvv = np.empty((n, n))
    lvq = np.empty((n, n))
    for j in range(n):
        hv = CBRT_EPS * max(1.0, abs(v[j]))
        vp, vm = v.copy(), v.copy()
        vp[j] += hv
        vm[j] -= hv
        lvv[:, j] = (sys.lagrangian.grad_v(q, vp) - sys.lagrangian.grad_v(q, vm)) / (2 * hv)
        hq = CBRT_EPS * max(1.0, abs(q[j]))
        qp, qm = q.copy(), q.copy()
        qp[j] += hq
        qm[j] -= hq
        lvq[:, j] = (sys.lagrangian.grad_v(qp, v) - sys.lagrangian.grad_v(qm, v)) / (2 * hq)
    return lvv, lvq


def consistent_multipliers(sys, q, v):
    """Multipliers making the hidden constraints hold at (q, v).

    One linear (single Newton pass) solve of the differentiated momentum
    and constraint rows for the unknown accelerations and multipliers;
    returns the multiplier part.
    """
    n, m = sys.config_dim, sys.constraint_row_count
    if m == 0:
        return np.zeros(0)
    w = sys.constraint_rows(q)
    lvv, lvq = _second_derivatives(sys, q, v)
    p = sys.lagrangian.grad_v(q, v)
    force = sys.force.eval(q, v, p)
    rhs1 = sys.lagrangian.grad_q(q, v) + force - lvq @ v
    nv = float(np.linalg.norm(v))
    if nv == 0.0:
        rhs2 = np.zeros(m)
    else:
        u = v / nv
        dq = CBRT_EPS * max(1.0, float(np.linalg.norm(q)))
        rhs2 = -nv * (sys.constraint_rows(q + dq * u) @ v
                      - sys.constraint_rows(q - dq * u) @ v) / (2 * dq)
    a = np.zeros((n + m, n + m))
    a[:n, :n] = lvv
    a[:n, n:] = -w.T
    a[n:, :n] = w
    b = np.concatenate([rhs1, rhs2])
    x = np.linalg.lstsq(a, b, rcond=None)[0]
    return x[n:]


def project_initial(sys, q0, v0) -> PontryaginState:
    """Admissible initial state: v projected onto the constraint kernel,
    p from the momentum definition, multipliers from the consistency solve."""
    q0 = np.asarray(q0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    w = sys.constraint_rows(q0)
    if w.shape[0]:
        ker = sub.kernel(w, ambient_dim=sys.config_dim)
        v = ker.basis @ (ker.basis.T @ v0)
    else:
        v = v0.copy()
    p = sys.lagrangian.grad_v(q0, v)
    mu = consistent_multipliers(sys, q0, v)
    return PontryaginState(0.0, q0.copy(), v, p, mu)


def _diagnostics(sys, old, new, cfg):
    qdot = (new.q - old.q) / cfg.h
    pdot = (new.p - old.p) / cfg.h
    if cfg.scheme == "implicit-midpoint":
        probe = PontryaginState(old.t + 0.5 * cfg.h, 0.5 * (old.q + new.q),
                                0.5 * (old.v + new.v), 0.5 * (old.p + new.p), new.mu)
    else:
        probe = new
    power = mechanics.power_balance_residual(sys, probe, qdot, pdot)
    cres = max(mechanics.constraint_residual(sys, new),
               mechanics.legendre_residual(sys, new))
    energy = mechanics.generalized_energy(sys, new.q, new.v, new.p)
    return energy, power, cres


def simulate(sys, initial: PontryaginState, cfg: IntegratorConfig, t_final,
             rank_check_points=8) -> Trajectory:
    """Fixed-step integration up to t_final; diagnostics recorded per state.

    A step failure aborts the run by raising SimulationAborted with the
    partial trajectory attached.
    """
    if not t_final > 0:
        raise ValueError("t_final must be positive")
    nsteps = int(round(t_final / cfg.h))
    if nsteps < 1 or abs(nsteps * cfg.h - t_final) > 1e-9 * max(1.0, t_final):
        raise ValueError("t_final must be a whole number of steps")

    if rank_check_points:
        ranks = induced.constant_rank_check(
            sys.constraints, initial.q, np.random.default_rng(0), rank_check_points
        )
        if len(ranks) > 1:
            warnings.warn(
                f"constraint rank varies over sampled points: {sorted(ranks)}",
                RankVariationWarning,
            )

    traj = Trajectory()
    state = initial
    qdot0 = state.v
    w0 = sys.constraint_rows(state.q)
    pdot0 = sys.lagrangian.grad_q(state.q, state.v) + sys.force.eval(
        state.q, state.v, state.p
    )
    if state.mu.size:
        pdot0 = pdot0 + w0.T @ state.mu
    traj.append(
        state,
        mechanics.generalized_energy(sys, state.q, state.v, state.p),
        mechanics.power_balance_residual(sys, state, qdot0, pdot0),
        max(mechanics.constraint_residual(sys, state), mechanics.legendre_residual(sys, state)),
        0,
    )
    for k in range(1, nsteps + 1):
        try:
            new, iters = step(sys, state, cfg)
        except (StepFailure, SingularJacobianError) as exc:
            raise SimulationAborted(traj, exc) from exc
        new.t = initial.t + k * cfg.h
        energy, power, cres = _diagnostics(sys, state, new, cfg)
        traj.append(new, energy, power, cres, iters)
        state = new
        if sys.chart_update is not None:
            swapped = sys.chart_update(sys, state)
            if swapped is not None:
                sys, state = swapped
                traj.states[-1] = state
                traj.chart_transitions += 1
    return traj
