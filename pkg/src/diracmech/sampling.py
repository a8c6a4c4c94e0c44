"""Random generators for structures and systems, used by the self-test
suites and the verification command.

Generators draw small integer data so failing cases stay readable and can
be replayed through exact-rational oracles.
"""

from . import dirac, subspace as sub
from .dirac import LinearDirac, TwoFormOnDistribution
from .induced import DistributionField, InterconnectionSpec, unconstrained


def random_skew(rng, n, span=3):
    m = rng.integers(-span, span + 1, size=(n, n))
    return (m - m.T).astype(float)


def random_distribution_columns(rng, n, span=3):
    k = int(rng.integers(0, n + 1))
    return rng.integers(-span, span + 1, size=(n, k)).astype(float)


def random_dirac_data(rng, n, span=3):
    """Integer distribution columns and an integer skew form on R^n."""
    return random_distribution_columns(rng, n, span), random_skew(rng, n, span)


def random_dirac(rng, n, span=3) -> LinearDirac:
    cols, omega = random_dirac_data(rng, n, span)
    delta = sub.span(cols, ambient_dim=n)
    return dirac.from_form_and_distribution(TwoFormOnDistribution(delta, omega))


def random_constraint_rows(rng, n, max_rows=None, span=2):
    cap = n if max_rows is None else min(max_rows, n)
    m = int(rng.integers(0, cap + 1))
    return rng.integers(-span, span + 1, size=(m, n)).astype(float)


def random_interconnection(rng, dims=None, span=2) -> InterconnectionSpec:
    """Spec with random constant subsystem rows and random coupling rows."""
    if dims is None:
        dims = [int(rng.integers(1, 4)) for _ in range(int(rng.integers(1, 4)))]
    fields = []
    for n in dims:
        rows = random_constraint_rows(rng, n, max_rows=n - 1 if n > 1 else 0, span=span)
        fields.append(DistributionField(n, rows) if rows.shape[0] else unconstrained(n))
    total = sum(dims)
    coupling_rows = random_constraint_rows(rng, total, max_rows=2, span=span)
    coupling = (DistributionField(total, coupling_rows)
                if coupling_rows.shape[0] else unconstrained(total))
    return InterconnectionSpec(fields, coupling)


def random_phase_point(rng, n, scale=1.0):
    return scale * rng.standard_normal(n), scale * rng.standard_normal(n)


def random_polynomial_system(rng, max_subsystems=2, max_dim=3):
    """A random constrained system with quadratic Lagrangian and linear force.

    Masses may be zero (degenerate momenta) but never all at once.
    """
    from .mechanics import (LagrangeDiracSystem, PolynomialForce,
                            PolynomialLagrangian)

    spec = random_interconnection(
        rng, dims=[int(rng.integers(1, max_dim + 1))
                   for _ in range(int(rng.integers(1, max_subsystems + 1)))])
    n = spec.config_dim
    masses = rng.integers(0, 4, size=n)
    if not masses.any():
        masses[int(rng.integers(0, n))] = 1
    terms = []
    for i in range(n):
        if masses[i]:
            e = [0] * n
            e[i] = 2
            terms.append((0.5 * float(masses[i]), (0,) * n, tuple(e)))
    for _ in range(int(rng.integers(0, n + 2))):
        i, j = rng.integers(0, n, size=2)
        k = float(rng.integers(1, 4))
        ei = [0] * n
        ei[i] += 1
        ej = [0] * n
        ej[j] += 1
        eij = [a + b for a, b in zip(ei, ej)]
        terms.append((-0.5 * k, tuple(eij), (0,) * n))
    lag = PolynomialLagrangian(n, terms)
    force_terms = []
    for _ in range(int(rng.integers(0, 3))):
        comp = int(rng.integers(0, n))
        coeff = float(rng.integers(-2, 3))
        kind = rng.integers(0, 3)
        qe, ve = [0] * n, [0] * n
        if kind == 1:
            qe[int(rng.integers(0, n))] = 1
        elif kind == 2:
            ve[int(rng.integers(0, n))] = 1
        force_terms.append((comp, coeff, tuple(qe), tuple(ve)))
    return LagrangeDiracSystem(lag, PolynomialForce(n, force_terms), spec)


def random_consistent_state(rng, system, scale=1.0):
    """A state plus rates solving the implicit equations exactly.

    Draws (q, v, mu) with v admissible, sets p from the momentum rows and
    the rates from the dynamics rows.
    """
    from .mechanics import PontryaginState

    n = system.config_dim
    q = scale * rng.standard_normal(n)
    w = system.constraint_rows(q)
    ker = sub.kernel(w, ambient_dim=n) if w.shape[0] else sub.full_space(n)
    v = ker.basis @ (ker.basis.T @ (scale * rng.standard_normal(n)))
    mu = scale * rng.standard_normal(system.constraint_row_count)
    p = system.lagrangian.grad_v(q, v)
    state = PontryaginState(0.0, q, v, p, mu)
    qdot = v.copy()
    pdot = system.lagrangian.grad_q(q, v) + system.force.eval(q, v, p)
    if mu.size:
        pdot = pdot + w.T @ mu
    return state, qdot, pdot
