"""Induced Dirac structures on phase space, evaluated pointwise.

Configuration constraints enter as distribution fields: maps q -> omega(q),
an (m x n) matrix of one-form rows whose kernel is the admissible velocity
space.  Lifting through the cotangent projection gives subspaces of the
2n-dimensional phase tangent space, ordered (qdot, pdot); phase covectors
are ordered (beta, w) with beta paired against qdot.

The induced structure at (q, p) is

    D(q, p) = {((qdot, pdot), (beta, w)) :
               omega(q) qdot = 0,  w = qdot,  beta + pdot in row span of omega(q)},

i.e. the structure generated by the lifted distribution and the canonical
symplectic form.  Interconnection structures pair the lift of a coupling
distribution with its fiber annihilator and carry a zero two-form.
"""

import numpy as np

from . import dirac, subspace as sub
from .dirac import LinearDirac, TwoFormOnDistribution
from .subspace import Subspace


class DistributionField:
    """A map q -> omega(q) of constraint one-form rows on a configuration space.

    ``omega`` may be a constant (m x n) matrix or a callable returning one;
    the row count m must not vary with q (checked when sampled).  m = 0
    means unconstrained.
    """

    __slots__ = ("config_dim", "row_count", "_fn", "_constant")

    def __init__(self, config_dim, omega=None, row_count=None):
        self.config_dim = int(config_dim)
        if omega is None:
            omega = np.zeros((0, self.config_dim))
        if callable(omega):
            self._fn = omega
            self._constant = None
            if row_count is None:
                row_count = np.asarray(omega(np.zeros(self.config_dim))).shape[0]
        else:
            omega = np.asarray(omega, dtype=float)
            if omega.size == 0:
                omega = omega.reshape(0, self.config_dim)
            if omega.ndim != 2 or omega.shape[1] != self.config_dim:
                raise ValueError("constraint rows must have config_dim columns")
            if row_count is not None and row_count != omega.shape[0]:
                raise ValueError("row_count disagrees with the constant matrix")
            row_count = omega.shape[0]
            self._fn = None
            self._constant = omega
        self.row_count = int(row_count)

    def rows(self, q):
        if self._constant is not None:
            return self._constant
        q = np.asarray(q, dtype=float)
        w = np.asarray(self._fn(q), dtype=float)
        if w.size == 0:
            w = w.reshape(0, self.config_dim)
        if w.shape != (self.row_count, self.config_dim):
            raise ValueError(
                f"constraint rows changed shape at q={q!r}: got {w.shape}, "
                f"expected {(self.row_count, self.config_dim)}"
            )
        return w

    @property
    def is_constant(self):
        return self._constant is not None

    def kernel_at(self, q) -> Subspace:
        """Admissible configuration velocities at q."""
        return sub.kernel(self.rows(q), ambient_dim=self.config_dim)


def unconstrained(config_dim) -> DistributionField:
    return DistributionField(config_dim)


class InterconnectionSpec:
    """Per-subsystem constraint fields plus one coupling field on the product."""

    __slots__ = ("fields", "coupling", "_constant_block", "_constant_stack")

    def __init__(self, fields, coupling=None):
        self.fields = tuple(fields)
        total = sum(f.config_dim for f in self.fields)
        if coupling is None:
            coupling = unconstrained(total)
        if coupling.config_dim != total:
            raise ValueError(
                f"coupling acts on dimension {coupling.config_dim}, "
                f"subsystems total {total}"
            )
        self.coupling = coupling
        self._constant_block = None
        self._constant_stack = None
        if all(f.is_constant for f in self.fields):
            self._constant_block = self._stack_subsystems(np.zeros(total))
            if coupling.is_constant:
                self._constant_stack = np.vstack(
                    [self._constant_block, coupling.rows(np.zeros(total))]
                )

    @property
    def config_dim(self):
        return self.coupling.config_dim

    def slices(self):
        out, start = [], 0
        for f in self.fields:
            out.append(slice(start, start + f.config_dim))
            start += f.config_dim
        return out

    def _stack_subsystems(self, q):
        n = self.config_dim
        blocks = []
        for f, sl in zip(self.fields, self.slices()):
            w = f.rows(np.asarray(q, dtype=float)[sl])
            full = np.zeros((w.shape[0], n))
            full[:, sl] = w
            blocks.append(full)
        if not blocks:
            return np.zeros((0, n))
        return np.vstack(blocks)

    def subsystem_rows(self, q):
        """Block-diagonal stack of the subsystem constraint rows at q."""
        if self._constant_block is not None:
            return self._constant_block
        return self._stack_subsystems(q)

    def stacked_rows(self, q):
        """Subsystem rows followed by coupling rows; the total omega(q)."""
        if self._constant_stack is not None:
            return self._constant_stack
        return np.vstack([self.subsystem_rows(q), self.coupling.rows(q)])


def lift_to_cotangent(field: DistributionField, q, p=None) -> Subspace:
    """Phase velocities (qdot, pdot) with qdot in the kernel of omega(q)."""
    n = field.config_dim
    w = field.rows(q)
    rows = np.hstack([w, np.zeros((w.shape[0], n))])
    return sub.kernel(rows, ambient_dim=2 * n)


def induced_dirac_at(field: DistributionField, q, p=None) -> LinearDirac:
    """The Dirac structure induced by omega(q) and the canonical form."""
    lift = lift_to_cotangent(field, q, p)
    form = dirac.canonical_form_matrix(field.config_dim)
    return dirac.from_form_and_distribution(TwoFormOnDistribution(lift, form))


def interconnection_dirac_at(coupling: DistributionField, q, p=None) -> LinearDirac:
    """Lifted coupling distribution paired with its fiber annihilator.

    Same generated structure as the induced one but with a zero two-form:
    the covector part is {(beta, 0) : beta in row span of the coupling rows}.
    """
    return dirac.zero_form_structure(lift_to_cotangent(coupling, q, p))


def _interleave_to_phase(dims):
    """Map from per-subsystem (qdot_i, pdot_i) blocks to (qdot_all, pdot_all)."""
    total = sum(dims)
    perm = np.zeros((2 * total, 2 * total))
    offset = 0
    for i, ni in enumerate(dims):
        start = 2 * offset
        perm[offset : offset + ni, start : start + ni] = np.eye(ni)
        perm[total + offset : total + offset + ni, start + ni : start + 2 * ni] = np.eye(ni)
        offset += ni
    return perm


def interconnect_at(spec: InterconnectionSpec, q, p=None) -> LinearDirac:
    """(D_1 (+) ... (+) D_N) bowtie D_int at the point (q, p).

    Each subsystem structure is induced from its own rows at its own slice
    of q; the direct sum is reordered into total phase layout before the
    bowtie with the interconnection structure of the coupling field.
    """
    q = np.asarray(q, dtype=float)
    slices = spec.slices()
    parts = [
        induced_dirac_at(f, q[sl], None if p is None else np.asarray(p, float)[sl])
        for f, sl in zip(spec.fields, slices)
    ]
    total = parts[0]
    for part in parts[1:]:
        total = dirac.direct_sum(total, part)
    dims = [f.config_dim for f in spec.fields]
    if len(dims) > 1:
        total = dirac.pushforward(total, _interleave_to_phase(dims))
    d_int = interconnection_dirac_at(spec.coupling, q, p)
    return dirac.bowtie(total, d_int)


def interconnected_distribution(spec: InterconnectionSpec, q) -> Subspace:
    """Kernel of all stacked rows: the final admissible configuration velocities."""
    return sub.kernel(spec.stacked_rows(q), ambient_dim=spec.config_dim)


def interconnect_reference(spec: InterconnectionSpec, q, p=None) -> LinearDirac:
    """The same structure built directly from the intersected constraint.

    Generates from the lift of the intersected configuration distribution
    and the product canonical form; equality with interconnect_at is the
    computable form of the interconnection theorem and is what `verify`
    checks at sampled points.
    """
    n = spec.config_dim
    stacked = DistributionField(n, lambda qq: spec.stacked_rows(qq),
                                row_count=spec.stacked_rows(q).shape[0])
    lift = lift_to_cotangent(stacked, q, p)
    form = dirac.canonical_form_matrix(n)
    return dirac.from_form_and_distribution(TwoFormOnDistribution(lift, form))


def constant_rank_check(spec: InterconnectionSpec, q0, rng, points=8, scale=1.0):
    """Sample nearby points and report the observed stacked-row ranks.

    Returns the set of ranks seen; a singleton set is the constant-rank
    certificate the interconnection assumes.
    """
    q0 = np.asarray(q0, dtype=float)
    ranks = set()
    for _ in range(points):
        q = q0 + scale * rng.standard_normal(q0.size)
        rows = spec.stacked_rows(q)
        if rows.shape[0] == 0:
            ranks.add(0)
        else:
            ranks.add(int(np.linalg.matrix_rank(rows)))
    return ranks
